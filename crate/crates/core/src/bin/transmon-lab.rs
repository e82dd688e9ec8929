fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = transmon_lab::cli::main_with_args(std::env::args().collect());
    std::process::exit(code);
}
