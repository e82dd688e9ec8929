pub mod aging;
pub mod cli;
pub mod domain;
pub mod expsim;
pub mod fitters;
pub mod plot;
pub mod readout;
pub mod stability;
pub mod tlssim;
