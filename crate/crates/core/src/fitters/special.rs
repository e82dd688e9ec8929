//! Exponentially scaled modified Bessel functions of the first kind.
//!
//! `i0e(x) = exp(-|x|)·I0(x)` and `i1e(x) = exp(-|x|)·I1(x)`. Small arguments
//! use the power series, large arguments the Hankel asymptotic expansion;
//! neither overflows for any finite input.

const SERIES_LIMIT: f64 = 25.0;

fn series(x: f64, order: u32) -> f64 {
    let y = 0.25 * x * x;
    // first term (x/2)^order / order!
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= y / (k * (k + order as f64));
        sum += term;
        if term < sum * 1e-17 || k > 500.0 {
            break;
        }
    }
    sum
}

fn asymptotic(x: f64, order: u32) -> f64 {
    let mu = 4.0 * (order as f64).powi(2);
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 1.0_f64;
    while k < 64.0 {
        let next = term * -(mu - (2.0 * k - 1.0).powi(2)) / (k * 8.0 * x);
        if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
            if next.abs() < term.abs() {
                sum += next;
            }
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// `exp(-|x|)·I0(x)`.
pub fn i0e(x: f64) -> f64 {
    let ax = x.abs();
    if ax.is_nan() {
        return f64::NAN;
    }
    if ax == f64::INFINITY {
        return 0.0;
    }
    if ax <= SERIES_LIMIT {
        series(ax, 0) * (-ax).exp()
    } else {
        asymptotic(ax, 0)
    }
}

/// `exp(-|x|)·I1(x)`; odd in `x`.
pub fn i1e(x: f64) -> f64 {
    let ax = x.abs();
    if ax.is_nan() {
        return f64::NAN;
    }
    if ax == f64::INFINITY {
        return 0.0_f64.copysign(x);
    }
    let v = if ax <= SERIES_LIMIT {
        series(ax, 1) * (-ax).exp()
    } else {
        asymptotic(ax, 1)
    };
    v.copysign(x)
}

/// `ln I0(x)` without overflow.
pub fn ln_i0(x: f64) -> f64 {
    i0e(x).ln() + x.abs()
}

/// `I1(x)/I0(x)`.
pub fn bessel_ratio(x: f64) -> f64 {
    i1e(x) / i0e(x)
}
