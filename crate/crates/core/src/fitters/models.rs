//! Curve models with analytic parameter gradients.

use std::f64::consts::TAU;

use super::lm::CurveModel;

/// `A·exp(−τ/T1) + B`, parameters `[A, B, T1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exponential;

impl CurveModel for Exponential {
    fn n_params(&self) -> usize {
        3
    }

    fn value(&self, tau: f64, p: &[f64]) -> f64 {
        p[0] * (-tau / p[2]).exp() + p[1]
    }

    fn gradient(&self, tau: f64, p: &[f64], g: &mut [f64]) {
        let e = (-tau / p[2]).exp();
        g[0] = e;
        g[1] = 1.0;
        g[2] = p[0] * e * tau / (p[2] * p[2]);
    }

    fn feasible(&self, p: &[f64]) -> bool {
        p[2] > 0.0
    }
}

/// `A·cos(2πfτ + φ0)·exp(−τ/T2*) + B`, parameters `[A, B, φ0, f, T2*]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DampedCosine;

impl CurveModel for DampedCosine {
    fn n_params(&self) -> usize {
        5
    }

    fn value(&self, tau: f64, p: &[f64]) -> f64 {
        p[0] * (TAU * p[3] * tau + p[2]).cos() * (-tau / p[4]).exp() + p[1]
    }

    fn gradient(&self, tau: f64, p: &[f64], g: &mut [f64]) {
        let arg = TAU * p[3] * tau + p[2];
        let (s, c) = arg.sin_cos();
        let e = (-tau / p[4]).exp();
        g[0] = c * e;
        g[1] = 1.0;
        g[2] = -p[0] * s * e;
        g[3] = -p[0] * s * e * TAU * tau;
        g[4] = p[0] * c * e * tau / (p[4] * p[4]);
    }

    fn feasible(&self, p: &[f64]) -> bool {
        p[4] > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitters::lm::gradient_discrepancy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_gradient<M: CurveModel>(model: &M, x: f64, p: &[f64]) {
        let d = gradient_discrepancy(model, x, p);
        assert!(d <= 1e-6, "x={x}, p={p:?}: relative discrepancy {d:e}");
    }

    #[test]
    fn exponential_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = [rng.random_range(0.2..1.0), rng.random_range(-0.1..0.2), rng.random_range(5e-6..200e-6)];
            let tau = rng.random_range(0.0..3.0) * p[2];
            assert_gradient(&Exponential, tau, &p);
        }
    }

    #[test]
    fn damped_cosine_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let p = [
                rng.random_range(0.2..0.6),
                rng.random_range(0.3..0.7),
                rng.random_range(-3.0..3.0),
                rng.random_range(1e3..80e3),
                rng.random_range(10e-6..100e-6),
            ];
            let tau = rng.random_range(0.0..5.0) * p[4];
            assert_gradient(&DampedCosine, tau, &p);
        }
    }
}
