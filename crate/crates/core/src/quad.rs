//! Adaptive quadrature.
//!
//! Double-exponential (tanh-sinh) rule on each interval, bisected until the
//! rule's own error estimate meets the share of the absolute tolerance
//! allotted to that interval. Endpoint singularities such as `ln|t|` at `0`
//! are handled by the rule itself.

use quadrature::double_exponential;

/// Absolute tolerance used throughout the crate.
pub const DEFAULT_TOL: f64 = 1e-9;

const MAX_DEPTH: u32 = 24;

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    integrate_rec(f, a, b, tol, 0)
}

fn integrate_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let out = double_exponential::integrate(f, a, b, tol);
    if out.error_estimate <= tol || depth >= MAX_DEPTH {
        return out.integral;
    }
    let mid = 0.5 * (a + b);
    integrate_rec(f, a, mid, 0.5 * tol, depth + 1) + integrate_rec(f, mid, b, 0.5 * tol, depth + 1)
}
