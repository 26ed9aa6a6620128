//! Reference computations written independently of the library code.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `σ² + Σ_{ℓ<k} α_{k-ℓ} x_ℓ²` for every `k = 1..=n+1` by brute-force double
/// summation, with `α_j = alpha(j)`.
pub fn brute_force_variances(alpha: impl Fn(usize) -> f64, sigma2: f64, x: &[f64]) -> Vec<f64> {
    (1..=x.len() + 1)
        .map(|k| {
            let mut s = sigma2;
            for l in 1..k {
                s += alpha(k - l) * x[l - 1] * x[l - 1];
            }
            s
        })
        .collect()
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `E[ln|X + c|⁻¹ · 1{|X + c| ≤ δ}]` for `X ~ N(0, 1)`.
///
/// Substituting `t = δw²` removes the logarithmic singularity at `t = 0`;
/// the smooth remainder is integrated with a composite Simpson rule.
pub fn log_inverse_gaussian(delta: f64, c: f64) -> f64 {
    let g = |w: f64| {
        if w == 0.0 {
            return 0.0;
        }
        let t = delta * w * w;
        let weight = std_normal_pdf(t - c) + std_normal_pdf(-t - c);
        2.0 * delta * w * (-t.ln()) * weight
    };
    let panels = 4000;
    let h = 1.0 / panels as f64;
    let mut acc = g(0.0) + g(1.0);
    for i in 1..panels {
        acc += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}
