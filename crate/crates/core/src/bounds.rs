//! Achievable rates, the converse constant and the density functionals they
//! need.
//!
//! All rates are in nats per channel use. The achievability side evaluates
//! the Chernoff-bound rate of the periodic Gaussian scheme, both at finite
//! power and in the high-power limit `(1/2L)·ln(1 + 1/α^(L))`. The converse
//! side evaluates the constant `K - ln β̃` that bounds the rate of any scheme
//! (with or without feedback) when the coefficient ratios stay above `ρ`.

use thiserror::Error;

use crate::channel::NoiseDistribution;
use crate::coeffs::{CoeffError, CoefficientSpec};
use crate::quad;
use crate::rng::{self, Domain};
use crate::stats::Moments;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("Chernoff parameter s must be negative, got {0}")]
    NonNegativeChernoff(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("coefficient condition fails at index {index}: {reason}")]
    Precondition { index: usize, reason: String },
    #[error("no admissible (rho, l0) pair in the search range")]
    NoAdmissiblePair,
    #[error(transparent)]
    Coefficients(#[from] CoeffError),
}

fn invalid(msg: impl Into<String>) -> BoundsError {
    BoundsError::InvalidArgument(msg.into())
}

fn check_rate_inputs(power: f64, sigma2: f64, alpha_l: f64, period: usize, eps: f64) -> Result<(), BoundsError> {
    if !(power >= 0.0 && power.is_finite()) {
        return Err(invalid(format!("power must be non-negative, got {power}")));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    if !(alpha_l >= 0.0 && alpha_l.is_finite()) {
        return Err(invalid(format!("alpha^(L) must be finite and non-negative, got {alpha_l}")));
    }
    if period == 0 {
        return Err(invalid("period L must be at least 1"));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps must be non-negative, got {eps}")));
    }
    Ok(())
}

/// Chernoff-bound rate of the periodic Gaussian scheme with symbol variance
/// `power` on the active slots, at parameter `s < 0`:
///
/// `(s/L)(σ² + α^(L)P + ε) + (1/2L)ln(1 - 2sP) - (s/L)(σ² + P + α^(L)P - ε)/(1 - 2sP)`.
pub fn achievable_rate_pre_limit(
    power: f64,
    sigma2: f64,
    alpha_l: f64,
    period: usize,
    eps: f64,
    s: f64,
) -> Result<f64, BoundsError> {
    check_rate_inputs(power, sigma2, alpha_l, period, eps)?;
    if !(s < 0.0 && s.is_finite()) {
        return Err(BoundsError::NonNegativeChernoff(s));
    }
    let l = period as f64;
    let t = 1.0 - 2.0 * s * power;
    let typical_noise = sigma2 + alpha_l * power + eps;
    let typical_output = sigma2 + power + alpha_l * power - eps;
    Ok(s / l * typical_noise + (-2.0 * s * power).ln_1p() / (2.0 * l) - s / l * typical_output / t)
}

/// `s* = -1 / (2(1 + α^(L)P))`.
///
/// This is the exact maximizer of [`achievable_rate_pre_limit`] when
/// `σ² = 1` and `ε = 0`; otherwise see [`optimal_chernoff_parameter`].
pub fn chernoff_parameter(power: f64, alpha_l: f64) -> f64 {
    -0.5 / (1.0 + alpha_l * power)
}

/// Maximizer of [`achievable_rate_pre_limit`] over `s < 0` for arbitrary
/// `σ²` and `ε`.
///
/// With `t = 1 - 2sP` the stationarity condition is `A t² - P t - B = 0`
/// for `A = σ² + α^(L)P + ε` and `B = σ² + P + α^(L)P - ε`; the objective is
/// concave in `t` on the relevant branch, so the root `t > 1` (when it
/// exists) is the maximizer. Returns `None` if the rate is non-increasing
/// in `-s` from the start (e.g. `P = 0`).
pub fn optimal_chernoff_parameter(power: f64, sigma2: f64, alpha_l: f64, eps: f64) -> Option<f64> {
    if power <= 0.0 {
        return None;
    }
    let a = sigma2 + alpha_l * power + eps;
    let b = sigma2 + power + alpha_l * power - eps;
    let t = (power + (power * power + 4.0 * a * b).sqrt()) / (2.0 * a);
    (t > 1.0).then(|| (1.0 - t) / (2.0 * power))
}

/// Rate evaluation of the periodic Gaussian scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReport {
    pub period: usize,
    pub power: f64,
    pub sigma2: f64,
    pub alpha_l: f64,
    pub eps: f64,
    pub s_used: f64,
    pub pre_limit_rate: f64,
    /// `(1/2L)·ln(1 + 1/α^(L))`; infinite when `α^(L) = 0`.
    pub asymptotic_rate: f64,
    pub rho_lower_bound: Option<f64>,
}

impl RateReport {
    /// True when the high-power rate is unbounded (`α^(L) = 0`).
    pub fn is_unbounded(&self) -> bool {
        self.asymptotic_rate.is_infinite()
    }

    /// Attaches `(1/2L)ln(1 - ρ^L) + (1/2)ln(1/ρ)`.
    pub fn with_rho_bound(mut self, rho: f64) -> Result<Self, BoundsError> {
        self.rho_lower_bound = Some(rho_rate_lower_bound(rho, self.period)?);
        Ok(self)
    }
}

/// Rate at `s*` together with its high-power limit.
pub fn achievable_rate_opt(power: f64, sigma2: f64, alpha_l: f64, period: usize, eps: f64) -> Result<RateReport, BoundsError> {
    let s = chernoff_parameter(power, alpha_l);
    let pre = achievable_rate_pre_limit(power, sigma2, alpha_l, period, eps, s)?;
    Ok(RateReport {
        period,
        power,
        sigma2,
        alpha_l,
        eps,
        s_used: s,
        pre_limit_rate: pre,
        asymptotic_rate: asymptotic_rate(alpha_l, period),
        rho_lower_bound: None,
    })
}

/// `(1/2L)·ln(1 + 1/α^(L))`, `+inf` at `α^(L) = 0`.
pub fn asymptotic_rate(alpha_l: f64, period: usize) -> f64 {
    if alpha_l == 0.0 {
        f64::INFINITY
    } else {
        // ln(1 + 1/a) = ln(1 + a) - ln(a) stays finite for subnormal a
        (alpha_l.ln_1p() - alpha_l.ln()) / (2.0 * period as f64)
    }
}

/// `(1/2L)·ln(1 - ρ^L) + (1/2)·ln(1/ρ)`: what the scheme guarantees when
/// `α_ℓ ≤ ρ^ℓ` from some index on.
pub fn rho_rate_lower_bound(rho: f64, period: usize) -> Result<f64, BoundsError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("rho must lie in (0, 1), got {rho}")));
    }
    if period == 0 {
        return Err(invalid("period L must be at least 1"));
    }
    let l = period as f64;
    Ok((-rho.powf(l)).ln_1p() / (2.0 * l) - 0.5 * rho.ln())
}

/// `(1/2)ln(1/ρ) - rho_rate_lower_bound(ρ, L) = -ln(1 - ρ^L) / 2L`, computed
/// without cancellation.
pub fn rho_rate_gap(rho: f64, period: usize) -> f64 {
    let l = period as f64;
    -(-rho.powf(l)).ln_1p() / (2.0 * l)
}

/// `(1/2L)·ln(1 + L·SNR)`, achievable when all coefficients from `cutoff` on
/// vanish and `L ≥ cutoff`.
pub fn truncated_rate(cutoff: usize, period: usize, snr: f64) -> Result<f64, BoundsError> {
    if period < cutoff.max(1) {
        return Err(invalid(format!(
            "period {period} is shorter than the memory cutoff {cutoff}; the channel does not cool down between active slots"
        )));
    }
    if !(snr >= 0.0 && snr.is_finite()) {
        return Err(invalid(format!("SNR must be non-negative, got {snr}")));
    }
    let l = period as f64;
    Ok((l * snr).ln_1p() / (2.0 * l))
}

/// Indices checked by [`beta_tilde`] unless told otherwise.
pub const DEFAULT_HORIZON: usize = 256;

/// Relative slack for comparisons between coefficient products.
const REL_SLACK: f64 = 1e-12;

/// Scale `β̃ = min{ρ^{ℓ0-1}·α_{ℓ0} / max_{0≤ℓ'<ℓ0} α_{ℓ'}, α_{ℓ0}, ρ^{ℓ0}}`
/// of the Cauchy output law.
///
/// Checks `α_{ℓ0} > 0` and `α_{ℓ+1}/α_ℓ ≥ ρ` for `ℓ0 ≤ ℓ ≤ horizon`, then
/// verifies `0 < β̃ < 1` and `β̃·α_ℓ ≤ α_{ℓ+ℓ0}` for `0 ≤ ℓ ≤ horizon`.
pub fn beta_tilde(spec: &CoefficientSpec, rho: f64, l0: usize, horizon: usize) -> Result<f64, BoundsError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("rho must lie in (0, 1), got {rho}")));
    }
    if l0 == 0 {
        return Err(invalid("l0 must be a positive integer"));
    }
    if horizon < l0 {
        return Err(invalid(format!("horizon {horizon} is shorter than l0 = {l0}")));
    }
    let ln_rho = rho.ln();
    let ln_at_l0 = spec.ln_eval(l0);
    if ln_at_l0 == f64::NEG_INFINITY {
        return Err(BoundsError::Precondition {
            index: l0,
            reason: format!("alpha_{l0} = 0"),
        });
    }
    let mut ln_cur = ln_at_l0;
    for l in l0..=horizon {
        let ln_next = spec.ln_eval(l + 1);
        // ln_cur is finite here: every earlier ratio was at least rho
        if ln_next - ln_cur < ln_rho - REL_SLACK {
            return Err(BoundsError::Precondition {
                index: l,
                reason: format!("alpha_{}/alpha_{l} = {:e} < rho = {rho}", l + 1, (ln_next - ln_cur).exp()),
            });
        }
        ln_cur = ln_next;
    }
    let head_max = (0..l0).map(|l| spec.eval(l)).fold(0.0, f64::max);
    let alpha_l0 = spec.eval(l0);
    let beta = (rho.powi(l0 as i32 - 1) * alpha_l0 / head_max).min(alpha_l0).min(rho.powi(l0 as i32));
    if !(beta > 0.0 && beta < 1.0) {
        return Err(BoundsError::Precondition {
            index: l0,
            reason: format!("beta tilde = {beta} is outside (0, 1)"),
        });
    }
    let ln_beta = beta.ln();
    for l in 0..=horizon {
        let lhs = ln_beta + spec.ln_eval(l);
        let rhs = spec.ln_eval(l + l0);
        if lhs > rhs + REL_SLACK {
            return Err(BoundsError::Precondition {
                index: l,
                reason: format!("beta tilde * alpha_{l} exceeds alpha_{}", l + l0),
            });
        }
    }
    Ok(beta)
}

/// A probability density on the real line.
pub trait Density {
    fn pdf(&self, x: f64) -> f64;

    /// Interval outside which the density is negligible (`< 1e-30`).
    fn support(&self) -> (f64, f64);

    /// Points where the density may jump or have a kink.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl Density for NoiseDistribution {
    fn pdf(&self, x: f64) -> f64 {
        NoiseDistribution::pdf(self, x)
    }

    fn support(&self) -> (f64, f64) {
        self.effective_support()
    }
}

/// Uniform density on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformDensity {
    pub lo: f64,
    pub hi: f64,
}

impl Density for UniformDensity {
    fn pdf(&self, x: f64) -> f64 {
        if x >= self.lo && x <= self.hi {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        }
    }

    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

/// Gaussian density `N(mean, sd²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianDensity {
    pub mean: f64,
    pub sd: f64,
}

impl Density for GaussianDensity {
    fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        (-0.5 * z * z).exp() / (self.sd * (2.0 * std::f64::consts::PI).sqrt())
    }

    fn support(&self) -> (f64, f64) {
        (self.mean - 11.8 * self.sd, self.mean + 11.8 * self.sd)
    }
}

/// Piecewise-linear density through `(xs[i], fs[i])`, zero outside.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl GridDensity {
    pub fn new(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self, BoundsError> {
        if xs.len() < 2 || xs.len() != fs.len() {
            return Err(invalid("density grid needs at least two (x, f) pairs of equal length"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("density grid abscissae must be strictly increasing"));
        }
        if fs.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
            return Err(invalid("density grid values must be finite and non-negative"));
        }
        Ok(Self { xs, fs })
    }
}

impl Density for GridDensity {
    fn pdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        let i = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let w = (x - x0) / (x1 - x0);
        self.fs[i - 1] * (1.0 - w) + self.fs[i] * w
    }

    fn support(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.xs.clone()
    }
}

const SCAN_POINTS: usize = 2048;

/// `h⁻ = ∫_{f > 1} f·ln f`, zero for any density bounded by one.
///
/// The region `{f > 1}` is located on a fine scan of each smooth piece,
/// with crossings refined by bisection; the integral over each sub-interval
/// uses adaptive quadrature at absolute tolerance `1e-9`.
pub fn h_minus<D: Density + ?Sized>(density: &D) -> f64 {
    let (lo, hi) = density.support();
    let mut cuts: Vec<f64> = density
        .breakpoints()
        .into_iter()
        .filter(|b| *b > lo && *b < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let f = |x: f64| density.pdf(x);
    let integrand = |x: f64| {
        let v = f(x);
        if v > 1.0 {
            v * v.ln()
        } else {
            0.0
        }
    };
    let mut total = 0.0;
    for piece in cuts.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let h = (b - a) / SCAN_POINTS as f64;
        let sample = |i: usize| a + (i as f64 + 0.5) * h;
        let mut start: Option<f64> = None;
        let mut prev_in = false;
        for i in 0..SCAN_POINTS {
            let x = sample(i);
            let inside = f(x) > 1.0;
            if inside && !prev_in {
                start = Some(if i == 0 { a } else { crossing(&f, sample(i - 1), x) });
            } else if !inside && prev_in {
                let end = crossing(&f, sample(i - 1), x);
                total += quad::integrate(&integrand, start.take().unwrap_or(a), end, quad::DEFAULT_TOL);
            }
            prev_in = inside;
        }
        if let Some(s) = start {
            total += quad::integrate(&integrand, s, b, quad::DEFAULT_TOL);
        }
    }
    total
}

/// Point in `[x0, x1]` where `f - 1` changes sign.
fn crossing<F: Fn(f64) -> f64>(f: &F, mut x0: f64, mut x1: f64) -> f64 {
    let above0 = f(x0) > 1.0;
    for _ in 0..80 {
        let mid = 0.5 * (x0 + x1);
        if (f(mid) > 1.0) == above0 {
            x0 = mid;
        } else {
            x1 = mid;
        }
    }
    0.5 * (x0 + x1)
}

/// Converse constant and its ingredients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConverseReport {
    pub rho: f64,
    pub l0: usize,
    pub beta_tilde: f64,
    /// `h(U)`.
    pub h_noise: f64,
    /// `h⁻(U)`.
    pub h_minus_noise: f64,
    pub delta: f64,
    pub eta: f64,
    /// User-supplied value of the log-inverse slack `ε(δ, η)`; zero gives an
    /// optimistic constant.
    pub eps_delta_eta: f64,
    /// `K = (2/η)h⁻(U) - h(U) + 2ε + ln(2π / (β̃δ²))`.
    pub k: f64,
    /// `K - ln β̃`.
    pub bound: f64,
}

/// `K - ln β̃`, the limit of the normalized mutual-information upper bound.
pub fn converse_constant(
    spec: &CoefficientSpec,
    rho: f64,
    l0: usize,
    noise: NoiseDistribution,
    delta: f64,
    eta: f64,
    eps_delta_eta: f64,
) -> Result<ConverseReport, BoundsError> {
    let beta = beta_tilde(spec, rho, l0, DEFAULT_HORIZON.max(l0))?;
    converse_from_beta(rho, l0, beta, noise, delta, eta, eps_delta_eta)
}

fn converse_from_beta(
    rho: f64,
    l0: usize,
    beta: f64,
    noise: NoiseDistribution,
    delta: f64,
    eta: f64,
    eps: f64,
) -> Result<ConverseReport, BoundsError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("eta must lie in (0, 1), got {eta}")));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps(delta, eta) must be non-negative, got {eps}")));
    }
    let h_noise = noise.entropy();
    let h_minus_noise = h_minus(&noise);
    let k = 2.0 / eta * h_minus_noise - h_noise + 2.0 * eps + (2.0 * std::f64::consts::PI / (beta * delta * delta)).ln();
    Ok(ConverseReport {
        rho,
        l0,
        beta_tilde: beta,
        h_noise,
        h_minus_noise,
        delta,
        eta,
        eps_delta_eta: eps,
        k,
        bound: k - beta.ln(),
    })
}

/// Smallest converse constant over `l0 ∈ [1, max_l0]`. For each `l0` the
/// largest admissible `ρ` is the smallest ratio `α_{ℓ+1}/α_ℓ` on
/// `[l0, horizon]`, and `β̃` is non-decreasing in `ρ`, so only that `ρ` is
/// tried.
pub fn converse_search(
    spec: &CoefficientSpec,
    noise: NoiseDistribution,
    delta: f64,
    eta: f64,
    eps_delta_eta: f64,
    max_l0: usize,
) -> Result<ConverseReport, BoundsError> {
    let horizon = DEFAULT_HORIZON.max(max_l0);
    let mut best: Option<ConverseReport> = None;
    for l0 in 1..=max_l0 {
        let rho = (l0..=horizon)
            .map(|l| (spec.ln_eval(l + 1) - spec.ln_eval(l)).exp())
            .fold(f64::INFINITY, f64::min)
            .min(1.0 - 1e-9);
        if !(rho > 0.0) || rho.is_nan() {
            continue;
        }
        let Ok(beta) = beta_tilde(spec, rho, l0, horizon) else {
            continue;
        };
        let report = converse_from_beta(rho, l0, beta, noise, delta, eta, eps_delta_eta)?;
        if best.is_none_or(|b| report.bound < b.bound) {
            best = Some(report);
        }
    }
    best.ok_or(BoundsError::NoAdmissiblePair)
}

/// Monte Carlo estimate of `max_c E[ln|X + c|⁻¹ · 1{|X + c| ≤ δ}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogInverseEstimate {
    pub value: f64,
    pub std_error: f64,
    pub argmax_c: f64,
    /// `(c, mean, standard error)` for every shift on the grid.
    pub per_shift: Vec<(f64, f64, f64)>,
}

/// Minimum sample count accepted by [`log_inverse_near_zero`].
pub const MIN_LOG_INVERSE_TRIALS: u64 = 10_000;

/// Estimates the expected log-inverse distance of `U + c` to zero within
/// `δ`, maximized over the shift grid. Every shift reuses the same samples.
pub fn log_inverse_near_zero(
    noise: NoiseDistribution,
    delta: f64,
    c_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<LogInverseEstimate, BoundsError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    if c_grid.is_empty() {
        return Err(invalid("shift grid is empty"));
    }
    if trials < MIN_LOG_INVERSE_TRIALS {
        return Err(invalid(format!("at least {MIN_LOG_INVERSE_TRIALS} trials are required, got {trials}")));
    }
    let mut rng = rng::stream(seed, Domain::LogInverse, &[0]);
    let mut moments = vec![Moments::default(); c_grid.len()];
    for _ in 0..trials {
        let u = noise.sample(&mut rng);
        for (m, &c) in moments.iter_mut().zip(c_grid) {
            let a = (u + c).abs();
            m.push(if a <= delta { -a.ln() } else { 0.0 });
        }
    }
    let per_shift: Vec<(f64, f64, f64)> = c_grid
        .iter()
        .zip(&moments)
        .map(|(&c, m)| (c, m.mean(), m.std_error()))
        .collect();
    let &(argmax_c, value, std_error) = per_shift
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is non-empty");
    Ok(LogInverseEstimate {
        value,
        std_error,
        argmax_c,
        per_shift,
    })
}
