//! The heating channel.
//!
//! `Y_k = x_k + sqrt(σ² + Σ_{ℓ=1}^{k-1} α_{k-ℓ} x_ℓ²) · U_k` with IID
//! zero-mean unit-variance `U_k`. Memory enters only through the noise
//! variance; the mean of `Y_k` is always `x_k`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::coeffs::{CoeffError, CoefficientSpec};
use crate::rng::{self, Domain};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("ambient noise variance must be positive and finite, got {0}")]
    InvalidSigma2(f64),
    #[error("input power must be non-negative and finite, got {0}")]
    InvalidPower(f64),
    #[error("time index {k} out of range 1..={max}")]
    TimeIndexOutOfRange { k: usize, max: usize },
    #[error("channel input x_{index} is not finite")]
    NonFiniteInput { index: usize },
    #[error("unknown noise distribution `{0}` (expected gaussian or uniform)")]
    UnknownNoise(String),
    #[error(transparent)]
    Coefficients(#[from] CoeffError),
}

/// Law of the normalized noise `U_k`. Both choices are zero-mean,
/// unit-variance, with finite fourth moment and finite differential entropy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum NoiseDistribution {
    #[default]
    GaussianUnit,
    /// Uniform on `[-√3, √3]`.
    UniformUnit,
}

const SQRT_3: f64 = 1.732_050_807_568_877_2;

impl NoiseDistribution {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseDistribution::GaussianUnit => rng.sample(StandardNormal),
            NoiseDistribution::UniformUnit => SQRT_3 * (2.0 * rng.random::<f64>() - 1.0),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            NoiseDistribution::GaussianUnit => (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            NoiseDistribution::UniformUnit => {
                if x.abs() <= SQRT_3 {
                    1.0 / (2.0 * SQRT_3)
                } else {
                    0.0
                }
            }
        }
    }

    /// Differential entropy `h(U)` in nats.
    pub fn entropy(&self) -> f64 {
        match self {
            NoiseDistribution::GaussianUnit => 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln(),
            NoiseDistribution::UniformUnit => (2.0 * SQRT_3).ln(),
        }
    }

    /// `E[U⁴]`.
    pub fn fourth_moment(&self) -> f64 {
        match self {
            NoiseDistribution::GaussianUnit => 3.0,
            NoiseDistribution::UniformUnit => 1.8,
        }
    }

    /// Interval outside which the density is below `1e-30` (or zero).
    pub fn effective_support(&self) -> (f64, f64) {
        match self {
            // φ(x) < 1e-30 for |x| > 11.7
            NoiseDistribution::GaussianUnit => (-11.8, 11.8),
            NoiseDistribution::UniformUnit => (-SQRT_3, SQRT_3),
        }
    }
}

impl fmt::Display for NoiseDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseDistribution::GaussianUnit => "gaussian",
            NoiseDistribution::UniformUnit => "uniform",
        })
    }
}

impl FromStr for NoiseDistribution {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseDistribution::GaussianUnit),
            "uniform" => Ok(NoiseDistribution::UniformUnit),
            other => Err(ChannelError::UnknownNoise(other.to_string())),
        }
    }
}

/// Ambient noise, noise law and power budget of one channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    sigma2: f64,
    noise: NoiseDistribution,
    power: f64,
}

impl ChannelParams {
    pub fn new(sigma2: f64, noise: NoiseDistribution, power: f64) -> Result<Self, ChannelError> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(ChannelError::InvalidSigma2(sigma2));
        }
        if !(power >= 0.0 && power.is_finite()) {
            return Err(ChannelError::InvalidPower(power));
        }
        Ok(Self { sigma2, noise, power })
    }

    /// Parameters with `P = snr · σ²`.
    pub fn from_snr(sigma2: f64, noise: NoiseDistribution, snr: f64) -> Result<Self, ChannelError> {
        if !(snr >= 0.0 && snr.is_finite()) {
            return Err(ChannelError::InvalidPower(snr));
        }
        Self::new(sigma2, noise, snr * sigma2)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn noise(&self) -> NoiseDistribution {
        self.noise
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// `P / σ²`.
    pub fn snr(&self) -> f64 {
        self.power / self.sigma2
    }
}

/// `σ² + Σ_{ℓ=1}^{k-1} α_{k-ℓ} x_ℓ²`, the noise variance at time `k`
/// (1-based) by direct summation.
pub fn noise_variance(spec: &CoefficientSpec, sigma2: f64, x_prefix: &[f64], k: usize) -> Result<f64, ChannelError> {
    if k == 0 || k > x_prefix.len() + 1 {
        return Err(ChannelError::TimeIndexOutOfRange {
            k,
            max: x_prefix.len() + 1,
        });
    }
    let first = match spec.support_len() {
        Some(s) => k.saturating_sub(s).max(1),
        None => 1,
    };
    let mut v = sigma2;
    for l in first..k {
        let x = x_prefix[l - 1];
        v += spec.eval(k - l) * x * x;
    }
    Ok(v)
}

/// Variance sequence for `k = 1..=n+1` of the geometric family in `O(n)`,
/// through `S_1 = 0`, `S_k = ρ·(S_{k-1} + x_{k-1}²)`.
pub fn geometric_fast_variance(rho: f64, sigma2: f64, x_prefix: &[f64]) -> Result<Vec<f64>, ChannelError> {
    // reuse the family's validation of rho
    CoefficientSpec::geometric(rho)?;
    let mut out = Vec::with_capacity(x_prefix.len() + 1);
    let mut acc = 0.0;
    out.push(sigma2);
    for &x in x_prefix {
        acc = rho * (acc + x * x);
        out.push(sigma2 + acc);
    }
    Ok(out)
}

/// Smallest window `W` with `Σ_{ℓ>W} α_ℓ · max_power < tol`.
pub fn truncation_window(spec: &CoefficientSpec, max_power: f64, tol: f64) -> Result<usize, ChannelError> {
    if max_power <= 0.0 {
        return Ok(0);
    }
    let neglected = |w: usize| spec.tail_bound(w).map(|t| t * max_power);
    if neglected(0)? < tol {
        return Ok(0);
    }
    let mut hi = 1usize;
    while neglected(hi)? >= tol {
        if hi > 1 << 40 {
            return Err(ChannelError::Coefficients(CoeffError::Divergent));
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if neglected(mid)? < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// How the simulator evaluates the noise variance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum VarianceMode {
    /// Geometric recursion for the geometric family, exact summation
    /// otherwise.
    #[default]
    Auto,
    /// Exact summation over every past input (or the finite support).
    Exact,
    /// Exact summation over the last `W` inputs only.
    Window(usize),
}

/// Running noise-variance state of one block: the past input powers, or the
/// scalar accumulator on the geometric fast path.
#[derive(Clone, Debug)]
pub struct ChannelState<'a> {
    spec: &'a CoefficientSpec,
    sigma2: f64,
    powers: Vec<f64>,
    lags: Vec<f64>,
    limit: Option<usize>,
    recursion: Option<(f64, f64)>,
}

impl<'a> ChannelState<'a> {
    pub fn new(spec: &'a CoefficientSpec, sigma2: f64, mode: VarianceMode) -> Self {
        let recursion = match (mode, spec.geometric_ratio()) {
            (VarianceMode::Auto, Some(rho)) => Some((rho, 0.0)),
            _ => None,
        };
        let limit = match mode {
            VarianceMode::Window(w) => Some(spec.support_len().map_or(w, |s| s.min(w))),
            _ => spec.support_len(),
        };
        Self {
            spec,
            sigma2,
            powers: Vec::new(),
            lags: Vec::new(),
            limit,
            recursion,
        }
    }

    /// Index `k` of the next channel use.
    pub fn time(&self) -> usize {
        self.powers.len() + 1
    }

    /// Noise variance of the next channel use.
    pub fn variance(&self) -> f64 {
        if let Some((_, acc)) = self.recursion {
            return self.sigma2 + acc;
        }
        let past = self.powers.len();
        let reach = self.limit.map_or(past, |l| l.min(past));
        let mut v = self.sigma2;
        for lag in 1..=reach {
            let p = self.powers[past - lag];
            if p != 0.0 {
                v += self.lags[lag - 1] * p;
            }
        }
        v
    }

    /// Records the input sent at the current channel use.
    pub fn push(&mut self, x: f64) {
        if let Some((rho, acc)) = &mut self.recursion {
            *acc = *rho * (*acc + x * x);
            return;
        }
        self.powers.push(x * x);
        let needed = self.limit.map_or(self.powers.len(), |l| l.min(self.powers.len()));
        while self.lags.len() < needed {
            let next = self.lags.len() + 1;
            self.lags.push(self.spec.eval(next));
        }
    }
}

/// A channel instance: coefficients, parameters and variance mode.
#[derive(Clone, Copy, Debug)]
pub struct HeatingChannel<'a> {
    spec: &'a CoefficientSpec,
    params: ChannelParams,
    mode: VarianceMode,
}

impl<'a> HeatingChannel<'a> {
    pub fn new(spec: &'a CoefficientSpec, params: ChannelParams) -> Self {
        Self {
            spec,
            params,
            mode: VarianceMode::Auto,
        }
    }

    pub fn with_mode(mut self, mode: VarianceMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn spec(&self) -> &'a CoefficientSpec {
        self.spec
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn state(&self) -> ChannelState<'a> {
        ChannelState::new(self.spec, self.params.sigma2, self.mode)
    }

    /// Sends `x` through the channel, drawing `U_1, U_2, ...` from `rng` in
    /// time order.
    pub fn transmit<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>, ChannelError> {
        let mut out = Vec::with_capacity(x.len());
        self.transmit_into(x, rng, &mut out)?;
        Ok(out)
    }

    /// As [`transmit`](Self::transmit), writing into `out`.
    pub fn transmit_into<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R, out: &mut Vec<f64>) -> Result<(), ChannelError> {
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(ChannelError::NonFiniteInput { index: i + 1 });
        }
        out.clear();
        let mut state = self.state();
        for &xk in x {
            let u = self.params.noise.sample(rng);
            out.push(xk + state.variance().sqrt() * u);
            state.push(xk);
        }
        Ok(())
    }

    /// Runs `n` channel uses where input `k` is produced by the encoder from
    /// the message and the outputs `y_1..y_{k-1}`. Returns `(inputs, outputs)`.
    pub fn transmit_with_feedback<E, R>(
        &self,
        encoder: &mut E,
        message: usize,
        n: usize,
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<f64>), ChannelError>
    where
        E: FeedbackEncoder + ?Sized,
        R: Rng + ?Sized,
    {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let mut state = self.state();
        for k in 1..=n {
            let xk = encoder.encode(message, &ys);
            if !xk.is_finite() {
                return Err(ChannelError::NonFiniteInput { index: k });
            }
            let u = self.params.noise.sample(rng);
            ys.push(xk + state.variance().sqrt() * u);
            xs.push(xk);
            state.push(xk);
        }
        Ok((xs, ys))
    }
}

/// Encoder with access to past channel outputs.
pub trait FeedbackEncoder {
    /// Input for the next channel use given the message and all outputs so
    /// far.
    fn encode(&mut self, message: usize, past_outputs: &[f64]) -> f64;
}

impl<F: FnMut(usize, &[f64]) -> f64> FeedbackEncoder for F {
    fn encode(&mut self, message: usize, past_outputs: &[f64]) -> f64 {
        self(message, past_outputs)
    }
}

/// Sends `x` through the channel with noise from the stream keyed by `seed`.
pub fn simulate_block(
    spec: &CoefficientSpec,
    params: &ChannelParams,
    x: &[f64],
    seed: u64,
) -> Result<Vec<f64>, ChannelError> {
    let mut rng = rng::stream(seed, Domain::Noise, &[0]);
    HeatingChannel::new(spec, *params).transmit(x, &mut rng)
}

/// Feedback counterpart of [`simulate_block`], drawing the same noise for the
/// same seed.
pub fn simulate_with_feedback<E: FeedbackEncoder + ?Sized>(
    spec: &CoefficientSpec,
    params: &ChannelParams,
    encoder: &mut E,
    message: usize,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), ChannelError> {
    let mut rng = rng::stream(seed, Domain::Noise, &[0]);
    HeatingChannel::new(spec, *params).transmit_with_feedback(encoder, message, n, &mut rng)
}
