//! Monte Carlo experiments built on the channel, the coding scheme and the
//! rate formulas.
//!
//! Every experiment is a pure function of its configuration and seed. Trial
//! `t` of an experiment reads only streams keyed by `(seed, t)`, and partial
//! results are folded in block order, so the worker count never changes a
//! single bit of the output.

use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::bounds::{self, BoundsError};
use crate::channel::{ChannelError, ChannelParams, HeatingChannel, NoiseDistribution};
use crate::codec::{self, CodecError, SchemeOptions, SchemeParams, SlotVariance};
use crate::coeffs::{CoeffError, CoefficientSpec};
use crate::par;
use crate::rng::{self, Domain};
use crate::stats::Moments;

/// Tolerance for coefficient sums used by the experiments.
pub const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Coefficients(#[from] CoeffError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::InvalidConfig(msg.into())
}

/// Empirical statistics of the residual `y_k - x_k` at one time index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualRow {
    /// 1-based time index.
    pub k: usize,
    pub x: f64,
    /// Exact noise variance at `k`.
    pub noise_var: f64,
    pub emp_mean: f64,
    pub emp_var: f64,
    pub trials: u64,
}

/// Sends the fixed input `x` through the channel `trials` times and compares
/// the residual variance at every index with the exact value.
pub fn residual_profile(
    spec: &CoefficientSpec,
    params: &ChannelParams,
    x: &[f64],
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<ResidualRow>, HarnessError> {
    if trials < 2 {
        return Err(invalid("at least two trials are needed for a variance"));
    }
    let channel = HeatingChannel::new(spec, *params);
    let exact = {
        let mut state = channel.state();
        let mut v = Vec::with_capacity(x.len());
        for &xi in x {
            v.push(state.variance());
            state.push(xi);
        }
        v
    };
    let n = x.len();
    let blocks = par::map_blocks(trials as usize, workers, |range| {
        let mut acc = vec![Moments::default(); n];
        let mut y = Vec::with_capacity(n);
        for t in range {
            let mut noise = rng::stream(seed, Domain::Noise, &[t as u64]);
            channel.transmit_into(x, &mut noise, &mut y)?;
            for ((m, yk), xk) in acc.iter_mut().zip(&y).zip(x) {
                m.push(yk - xk);
            }
        }
        Ok::<_, ChannelError>(acc)
    });
    let mut total = vec![Moments::default(); n];
    for b in blocks {
        for (t, m) in total.iter_mut().zip(&b?) {
            t.merge(m);
        }
    }
    Ok(total
        .iter()
        .enumerate()
        .map(|(i, m)| ResidualRow {
            k: i + 1,
            x: x[i],
            noise_var: exact[i],
            emp_mean: m.mean(),
            emp_var: m.variance(),
            trials,
        })
        .collect())
}

/// Concentration of the subsampled output and noise norms at one block
/// length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcentrationRow {
    pub n: usize,
    /// Active slots `⌊n/L⌋`.
    pub m: usize,
    pub mean_y: f64,
    pub mean_z: f64,
    /// `σ² + P + α^(L)P`.
    pub target_y: f64,
    /// `σ² + α^(L)P`.
    pub target_z: f64,
    pub var_y: f64,
    pub var_z: f64,
    /// Fraction of trials with both normalized norms within `eps` of their
    /// targets.
    pub hit_frac: f64,
    pub eps: f64,
}

impl ConcentrationRow {
    /// `eps` relative to `target_y` and `target_z`.
    pub fn relative_eps(&self) -> (f64, f64) {
        (self.eps / self.target_y, self.eps / self.target_z)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationReport {
    pub alpha_l: f64,
    pub trials: u64,
    pub rows: Vec<ConcentrationRow>,
}

/// Setup of [`norm_concentration`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationConfig {
    pub spec: CoefficientSpec,
    pub sigma2: f64,
    pub noise: NoiseDistribution,
    /// Variance of the IID Gaussian symbols on the active slots.
    pub power: f64,
    pub period: usize,
    pub n_grid: Vec<usize>,
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

/// Draws IID `N(0, P)` symbols on the active slots `0, L, 2L, ...`, sends the
/// block through the channel and records `‖y‖²/m` and `‖z‖²/m` over the
/// active slots, where `z = y - x` comes from the same realization.
pub fn norm_concentration(cfg: &ConcentrationConfig) -> Result<ConcentrationReport, HarnessError> {
    if cfg.n_grid.is_empty() {
        return Err(invalid("block-length grid is empty"));
    }
    if cfg.trials < 2 {
        return Err(invalid("at least two trials are needed for a variance"));
    }
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return Err(invalid(format!("eps must be positive, got {}", cfg.eps)));
    }
    if cfg.period == 0 {
        return Err(invalid("period L must be at least 1"));
    }
    let params = ChannelParams::new(cfg.sigma2, cfg.noise, cfg.power)?;
    let alpha_l = cfg.spec.alpha_l(cfg.period, SUM_TOL)?;
    let target_z = cfg.sigma2 + alpha_l * cfg.power;
    let target_y = target_z + cfg.power;
    let channel = HeatingChannel::new(&cfg.spec, params);
    let sd = cfg.power.sqrt();

    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let m = n / cfg.period;
        if m == 0 {
            return Err(invalid(format!("block length {n} has no active slot at period {}", cfg.period)));
        }
        let blocks = par::map_blocks(cfg.trials as usize, cfg.workers, |range| {
            let mut x = vec![0.0; n];
            let mut y = Vec::with_capacity(n);
            let (mut my, mut mz, mut hits) = (Moments::default(), Moments::default(), 0u64);
            for t in range {
                let key = [n as u64, t as u64];
                let mut input = rng::stream(cfg.seed, Domain::Input, &key);
                for k in (0..n).step_by(cfg.period) {
                    let g: f64 = StandardNormal.sample(&mut input);
                    x[k] = sd * g;
                }
                let mut noise = rng::stream(cfg.seed, Domain::Noise, &key);
                channel.transmit_into(&x, &mut noise, &mut y)?;
                let (mut sy, mut sz) = (0.0, 0.0);
                for k in (0..n).step_by(cfg.period).take(m) {
                    sy += y[k] * y[k];
                    let z = y[k] - x[k];
                    sz += z * z;
                }
                let (ny, nz) = (sy / m as f64, sz / m as f64);
                my.push(ny);
                mz.push(nz);
                hits += u64::from((ny - target_y).abs() <= cfg.eps && (nz - target_z).abs() <= cfg.eps);
            }
            Ok::<_, ChannelError>((my, mz, hits))
        });
        let (mut my, mut mz, mut hits) = (Moments::default(), Moments::default(), 0u64);
        for b in blocks {
            let (by, bz, bh) = b?;
            my.merge(&by);
            mz.merge(&bz);
            hits += bh;
        }
        rows.push(ConcentrationRow {
            n,
            m,
            mean_y: my.mean(),
            mean_z: mz.mean(),
            target_y,
            target_z,
            var_y: my.variance(),
            var_z: mz.variance(),
            hit_frac: hits as f64 / cfg.trials as f64,
            eps: cfg.eps,
        });
    }
    Ok(ConcentrationReport {
        alpha_l,
        trials: cfg.trials,
        rows,
    })
}

/// Rates of an error sweep.
#[derive(Clone, Debug, PartialEq)]
pub enum RateGrid {
    /// Rates in nats per channel use.
    Absolute(Vec<f64>),
    /// Multiples of the analytic pre-limit rate at each point.
    FractionOfPreLimit(Vec<f64>),
}

impl RateGrid {
    fn len(&self) -> usize {
        match self {
            RateGrid::Absolute(v) | RateGrid::FractionOfPreLimit(v) => v.len(),
        }
    }
}

/// Setup of [`error_sweep`].
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub spec: CoefficientSpec,
    pub sigma2: f64,
    pub noise: NoiseDistribution,
    pub snr_grid: Vec<f64>,
    pub period_grid: Vec<usize>,
    pub n_grid: Vec<usize>,
    pub rates: RateGrid,
    pub trials: u64,
    pub seed: u64,
    pub slot_variance: SlotVariance,
    pub options: SchemeOptions,
}

/// One point of an error sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub spec: String,
    pub sigma2: f64,
    pub snr: f64,
    pub period: usize,
    pub n: usize,
    /// `None` when the message count could not be formed.
    pub messages: Option<u64>,
    pub rate_nats: f64,
    pub trials: u64,
    /// `None` for skipped points.
    pub errors: Option<u64>,
    pub err_prob: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Pre-limit rate of the scheme with the symbol variance used here.
    pub ach_rate_pre_limit: f64,
    /// Seed the point was run with.
    pub seed: u64,
    /// Why the point was skipped.
    pub skipped: Option<String>,
}

/// Seed of the sweep point `(snr, L, n, |M|)`. Depends on the point itself,
/// not on its position in the grid.
pub fn sweep_point_seed(seed: u64, snr: f64, period: usize, n: usize, messages: u64) -> u64 {
    rng::stream_key(seed, Domain::SweepPoint, &[snr.to_bits(), period as u64, n as u64, messages])
}

/// Estimates the block-error probability over the grid `snr × L × n × rate`
/// (in that nesting order), calling `on_row` as each point finishes.
///
/// Points whose message count exceeds the configured cap, or whose block is
/// shorter than the period, become rows with `NaN` estimates and a
/// `skipped` reason; the sweep carries on.
pub fn error_sweep<F: FnMut(&SweepRow)>(cfg: &SweepConfig, mut on_row: F) -> Result<Vec<SweepRow>, HarnessError> {
    if cfg.snr_grid.is_empty() || cfg.period_grid.is_empty() || cfg.n_grid.is_empty() || cfg.rates.len() == 0 {
        return Err(invalid("every sweep grid must be non-empty"));
    }
    if cfg.trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let spec_label = cfg.spec.to_string();
    let mut rows = Vec::new();
    for &snr in &cfg.snr_grid {
        let params = ChannelParams::from_snr(cfg.sigma2, cfg.noise, snr)?;
        for &period in &cfg.period_grid {
            let variance = cfg.slot_variance.variance(params.power(), period);
            let alpha_l = cfg.spec.alpha_l(period, SUM_TOL)?;
            let ach = bounds::achievable_rate_opt(variance, cfg.sigma2, alpha_l, period, 0.0)?.pre_limit_rate;
            for &n in &cfg.n_grid {
                let rates: Vec<f64> = match &cfg.rates {
                    RateGrid::Absolute(v) => v.clone(),
                    RateGrid::FractionOfPreLimit(v) => v.iter().map(|f| f * ach).collect(),
                };
                for rate in rates {
                    let row = sweep_point(cfg, &spec_label, &params, period, n, rate, variance, ach)?;
                    on_row(&row);
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn sweep_point(
    cfg: &SweepConfig,
    spec_label: &str,
    params: &ChannelParams,
    period: usize,
    n: usize,
    rate: f64,
    variance: f64,
    ach: f64,
) -> Result<SweepRow, HarnessError> {
    let mut row = SweepRow {
        spec: spec_label.to_string(),
        sigma2: cfg.sigma2,
        snr: params.snr(),
        period,
        n,
        messages: None,
        rate_nats: rate,
        trials: cfg.trials,
        errors: None,
        err_prob: f64::NAN,
        ci_lo: f64::NAN,
        ci_hi: f64::NAN,
        ach_rate_pre_limit: ach,
        seed: 0,
        skipped: None,
    };
    let messages = match codec::message_count_for_rate(rate, n) {
        Ok(m) => m,
        Err(e @ CodecError::ResourceLimit { .. }) => {
            row.skipped = Some(e.to_string());
            return Ok(row);
        }
        Err(e) => return Err(e.into()),
    };
    row.messages = Some(messages);
    row.seed = sweep_point_seed(cfg.seed, params.snr(), period, n, messages);
    let scheme = match SchemeParams::new(period, messages, n) {
        Ok(s) => s,
        Err(e @ CodecError::InvalidScheme(_)) => {
            row.skipped = Some(e.to_string());
            return Ok(row);
        }
        Err(e) => return Err(e.into()),
    };
    match codec::scheme_error_probability_with(&cfg.spec, params, &scheme, variance, cfg.trials, row.seed, &cfg.options) {
        Ok(est) => {
            row.errors = Some(est.errors);
            row.err_prob = est.probability;
            row.ci_lo = est.ci_lo;
            row.ci_hi = est.ci_hi;
        }
        Err(e @ CodecError::ResourceLimit { .. }) => row.skipped = Some(e.to_string()),
        Err(e) => return Err(e.into()),
    }
    Ok(row)
}

/// Best formula rate for one coefficient family at one SNR.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoRow {
    pub spec: String,
    pub sigma2: f64,
    pub snr: f64,
    /// Period attaining the best rate.
    pub period: usize,
    /// Pre-limit rate at `s*` maximized over the period grid.
    pub rate_nats: f64,
    /// High-power limit at the same period.
    pub asymptotic_rate: f64,
}

/// Whether the best rate saturates or keeps growing with SNR.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Plateau,
    Growth,
}

impl std::fmt::Display for Trend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Trend::Plateau => "plateau",
            Trend::Growth => "growth",
        })
    }
}

/// Ratio of the best rate at the largest SNR to the best rate at the grid
/// SNR closest to [`TREND_SPAN`] times smaller.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoSummary {
    pub spec: String,
    pub low_snr: f64,
    pub high_snr: f64,
    pub ratio: f64,
    pub trend: Trend,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoReport {
    pub rows: Vec<DemoRow>,
    pub summaries: Vec<DemoSummary>,
}

/// Ratio above which a family is reported as growing.
pub const GROWTH_RATIO: f64 = 2.0;

/// SNR span, as a factor, over which the trend is measured.
pub const TREND_SPAN: f64 = 1e4;

/// For every family and SNR, maximizes the pre-limit rate over the period
/// grid, skipping periods with divergent `α^(L)`.
pub fn dichotomy_demo(
    specs: &[CoefficientSpec],
    snr_grid: &[f64],
    period_grid: &[usize],
    sigma2: f64,
    slot_variance: SlotVariance,
) -> Result<DemoReport, HarnessError> {
    if specs.is_empty() || snr_grid.is_empty() || period_grid.is_empty() {
        return Err(invalid("demo needs at least one family, SNR and period"));
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for spec in specs {
        let label = spec.to_string();
        let mut alphas = Vec::new();
        for &l in period_grid {
            match spec.alpha_l(l, SUM_TOL) {
                Ok(a) => alphas.push((l, a)),
                Err(CoeffError::Divergent) => {}
                Err(e) => return Err(e.into()),
            }
        }
        if alphas.is_empty() {
            return Err(invalid(format!("{label}: memory sum diverges for every period on the grid")));
        }
        let first = rows.len();
        for &snr in snr_grid {
            let power = snr * sigma2;
            let mut best: Option<DemoRow> = None;
            for &(l, a) in &alphas {
                let r = bounds::achievable_rate_opt(slot_variance.variance(power, l), sigma2, a, l, 0.0)?;
                if best.as_ref().is_none_or(|b| r.pre_limit_rate > b.rate_nats) {
                    best = Some(DemoRow {
                        spec: label.clone(),
                        sigma2,
                        snr,
                        period: l,
                        rate_nats: r.pre_limit_rate,
                        asymptotic_rate: r.asymptotic_rate,
                    });
                }
            }
            rows.extend(best);
        }
        let own = &rows[first..];
        let hi = own.iter().max_by(|a, b| a.snr.total_cmp(&b.snr)).expect("non-empty");
        let target = (hi.snr / TREND_SPAN).ln();
        let lo = own
            .iter()
            .min_by(|a, b| (a.snr.ln() - target).abs().total_cmp(&(b.snr.ln() - target).abs()))
            .expect("non-empty");
        let ratio = hi.rate_nats / lo.rate_nats;
        summaries.push(DemoSummary {
            spec: label,
            low_snr: lo.snr,
            high_snr: hi.snr,
            ratio,
            trend: if ratio > GROWTH_RATIO { Trend::Growth } else { Trend::Plateau },
        });
    }
    Ok(DemoReport { rows, summaries })
}
