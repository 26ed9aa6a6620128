//! Periodic random Gaussian codes with nearest-neighbor decoding.
//!
//! A codeword is zero except at the active slots `kL+1`, `k = 0..⌊n/L⌋-1`,
//! where its entries are IID zero-mean Gaussian. The decoder looks only at
//! the active slots and picks the codeword closest in Euclidean distance,
//! resolving exact ties with a fair coin.
//!
//! Codeword `m` of the codebook with seed `s` is drawn from the keyed stream
//! `(s, Codeword, [m])`. The error-rate estimator uses this to generate
//! competitors lazily, one at a time, and to stop drawing a competitor as
//! soon as its partial distance exceeds that of the transmitted codeword.
//! This makes codebooks with millions of messages affordable while keeping
//! the estimate identical in distribution to decoding a materialized
//! codebook.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::channel::{ChannelError, ChannelParams, HeatingChannel, VarianceMode};
use crate::coeffs::CoefficientSpec;
use crate::par;
use crate::rng::{self, Domain, StreamFamily, StreamRng};
use crate::stats::{wilson_interval, Z95};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),
    #[error("symbol variance must be non-negative and finite, got {0}")]
    InvalidVariance(f64),
    #[error("{what} of {requested} exceeds the configured limit of {limit}")]
    ResourceLimit {
        what: &'static str,
        requested: f64,
        limit: f64,
    },
    #[error("received sequence has length {got}, expected block length {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("no codeword satisfying the power constraint after {0} draws")]
    StrictPowerUnsatisfied(usize),
    #[error("at least one trial is required")]
    NoTrials,
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Period, codebook size and block length of the scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeParams {
    period: usize,
    message_count: u64,
    block_len: usize,
}

impl SchemeParams {
    pub fn new(period: usize, message_count: u64, block_len: usize) -> Result<Self, CodecError> {
        if period == 0 {
            return Err(CodecError::InvalidScheme("period L must be at least 1".into()));
        }
        if message_count == 0 {
            return Err(CodecError::InvalidScheme("message count must be at least 1".into()));
        }
        if block_len < period {
            return Err(CodecError::InvalidScheme(format!(
                "block length {block_len} leaves no active slot at period {period}"
            )));
        }
        Ok(Self {
            period,
            message_count,
            block_len,
        })
    }

    /// Scheme with `|M| = round(e^{R·n})` (at least one message).
    pub fn with_rate(period: usize, rate: f64, block_len: usize) -> Result<Self, CodecError> {
        let count = message_count_for_rate(rate, block_len)?;
        Self::new(period, count, block_len)
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn message_count(&self) -> u64 {
        self.message_count
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// `⌊n/L⌋`.
    pub fn active_slots(&self) -> usize {
        self.block_len / self.period
    }

    /// 0-based positions of the active slots.
    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.active_slots()).map(move |k| k * self.period)
    }

    /// `ln|M| / n`, nats per channel use.
    pub fn rate(&self) -> f64 {
        (self.message_count as f64).ln() / self.block_len as f64
    }
}

/// `round(e^{R·n})`, at least 1.
pub fn message_count_for_rate(rate: f64, block_len: usize) -> Result<u64, CodecError> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(CodecError::InvalidScheme(format!("rate must be non-negative, got {rate}")));
    }
    let m = (rate * block_len as f64).exp().round();
    if m >= u64::MAX as f64 {
        return Err(CodecError::ResourceLimit {
            what: "message count",
            requested: m,
            limit: u64::MAX as f64,
        });
    }
    Ok((m as u64).max(1))
}

/// Variance of the active symbols.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SlotVariance {
    /// `L·P`: the whole per-period budget on the one active slot.
    #[default]
    FullBudget,
    /// `P` on each active slot; average power `P/L`.
    PerSlot,
}

impl SlotVariance {
    pub fn variance(self, power: f64, period: usize) -> f64 {
        match self {
            SlotVariance::FullBudget => power * period as f64,
            SlotVariance::PerSlot => power,
        }
    }
}

/// Default cap on `|M|·⌊n/L⌋` stored entries of a materialized codebook.
pub const DEFAULT_MAX_CODEBOOK_ENTRIES: usize = 1 << 26;

/// Default cap on `|M|` for error-rate estimation.
pub const DEFAULT_MAX_MESSAGES: u64 = 1 << 24;

/// A materialized codebook. Only the active entries are stored; every other
/// entry is exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    params: SchemeParams,
    variance: f64,
    seed: u64,
    symbols: Vec<f64>,
}

impl Codebook {
    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.params.message_count as usize
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Active entries of codeword `m`.
    pub fn active(&self, m: usize) -> &[f64] {
        let a = self.params.active_slots();
        &self.symbols[m * a..(m + 1) * a]
    }

    /// Full length-`n` codeword `m`.
    pub fn codeword(&self, m: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.params.block_len];
        for (i, s) in self.params.active_indices().zip(self.active(m)) {
            x[i] = *s;
        }
        x
    }
}

#[inline]
fn draw_symbols(rng: &mut StreamRng, sd: f64, out: &mut [f64]) {
    for s in out {
        let u: f64 = rng.sample(StandardNormal);
        *s = sd * u;
    }
}

fn check_variance(variance: f64) -> Result<(), CodecError> {
    if variance >= 0.0 && variance.is_finite() {
        Ok(())
    } else {
        Err(CodecError::InvalidVariance(variance))
    }
}

/// Draws a codebook with IID `N(0, variance)` active entries.
pub fn generate_codebook(params: SchemeParams, variance: f64, seed: u64) -> Result<Codebook, CodecError> {
    generate_codebook_with_limit(params, variance, seed, DEFAULT_MAX_CODEBOOK_ENTRIES)
}

pub fn generate_codebook_with_limit(
    params: SchemeParams,
    variance: f64,
    seed: u64,
    max_entries: usize,
) -> Result<Codebook, CodecError> {
    check_variance(variance)?;
    let active = params.active_slots();
    let entries = params.message_count as f64 * active as f64;
    if entries > max_entries as f64 {
        return Err(CodecError::ResourceLimit {
            what: "codebook entries",
            requested: entries,
            limit: max_entries as f64,
        });
    }
    let family = StreamFamily::new(seed, Domain::Codeword);
    let sd = variance.sqrt();
    let mut symbols = vec![0.0; params.message_count as usize * active];
    for (m, chunk) in symbols.chunks_exact_mut(active).enumerate() {
        draw_symbols(&mut family.open(m as u64), sd, chunk);
    }
    Ok(Codebook {
        params,
        variance,
        seed,
        symbols,
    })
}

/// Fraction of codewords with `(1/n)·Σ x_k² > P`.
pub fn power_violation_fraction(cb: &Codebook, power: f64) -> f64 {
    let n = cb.params.block_len as f64;
    let count = cb.len();
    if count == 0 {
        return 0.0;
    }
    let bad = (0..count)
        .filter(|&m| cb.active(m).iter().map(|x| x * x).sum::<f64>() / n > power)
        .count();
    bad as f64 / count as f64
}

fn squared_distance(y: &[f64], x: &[f64]) -> f64 {
    y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Nearest-neighbor decision over the active slots of `y`. Exact ties are
/// broken uniformly at random by the stream keyed by `seed`.
pub fn nn_decode(cb: &Codebook, y: &[f64], seed: u64) -> Result<usize, CodecError> {
    if y.len() != cb.params.block_len {
        return Err(CodecError::LengthMismatch {
            got: y.len(),
            expected: cb.params.block_len,
        });
    }
    let y_active: Vec<f64> = cb.params.active_indices().map(|i| y[i]).collect();
    let mut best = f64::INFINITY;
    let mut tied: Vec<usize> = Vec::new();
    for m in 0..cb.len() {
        let d = squared_distance(&y_active, cb.active(m));
        if d < best {
            best = d;
            tied.clear();
            tied.push(m);
        } else if d == best {
            tied.push(m);
        }
    }
    if tied.len() == 1 {
        return Ok(tied[0]);
    }
    let mut coin = rng::stream(seed, Domain::TieBreak, &[0]);
    Ok(tied[coin.random_range(0..tied.len())])
}

/// Monte Carlo block-error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub trials: u64,
    pub errors: u64,
    pub probability: f64,
    /// Wilson 95% interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Trials whose transmitted codeword violated the average-power constraint.
    pub power_violations: u64,
}

impl ErrorEstimate {
    pub fn from_counts(errors: u64, trials: u64, power_violations: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(errors, trials, Z95);
        Self {
            trials,
            errors,
            probability: if trials == 0 { f64::NAN } else { errors as f64 / trials as f64 },
            ci_lo,
            ci_hi,
            power_violations,
        }
    }

    /// Whether the two 95% intervals intersect.
    pub fn overlaps(&self, other: &ErrorEstimate) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}

/// Whether each trial draws its own codebook.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CodebookMode {
    /// Fresh codebook per trial: the error is averaged over the ensemble.
    #[default]
    PerTrial,
    /// One codebook shared by all trials.
    Fixed,
}

/// Treatment of codewords that violate the average-power constraint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PowerPolicy {
    /// Keep them and count violations of the transmitted codeword.
    #[default]
    Statistical,
    /// Redraw every codeword until it meets the constraint.
    Strict,
}

/// Knobs of [`scheme_error_probability_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeOptions {
    pub codebook: CodebookMode,
    pub power: PowerPolicy,
    pub variance_mode: VarianceMode,
    pub max_messages: u64,
    /// 0 means the machine's parallelism. Never changes the result.
    pub workers: usize,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            codebook: CodebookMode::PerTrial,
            power: PowerPolicy::Statistical,
            variance_mode: VarianceMode::Auto,
            max_messages: DEFAULT_MAX_MESSAGES,
            workers: 0,
        }
    }
}

const STRICT_MAX_DRAWS: usize = 10_000;
const FIXED_CODEBOOK: u64 = u64::MAX;

/// Seed of the codebook used in `trial`.
pub fn trial_codebook_seed(seed: u64, trial: u64, mode: CodebookMode) -> u64 {
    let index = match mode {
        CodebookMode::PerTrial => trial,
        CodebookMode::Fixed => FIXED_CODEBOOK,
    };
    rng::stream_key(seed, Domain::Codeword, &[index])
}

/// Codebook whose codewords are generated on demand.
struct LazyCodebook {
    family: StreamFamily,
    sd: f64,
    strict_limit: Option<f64>,
}

impl LazyCodebook {
    fn new(seed: u64, variance: f64, strict: Option<(f64, usize)>) -> Self {
        Self {
            family: StreamFamily::new(seed, Domain::Codeword),
            sd: variance.sqrt(),
            // Σ x² ≤ n·P
            strict_limit: strict.map(|(p, n)| p * n as f64),
        }
    }

    /// Writes codeword `m` into `out`.
    fn fill(&self, m: u64, out: &mut [f64]) -> Result<(), CodecError> {
        let mut rng = self.family.open(m);
        draw_symbols(&mut rng, self.sd, out);
        if let Some(limit) = self.strict_limit {
            let mut draws = 1;
            while out.iter().map(|x| x * x).sum::<f64>() > limit {
                if draws == STRICT_MAX_DRAWS {
                    return Err(CodecError::StrictPowerUnsatisfied(draws));
                }
                draw_symbols(&mut rng, self.sd, out);
                draws += 1;
            }
        }
        Ok(())
    }

    /// Whether codeword `m` is at squared distance at most `bound` from `y`,
    /// and if so whether it is strictly closer. Stops drawing as soon as the
    /// partial distance exceeds `bound`.
    fn compare(&self, m: u64, y: &[f64], bound: f64, scratch: &mut [f64]) -> Result<Option<bool>, CodecError> {
        if self.strict_limit.is_some() {
            self.fill(m, scratch)?;
            let d = squared_distance(y, scratch);
            return Ok((d <= bound).then_some(d < bound));
        }
        let mut rng = self.family.open(m);
        let mut d = 0.0;
        for &yk in y {
            let u: f64 = rng.sample(StandardNormal);
            let diff = yk - self.sd * u;
            d += diff * diff;
            if d > bound {
                return Ok(None);
            }
        }
        Ok(Some(d < bound))
    }
}

/// Outcome of one trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct TrialOutcome {
    error: bool,
    violation: bool,
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    channel: &HeatingChannel<'_>,
    scheme: &SchemeParams,
    variance: f64,
    seed: u64,
    trial: u64,
    options: &SchemeOptions,
    x: &mut Vec<f64>,
    y: &mut Vec<f64>,
    bufs: &mut [Vec<f64>; 3],
) -> Result<TrialOutcome, CodecError> {
    let [sent, y_active, scratch] = bufs;
    let power = channel.params().power();
    let strict = (options.power == PowerPolicy::Strict).then_some((power, scheme.block_len));
    let book = LazyCodebook::new(trial_codebook_seed(seed, trial, options.codebook), variance, strict);

    let message = rng::stream(seed, Domain::Message, &[trial]).random_range(0..scheme.message_count);
    book.fill(message, sent)?;
    let violation = sent.iter().map(|v| v * v).sum::<f64>() / scheme.block_len as f64 > power;

    x.clear();
    x.resize(scheme.block_len, 0.0);
    for (i, s) in scheme.active_indices().zip(sent.iter()) {
        x[i] = *s;
    }
    let mut noise = rng::stream(seed, Domain::Noise, &[trial]);
    channel.transmit_into(x, &mut noise, y)?;
    for (slot, i) in y_active.iter_mut().zip(scheme.active_indices()) {
        *slot = y[i];
    }
    let own = squared_distance(y_active, sent);

    let mut ties = 0u64;
    for m in (0..scheme.message_count).filter(|&m| m != message) {
        match book.compare(m, y_active, own, scratch)? {
            Some(true) => return Ok(TrialOutcome { error: true, violation }),
            Some(false) => ties += 1,
            None => {}
        }
    }
    let error = ties > 0 && rng::stream(seed, Domain::TieBreak, &[trial]).random_range(0..=ties) != 0;
    Ok(TrialOutcome { error, violation })
}

/// Block-error probability of the scheme averaged over codebooks, messages
/// and noise, with default options.
pub fn scheme_error_probability(
    spec: &CoefficientSpec,
    params: &ChannelParams,
    scheme: &SchemeParams,
    variance: f64,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimate, CodecError> {
    scheme_error_probability_with(spec, params, scheme, variance, trials, seed, &SchemeOptions::default())
}

/// [`scheme_error_probability`] with explicit options. Trial `t` draws its
/// message, codebook, noise and coin flips from streams keyed by
/// `(seed, t)`, so the estimate does not depend on `options.workers`.
pub fn scheme_error_probability_with(
    spec: &CoefficientSpec,
    params: &ChannelParams,
    scheme: &SchemeParams,
    variance: f64,
    trials: u64,
    seed: u64,
    options: &SchemeOptions,
) -> Result<ErrorEstimate, CodecError> {
    check_variance(variance)?;
    if trials == 0 {
        return Err(CodecError::NoTrials);
    }
    if scheme.message_count > options.max_messages {
        return Err(CodecError::ResourceLimit {
            what: "message count",
            requested: scheme.message_count as f64,
            limit: options.max_messages as f64,
        });
    }
    let channel = HeatingChannel::new(spec, *params).with_mode(options.variance_mode);
    let active = scheme.active_slots();
    let blocks = par::map_blocks(trials as usize, options.workers, |range| {
        let mut x = Vec::with_capacity(scheme.block_len);
        let mut y = Vec::with_capacity(scheme.block_len);
        let mut bufs = [vec![0.0; active], vec![0.0; active], vec![0.0; active]];
        let mut counts = (0u64, 0u64);
        for t in range {
            let out = run_trial(&channel, scheme, variance, seed, t as u64, options, &mut x, &mut y, &mut bufs)?;
            counts.0 += u64::from(out.error);
            counts.1 += u64::from(out.violation);
        }
        Ok::<_, CodecError>(counts)
    });
    let mut errors = 0;
    let mut violations = 0;
    for b in blocks {
        let (e, v) = b?;
        errors += e;
        violations += v;
    }
    Ok(ErrorEstimate::from_counts(errors, trials, violations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::NoiseDistribution;

    fn scheme(period: usize, m: u64, n: usize) -> SchemeParams {
        SchemeParams::new(period, m, n).unwrap()
    }

    #[test]
    fn active_slot_layout() {
        let cb = generate_codebook(scheme(6, 5, 6), 1.0, 1).unwrap();
        for m in 0..5 {
            let x = cb.codeword(m);
            assert_eq!(x.iter().filter(|v| **v != 0.0).count(), 1);
            assert_ne!(x[0], 0.0);
        }
        let s = scheme(2, 3, 6);
        assert_eq!(s.active_indices().collect::<Vec<_>>(), vec![0, 2, 4]);
        let cb = generate_codebook(s, 2.0, 9).unwrap();
        for m in 0..3 {
            let x = cb.codeword(m);
            assert!(x[1] == 0.0 && x[3] == 0.0 && x[5] == 0.0);
        }
    }

    #[test]
    fn codebook_is_deterministic_in_seed() {
        let s = scheme(3, 10, 30);
        assert_eq!(generate_codebook(s, 1.0, 4).unwrap(), generate_codebook(s, 1.0, 4).unwrap());
        assert_ne!(generate_codebook(s, 1.0, 4).unwrap(), generate_codebook(s, 1.0, 5).unwrap());
    }

    #[test]
    fn codebook_power_matches_variance() {
        let cb = generate_codebook(scheme(4, 10_000, 8), 3.0, 21).unwrap();
        let n = cb.symbols.len() as f64;
        let mean_power = cb.symbols.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((mean_power / 3.0 - 1.0).abs() < 0.03, "{mean_power}");
    }

    #[test]
    fn resource_limit_is_explicit() {
        let err = generate_codebook_with_limit(scheme(1, 1000, 100), 1.0, 0, 10_000).unwrap_err();
        assert!(matches!(err, CodecError::ResourceLimit { .. }));
        assert!(matches!(generate_codebook(scheme(1, 2, 2), -1.0, 0), Err(CodecError::InvalidVariance(_))));
    }

    #[test]
    fn scheme_validation() {
        assert!(SchemeParams::new(0, 2, 4).is_err());
        assert!(SchemeParams::new(2, 0, 4).is_err());
        assert!(SchemeParams::new(5, 2, 4).is_err());
        let s = SchemeParams::with_rate(4, 0.25, 40).unwrap();
        assert_eq!(s.message_count(), 22026);
        assert_eq!(s.active_slots(), 10);
        assert!((s.rate() - 0.25).abs() < 1e-4);
    }

    #[test]
    fn power_violation_of_zero_codebook() {
        let cb = generate_codebook(scheme(2, 50, 10), 0.0, 3).unwrap();
        assert_eq!(power_violation_fraction(&cb, 0.0), 0.0);
    }

    #[test]
    fn decodes_exact_codeword() {
        let cb = generate_codebook(scheme(3, 64, 24), 5.0, 8).unwrap();
        for m in [0, 17, 63] {
            assert_eq!(nn_decode(&cb, &cb.codeword(m), 0).unwrap(), m);
        }
        assert!(matches!(nn_decode(&cb, &[0.0; 5], 0), Err(CodecError::LengthMismatch { .. })));
    }

    #[test]
    fn ignores_inactive_slots() {
        let cb = generate_codebook(scheme(4, 32, 16), 1.0, 2).unwrap();
        let mut y = cb.codeword(5);
        y.iter_mut().zip(cb.codeword(9)).for_each(|(a, b)| *a = 0.6 * *a + 0.4 * b);
        let want = nn_decode(&cb, &y, 0).unwrap();
        for (i, v) in y.iter_mut().enumerate() {
            if i % 4 != 0 {
                *v = 1e6 * (i as f64).sin();
            }
        }
        assert_eq!(nn_decode(&cb, &y, 0).unwrap(), want);
    }

    #[test]
    fn fair_coin_on_ties() {
        let mut cb = generate_codebook(scheme(1, 2, 3), 1.0, 1).unwrap();
        let first = cb.active(0).to_vec();
        cb.symbols[3..6].copy_from_slice(&first);
        let y = vec![10.0, -3.0, 2.0];
        let ones = (0..10_000u64).filter(|&s| nn_decode(&cb, &y, s).unwrap() == 1).count();
        let freq = ones as f64 / 10_000.0;
        assert!((freq - 0.5).abs() < 0.05, "{freq}");
    }

    #[test]
    fn lazy_codewords_match_materialized_codebook() {
        let s = scheme(2, 40, 12);
        let cb = generate_codebook(s, 2.0, 77).unwrap();
        let lazy = LazyCodebook::new(77, 2.0, None);
        let mut buf = vec![0.0; s.active_slots()];
        for m in 0..40 {
            lazy.fill(m, &mut buf).unwrap();
            assert_eq!(buf.as_slice(), cb.active(m as usize));
        }
    }

    #[test]
    fn streaming_trials_agree_with_full_decoding() {
        // Rebuild each trial with a materialized codebook and the full
        // decoder; the error indicator must coincide (no ties here).
        let spec = CoefficientSpec::geometric(0.5).unwrap();
        let params = ChannelParams::from_snr(1.0, NoiseDistribution::GaussianUnit, 3.0).unwrap();
        let s = scheme(2, 200, 16);
        let variance = SlotVariance::FullBudget.variance(params.power(), 2);
        let seed = 1234;
        let channel = HeatingChannel::new(&spec, params);
        let mut mismatches = 0;
        let mut errors = 0;
        for t in 0..300u64 {
            let cb = generate_codebook(s, variance, trial_codebook_seed(seed, t, CodebookMode::PerTrial)).unwrap();
            let msg = rng::stream(seed, Domain::Message, &[t]).random_range(0..s.message_count()) as usize;
            let y = channel.transmit(&cb.codeword(msg), &mut rng::stream(seed, Domain::Noise, &[t])).unwrap();
            let full_error = nn_decode(&cb, &y, 0).unwrap() != msg;

            let mut x = Vec::new();
            let mut yy = Vec::new();
            let mut bufs = [vec![0.0; 8], vec![0.0; 8], vec![0.0; 8]];
            let out = run_trial(&channel, &s, variance, seed, t, &SchemeOptions::default(), &mut x, &mut yy, &mut bufs).unwrap();
            mismatches += usize::from(out.error != full_error);
            errors += usize::from(full_error);
        }
        assert_eq!(mismatches, 0);
        assert!(errors > 10, "test should exercise errors, got {errors}");
    }

    #[test]
    fn single_message_never_errs() {
        let spec = CoefficientSpec::geometric(0.5).unwrap();
        let params = ChannelParams::from_snr(1.0, NoiseDistribution::GaussianUnit, 1.0).unwrap();
        let est = scheme_error_probability(&spec, &params, &scheme(2, 1, 8), 2.0, 50, 3).unwrap();
        assert_eq!(est.errors, 0);
        assert_eq!(est.probability, 0.0);
    }

    #[test]
    fn zero_power_gives_uniform_guessing() {
        let spec = CoefficientSpec::truncated(4, 1.0).unwrap();
        let params = ChannelParams::new(1.0, NoiseDistribution::GaussianUnit, 0.0).unwrap();
        let s = scheme(4, 4, 16);
        let est = scheme_error_probability(&spec, &params, &s, 0.0, 4000, 5).unwrap();
        assert!((est.probability - 0.75).abs() < 0.03, "{est:?}");
    }

    #[test]
    fn strict_mode_never_sends_violating_codewords() {
        let spec = CoefficientSpec::truncated(2, 1.0).unwrap();
        let params = ChannelParams::from_snr(1.0, NoiseDistribution::GaussianUnit, 10.0).unwrap();
        let s = scheme(2, 16, 2);
        let opts = SchemeOptions {
            power: PowerPolicy::Strict,
            ..SchemeOptions::default()
        };
        let est = scheme_error_probability_with(&spec, &params, &s, 20.0, 500, 8, &opts).unwrap();
        assert_eq!(est.power_violations, 0);
        let loose = scheme_error_probability(&spec, &params, &s, 20.0, 500, 8).unwrap();
        assert!(loose.power_violations > 50, "{loose:?}");
    }

    #[test]
    fn fixed_codebook_mode_reuses_the_codebook() {
        assert_eq!(
            trial_codebook_seed(5, 0, CodebookMode::Fixed),
            trial_codebook_seed(5, 99, CodebookMode::Fixed)
        );
        assert_ne!(
            trial_codebook_seed(5, 0, CodebookMode::PerTrial),
            trial_codebook_seed(5, 1, CodebookMode::PerTrial)
        );
    }

    #[test]
    fn message_cap_is_a_resource_error() {
        let spec = CoefficientSpec::memoryless();
        let params = ChannelParams::from_snr(1.0, NoiseDistribution::GaussianUnit, 1.0).unwrap();
        let opts = SchemeOptions {
            max_messages: 100,
            ..SchemeOptions::default()
        };
        let err = scheme_error_probability_with(&spec, &params, &scheme(1, 101, 4), 1.0, 1, 0, &opts).unwrap_err();
        assert!(matches!(err, CodecError::ResourceLimit { .. }));
        assert!(matches!(
            scheme_error_probability(&spec, &params, &scheme(1, 2, 4), 1.0, 0, 0),
            Err(CodecError::NoTrials)
        ));
    }

    #[test]
    fn worker_count_does_not_change_estimates() {
        let spec = CoefficientSpec::geometric(0.3).unwrap();
        let params = ChannelParams::from_snr(1.0, NoiseDistribution::UniformUnit, 5.0).unwrap();
        let s = scheme(2, 300, 12);
        let run = |workers| {
            let opts = SchemeOptions {
                workers,
                ..SchemeOptions::default()
            };
            scheme_error_probability_with(&spec, &params, &s, 10.0, 300, 17, &opts).unwrap()
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
    }
}
