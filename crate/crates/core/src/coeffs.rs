//! Heating coefficient sequences.
//!
//! The coefficient `α_ℓ` weighs the power of the input sent `ℓ` channel uses
//! ago in the current noise variance. A [`CoefficientSpec`] is a named
//! family plus its parameters, validated at construction so that every
//! evaluated coefficient is finite and non-negative. `α_0` is `1` for every
//! family.

use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Errors raised by coefficient specs and their series.
#[derive(Debug, Error)]
pub enum CoeffError {
    #[error("{family} parameter {name} = {value} is outside the valid range {range}")]
    InvalidParameter {
        family: &'static str,
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("custom coefficient at index {index} is {value}; entries must be finite and non-negative")]
    InvalidEntry { index: usize, value: f64 },
    #[error("coefficient series diverges")]
    Divergent,
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("subsampling period must be at least 1")]
    InvalidPeriod,
    #[error("classification horizon must be at least {min}, got {got}")]
    HorizonTooShort { min: usize, got: usize },
    #[error("cannot parse coefficient spec `{spec}`: {reason}")]
    Parse { spec: String, reason: String },
    #[error("cannot read coefficient file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// How a custom sequence continues past its last listed entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailRule {
    /// All later coefficients are zero.
    Zero,
    /// `α_{N+j} = α_N · r^j` for the last listed index `N`.
    Geometric(f64),
}

/// Coefficient family and parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `α_ℓ = ρ^ℓ`.
    Geometric { rho: f64 },
    /// `α_ℓ = level` for `1 ≤ ℓ < cutoff`, zero from `cutoff` on.
    Truncated { cutoff: usize, level: f64 },
    /// `α_ℓ = ρ^(ℓ²)`.
    SuperExponential { rho: f64 },
    /// Even indices are one, odd indices zero.
    EvenOne,
    /// Odd indices are one, positive even indices zero.
    OddOne,
    /// Explicit `α_1, α_2, ...` followed by a tail rule.
    Custom { values: Vec<f64>, tail: TailRule },
}

/// A validated heating coefficient sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSpec {
    family: Family,
}

fn check_ratio(family: &'static str, name: &'static str, value: f64) -> Result<(), CoeffError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(CoeffError::InvalidParameter {
            family,
            name,
            value,
            range: "(0, 1)",
        })
    }
}

impl CoefficientSpec {
    pub fn geometric(rho: f64) -> Result<Self, CoeffError> {
        check_ratio("geometric", "rho", rho)?;
        Ok(Self {
            family: Family::Geometric { rho },
        })
    }

    pub fn truncated(cutoff: usize, level: f64) -> Result<Self, CoeffError> {
        if cutoff < 1 {
            return Err(CoeffError::InvalidParameter {
                family: "truncated",
                name: "cutoff",
                value: cutoff as f64,
                range: "[1, inf)",
            });
        }
        if !(level > 0.0 && level.is_finite()) {
            return Err(CoeffError::InvalidParameter {
                family: "truncated",
                name: "level",
                value: level,
                range: "(0, inf)",
            });
        }
        Ok(Self {
            family: Family::Truncated { cutoff, level },
        })
    }

    pub fn super_exponential(rho: f64) -> Result<Self, CoeffError> {
        check_ratio("superexp", "rho", rho)?;
        Ok(Self {
            family: Family::SuperExponential { rho },
        })
    }

    /// Even-indexed coefficients one, odd zero.
    pub fn even_one() -> Self {
        Self {
            family: Family::EvenOne,
        }
    }

    /// Odd-indexed coefficients one, positive even zero.
    pub fn odd_one() -> Self {
        Self {
            family: Family::OddOne,
        }
    }

    /// All coefficients zero: the memoryless additive-noise channel.
    pub fn memoryless() -> Self {
        Self {
            family: Family::Custom {
                values: Vec::new(),
                tail: TailRule::Zero,
            },
        }
    }

    pub fn custom(values: Vec<f64>, tail: TailRule) -> Result<Self, CoeffError> {
        for (i, &v) in values.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CoeffError::InvalidEntry {
                    index: i + 1,
                    value: v,
                });
            }
        }
        if let TailRule::Geometric(r) = tail {
            check_ratio("custom tail", "ratio", r)?;
        }
        Ok(Self {
            family: Family::Custom { values, tail },
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Ratio `ρ` when the sequence is exactly geometric.
    pub fn geometric_ratio(&self) -> Option<f64> {
        match self.family {
            Family::Geometric { rho } => Some(rho),
            _ => None,
        }
    }

    /// Largest index with a possibly nonzero coefficient, when finite.
    pub fn support_len(&self) -> Option<usize> {
        match &self.family {
            Family::Truncated { cutoff, .. } => Some(cutoff - 1),
            Family::Custom {
                values,
                tail: TailRule::Zero,
            } => Some(values.iter().rposition(|&v| v > 0.0).map_or(0, |i| i + 1)),
            _ => None,
        }
    }

    /// An upper bound on `sup_ℓ α_ℓ`, including `α_0 = 1`.
    pub fn sup_bound(&self) -> f64 {
        match &self.family {
            Family::Truncated { level, .. } => level.max(1.0),
            Family::Custom { values, .. } => values.iter().copied().fold(1.0, f64::max),
            _ => 1.0,
        }
    }

    /// `α_ℓ`.
    pub fn eval(&self, l: usize) -> f64 {
        if l == 0 {
            return 1.0;
        }
        match &self.family {
            Family::Geometric { rho } => powu(*rho, l),
            Family::Truncated { cutoff, level } => {
                if l < *cutoff {
                    *level
                } else {
                    0.0
                }
            }
            Family::SuperExponential { rho } => rho.powf((l as f64) * (l as f64)),
            Family::EvenOne => ((l % 2 == 0) as u8).into(),
            Family::OddOne => ((l % 2 == 1) as u8).into(),
            Family::Custom { values, tail } => {
                if l <= values.len() {
                    values[l - 1]
                } else {
                    match tail {
                        TailRule::Zero => 0.0,
                        TailRule::Geometric(r) => {
                            let last = values.last().copied().unwrap_or(1.0);
                            last * powu(*r, l - values.len())
                        }
                    }
                }
            }
        }
    }

    /// `ln α_ℓ`, with `-inf` for zero coefficients. Exact where `eval` would
    /// underflow.
    pub fn ln_eval(&self, l: usize) -> f64 {
        if l == 0 {
            return 0.0;
        }
        match &self.family {
            Family::Geometric { rho } => l as f64 * rho.ln(),
            Family::SuperExponential { rho } => (l as f64) * (l as f64) * rho.ln(),
            Family::Custom {
                values,
                tail: TailRule::Geometric(r),
            } if l > values.len() => {
                let last = values.last().copied().unwrap_or(1.0);
                last.ln() + (l - values.len()) as f64 * r.ln()
            }
            _ => self.eval(l).ln(),
        }
    }

    /// `Σ_{ℓ≥1} α_ℓ`.
    pub fn alpha_total(&self, tol: f64) -> Result<f64, CoeffError> {
        self.alpha_l(1, tol)
    }

    /// `α^(L) = Σ_{ℓ≥1} α_{ℓL}`, the memory seen by a scheme that transmits
    /// once every `L` channel uses.
    pub fn alpha_l(&self, period: usize, tol: f64) -> Result<f64, CoeffError> {
        if period == 0 {
            return Err(CoeffError::InvalidPeriod);
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CoeffError::InvalidTolerance(tol));
        }
        match &self.family {
            Family::Geometric { rho } => {
                let r = powu(*rho, period);
                Ok(r / (1.0 - r))
            }
            Family::Truncated { cutoff, level } => Ok(*level * ((cutoff - 1) / period) as f64),
            Family::SuperExponential { rho } => Ok(super_exponential_subsum(*rho, period, tol)),
            Family::EvenOne => Err(CoeffError::Divergent),
            Family::OddOne => {
                if period % 2 == 0 {
                    Ok(0.0)
                } else {
                    Err(CoeffError::Divergent)
                }
            }
            Family::Custom { values, tail } => {
                let listed: f64 = (period..=values.len()).step_by(period).map(|l| values[l - 1]).sum();
                let rest = match tail {
                    TailRule::Zero => 0.0,
                    TailRule::Geometric(r) => {
                        let n = values.len();
                        let last = values.last().copied().unwrap_or(1.0);
                        let first = (n / period + 1) * period;
                        last * powu(*r, first - n) / (1.0 - powu(*r, period))
                    }
                };
                Ok(listed + rest)
            }
        }
    }

    /// Upper bound on the tail `Σ_{ℓ>after} α_ℓ`.
    pub fn tail_bound(&self, after: usize) -> Result<f64, CoeffError> {
        match &self.family {
            Family::Geometric { rho } => Ok(powu(*rho, after + 1) / (1.0 - rho)),
            Family::SuperExponential { rho } => {
                let ln_rho = rho.ln();
                let ln_term = |l: f64| l * l * ln_rho;
                let first = (after + 1) as f64;
                let q = (ln_term(first + 1.0) - ln_term(first)).exp();
                Ok(ln_term(first).exp() / (1.0 - q))
            }
            Family::EvenOne | Family::OddOne => Err(CoeffError::Divergent),
            Family::Truncated { .. } | Family::Custom { .. } => {
                if let Some(n) = self.support_len() {
                    return Ok((after + 1..=n).map(|l| self.eval(l)).sum());
                }
                let Family::Custom {
                    values,
                    tail: TailRule::Geometric(r),
                } = &self.family
                else {
                    unreachable!("only geometric-tail customs lack finite support")
                };
                let n = values.len();
                let listed: f64 = (after + 1..=n).map(|l| self.eval(l)).sum();
                let start = after.max(n);
                Ok(listed + self.eval(start) * r / (1.0 - r))
            }
        }
    }

    /// Capacity per unit cost `(1 + α)/2`, nats per unit SNR.
    pub fn capacity_per_unit_cost(&self, tol: f64) -> Result<f64, CoeffError> {
        Ok(0.5 * (1.0 + self.alpha_total(tol)?))
    }

    /// Estimates which side of the bounded/unbounded dichotomy the sequence
    /// falls on from the ratios `α_{ℓ+1}/α_ℓ` over `[horizon/2, horizon]`.
    ///
    /// Ratios follow `a/0 = inf` and `0/0 = 0`. The decay statistic is the
    /// smallest `(1/ℓ)·ln(1/α_ℓ)` over the same window. This is a finite
    /// heuristic: a geometric sequence with ratio below `positive_floor` and
    /// steep enough decay will be reported as unbounded.
    pub fn classify(&self, horizon: usize, policy: &ClassifyPolicy) -> Result<Classification, CoeffError> {
        if horizon < MIN_HORIZON {
            return Err(CoeffError::HorizonTooShort {
                min: MIN_HORIZON,
                got: horizon,
            });
        }
        let mut liminf = f64::INFINITY;
        let mut limsup = 0.0f64;
        let mut decay = f64::INFINITY;
        let mut ln_cur = self.ln_eval(horizon / 2);
        for l in horizon / 2..=horizon {
            let ln_next = self.ln_eval(l + 1);
            let ratio = if ln_cur == f64::NEG_INFINITY {
                if ln_next == f64::NEG_INFINITY {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (ln_next - ln_cur).exp()
            };
            liminf = liminf.min(ratio);
            limsup = limsup.max(ratio);
            decay = decay.min(-ln_cur / l as f64);
            ln_cur = ln_next;
        }
        let verdict = if liminf >= policy.positive_floor {
            Verdict::Bounded
        } else if limsup <= policy.zero_ceiling || decay >= policy.divergence_threshold {
            Verdict::Unbounded
        } else {
            Verdict::Indeterminate
        };
        Ok(Classification {
            verdict,
            liminf_ratio_estimate: liminf,
            limsup_ratio_estimate: limsup,
            decay_stat: decay,
            horizon,
        })
    }

    /// Parses the text syntax `geometric:0.5`, `truncated:4:1.0`,
    /// `superexp:0.5`, `example1`, `example2`, `memoryless` or
    /// `custom:<path>`.
    pub fn parse(text: &str) -> Result<Self, CoeffError> {
        let err = |reason: &str| CoeffError::Parse {
            spec: text.to_string(),
            reason: reason.to_string(),
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err("expected a decimal number"));
        let mut parts = text.trim().splitn(2, ':');
        let head = parts.next().unwrap_or_default().to_ascii_lowercase();
        let rest = parts.next();
        match (head.as_str(), rest) {
            ("geometric", Some(r)) => Self::geometric(num(r)?),
            ("superexp", Some(r)) => Self::super_exponential(num(r)?),
            ("truncated", Some(r)) => {
                let (cut, level) = r.split_once(':').ok_or_else(|| err("expected truncated:<cutoff>:<level>"))?;
                let cut = cut.trim().parse::<usize>().map_err(|_| err("cutoff must be a positive integer"))?;
                Self::truncated(cut, num(level)?)
            }
            ("example1", None) => Ok(Self::even_one()),
            ("example2", None) => Ok(Self::odd_one()),
            ("memoryless", None) => Ok(Self::memoryless()),
            ("custom", Some(path)) => Self::from_custom_file(path.trim()),
            _ => Err(err(
                "expected geometric:<rho>, truncated:<cutoff>:<level>, superexp:<rho>, example1, example2, memoryless or custom:<path>",
            )),
        }
    }

    pub fn from_custom_file(path: impl AsRef<Path>) -> Result<Self, CoeffError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CoeffError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_custom_text(&text)
    }

    /// One non-negative decimal per line for `α_1, α_2, ...`, with an
    /// optional first line `tail=zero` or `tail=geometric:<r>`.
    pub fn from_custom_text(text: &str) -> Result<Self, CoeffError> {
        let err = |reason: String| CoeffError::Parse {
            spec: "custom".to_string(),
            reason,
        };
        let mut tail = TailRule::Zero;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rule) = line.strip_prefix("tail=") {
                if !values.is_empty() {
                    return Err(err(format!("line {}: tail rule must precede the values", lineno + 1)));
                }
                tail = match rule.trim() {
                    "zero" => TailRule::Zero,
                    g => match g.strip_prefix("geometric:").map(|r| r.trim().parse::<f64>()) {
                        Some(Ok(r)) => TailRule::Geometric(r),
                        _ => return Err(err(format!("line {}: unknown tail rule `{g}`", lineno + 1))),
                    },
                };
                continue;
            }
            let v = line
                .parse::<f64>()
                .map_err(|_| err(format!("line {}: `{line}` is not a number", lineno + 1)))?;
            values.push(v);
        }
        Self::custom(values, tail)
    }
}

impl fmt::Display for CoefficientSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Geometric { rho } => write!(f, "geometric:{rho}"),
            Family::Truncated { cutoff, level } => write!(f, "truncated:{cutoff}:{level}"),
            Family::SuperExponential { rho } => write!(f, "superexp:{rho}"),
            Family::EvenOne => f.write_str("example1"),
            Family::OddOne => f.write_str("example2"),
            Family::Custom { values, tail } if values.is_empty() && *tail == TailRule::Zero => {
                f.write_str("memoryless")
            }
            Family::Custom { values, .. } => write!(f, "custom[{}]", values.len()),
        }
    }
}

const MIN_HORIZON: usize = 16;

/// Thresholds of [`CoefficientSpec::classify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyPolicy {
    pub positive_floor: f64,
    pub zero_ceiling: f64,
    pub divergence_threshold: f64,
}

impl Default for ClassifyPolicy {
    fn default() -> Self {
        Self {
            positive_floor: 1e-6,
            zero_ceiling: 1e-6,
            divergence_threshold: 20.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Unbounded,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Bounded => "Bounded",
            Verdict::Unbounded => "Unbounded",
            Verdict::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub liminf_ratio_estimate: f64,
    pub limsup_ratio_estimate: f64,
    pub decay_stat: f64,
    pub horizon: usize,
}

fn powu(x: f64, n: usize) -> f64 {
    match i32::try_from(n) {
        Ok(n) => x.powi(n),
        Err(_) => x.powf(n as f64),
    }
}

/// `Σ_{j≥1} ρ^{(jL)²}` with a geometric majorant on the tail: successive
/// term ratios `ρ^{L²(2j+1)}` decrease, so the remainder after term `j` is at
/// most `t_{j+1} / (1 - t_{j+2}/t_{j+1})`.
fn super_exponential_subsum(rho: f64, period: usize, tol: f64) -> f64 {
    let ln_rho = rho.ln();
    let l2 = (period as f64).powi(2);
    let ln_term = |j: f64| j * j * l2 * ln_rho;
    let mut sum = 0.0;
    let mut j = 1.0;
    loop {
        sum += ln_term(j).exp();
        let next = ln_term(j + 1.0).exp();
        let q = (ln_term(j + 2.0) - ln_term(j + 1.0)).exp();
        if next / (1.0 - q) < tol * 0.5 || next == 0.0 {
            return sum;
        }
        j += 1.0;
    }
}
