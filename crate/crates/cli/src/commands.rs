//! Subcommand bodies. Each resolves its flags, writes a header of the
//! resolved parameters, then streams the result rows.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use heatchan::bounds::{self, BoundsError, ConverseReport};
use heatchan::channel::{ChannelParams, NoiseDistribution};
use heatchan::codec::{self, CodebookMode, PowerPolicy, SchemeOptions, SchemeParams, SlotVariance};
use heatchan::coeffs::{ClassifyPolicy, CoeffError, CoefficientSpec};
use heatchan::harness::{self, ConcentrationConfig, RateGrid, SweepConfig, SweepRow, SUM_TOL};
use heatchan::output::{self, Cell, Format, TableWriter};

use crate::error::{usage, CliError};
use crate::grid::{self, show, show_integers, show_reals};
use crate::{
    BoundsArgs, ChannelArgs, ClassifyArgs, CodeArgs, DemoArgs, Lemma1Args, Lemma2Args, Level, OutputArgs, SchemeArgs,
    SimulateArgs, SweepArgs,
};

type Res = Result<(), CliError>;

struct Header(Vec<(String, String)>);

impl Header {
    fn new(command: &str) -> Self {
        Header(vec![
            ("command".into(), command.into()),
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ])
    }

    fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }
}

/// Result table plus a channel for human-readable notes that never mixes
/// with the table.
struct Table {
    writer: TableWriter<Box<dyn Write>>,
    to_stdout: bool,
}

impl Table {
    fn open(out: &OutputArgs, header: &Header, columns: &[&str]) -> Result<Self, CliError> {
        let format: Format = out.format.parse()?;
        let (sink, to_stdout): (Box<dyn Write>, bool) = match &out.output {
            Some(p) => (
                Box::new(BufWriter::new(
                    File::create(p).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", p.display())))?,
                )),
                false,
            ),
            None => (Box::new(io::stdout().lock()), true),
        };
        Ok(Self {
            writer: TableWriter::new(sink, format, &header.0, columns)?,
            to_stdout,
        })
    }

    fn row(&mut self, cells: &[Cell]) -> Res {
        self.writer.write_row(cells).map_err(Into::into)
    }

    fn say(&self, line: &str) {
        if self.to_stdout {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    }

    fn finish(self) -> Res {
        self.writer.finish()?;
        Ok(())
    }
}

fn parse_spec(text: &str) -> Result<CoefficientSpec, CliError> {
    CoefficientSpec::parse(text).map_err(|e| usage(format!("--coeffs: {e}")))
}

fn parse_noise(text: &str) -> Result<NoiseDistribution, CliError> {
    text.parse::<NoiseDistribution>().map_err(|e| usage(format!("--noise: {e}")))
}

fn parse_slot_variance(text: &str) -> Result<SlotVariance, CliError> {
    match text {
        "full" => Ok(SlotVariance::FullBudget),
        "per-slot" => Ok(SlotVariance::PerSlot),
        other => Err(usage(format!("--slot-variance: expected full or per-slot, got `{other}`"))),
    }
}

fn parse_codebook(text: &str) -> Result<CodebookMode, CliError> {
    match text {
        "per-trial" => Ok(CodebookMode::PerTrial),
        "fixed" => Ok(CodebookMode::Fixed),
        other => Err(usage(format!("--codebook: expected per-trial or fixed, got `{other}`"))),
    }
}

fn channel_header(h: &mut Header, c: &ChannelArgs) {
    h.set("coeffs", c.coeffs.trim()).set("sigma2", show(c.sigma2)).set("noise", &c.noise);
}

fn resolve_level(h: &mut Header, level: &Level, sigma2: f64, noise: NoiseDistribution) -> Result<ChannelParams, CliError> {
    match (level.snr, level.power) {
        (Some(snr), None) => {
            let p = ChannelParams::from_snr(sigma2, noise, snr)?;
            h.set("snr", show(snr)).set("derived.power", show(p.power()));
            Ok(p)
        }
        (None, Some(power)) => {
            let p = ChannelParams::new(sigma2, noise, power)?;
            h.set("power", show(power)).set("derived.snr", show(p.snr()));
            Ok(p)
        }
        _ => Err(usage("exactly one of --snr or --power is required")),
    }
}

fn scheme_options(h: &mut Header, s: &SchemeArgs) -> Result<(SlotVariance, SchemeOptions), CliError> {
    let slot = parse_slot_variance(&s.slot_variance)?;
    let options = SchemeOptions {
        codebook: parse_codebook(&s.codebook)?,
        power: if s.strict_power { PowerPolicy::Strict } else { PowerPolicy::Statistical },
        max_messages: s.max_messages,
        workers: s.workers,
        ..SchemeOptions::default()
    };
    h.set("slot-variance", &s.slot_variance)
        .set("codebook", &s.codebook)
        .set("strict-power", s.strict_power)
        .set("max-messages", s.max_messages);
    Ok((slot, options))
}

fn alpha_or_nan(spec: &CoefficientSpec, period: usize) -> Result<f64, CliError> {
    match spec.alpha_l(period, SUM_TOL) {
        Ok(a) => Ok(a),
        Err(CoeffError::Divergent) => Ok(f64::NAN),
        Err(e) => Err(e.into()),
    }
}

fn unit(bits: bool) -> (f64, &'static str) {
    if bits {
        (std::f64::consts::LN_2, "bits")
    } else {
        (1.0, "nats")
    }
}

pub fn classify(a: &ClassifyArgs) -> Res {
    let spec = parse_spec(&a.coeffs)?;
    let policy = ClassifyPolicy {
        positive_floor: a.positive_floor,
        zero_ceiling: a.zero_ceiling,
        divergence_threshold: a.divergence_threshold,
    };
    let c = spec.classify(a.horizon, &policy)?;
    let mut h = Header::new("classify");
    h.set("coeffs", a.coeffs.trim())
        .set("horizon", a.horizon)
        .set("positive-floor", show(a.positive_floor))
        .set("zero-ceiling", show(a.zero_ceiling))
        .set("divergence-threshold", show(a.divergence_threshold));
    let mut t = Table::open(&a.out, &h, &output::CLASSIFY_COLUMNS)?;
    t.row(&output::classify_cells(&spec.to_string(), &c))?;
    t.say(&format!(
        "{spec}: {} (ratio liminf ~ {:.6e}, limsup ~ {:.6e}, decay statistic {:.6e} up to index {})",
        c.verdict, c.liminf_ratio_estimate, c.limsup_ratio_estimate, c.decay_stat, c.horizon
    ));
    t.finish()
}

fn parse_inputs(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || usage(format!("--inputs: expected values, alt:<amp>:<len> or const:<amp>:<len>, got `{text}`"));
    let pattern = |rest: &str| -> Result<(f64, usize), CliError> {
        let (amp, len) = rest.split_once(':').ok_or_else(bad)?;
        Ok((amp.trim().parse().map_err(|_| bad())?, len.trim().parse().map_err(|_| bad())?))
    };
    let x = if let Some(rest) = text.strip_prefix("alt:") {
        let (amp, len) = pattern(rest)?;
        (0..len).map(|i| if i % 2 == 0 { amp } else { -amp }).collect()
    } else if let Some(rest) = text.strip_prefix("const:") {
        let (amp, len) = pattern(rest)?;
        vec![amp; len]
    } else {
        text.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?
    };
    if x.is_empty() {
        return Err(bad());
    }
    Ok(x)
}

pub fn simulate(a: &SimulateArgs) -> Res {
    let spec = parse_spec(&a.channel.coeffs)?;
    let noise = parse_noise(&a.channel.noise)?;
    let x = parse_inputs(&a.inputs)?;
    let power = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let params = ChannelParams::new(a.channel.sigma2, noise, power)?;
    let mut h = Header::new("simulate");
    channel_header(&mut h, &a.channel);
    h.set("inputs", &a.inputs).set("trials", a.trials).set("seed", a.seed);
    let rows = harness::residual_profile(&spec, &params, &x, a.trials, a.seed, a.workers)?;
    let mut t = Table::open(&a.out, &h, &output::RESIDUAL_COLUMNS)?;
    let mut worst: f64 = 0.0;
    for r in &rows {
        t.row(&output::residual_cells(r))?;
        worst = worst.max((r.emp_var - r.noise_var).abs() / r.noise_var);
    }
    t.say(&format!(
        "{} time indices, {} trials: largest relative gap between empirical and exact residual variance {worst:.4}",
        rows.len(),
        a.trials
    ));
    t.finish()
}

pub fn code(a: &CodeArgs) -> Res {
    let spec = parse_spec(&a.channel.coeffs)?;
    let noise = parse_noise(&a.channel.noise)?;
    let mut h = Header::new("code");
    channel_header(&mut h, &a.channel);
    let params = resolve_level(&mut h, &a.level, a.channel.sigma2, noise)?;
    h.set("L", a.period).set("n", a.n);
    let (messages, rate) = match (a.size.messages, a.size.rate) {
        (Some(m), None) => {
            h.set("messages", m);
            (m, (m as f64).ln() / a.n as f64)
        }
        (None, Some(r)) => {
            let m = codec::message_count_for_rate(r, a.n)?;
            h.set("rate", show(r)).set("derived.messages", m);
            (m, r)
        }
        _ => return Err(usage("exactly one of --messages or --rate is required")),
    };
    h.set("trials", a.trials).set("seed", a.seed);
    let (slot, options) = scheme_options(&mut h, &a.scheme)?;
    let scheme = SchemeParams::new(a.period, messages, a.n)?;
    let variance = slot.variance(params.power(), a.period);
    let alpha = alpha_or_nan(&spec, a.period)?;
    let ach = if alpha.is_nan() {
        f64::NAN
    } else {
        bounds::achievable_rate_opt(variance, a.channel.sigma2, alpha, a.period, 0.0)?.pre_limit_rate
    };
    let est = codec::scheme_error_probability_with(&spec, &params, &scheme, variance, a.trials, a.seed, &options)?;
    let row = SweepRow {
        spec: spec.to_string(),
        sigma2: a.channel.sigma2,
        snr: params.snr(),
        period: a.period,
        n: a.n,
        messages: Some(messages),
        rate_nats: rate,
        trials: a.trials,
        errors: Some(est.errors),
        err_prob: est.probability,
        ci_lo: est.ci_lo,
        ci_hi: est.ci_hi,
        ach_rate_pre_limit: ach,
        seed: a.seed,
        skipped: None,
    };
    let mut t = Table::open(&a.out, &h, &output::SWEEP_COLUMNS)?;
    t.row(&output::sweep_cells(&row))?;
    t.say(&format!(
        "block error {:.4} (95% CI [{:.4}, {:.4}]) over {} trials at |M| = {messages}, R = {rate:.4} nats/use; {} transmitted codewords exceeded the power budget",
        est.probability, est.ci_lo, est.ci_hi, est.trials, est.power_violations
    ));
    t.finish()
}

pub fn bounds(a: &BoundsArgs) -> Res {
    let spec = parse_spec(&a.channel.coeffs)?;
    let noise = parse_noise(&a.channel.noise)?;
    let slot = parse_slot_variance(&a.slot_variance)?;
    let mut h = Header::new("bounds");
    channel_header(&mut h, &a.channel);
    let params = resolve_level(&mut h, &a.level, a.channel.sigma2, noise)?;
    h.set("L", a.period).set("eps", show(a.eps)).set("slot-variance", &a.slot_variance);
    let alpha = spec.alpha_l(a.period, SUM_TOL)?;
    let variance = slot.variance(params.power(), a.period);
    let mut rate = bounds::achievable_rate_opt(variance, a.channel.sigma2, alpha, a.period, a.eps)?;
    if let Some(s) = a.s {
        rate.pre_limit_rate = bounds::achievable_rate_pre_limit(variance, a.channel.sigma2, alpha, a.period, a.eps, s)?;
        rate.s_used = s;
        h.set("s", show(s));
    }
    if let Some(rho) = a.rho.or_else(|| spec.geometric_ratio()) {
        rate = rate.with_rho_bound(rho)?;
        h.set("derived.rho", show(rho));
    }
    h.set("delta", show(a.delta))
        .set("eta", show(a.eta))
        .set("eps-delta-eta", show(a.eps_delta_eta));
    let converse: Option<ConverseReport> = match (a.l0, a.converse_rho) {
        (Some(l0), Some(rho)) => {
            h.set("l0", l0).set("converse-rho", show(rho));
            Some(bounds::converse_constant(&spec, rho, l0, noise, a.delta, a.eta, a.eps_delta_eta)?)
        }
        (None, None) => {
            h.set("max-l0", a.max_l0);
            match bounds::converse_search(&spec, noise, a.delta, a.eta, a.eps_delta_eta, a.max_l0) {
                Ok(c) => Some(c),
                Err(BoundsError::NoAdmissiblePair) => None,
                Err(e) => return Err(e.into()),
            }
        }
        _ => return Err(usage("--l0 and --converse-rho must be given together")),
    };
    h.set("bits", a.bits);
    let mut t = Table::open(&a.out, &h, &output::BOUNDS_COLUMNS)?;
    t.row(&output::bounds_cells(&spec.to_string(), params.snr(), &rate, converse.as_ref()))?;
    let (scale, u) = unit(a.bits);
    t.say(&format!(
        "{spec}, L = {}: alpha^(L) = {alpha:.6e}; pre-limit rate {:.6} {u}/use at s = {:.6e}; high-power limit {} {u}/use",
        a.period,
        rate.pre_limit_rate / scale,
        rate.s_used,
        if rate.is_unbounded() { "unbounded".to_string() } else { format!("{:.6}", rate.asymptotic_rate / scale) },
    ));
    if let Some(lb) = rate.rho_lower_bound {
        t.say(&format!("decay-rate lower bound {:.6} {u}/use", lb / scale));
    }
    match &converse {
        Some(c) => t.say(&format!(
            "converse: rho = {:.6}, l0 = {}, beta tilde = {:.6e}, h-(U) = {:.3e}, K = {:.6}, rate limit K - ln(beta tilde) = {:.6} {u}/use",
            c.rho,
            c.l0,
            c.beta_tilde,
            c.h_minus_noise,
            c.k / scale,
            c.bound / scale
        )),
        None => t.say("converse: no (rho, l0) with ratios bounded below in the search range"),
    }
    t.finish()
}

pub fn sweep(a: &SweepArgs) -> Res {
    let spec = parse_spec(&a.channel.coeffs)?;
    let noise = parse_noise(&a.channel.noise)?;
    let mut h = Header::new("sweep");
    channel_header(&mut h, &a.channel);
    let snr_grid = match (a.level.snr.is_empty(), a.level.power.is_empty()) {
        (false, true) => {
            let g = grid::reals("snr", &a.level.snr)?;
            h.set("snr", show_reals(&g));
            g
        }
        (true, false) => {
            let g = grid::reals("power", &a.level.power)?;
            h.set("power", show_reals(&g));
            g.iter().map(|p| p / a.channel.sigma2).collect()
        }
        _ => return Err(usage("exactly one of --snr or --power is required")),
    };
    let period_grid = grid::integers("L", &a.period)?;
    let n_grid = grid::integers("n", &a.n)?;
    h.set("L", show_integers(&period_grid)).set("n", show_integers(&n_grid));
    let rates = match (a.rates.rate.is_empty(), a.rates.rate_fraction.is_empty()) {
        (false, true) => {
            let g = grid::reals("rate", &a.rates.rate)?;
            h.set("rate", show_reals(&g));
            RateGrid::Absolute(g)
        }
        (true, false) => {
            let g = grid::reals("rate-fraction", &a.rates.rate_fraction)?;
            h.set("rate-fraction", show_reals(&g));
            RateGrid::FractionOfPreLimit(g)
        }
        _ => return Err(usage("exactly one of --rate or --rate-fraction is required")),
    };
    h.set("trials", a.trials).set("seed", a.seed);
    let (slot_variance, options) = scheme_options(&mut h, &a.scheme)?;
    let cfg = SweepConfig {
        spec,
        sigma2: a.channel.sigma2,
        noise,
        snr_grid,
        period_grid,
        n_grid,
        rates,
        trials: a.trials,
        seed: a.seed,
        slot_variance,
        options,
    };
    let mut t = Table::open(&a.out, &h, &output::SWEEP_COLUMNS)?;
    let mut write_err = None;
    let mut index = 0;
    harness::error_sweep(&cfg, |row| {
        index += 1;
        if write_err.is_none() {
            write_err = t.row(&output::sweep_cells(row)).err();
        }
        match &row.skipped {
            Some(reason) => eprintln!(
                "point {index}: snr={} L={} n={} R={:.4} skipped: {reason}",
                show(row.snr),
                row.period,
                row.n,
                row.rate_nats
            ),
            None => eprintln!(
                "point {index}: snr={} L={} n={} R={:.4} |M|={} err={:.4} [{:.4}, {:.4}]",
                show(row.snr),
                row.period,
                row.n,
                row.rate_nats,
                row.messages.unwrap_or(0),
                row.err_prob,
                row.ci_lo,
                row.ci_hi
            ),
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    t.finish()
}

pub fn lemma1(a: &Lemma1Args) -> Res {
    let noise = parse_noise(&a.noise)?;
    let deltas = grid::reals("delta", &a.delta)?;
    let c_grid = grid::reals("c-grid", &a.c_grid)?;
    let mut h = Header::new("lemma1");
    h.set("noise", &a.noise)
        .set("delta", show_reals(&deltas))
        .set("c-grid", show_reals(&c_grid))
        .set("trials", a.trials)
        .set("seed", a.seed);
    let estimates = deltas
        .iter()
        .map(|&d| bounds::log_inverse_near_zero(noise, d, &c_grid, a.trials, a.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::open(&a.out, &h, &output::LOG_INVERSE_COLUMNS)?;
    for (delta, est) in deltas.iter().zip(&estimates) {
        for &(c, mean, se) in &est.per_shift {
            let is_max = u64::from(c.to_bits() == est.argmax_c.to_bits());
            t.row(&[(*delta).into(), c.into(), mean.into(), se.into(), is_max.into(), a.trials.into()])?;
        }
    }
    for (delta, est) in deltas.iter().zip(&estimates) {
        t.say(&format!(
            "delta = {}: max over shifts {:.6} +- {:.6} at c = {}",
            show(*delta),
            est.value,
            est.std_error,
            show(est.argmax_c)
        ));
    }
    t.finish()
}

pub fn lemma2(a: &Lemma2Args) -> Res {
    let spec = parse_spec(&a.channel.coeffs)?;
    let noise = parse_noise(&a.channel.noise)?;
    let mut h = Header::new("lemma2");
    channel_header(&mut h, &a.channel);
    let params = resolve_level(&mut h, &a.level, a.channel.sigma2, noise)?;
    let n_grid = grid::integers("n", &a.n)?;
    h.set("L", a.period)
        .set("n", show_integers(&n_grid))
        .set("eps", show(a.eps))
        .set("trials", a.trials)
        .set("seed", a.seed);
    let rep = harness::norm_concentration(&ConcentrationConfig {
        spec,
        sigma2: a.channel.sigma2,
        noise,
        power: params.power(),
        period: a.period,
        n_grid,
        eps: a.eps,
        trials: a.trials,
        seed: a.seed,
        workers: a.workers,
    })?;
    h.set("derived.alpha_L", show(rep.alpha_l));
    let mut t = Table::open(&a.out, &h, &output::CONCENTRATION_COLUMNS)?;
    for r in &rep.rows {
        t.row(&output::concentration_cells(r))?;
    }
    for r in &rep.rows {
        let (ry, rz) = r.relative_eps();
        t.say(&format!(
            "n = {}: mean |y|^2/m = {:.4} (target {:.4}), mean |z|^2/m = {:.4} (target {:.4}), in-set fraction {:.3} at eps = {} ({:.1}% / {:.1}% of the targets)",
            r.n,
            r.mean_y,
            r.target_y,
            r.mean_z,
            r.target_z,
            r.hit_frac,
            show(r.eps),
            100.0 * ry,
            100.0 * rz
        ));
    }
    t.finish()
}

pub fn demo(a: &DemoArgs) -> Res {
    let specs = a.coeffs.iter().map(|s| parse_spec(s)).collect::<Result<Vec<_>, _>>()?;
    let snr = grid::reals("snr", &a.snr)?;
    let periods = grid::integers("L", &a.period)?;
    let slot = parse_slot_variance(&a.slot_variance)?;
    let mut h = Header::new("demo");
    h.set("coeffs", a.coeffs.iter().map(|s| s.trim()).collect::<Vec<_>>().join(","))
        .set("sigma2", show(a.sigma2))
        .set("snr", show_reals(&snr))
        .set("L", show_integers(&periods))
        .set("slot-variance", &a.slot_variance)
        .set("bits", a.bits);
    let rep = harness::dichotomy_demo(&specs, &snr, &periods, a.sigma2, slot)?;
    let mut t = Table::open(&a.out, &h, &output::DEMO_COLUMNS)?;
    for r in &rep.rows {
        t.row(&output::demo_cells(r))?;
    }
    let (scale, u) = unit(a.bits);
    for s in &rep.summaries {
        let at = |snr: f64| {
            rep.rows
                .iter()
                .find(|r| r.spec == s.spec && r.snr == snr)
                .map_or(f64::NAN, |r| r.rate_nats / scale)
        };
        t.say(&format!(
            "{}: {:.4} {u}/use at SNR {} and {:.4} at SNR {}; ratio {:.3} ({})",
            s.spec,
            at(s.low_snr),
            show(s.low_snr),
            at(s.high_snr),
            show(s.high_snr),
            s.ratio,
            s.trend
        ));
    }
    t.finish()
}
