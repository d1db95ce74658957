//! Declarative scenarios: parsing, single runs, sweeps and the noise study.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! model = "basic"            # basic | basic-noisy | drift | drift-noisy
//! t_end = 39.0
//! step_divisor = 2048
//! extraction = "instant-theta"
//! outputs = ["t", "x_classical", "g", "theta_hat", "l_hat", "valid"]
//!
//! [loop]
//! epsilon = 0.01
//! b = 2.0
//! period = 3.0
//! l_true = 0.0
//! x_init = 1.3
//! ```
//!
//! Noisy models add a `[noise]` table with `amplitude`, `hold_interval`,
//! `offset` and `seed`. Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::dynamics::{
    simulate_basic, simulate_drift, DriftParams, LoopParams, NoiseSpec, Trajectory,
    DEFAULT_STEP_DIVISOR,
};
use crate::error::{Error, Result};
use crate::extraction::{
    accelerate_basic_with, accelerate_drift_first, accelerate_drift_zeroth, average_theta,
    ExtractionSeries, ThetaSource,
};
use crate::perturbation::gamma_criterion;

/// Accelerated tail residual below this fraction of the classical one counts as dominance.
pub const DOMINANCE_FACTOR: f64 = 0.05;
/// Accelerated tail residual at or above this fraction of the classical one counts as breakdown.
pub const BREAKDOWN_FACTOR: f64 = 0.5;
/// Fraction of the extraction window, from the end, used for tail statistics.
pub const TAIL_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Basic,
    BasicNoisy,
    Drift,
    DriftNoisy,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Basic => "basic",
            Model::BasicNoisy => "basic-noisy",
            Model::Drift => "drift",
            Model::DriftNoisy => "drift-noisy",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "basic" => Model::Basic,
            "basic-noisy" => Model::BasicNoisy,
            "drift" => Model::Drift,
            "drift-noisy" => Model::DriftNoisy,
            _ => return None,
        })
    }

    pub fn is_noisy(self) -> bool {
        matches!(self, Model::BasicNoisy | Model::DriftNoisy)
    }

    pub fn is_drift(self) -> bool {
        matches!(self, Model::Drift | Model::DriftNoisy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionScheme {
    InstantTheta,
    ExactTheta,
    AveragedTheta(usize),
    DriftZeroth,
    DriftFirst,
}

impl ExtractionScheme {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "instant-theta" => Self::InstantTheta,
            "exact-theta" => Self::ExactTheta,
            "drift-zeroth" => Self::DriftZeroth,
            "drift-first" => Self::DriftFirst,
            _ => {
                let k = s.strip_prefix("averaged-theta(")?.strip_suffix(')')?;
                let k: usize = k.trim().parse().ok()?;
                if k == 0 {
                    return None;
                }
                Self::AveragedTheta(k)
            }
        })
    }

    /// Periods of data needed beyond each extraction point.
    pub fn lookahead_periods(self) -> usize {
        match self {
            Self::InstantTheta | Self::ExactTheta | Self::AveragedTheta(_) => 3,
            Self::DriftZeroth => 2,
            Self::DriftFirst => 5,
        }
    }

    pub fn is_drift(self) -> bool {
        matches!(self, Self::DriftZeroth | Self::DriftFirst)
    }
}

impl fmt::Display for ExtractionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InstantTheta => f.write_str("instant-theta"),
            Self::ExactTheta => f.write_str("exact-theta"),
            Self::AveragedTheta(k) => write!(f, "averaged-theta({k})"),
            Self::DriftZeroth => f.write_str("drift-zeroth"),
            Self::DriftFirst => f.write_str("drift-first"),
        }
    }
}

/// Trace columns that can be requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    T,
    XClassical,
    G,
    ThetaHat,
    LHat,
    Valid,
}

impl Column {
    pub const ALL: [Column; 6] = [
        Column::T,
        Column::XClassical,
        Column::G,
        Column::ThetaHat,
        Column::LHat,
        Column::Valid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::T => "t",
            Column::XClassical => "x_classical",
            Column::G => "g",
            Column::ThetaHat => "theta_hat",
            Column::LHat => "l_hat",
            Column::Valid => "valid",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Basic(LoopParams),
    Drift(DriftParams),
}

impl ModelParams {
    pub fn period(&self) -> f64 {
        match self {
            ModelParams::Basic(p) => p.period,
            ModelParams::Drift(p) => p.period,
        }
    }

    pub fn l_true(&self) -> f64 {
        match self {
            ModelParams::Basic(p) => p.l_true,
            ModelParams::Drift(p) => p.l_true,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            ModelParams::Basic(p) => p.epsilon,
            ModelParams::Drift(p) => p.epsilon,
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: Model,
    pub loop_params: ModelParams,
    pub noise: Option<NoiseSpec>,
    pub t_end: f64,
    pub step_divisor: usize,
    pub extraction: ExtractionScheme,
    pub outputs: Vec<Column>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    model: String,
    #[serde(rename = "loop")]
    loop_params: RawLoop,
    noise: Option<RawNoise>,
    t_end: f64,
    step_divisor: Option<usize>,
    extraction: String,
    outputs: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoop {
    epsilon: f64,
    period: f64,
    l_true: f64,
    b: Option<f64>,
    x_init: Option<f64>,
    delta: Option<f64>,
    q0: Option<f64>,
    z_init: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    amplitude: f64,
    hold_interval: f64,
    offset: f64,
    seed: u64,
}

/// 1-based line of `key` inside `[table]` (or the top level), if present.
fn key_line(text: &str, table: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(h) = l.strip_prefix('[') {
            current = h.split(']').next().map(|s| s.trim().to_string());
            if key.is_empty() && current.as_deref() == table {
                return Some(i + 1);
            }
            continue;
        }
        if current.as_deref() != table {
            continue;
        }
        if let Some(rest) = l.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some(i + 1);
            }
        }
    }
    None
}

fn parse_error(text: &str, table: Option<&str>, key: &str, message: impl Into<String>) -> Error {
    let line = key_line(text, table, key)
        .or_else(|| table.and_then(|t| key_line(text, Some(t), "")))
        .unwrap_or(1);
    let key = match table {
        Some(t) => format!("{t}.{key}"),
        None => key.to_string(),
    };
    Error::ScenarioParse {
        key,
        line,
        message: message.into(),
    }
}

fn toml_error(text: &str, err: toml::de::Error) -> Error {
    let message = err.message().to_string();
    let line = err
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(1);
    let key = message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .or_else(|| {
            let l = text.lines().nth(line - 1)?;
            let k = l.split('=').next()?.trim();
            (!k.is_empty()).then(|| k.to_string())
        })
        .unwrap_or_else(|| "<document>".to_string());
    Error::ScenarioParse { key, line, message }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str, default_name: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;

    let model = Model::parse(&raw.model).ok_or_else(|| {
        parse_error(
            text,
            None,
            "model",
            format!("unknown model `{}`", raw.model),
        )
    })?;
    let extraction = ExtractionScheme::parse(&raw.extraction).ok_or_else(|| {
        parse_error(
            text,
            None,
            "extraction",
            format!("unknown extraction scheme `{}`", raw.extraction),
        )
    })?;

    let l = &raw.loop_params;
    let require = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| {
            parse_error(
                text,
                Some("loop"),
                key,
                format!("`{key}` is required for model {}", model.name()),
            )
        })
    };
    let forbid = |v: Option<f64>, key: &str| match v {
        Some(_) => Err(parse_error(
            text,
            Some("loop"),
            key,
            format!("`{key}` does not apply to model {}", model.name()),
        )),
        None => Ok(()),
    };
    let loop_params = if model.is_drift() {
        forbid(l.b, "b")?;
        forbid(l.x_init, "x_init")?;
        ModelParams::Drift(DriftParams {
            epsilon: l.epsilon,
            delta: require(l.delta, "delta")?,
            q0: require(l.q0, "q0")?,
            period: l.period,
            l_true: l.l_true,
            z_init: require(l.z_init, "z_init")?,
        })
    } else {
        forbid(l.delta, "delta")?;
        forbid(l.q0, "q0")?;
        forbid(l.z_init, "z_init")?;
        ModelParams::Basic(LoopParams {
            epsilon: l.epsilon,
            b: require(l.b, "b")?,
            period: l.period,
            l_true: l.l_true,
            x_init: require(l.x_init, "x_init")?,
        })
    };

    let noise = match (model.is_noisy(), raw.noise) {
        (true, Some(n)) => Some(NoiseSpec {
            amplitude: n.amplitude,
            hold_interval: n.hold_interval,
            offset: n.offset,
            seed: n.seed,
        }),
        (true, None) => {
            return Err(parse_error(
                text,
                None,
                "noise",
                "noisy model needs a [noise] table",
            ))
        }
        (false, Some(_)) => {
            return Err(parse_error(
                text,
                Some("noise"),
                "",
                format!("model {} takes no [noise] table", model.name()),
            ))
        }
        (false, None) => None,
    };

    let outputs = match raw.outputs {
        None => Column::ALL.to_vec(),
        Some(names) => {
            let mut cols = Vec::with_capacity(names.len());
            for n in &names {
                let c = Column::parse(n).ok_or_else(|| {
                    parse_error(
                        text,
                        None,
                        "outputs",
                        format!("unknown output column `{n}`"),
                    )
                })?;
                if cols.contains(&c) {
                    return Err(parse_error(
                        text,
                        None,
                        "outputs",
                        format!("duplicate column `{n}`"),
                    ));
                }
                cols.push(c);
            }
            if cols.is_empty() {
                return Err(parse_error(text, None, "outputs", "no output columns"));
            }
            cols
        }
    };

    let config = ScenarioConfig {
        name: raw.name.unwrap_or_else(|| default_name.to_string()),
        model,
        loop_params,
        noise,
        t_end: raw.t_end,
        step_divisor: raw.step_divisor.unwrap_or(DEFAULT_STEP_DIVISOR),
        extraction,
        outputs,
    };
    config.validate().map_err(|e| match e {
        Error::InvalidParams(msg) => {
            let key = msg.split(' ').next().unwrap_or("").to_string();
            let table = if ["t_end", "step_divisor", "extraction"].contains(&key.as_str()) {
                None
            } else if ["amplitude", "hold_interval", "offset"].contains(&key.as_str()) {
                Some("noise")
            } else {
                Some("loop")
            };
            parse_error(text, table, &key, msg)
        }
        other => other,
    })?;
    Ok(config)
}

/// Reads a scenario file; the name defaults to the file stem.
pub fn load_scenario_file(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    parse_scenario(&text, &stem)
}

impl ScenarioConfig {
    /// Checks parameter ranges and the horizon needed by the extraction scheme.
    pub fn validate(&self) -> Result<()> {
        match &self.loop_params {
            ModelParams::Basic(p) => p.validate()?,
            ModelParams::Drift(p) => p.validate()?,
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if self.model.is_drift() != matches!(self.loop_params, ModelParams::Drift(_)) {
            return Err(Error::InvalidParams(
                "loop parameters do not match the model".into(),
            ));
        }
        if self.model.is_noisy() != self.noise.is_some() {
            return Err(Error::InvalidParams(
                "noise table does not match the model".into(),
            ));
        }
        if self.extraction.is_drift() != self.model.is_drift() {
            return Err(Error::InvalidParams(format!(
                "extraction {} does not apply to model {}",
                self.extraction,
                self.model.name()
            )));
        }
        if self.step_divisor == 0 {
            return Err(Error::InvalidParams("step_divisor must be >= 1".into()));
        }
        let period = self.loop_params.period();
        let min_periods = self.extraction.lookahead_periods() + 1;
        if !(self.t_end >= min_periods as f64 * period) {
            return Err(Error::InvalidParams(format!(
                "t_end must be at least {min_periods} periods ({}) for {}",
                min_periods as f64 * period,
                self.extraction
            )));
        }
        Ok(())
    }

    /// Copy with one numeric field replaced.
    pub fn with_param(&self, axis: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let as_count = |v: f64| -> Result<u64> {
            if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 {
                Ok(v as u64)
            } else {
                Err(Error::InvalidParams(format!(
                    "{axis} needs a nonnegative integer, got {value}"
                )))
            }
        };
        let unknown =
            || Error::InvalidParams(format!("`{axis}` is not a numeric field of this scenario"));
        match axis {
            "t_end" => c.t_end = value,
            "step_divisor" => c.step_divisor = as_count(value)? as usize,
            "amplitude" | "hold_interval" | "offset" | "seed" => {
                let n = c.noise.as_mut().ok_or_else(unknown)?;
                match axis {
                    "amplitude" => n.amplitude = value,
                    "hold_interval" => n.hold_interval = value,
                    "offset" => n.offset = value,
                    _ => n.seed = as_count(value)?,
                }
            }
            _ => match &mut c.loop_params {
                ModelParams::Basic(p) => match axis {
                    "epsilon" => p.epsilon = value,
                    "b" => p.b = value,
                    "period" => p.period = value,
                    "l_true" => p.l_true = value,
                    "x_init" => p.x_init = value,
                    _ => return Err(unknown()),
                },
                ModelParams::Drift(p) => match axis {
                    "epsilon" => p.epsilon = value,
                    "delta" => p.delta = value,
                    "q0" => p.q0 = value,
                    "period" => p.period = value,
                    "l_true" => p.l_true = value,
                    "z_init" => p.z_init = value,
                    _ => return Err(unknown()),
                },
            },
        }
        c.validate()?;
        Ok(c)
    }

    /// Copy with the noise seed replaced (no-op for noiseless models).
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        if let Some(n) = c.noise.as_mut() {
            n.seed = seed;
        }
        c
    }
}

/// Steady-state statistics of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    /// `e^{-εbT}` for the basic loop.
    pub theta_exact: Option<f64>,
    /// θ used at the end of the window (last instantaneous, averaged or exact).
    pub theta_extracted_final: Option<f64>,
    /// Max `|L̂ - L|` over the tail; `+∞` if the tail holds no valid L̂.
    pub l_residual_max_tail: f64,
    /// Max `|x - L|` over the same tail.
    pub classical_residual_max_tail: f64,
    pub gamma: Option<f64>,
    pub clamp_fraction: f64,
}

impl RunSummary {
    /// Accelerated residual is below 5% of the classical one.
    pub fn dominant(&self) -> bool {
        self.l_residual_max_tail < DOMINANCE_FACTOR * self.classical_residual_max_tail
    }

    /// Accelerated residual is at least half the classical one.
    pub fn broken(&self) -> bool {
        !(self.l_residual_max_tail < BREAKDOWN_FACTOR * self.classical_residual_max_tail)
    }

    pub fn residual_ratio(&self) -> f64 {
        self.l_residual_max_tail / self.classical_residual_max_tail
    }

    pub fn verdict(&self) -> &'static str {
        if self.dominant() {
            "accelerated"
        } else if self.broken() {
            "breakdown"
        } else {
            "marginal"
        }
    }
}

/// Everything produced by one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub series: ExtractionSeries,
    pub summary: RunSummary,
}

/// Integrates the loop described by `config`.
pub fn simulate(config: &ScenarioConfig) -> Result<Trajectory> {
    match &config.loop_params {
        ModelParams::Basic(p) => {
            simulate_basic(p, config.noise.as_ref(), config.step_divisor, config.t_end)
        }
        ModelParams::Drift(p) => {
            simulate_drift(p, config.noise.as_ref(), config.step_divisor, config.t_end)
        }
    }
}

/// Runs the configured extraction on an existing trajectory of `x`.
pub fn analyze(config: &ScenarioConfig, traj: Trajectory) -> Result<RunOutput> {
    let series = match (&config.loop_params, config.extraction) {
        (ModelParams::Basic(p), scheme) => {
            let source = match scheme {
                ExtractionScheme::InstantTheta => ThetaSource::Instant,
                ExtractionScheme::ExactTheta => ThetaSource::Exact(p.theta()),
                ExtractionScheme::AveragedTheta(k) => ThetaSource::Averaged(k),
                other => {
                    return Err(Error::InvalidParams(format!(
                        "extraction {other} does not apply to the basic loop"
                    )))
                }
            };
            accelerate_basic_with(&traj, source)?
        }
        (ModelParams::Drift(p), ExtractionScheme::DriftZeroth) => {
            accelerate_drift_zeroth(&traj, p)?
        }
        (ModelParams::Drift(p), ExtractionScheme::DriftFirst) => accelerate_drift_first(&traj, p)?,
        (ModelParams::Drift(_), other) => {
            return Err(Error::InvalidParams(format!(
                "extraction {other} does not apply to the drift loop"
            )))
        }
    };
    let summary = summarize(config, &traj, &series)?;
    Ok(RunOutput {
        trajectory: traj,
        series,
        summary,
    })
}

fn summarize(
    config: &ScenarioConfig,
    traj: &Trajectory,
    series: &ExtractionSeries,
) -> Result<RunSummary> {
    let l = config.loop_params.l_true();
    let (first, last) = match (series.t_grid.first(), series.t_grid.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::EmptyWindow { window: 0.0 }),
    };
    let tail_start = last - TAIL_FRACTION * (last - first);
    let mut l_tail = 0.0f64;
    let mut any_valid = false;
    let mut classical_tail = 0.0f64;
    for (i, &t) in series.t_grid.iter().enumerate() {
        if t < tail_start {
            continue;
        }
        classical_tail = classical_tail.max((traj.values[i] - l).abs());
        if let Some(v) = series.l_hat[i] {
            any_valid = true;
            l_tail = l_tail.max((v - l).abs());
        }
    }
    if !any_valid {
        l_tail = f64::INFINITY;
    }

    let (theta_exact, theta_final, gamma) = match &config.loop_params {
        ModelParams::Basic(p) => {
            let theta_final = match config.extraction {
                ExtractionScheme::ExactTheta => Some(p.theta()),
                ExtractionScheme::AveragedTheta(k) => average_theta(series, k).ok(),
                _ => series.last_valid_theta(),
            };
            (Some(p.theta()), theta_final, None)
        }
        ModelParams::Drift(p) => (None, None, Some(gamma_criterion(p).gamma)),
    };

    Ok(RunSummary {
        theta_exact,
        theta_extracted_final: theta_final,
        l_residual_max_tail: l_tail,
        classical_residual_max_tail: classical_tail,
        gamma,
        clamp_fraction: series.clamp_fraction(),
    })
}

/// Simulates, extracts and summarizes; errors carry the scenario name.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput> {
    config
        .validate()
        .and_then(|_| simulate(config))
        .and_then(|traj| analyze(config, traj))
        .map_err(|e| e.in_scenario(&config.name))
}

/// Name of the sweep variant for `axis = value`.
pub fn variant_name(base: &ScenarioConfig, axis: &str, value: f64) -> String {
    format!("{}-{}={}", base.name, axis, value)
}

/// Runs one variant per value, concurrently; results keep the order of `values`.
pub fn sweep_runs(base: &ScenarioConfig, axis: &str, values: &[f64]) -> Vec<Result<RunOutput>> {
    values
        .par_iter()
        .map(|&v| {
            let name = variant_name(base, axis, v);
            base.with_param(axis, v)
                .map_err(|e| e.in_scenario(&name))
                .and_then(|mut c| {
                    c.name = name;
                    run_scenario(&c)
                })
        })
        .collect()
}

/// Summaries of [`sweep_runs`].
pub fn sweep(base: &ScenarioConfig, axis: &str, values: &[f64]) -> Vec<Result<RunSummary>> {
    sweep_runs(base, axis, values)
        .into_iter()
        .map(|r| r.map(|o| o.summary))
        .collect()
}

/// Averaging windows (in periods) compared by the noise study.
pub const NOISE_STUDY_WINDOWS: [usize; 3] = [1, 2, 3];

/// One noise level of [`noise_breakdown_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLevel {
    pub label: &'static str,
    pub amplitude: f64,
    pub instant: RunSummary,
    /// L̂ with the exact θ, the noise floor of the L law itself.
    pub exact: RunSummary,
    /// `(k, summary)` with θ averaged over `[0, kT]`.
    pub averaged: Vec<(usize, RunSummary)>,
}

impl NoiseLevel {
    pub fn averaged_with(&self, k: usize) -> Option<&RunSummary> {
        self.averaged
            .iter()
            .find(|(kk, _)| *kk == k)
            .map(|(_, s)| s)
    }

    /// No scheme (instantaneous or averaged) escapes the breakdown band.
    pub fn all_broken(&self) -> bool {
        self.instant.broken() && self.averaged.iter().all(|(_, s)| s.broken())
    }
}

/// Pass/fail of the three noise regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseVerdicts {
    /// `N₀ = ε^{5/2}`: instantaneous θ̂ is enough.
    pub low_instant_dominant: bool,
    /// `N₀ = ε²`: θ averaged over `[0, 3T]` is enough.
    pub mid_averaged_dominant: bool,
    /// `N₀ = ε²`: instantaneous θ̂ is not.
    pub mid_instant_fails: bool,
    /// `N₀ = ε`: every scheme breaks down.
    pub high_broken: bool,
}

impl NoiseVerdicts {
    pub fn all(&self) -> bool {
        self.low_instant_dominant
            && self.mid_averaged_dominant
            && self.mid_instant_fails
            && self.high_broken
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStudy {
    pub levels: Vec<NoiseLevel>,
}

impl NoiseStudy {
    pub fn verdicts(&self) -> NoiseVerdicts {
        let [low, mid, high] = [&self.levels[0], &self.levels[1], &self.levels[2]];
        NoiseVerdicts {
            low_instant_dominant: low.instant.dominant(),
            mid_averaged_dominant: mid.averaged_with(3).is_some_and(|s| s.dominant()),
            mid_instant_fails: !mid.instant.dominant(),
            high_broken: high.all_broken(),
        }
    }
}

/// Runs a basic-noisy scenario at `N₀ ∈ {ε^{5/2}, ε², ε}` with instantaneous
/// and averaged θ.
pub fn noise_breakdown_study(base: &ScenarioConfig) -> Result<NoiseStudy> {
    if base.model != Model::BasicNoisy {
        return Err(Error::InvalidParams(
            "noise study needs a basic-noisy scenario".into(),
        ));
    }
    let eps = base.loop_params.epsilon();
    let levels = [
        ("eps^(5/2)", eps.powf(2.5)),
        ("eps^2", eps * eps),
        ("eps", eps),
    ];
    let levels: Result<Vec<NoiseLevel>> = levels
        .par_iter()
        .map(|&(label, amplitude)| {
            let mut config = base.with_param("amplitude", amplitude)?;
            config.name = format!("{}-noise-{label}", base.name);
            let traj = simulate(&config).map_err(|e| e.in_scenario(&config.name))?;
            let with = |scheme: ExtractionScheme| -> Result<RunSummary> {
                let c = ScenarioConfig {
                    extraction: scheme,
                    ..config.clone()
                };
                analyze(&c, traj.clone())
                    .map(|o| o.summary)
                    .map_err(|e| e.in_scenario(&c.name))
            };
            let instant = with(ExtractionScheme::InstantTheta)?;
            let exact = with(ExtractionScheme::ExactTheta)?;
            // A window without any valid θ̂ leaves no estimate at all.
            let averaged = NOISE_STUDY_WINDOWS
                .iter()
                .map(|&k| match with(ExtractionScheme::AveragedTheta(k)) {
                    Ok(s) => Ok((k, s)),
                    Err(e) if matches!(e.root(), Error::EmptyWindow { .. }) => Ok((
                        k,
                        RunSummary {
                            theta_extracted_final: None,
                            l_residual_max_tail: f64::INFINITY,
                            ..instant
                        },
                    )),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(NoiseLevel {
                label,
                amplitude,
                instant,
                exact,
                averaged,
            })
        })
        .collect();
    Ok(NoiseStudy { levels: levels? })
}

/// Bundled scenarios named after the figures they reproduce.
pub mod presets {
    use super::*;

    /// Overrides the bundled preset directory when set.
    pub const PRESET_DIR_ENV: &str = "ES_ACCEL_PRESETS";

    const BUNDLED: &[(&str, &str)] = &[
        ("fig2", include_str!("../presets/fig2.toml")),
        ("fig3", include_str!("../presets/fig3.toml")),
        ("fig4", include_str!("../presets/fig4.toml")),
        ("fig5", include_str!("../presets/fig5.toml")),
        ("fig6", include_str!("../presets/fig6.toml")),
        ("fig7", include_str!("../presets/fig7.toml")),
        ("fig7-noisy", include_str!("../presets/fig7-noisy.toml")),
        ("fig8", include_str!("../presets/fig8.toml")),
        ("breakdown", include_str!("../presets/breakdown.toml")),
    ];

    fn override_dir() -> Option<std::path::PathBuf> {
        std::env::var_os(PRESET_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(Into::into)
    }

    /// Preset names, sorted.
    pub fn names() -> Result<Vec<String>> {
        let mut names: Vec<String> = match override_dir() {
            Some(dir) => {
                let entries = std::fs::read_dir(&dir).map_err(|e| Error::Io {
                    path: dir.display().to_string(),
                    message: e.to_string(),
                })?;
                entries
                    .filter_map(|e| e.ok())
                    .map(|e| e.path())
                    .filter(|p| p.extension().is_some_and(|x| x == "toml"))
                    .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
                    .collect()
            }
            None => BUNDLED.iter().map(|(n, _)| n.to_string()).collect(),
        };
        names.sort();
        Ok(names)
    }

    /// Raw text of a preset.
    pub fn text(name: &str) -> Result<String> {
        if let Some(dir) = override_dir() {
            let path = dir.join(format!("{name}.toml"));
            return std::fs::read_to_string(&path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            });
        }
        BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t.to_string())
            .ok_or_else(|| Error::InvalidParams(format!("no preset named `{name}`")))
    }

    pub fn load(name: &str) -> Result<ScenarioConfig> {
        parse_scenario(&text(name)?, name)
    }

    /// Bundled presets, ignoring any override.
    pub fn bundled() -> impl Iterator<Item = (&'static str, &'static str)> {
        BUNDLED.iter().copied()
    }
}
