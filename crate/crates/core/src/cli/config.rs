//! JSON run configuration and its resolution into concrete parameters.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelModel, D0Model};
use crate::jq::CountVector;
use crate::qkd::QkdSweepTemplate;
use crate::qrng::{QrngSweepTemplate, Statistics, TestSize};
use crate::sampling::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    QrngSweep,
    QkdSweep,
    JqBound,
    SampleVerify,
    MuDemo,
    Convergence,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::QrngSweep => "qrng-sweep",
            Mode::QkdSweep => "qkd-sweep",
            Mode::JqBound => "jq-bound",
            Mode::SampleVerify => "sample-verify",
            Mode::MuDemo => "mu-demo",
            Mode::Convergence => "convergence",
        }
    }
}

/// A non-negative integer written either as a JSON integer or as an
/// integral float such as `1e10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Number", into = "u64")]
pub struct Count(pub u64);

impl TryFrom<serde_json::Number> for Count {
    type Error = String;

    fn try_from(n: serde_json::Number) -> Result<Self, Self::Error> {
        if let Some(v) = n.as_u64() {
            return Ok(Count(v));
        }
        n.as_f64()
            .and_then(integral)
            .map(Count)
            .ok_or_else(|| format!("expected a non-negative integer, got {n}"))
    }
}

impl From<Count> for u64 {
    fn from(c: Count) -> u64 {
        c.0
    }
}

fn integral(v: f64) -> Option<u64> {
    // 2^63 keeps the cast exact
    (v >= 0.0 && v.fract() == 0.0 && v < (1u64 << 63) as f64).then_some(v as u64)
}

/// Parses `"1e10"`, `"250"` and the like.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.trim().parse::<u64>() {
        return Ok(v);
    }
    s.trim()
        .parse::<f64>()
        .ok()
        .and_then(integral)
        .ok_or_else(|| format!("expected a non-negative integer, got {s:?}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelConfig {
    Depolarizing { d: u32, q: f64 },
    Explicit { fractions: Vec<f64> },
    LossyDepolarizing { d: u32, q: f64, p_vac: f64 },
}

impl ChannelConfig {
    pub fn build(&self) -> crate::Result<ChannelModel> {
        match self {
            ChannelConfig::Depolarizing { d, q } => ChannelModel::depolarizing(*d, *q),
            ChannelConfig::Explicit { fractions } => Ok(ChannelModel::explicit(CountVector::new(fractions.clone(), None)?)),
            ChannelConfig::LossyDepolarizing { d, q, p_vac } => ChannelModel::lossy(*d, *q, *p_vac),
        }
    }

    pub fn d(&self) -> u32 {
        match self {
            ChannelConfig::Depolarizing { d, .. } | ChannelConfig::LossyDepolarizing { d, .. } => *d,
            ChannelConfig::Explicit { fractions } => fractions.len() as u32,
        }
    }
}

/// Either explicit values or `points` log-spaced integers from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<Count>),
    Values { values: Vec<Count> },
    LogRange { start: Count, stop: Count, points: Count },
}

impl GridSpec {
    pub fn resolve(&self) -> Result<Vec<u64>, String> {
        let values: Vec<u64> = match self {
            GridSpec::List(v) | GridSpec::Values { values: v } => v.iter().map(|c| c.0).collect(),
            GridSpec::LogRange { start, stop, points } => log_grid(start.0, stop.0, points.0)?,
        };
        if values.is_empty() {
            return Err("grid is empty".into());
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err("grid values must be strictly ascending".into());
        }
        Ok(values)
    }
}

/// `points` integers spaced evenly in `log10` between `start` and `stop`
/// inclusive, with duplicates from rounding removed.
pub fn log_grid(start: u64, stop: u64, points: u64) -> Result<Vec<u64>, String> {
    if start == 0 || stop < start {
        return Err(format!("log grid needs 0 < start <= stop, got {start}..{stop}"));
    }
    if points == 0 {
        return Err("log grid needs at least one point".into());
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let (a, b) = ((start as f64).log10(), (stop as f64).log10());
    let mut out: Vec<u64> = (0..points)
        .map(|i| {
            if i == 0 {
                start
            } else if i == points - 1 {
                stop
            } else {
                10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64).round() as u64
            }
        })
        .collect();
    out.dedup();
    Ok(out)
}

/// `m` as a fraction of `N` when below 1, otherwise an absolute count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TestSizeConfig(pub f64);

impl TryFrom<f64> for TestSizeConfig {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        TestSizeConfig(v).to_test_size().map(|_| TestSizeConfig(v))
    }
}

impl From<TestSizeConfig> for f64 {
    fn from(t: TestSizeConfig) -> f64 {
        t.0
    }
}

impl TestSizeConfig {
    pub fn to_test_size(self) -> Result<TestSize, String> {
        let v = self.0;
        if v > 0.0 && v < 1.0 {
            Ok(TestSize::Fraction(v))
        } else if let Some(m) = integral(v).filter(|&m| m >= 1) {
            Ok(TestSize::Absolute(m))
        } else {
            Err(format!("m must be a fraction in (0, 1) or a positive integer, got {v}"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum D0Config {
    Value(f64),
    Named(D0Name),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum D0Name {
    UniformMismatch,
    SymbolOffset,
}

impl D0Config {
    pub fn model(self) -> D0Model {
        match self {
            D0Config::Value(value) => D0Model::Fixed { value },
            D0Config::Named(D0Name::UniformMismatch) => D0Model::UniformMismatch,
            D0Config::Named(D0Name::SymbolOffset) => D0Model::SymbolOffset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticsName {
    Expectation,
    Sampled,
}

/// The JSON document accepted by `--config`. Every field is optional;
/// unset fields take mode-specific defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelConfig>,
    /// Values of `N` for sweeps, of `n` for convergence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<TestSizeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_prior: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ec_efficiency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_vac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d0: Option<D0Config>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistics: Option<StatisticsName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<Count>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Count>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<Count>,
    /// Word for sample-verify; every count class is checked when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word: Option<Vec<u32>>,
    /// Second word for the two-party strategies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word_b: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<Count>,
}

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct QrngResolved {
    pub channel: ChannelConfig,
    pub n_values: Vec<u64>,
    pub template: QrngSweepTemplate,
}

#[derive(Debug, Clone, Serialize)]
pub struct QkdResolved {
    pub channel: ChannelConfig,
    pub n_values: Vec<u64>,
    pub template: QkdSweepTemplate,
}

#[derive(Debug, Clone, Serialize)]
pub struct JqResolved {
    pub fractions: Vec<f64>,
    pub n: u64,
    pub delta: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleResolved {
    pub strategy: Strategy,
    pub n: u64,
    pub m: u64,
    pub d: u32,
    pub delta: f64,
    pub trials: u64,
    pub word: Option<Vec<u32>>,
    pub word_b: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MuResolved {
    pub d: u32,
    pub states: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceResolved {
    pub fractions: Vec<f64>,
    pub n_values: Vec<u64>,
    pub epsilon: f64,
}

/// Fully resolved run: every value that influences the output.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Resolved {
    QrngSweep(QrngResolved),
    QkdSweep(QkdResolved),
    JqBound(JqResolved),
    SampleVerify(SampleResolved),
    MuDemo(MuResolved),
    Convergence(ConvergenceResolved),
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedRun {
    pub version: &'static str,
    pub seed: u64,
    pub svg: bool,
    #[serde(flatten)]
    pub body: Resolved,
}

fn default_grid(start: u64, stop: u64, points: u64) -> GridSpec {
    GridSpec::LogRange {
        start: Count(start),
        stop: Count(stop),
        points: Count(points),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    /// Applies defaults for `mode` and checks every invariant before any
    /// computation starts.
    pub fn resolve(&self, mode: Mode) -> Result<ResolvedRun, String> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(format!("config mode {} does not match requested mode {}", m.name(), mode.name()));
            }
        }
        let seed = self.seed.map_or(DEFAULT_SEED, |c| c.0);
        let fail = |e: crate::Error| e.to_string();
        let body = match mode {
            Mode::QrngSweep => {
                let channel = self.channel.clone().unwrap_or(ChannelConfig::Depolarizing { d: 4, q: 0.2 });
                let model = channel.build().map_err(fail)?;
                let n_values = self.grid.clone().unwrap_or(default_grid(1_000_000, 1_000_000_000_000, 25)).resolve()?;
                let mut template = QrngSweepTemplate::default();
                if let Some(m) = self.m {
                    template.test_size = m.to_test_size()?;
                }
                template.epsilon = self.epsilon.unwrap_or(template.epsilon);
                template.beta = self.beta.unwrap_or(template.beta);
                template.epsilon_l2 = self.epsilon_l2.unwrap_or(template.epsilon_l2);
                if let Some(d0) = self.d0 {
                    template.d0_model = d0.model();
                }
                if self.statistics == Some(StatisticsName::Sampled) {
                    template.statistics = Statistics::Sampled { seed };
                }
                for &total in &n_values {
                    template.params(total, model.d()).map_err(|e| format!("N = {total}: {e}"))?;
                }
                Resolved::QrngSweep(QrngResolved {
                    channel,
                    n_values,
                    template,
                })
            }
            Mode::QkdSweep => {
                let channel = self.channel.clone().unwrap_or(ChannelConfig::Depolarizing { d: 4, q: 0.1 });
                if matches!(channel, ChannelConfig::Explicit { .. }) {
                    return Err("qkd-sweep needs a depolarizing or lossy-depolarizing channel".into());
                }
                let model = channel.build().map_err(fail)?;
                let n_values = self
                    .grid
                    .clone()
                    .unwrap_or(default_grid(10_000_000, 1_000_000_000_000, 26))
                    .resolve()?;
                let mut template = QkdSweepTemplate::default();
                if let Some(m) = self.m {
                    template.test_size = m.to_test_size()?;
                }
                template.epsilon = self.epsilon.unwrap_or(template.epsilon);
                template.beta = self.beta.unwrap_or(template.beta);
                template.epsilon_prior = self.epsilon_prior.unwrap_or(template.epsilon_prior);
                template.ec_efficiency = self.ec_efficiency.unwrap_or(template.ec_efficiency);
                template.p_vac = self.p_vac.unwrap_or(template.p_vac);
                for &total in &n_values {
                    let params = template.params(total, model.d()).map_err(|e| format!("N = {total}: {e}"))?;
                    params.with_vacuum(template.p_vac).map_err(fail)?;
                }
                Resolved::QkdSweep(QkdResolved {
                    channel,
                    n_values,
                    template,
                })
            }
            Mode::JqBound => {
                let fractions = self.fractions_or(vec![0.5, 0.3, 0.2])?;
                CountVector::new(fractions.clone(), None).map_err(fail)?;
                let delta = self.delta.unwrap_or(0.15);
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(format!("delta = {delta} must be positive"));
                }
                Resolved::JqBound(JqResolved {
                    fractions,
                    n: self.n.map_or(10, |c| c.0),
                    delta,
                    exact: self.exact.unwrap_or(true),
                })
            }
            Mode::SampleVerify => {
                let strategy = self.strategy.unwrap_or(Strategy::Psi0);
                let d = self.d.unwrap_or(2);
                let n = self.n.map_or(10, |c| c.0);
                let m = match self.m {
                    None => n,
                    Some(t) => match t.to_test_size()? {
                        TestSize::Absolute(m) => m,
                        TestSize::Fraction(_) => return Err("sample-verify needs an absolute m".into()),
                    },
                };
                let delta = self.delta.unwrap_or(0.1);
                crate::sampling::SamplingSpec::new(strategy, n, m, d, delta).map_err(fail)?;
                let trials = self.trials.map_or(100_000, |c| c.0);
                if trials == 0 {
                    return Err("trials must be at least 1".into());
                }
                if self.word.is_none() && n + m > 20 {
                    return Err(format!("checking every count class needs n + m <= 20, got {}", n + m));
                }
                if strategy.is_two_party() != self.word_b.is_some() && self.word.is_some() {
                    return Err(format!("{} needs {} word", strategy.name(), if strategy.is_two_party() { "a second" } else { "exactly one" }));
                }
                Resolved::SampleVerify(SampleResolved {
                    strategy,
                    n,
                    m,
                    d,
                    delta,
                    trials,
                    word: self.word.clone(),
                    word_b: self.word_b.clone(),
                })
            }
            Mode::MuDemo => {
                let d = self.d.unwrap_or(4);
                if d < 2 {
                    return Err(format!("d = {d} must be at least 2"));
                }
                Resolved::MuDemo(MuResolved {
                    d,
                    states: self.states.map_or(1000, |c| c.0),
                })
            }
            Mode::Convergence => {
                let fractions = self.fractions_or(vec![0.25; 4])?;
                crate::entropy::ProbabilityDistribution::new(fractions.clone()).map_err(fail)?;
                let n_values = self
                    .grid
                    .clone()
                    .unwrap_or(GridSpec::List(vec![Count(10_000), Count(1_000_000), Count(100_000_000)]))
                    .resolve()?;
                let epsilon = self.epsilon.unwrap_or(crate::qrng::DEFAULT_EPSILON);
                if !(epsilon > 0.0 && epsilon < 1.0) {
                    return Err(format!("epsilon = {epsilon} must lie in (0, 1)"));
                }
                Resolved::Convergence(ConvergenceResolved {
                    fractions,
                    n_values,
                    epsilon,
                })
            }
        };
        Ok(ResolvedRun {
            version: env!("CARGO_PKG_VERSION"),
            seed,
            svg: self.svg.unwrap_or(false),
            body,
        })
    }

    fn fractions_or(&self, default: Vec<f64>) -> Result<Vec<f64>, String> {
        match &self.channel {
            None => Ok(default),
            Some(ChannelConfig::Explicit { fractions }) => Ok(fractions.clone()),
            Some(ch) => {
                let model = ch.build().map_err(|e| e.to_string())?;
                crate::channels::expected_counts_qrng(&model)
                    .map(|c| c.fractions().to_vec())
                    .map_err(|e| e.to_string())
            }
        }
    }
}
