//! Bit-generation rates for a source-independent QRNG and the sweep engine
//! that evaluates them over a range of total signal counts.
//!
//! Three rates are compared:
//!
//! * `ell_ours`: `n log2 d - log2|J_q| - 2 log2(1/eps)`, with `|J_q|` bounded
//!   by the smaller of the multinomial-sum and Hamming-ball bounds.
//! * `ell_vallone`: the Gamma-function bound computed from the absolute test counts.
//! * `ell_xu`: the bound driven by the average measured difference `d0`.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::channels::{expected_counts_qrng, sample_counts, ChannelModel, D0Model};
use crate::entropy::log_gamma_ratio;
use crate::error::{domain, Error, Result};
use crate::jq::{log_jq_bound, CountVector};
use crate::sampling::{delta_for_epsilon, Strategy};

pub const DEFAULT_EPSILON: f64 = 1e-36;
pub const DEFAULT_BETA: f64 = 1.0 / 3.0;
pub const DEFAULT_EPSILON_L2: f64 = 1e-12;
pub const DEFAULT_TEST_FRACTION: f64 = 0.07;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QrngParams {
    /// Total number of signals `N`.
    pub total: u64,
    /// Number of test rounds `m`.
    pub test_size: u64,
    pub d: u32,
    pub epsilon: f64,
    pub beta: f64,
    /// Failure parameter for `ell_xu`.
    pub epsilon_l2: f64,
}

impl QrngParams {
    /// Defaults: `m = ceil(0.07 N)`, `eps = 1e-36`, `beta = 1/3`.
    pub fn new(total: u64, d: u32) -> Result<Self> {
        let params = Self {
            total,
            test_size: TestSize::default().resolve(total)?,
            d,
            epsilon: DEFAULT_EPSILON,
            beta: DEFAULT_BETA,
            epsilon_l2: DEFAULT_EPSILON_L2,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn n(&self) -> u64 {
        self.total - self.test_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(domain("d", self.d as f64, "d >= 2"));
        }
        check_split(self.total, self.test_size)?;
        check_unit("epsilon", self.epsilon)?;
        check_unit("epsilon_l2", self.epsilon_l2)?;
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return Err(domain("beta", self.beta, "0 < beta < 1/2"));
        }
        Ok(())
    }
}

pub(crate) fn check_split(total: u64, m: u64) -> Result<()> {
    if m == 0 || m > total {
        return Err(Error::Invariant(format!("test size m = {m} must lie in [1, N = {total}]")));
    }
    if m > total - m {
        return Err(Error::Invariant(format!(
            "test size m = {m} exceeds unobserved count n = {}",
            total - m
        )));
    }
    Ok(())
}

pub(crate) fn check_unit(name: &'static str, eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(domain(name, eps, "0 < value < 1"))
    }
}

/// Test-round count, either as a fraction of `N` (rounded up) or absolute.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestSize {
    Fraction(f64),
    Absolute(u64),
}

impl Default for TestSize {
    fn default() -> Self {
        TestSize::Fraction(DEFAULT_TEST_FRACTION)
    }
}

impl TestSize {
    pub fn resolve(&self, total: u64) -> Result<u64> {
        match *self {
            TestSize::Fraction(f) => {
                if !(f > 0.0 && f <= 0.5) {
                    return Err(domain("test fraction", f, "0 < fraction <= 1/2"));
                }
                Ok((f * total as f64).ceil() as u64)
            }
            TestSize::Absolute(m) => Ok(m),
        }
    }
}

/// A rate evaluation. `ell` keeps its sign; `rate` is clamped at zero.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RateResult {
    pub ell: f64,
    pub rate: f64,
    pub delta: f64,
    pub eps_pa: f64,
    pub failure_prob: f64,
    pub breakdown: BTreeMap<String, f64>,
}

/// `4 eps^beta + 9 eps`.
pub fn eps_pa(epsilon: f64, beta: f64) -> f64 {
    4.0 * epsilon.powf(beta) + 9.0 * epsilon
}

/// `2 eps^(1 - 2 beta)`.
pub fn failure_probability(epsilon: f64, beta: f64) -> f64 {
    2.0 * epsilon.powf(1.0 - 2.0 * beta)
}

pub(crate) fn clamp_rate(ell: f64, total: u64) -> f64 {
    ell.max(0.0) / total as f64
}

/// Extractable bits from `n` untested rounds given test statistics `c`.
pub fn ell_ours(c: &CountVector, params: &QrngParams) -> Result<RateResult> {
    params.validate()?;
    if c.d() != params.d {
        return Err(Error::LengthMismatch(format!("count vector has d = {}, params d = {}", c.d(), params.d)));
    }
    let n = params.n();
    let delta = delta_for_epsilon(Strategy::Psi1, n, params.test_size, params.d, params.epsilon)?;
    let report = log_jq_bound(c, n, delta)?;
    let raw = n as f64 * (params.d as f64).log2();
    let pa = -2.0 * params.epsilon.log2();
    let ell = raw - report.log_min - pa;
    let mut breakdown = BTreeMap::new();
    breakdown.insert("n_log2_d".into(), raw);
    breakdown.insert("log_jq".into(), report.log_min);
    breakdown.insert("log_g".into(), report.log_g);
    if let Some(f) = report.log_f {
        breakdown.insert("log_f".into(), f);
    }
    breakdown.insert("pa_penalty".into(), pa);
    Ok(RateResult {
        ell,
        rate: clamp_rate(ell, params.total),
        delta,
        eps_pa: eps_pa(params.epsilon, params.beta),
        failure_prob: failure_probability(params.epsilon, params.beta),
        breakdown,
    })
}

/// Same as [`ell_ours`] but charging only the Hamming-ball bound.
pub fn ell_ours_ball_only(c: &CountVector, params: &QrngParams) -> Result<f64> {
    let r = ell_ours(c, params)?;
    Ok(r.breakdown["n_log2_d"] - r.breakdown["log_g"] - r.breakdown["pa_penalty"])
}

/// `n (log2 d - 2 log2[ Γ(m+d)/Γ(m+d+1/2) · Σ_i Γ(c_i+3/2)/Γ(c_i+1) ])`
/// for absolute test counts `c_i` summing to `m`.
pub fn ell_vallone(counts: &[u64], n: u64, m: u64) -> Result<f64> {
    let d = counts.len();
    if d < 2 {
        return Err(domain("d", d as f64, "d >= 2"));
    }
    let total: u64 = counts.iter().sum();
    if total != m {
        return Err(Error::CountMismatch { got: total, expected: m });
    }
    let prefactor = -log_gamma_ratio(m as f64 + d as f64, 0.5)?;
    let mut sum = 0.0;
    for &c in counts {
        sum += log_gamma_ratio(c as f64 + 1.0, 0.5)?.exp();
    }
    let log2_bracket = (prefactor + sum.ln()) / LN_2;
    Ok(n as f64 * ((d as f64).log2() - 2.0 * log2_bracket))
}

/// `log2 γ(x)` for `γ(x) = (x + √(1+x²)) · ((√(1+x²) + 1) / x)^x`, `γ(0) = 1`.
pub fn log2_gamma_fct(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain("x", x, "x >= 0"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let r = x.hypot(1.0);
    Ok((x.asinh() + x * ((r + 1.0) / x).ln()) / LN_2)
}

pub fn gamma_fct(x: f64) -> Result<f64> {
    log2_gamma_fct(x).map(f64::exp2)
}

/// `d · √(N² / (n² m) · ln(4/eps))`.
pub fn delta_prime(total: u64, n: u64, m: u64, d: u32, epsilon: f64) -> Result<f64> {
    check_unit("epsilon", epsilon)?;
    if n == 0 || m == 0 {
        return Err(Error::Invariant("n and m must be positive".into()));
    }
    let (nt, nn, mm) = (total as f64, n as f64, m as f64);
    Ok(d as f64 * ((nt * nt) / (nn * nn * mm) * (4.0 / epsilon).ln()).sqrt())
}

/// `n (log2 d - log2 γ(d0 + δ'))`.
pub fn ell_xu(d0: f64, total: u64, n: u64, m: u64, d: u32, epsilon: f64) -> Result<f64> {
    if !(d0 >= 0.0) {
        return Err(domain("d0", d0, "d0 >= 0"));
    }
    let dp = delta_prime(total, n, m, d, epsilon)?;
    Ok(n as f64 * ((d as f64).log2() - log2_gamma_fct(d0 + dp)?))
}

/// Where the test-round statistics come from.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Statistics {
    /// Plug in the channel's expected statistics.
    #[default]
    Expectation,
    /// Draw `m` test outcomes per row; row `i` uses seed `seed + i`.
    Sampled { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QrngSweepTemplate {
    pub test_size: TestSize,
    pub epsilon: f64,
    pub beta: f64,
    pub epsilon_l2: f64,
    pub d0_model: D0Model,
    pub statistics: Statistics,
}

impl Default for QrngSweepTemplate {
    fn default() -> Self {
        Self {
            test_size: TestSize::default(),
            epsilon: DEFAULT_EPSILON,
            beta: DEFAULT_BETA,
            epsilon_l2: DEFAULT_EPSILON_L2,
            d0_model: D0Model::default(),
            statistics: Statistics::default(),
        }
    }
}

impl QrngSweepTemplate {
    pub fn params(&self, total: u64, d: u32) -> Result<QrngParams> {
        let params = QrngParams {
            total,
            test_size: self.test_size.resolve(total)?,
            d,
            epsilon: self.epsilon,
            beta: self.beta,
            epsilon_l2: self.epsilon_l2,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct QrngRow {
    pub total: u64,
    pub n: u64,
    pub m: u64,
    pub delta: f64,
    pub delta_prime: f64,
    pub d0: f64,
    pub ell_ours: f64,
    pub ell_l1: f64,
    pub ell_l2: f64,
    pub rate_ours: f64,
    pub rate_l1: f64,
    pub rate_l2: f64,
}

/// One row of the sweep at `N = total`.
pub fn qrng_row(channel: &ChannelModel, total: u64, template: &QrngSweepTemplate, row_index: u64) -> Result<QrngRow> {
    let d = channel.d();
    let params = template.params(total, d)?;
    let (n, m) = (params.n(), params.test_size);
    let (counts, absolute) = match template.statistics {
        Statistics::Expectation => {
            let c = expected_counts_qrng(channel)?;
            let k = c.round_to_counts(m);
            (c, k)
        }
        Statistics::Sampled { seed } => {
            let c = sample_counts(channel, m, seed.wrapping_add(row_index))?;
            let k = c.absolute_counts().expect("sampled counts carry a sample size");
            (c, k)
        }
    };
    let ours = ell_ours(&counts, &params)?;
    let ell_l1 = ell_vallone(&absolute, n, m)?;
    let d0 = template.d0_model.d0(&counts)?;
    let ell_l2 = ell_xu(d0, total, n, m, d, params.epsilon_l2)?;
    Ok(QrngRow {
        total,
        n,
        m,
        delta: ours.delta,
        delta_prime: delta_prime(total, n, m, d, params.epsilon_l2)?,
        d0,
        ell_ours: ours.ell,
        ell_l1,
        ell_l2,
        rate_ours: ours.rate,
        rate_l1: clamp_rate(ell_l1, total),
        rate_l2: clamp_rate(ell_l2, total),
    })
}

/// Evaluates every `N` in `totals` (ascending); rows come back in input order.
pub fn sweep_qrng(channel: &ChannelModel, totals: &[u64], template: &QrngSweepTemplate) -> Result<Vec<QrngRow>> {
    channel.validate()?;
    if totals.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invariant("N values must be strictly ascending".into()));
    }
    totals
        .par_iter()
        .enumerate()
        .map(|(i, &total)| qrng_row(channel, total, template, i as u64))
        .collect()
}
