//! Finite-key rates for high-dimensional BB84, with and without a vacuum
//! (loss) basis element, next to an earlier finite-key bound and the
//! asymptotic rate.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::channels::{expected_hamming_distance_qkd, ChannelModel};
use crate::entropy::{binary_entropy, extended_d_ary_entropy, extended_d_ary_entropy_bits};
use crate::error::{domain, Error, Result};
use crate::qrng::{check_split, check_unit, clamp_rate, eps_pa, failure_probability, RateResult, TestSize};
use crate::sampling::{delta_for_epsilon, Strategy};

pub const DEFAULT_EC_EFFICIENCY: f64 = 1.2;
pub const DEFAULT_EPSILON_PRIOR: f64 = 1e-12;

/// Overlap exponents of the two measurement bases.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OverlapSpec {
    /// `-log2` of the largest squared overlap.
    pub gamma_hat: f64,
    /// `-log2` of the second-largest squared overlap.
    pub gamma: f64,
    pub b_star: u32,
    /// Number of outcomes per basis.
    pub dim: u32,
}

/// Two mutually unbiased `d`-dimensional bases, optionally sharing a vacuum
/// vector. The vacuum is outcome `d` of the enlarged alphabet.
pub fn overlaps_for_protocol(d: u32, vacuum: bool) -> Result<OverlapSpec> {
    if d < 2 {
        return Err(domain("d", d as f64, "d >= 2"));
    }
    let log_d = (d as f64).log2();
    Ok(if vacuum {
        OverlapSpec {
            gamma_hat: 0.0,
            gamma: log_d,
            b_star: d,
            dim: d + 1,
        }
    } else {
        OverlapSpec {
            gamma_hat: log_d,
            gamma: log_d,
            b_star: 0,
            dim: d,
        }
    })
}

/// Min-entropy lower bound
/// `n (c + δ) γ̂ + n (1 - c - δ) γ - n H̄_dim(Δ + δ) log2 dim`, in bits, where
/// `c` is the observed fraction of outcome `b*` and `δ` the two-party
/// sampling tolerance for failure parameter `epsilon`.
pub fn three_party_bound(
    delta_h: f64,
    c_bstar: f64,
    n: u64,
    m: u64,
    epsilon: f64,
    overlaps: &OverlapSpec,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta_h) {
        return Err(domain("delta_h", delta_h, "0 <= delta_h <= 1"));
    }
    if !(0.0..=1.0).contains(&c_bstar) {
        return Err(domain("c_bstar", c_bstar, "0 <= c_bstar <= 1"));
    }
    if overlaps.gamma_hat > overlaps.gamma {
        return Err(Error::Invariant("gamma_hat must not exceed gamma".into()));
    }
    let delta = delta_for_epsilon(Strategy::Psi2Plus0, n, m, overlaps.dim, epsilon)?;
    Ok(three_party_bound_at(delta_h, c_bstar, n, delta, overlaps))
}

pub(crate) fn three_party_bound_at(delta_h: f64, c_bstar: f64, n: u64, delta: f64, o: &OverlapSpec) -> f64 {
    let nf = n as f64;
    nf * (c_bstar + delta) * o.gamma_hat + nf * (1.0 - c_bstar - delta) * o.gamma
        - nf * extended_d_ary_entropy_bits(delta_h + delta, o.dim)
}

fn check_q(q: f64, d: u32) -> Result<()> {
    if d < 2 {
        return Err(domain("d", d as f64, "d >= 2"));
    }
    if !(0.0..=(d - 1) as f64 / d as f64).contains(&q) {
        return Err(domain("Q", q, "0 <= Q <= (d-1)/d"));
    }
    Ok(())
}

/// Error-correction leakage per raw-key symbol: `eff · (Q log2(d-1) + h(Q))`.
pub fn leak_ec(q: f64, d: u32, efficiency: f64) -> Result<f64> {
    check_q(q, d)?;
    if !(efficiency >= 1.0) {
        return Err(domain("efficiency", efficiency, "efficiency >= 1"));
    }
    let log_term = if d > 2 { q * ((d - 1) as f64).log2() } else { 0.0 };
    Ok(efficiency * (log_term + binary_entropy(q)?))
}

/// `log2 d - 2 (Q log2(d-1) + h(Q))`.
pub fn r_asym(d: u32, q: f64) -> Result<f64> {
    Ok((d as f64).log2() - 2.0 * leak_ec(q, d, 1.0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QkdParams {
    pub total: u64,
    pub test_size: u64,
    pub d: u32,
    pub epsilon: f64,
    pub beta: f64,
    pub vacuum: bool,
    pub p_vac: f64,
    pub ec_efficiency: f64,
    /// Failure parameter of the earlier bound.
    pub epsilon_prior: f64,
}

impl QkdParams {
    /// Lossless defaults: `m = ceil(0.07 N)`, `eps = 1e-36`, `beta = 1/3`, efficiency 1.2.
    pub fn new(total: u64, d: u32) -> Result<Self> {
        let params = Self {
            total,
            test_size: TestSize::default().resolve(total)?,
            d,
            epsilon: crate::qrng::DEFAULT_EPSILON,
            beta: crate::qrng::DEFAULT_BETA,
            vacuum: false,
            p_vac: 0.0,
            ec_efficiency: DEFAULT_EC_EFFICIENCY,
            epsilon_prior: DEFAULT_EPSILON_PRIOR,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_vacuum(mut self, p_vac: f64) -> Result<Self> {
        self.vacuum = true;
        self.p_vac = p_vac;
        self.validate()?;
        Ok(self)
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
        check_unit("epsilon_prior", self.epsilon_prior)?;
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return Err(domain("beta", self.beta, "0 < beta < 1/2"));
        }
        if !(0.0..=1.0).contains(&self.p_vac) {
            return Err(domain("p_vac", self.p_vac, "0 <= p_vac <= 1"));
        }
        if !self.vacuum && self.p_vac != 0.0 {
            return Err(Error::Invariant("p_vac must be 0 when the vacuum flag is off".into()));
        }
        if !(self.ec_efficiency >= 1.0) {
            return Err(domain("ec_efficiency", self.ec_efficiency, "efficiency >= 1"));
        }
        Ok(())
    }
}

/// Key length from the three-party bound after error correction and
/// privacy amplification.
///
/// Without vacuum: `n (log2 d - H̄_d(Δ+δ) log2 d) - n leak - 2 log2(1/ε)`.
/// With vacuum, on the `k = n (1 - p_vac - δ)` kept symbols:
/// `k (log2 d - H̄_{d+1}(Δ+δ) log2(d+1)) - k leak - 2 log2(1/ε)`.
pub fn ell_hdbb84_ours(delta_h: f64, p_vac: f64, params: &QkdParams) -> Result<RateResult> {
    params.validate()?;
    check_q(delta_h, params.d)?;
    if !(0.0..=1.0).contains(&p_vac) {
        return Err(domain("p_vac", p_vac, "0 <= p_vac <= 1"));
    }
    if !params.vacuum && p_vac != 0.0 {
        return Err(Error::Invariant("p_vac must be 0 when the vacuum flag is off".into()));
    }
    let n = params.n();
    let nf = n as f64;
    let d = params.d;
    let overlaps = overlaps_for_protocol(d, params.vacuum)?;
    let delta = delta_for_epsilon(Strategy::Psi2Plus0, n, params.test_size, overlaps.dim, params.epsilon)?;
    let leak = leak_ec(delta_h, d, params.ec_efficiency)?;
    let pa = -2.0 * params.epsilon.log2();
    let log_d = (d as f64).log2();
    let (kept, per_symbol) = if params.vacuum {
        let kept = nf * (1.0 - p_vac - delta);
        (kept, log_d - extended_d_ary_entropy_bits(delta_h + delta, d + 1))
    } else {
        (nf, log_d - extended_d_ary_entropy(delta_h + delta, d) * log_d)
    };
    let ell = kept * per_symbol - kept * leak - pa;
    let mut breakdown = BTreeMap::new();
    breakdown.insert("kept_symbols".into(), kept);
    breakdown.insert("entropy_per_symbol".into(), per_symbol);
    breakdown.insert("leak_ec".into(), kept * leak);
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

/// `√((n+m)(m+1) ln(2/ε) / (m² n))`.
pub fn nu_prior(n: u64, m: u64, epsilon: f64) -> Result<f64> {
    check_unit("epsilon", epsilon)?;
    if n == 0 || m == 0 {
        return Err(Error::Invariant("n and m must be positive".into()));
    }
    let (nf, mf) = (n as f64, m as f64);
    Ok(((nf + mf) * (mf + 1.0) * (2.0 / epsilon).ln() / (mf * mf * nf)).sqrt())
}

/// Earlier bound `n [log2 d - h(Q+ν) - (Q+ν) log2(d-1)]`, with the same
/// leakage and privacy-amplification charges as [`ell_hdbb84_ours`] at
/// failure parameter `epsilon_prior`. Past `Q+ν = 1-1/d` the entropy term
/// saturates at `log2 d`.
pub fn ell_hdbb84_prior(q: f64, params: &QkdParams) -> Result<RateResult> {
    params.validate()?;
    check_q(q, params.d)?;
    let n = params.n();
    let nf = n as f64;
    let nu = nu_prior(n, params.test_size, params.epsilon_prior)?;
    let log_d = (params.d as f64).log2();
    // h(x) + x log2(d-1) is the d-ary entropy in bits
    let per_symbol = log_d - extended_d_ary_entropy_bits(q + nu, params.d);
    let leak = nf * leak_ec(q, params.d, params.ec_efficiency)?;
    let pa = -2.0 * params.epsilon_prior.log2();
    let ell = nf * per_symbol - leak - pa;
    let mut breakdown = BTreeMap::new();
    breakdown.insert("entropy_per_symbol".into(), per_symbol);
    breakdown.insert("leak_ec".into(), leak);
    breakdown.insert("pa_penalty".into(), pa);
    Ok(RateResult {
        ell,
        rate: clamp_rate(ell, params.total),
        delta: nu,
        eps_pa: params.epsilon_prior,
        failure_prob: params.epsilon_prior,
        breakdown,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QkdSweepTemplate {
    pub test_size: TestSize,
    pub epsilon: f64,
    pub beta: f64,
    pub epsilon_prior: f64,
    pub ec_efficiency: f64,
    /// Vacuum probability for the lossy curve when the channel itself is lossless.
    pub p_vac: f64,
}

impl Default for QkdSweepTemplate {
    fn default() -> Self {
        Self {
            test_size: TestSize::default(),
            epsilon: crate::qrng::DEFAULT_EPSILON,
            beta: crate::qrng::DEFAULT_BETA,
            epsilon_prior: DEFAULT_EPSILON_PRIOR,
            ec_efficiency: DEFAULT_EC_EFFICIENCY,
            p_vac: 0.2,
        }
    }
}

impl QkdSweepTemplate {
    pub fn params(&self, total: u64, d: u32) -> Result<QkdParams> {
        let params = QkdParams {
            total,
            test_size: self.test_size.resolve(total)?,
            d,
            epsilon: self.epsilon,
            beta: self.beta,
            vacuum: false,
            p_vac: 0.0,
            ec_efficiency: self.ec_efficiency,
            epsilon_prior: self.epsilon_prior,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct QkdRow {
    pub total: u64,
    pub n: u64,
    pub m: u64,
    pub delta: f64,
    pub nu: f64,
    pub p_vac: f64,
    pub ell_ours: f64,
    pub ell_prior: f64,
    pub ell_ours_lossy: f64,
    pub rate_ours: f64,
    pub rate_prior: f64,
    pub rate_asym: f64,
    pub rate_ours_lossy: f64,
}

pub fn qkd_row(channel: &ChannelModel, total: u64, template: &QkdSweepTemplate) -> Result<QkdRow> {
    let d = channel.d();
    let q = expected_hamming_distance_qkd(channel)?;
    let p_vac = match channel {
        ChannelModel::LossyDepolarizing { p_vac, .. } => *p_vac,
        _ => template.p_vac,
    };
    let params = template.params(total, d)?;
    let ours = ell_hdbb84_ours(q, 0.0, &params)?;
    let prior = ell_hdbb84_prior(q, &params)?;
    let lossy = ell_hdbb84_ours(q, p_vac, &params.with_vacuum(p_vac)?)?;
    Ok(QkdRow {
        total,
        n: params.n(),
        m: params.test_size,
        delta: ours.delta,
        nu: prior.delta,
        p_vac,
        ell_ours: ours.ell,
        ell_prior: prior.ell,
        ell_ours_lossy: lossy.ell,
        rate_ours: ours.rate,
        rate_prior: prior.rate,
        rate_asym: r_asym(d, q)?.max(0.0),
        rate_ours_lossy: lossy.rate,
    })
}

pub fn sweep_qkd(channel: &ChannelModel, totals: &[u64], template: &QkdSweepTemplate) -> Result<Vec<QkdRow>> {
    channel.validate()?;
    if totals.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invariant("N values must be strictly ascending".into()));
    }
    totals.par_iter().map(|&total| qkd_row(channel, total, template)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_rules() {
        let o = overlaps_for_protocol(4, false).unwrap();
        assert_eq!((o.gamma_hat, o.gamma, o.dim), (2.0, 2.0, 4));
        let o = overlaps_for_protocol(4, true).unwrap();
        assert_eq!((o.gamma_hat, o.gamma, o.dim, o.b_star), (0.0, 2.0, 5, 4));
        let o = overlaps_for_protocol(2, false).unwrap();
        assert_eq!((o.gamma_hat, o.gamma), (1.0, 1.0));
    }

    #[test]
    fn leak_and_asymptotic_values() {
        assert_eq!(leak_ec(0.0, 4, 1.2).unwrap(), 0.0);
        assert!((leak_ec(0.1, 4, 1.2).unwrap() - 0.752990).abs() < 1e-6);
        assert!((leak_ec(0.1, 4, 1.0).unwrap() - 0.627492).abs() < 1e-6);
        assert!((r_asym(4, 0.1).unwrap() - 0.745016).abs() < 1e-6);
        assert_eq!(r_asym(4, 0.0).unwrap(), 2.0);
        let h = 0.11f64;
        let h2 = -h * h.log2() - (1.0 - h) * (1.0 - h).log2();
        assert!((r_asym(2, 0.11).unwrap() - (1.0 - 2.0 * h2)).abs() < 1e-12);
        assert!(r_asym(2, 0.11).unwrap() > 0.0 && r_asym(2, 0.11).unwrap() < 0.003);
    }

    #[test]
    fn three_party_simplifies_for_equal_overlaps() {
        let o = overlaps_for_protocol(4, false).unwrap();
        let (n, m) = (1_000_000, 1_000_000);
        let delta = delta_for_epsilon(Strategy::Psi2Plus0, n, m, 4, 1e-36).unwrap();
        let b = three_party_bound(0.1, 0.0, n, m, 1e-36, &o).unwrap();
        let h = |x: f64| -x * x.log2() - (1.0 - x) * (1.0 - x).log2();
        let x = 0.1 + delta;
        let oracle = 1e6 * (2.0 - (x * 3f64.log2() + h(x)));
        assert!((b - oracle).abs() < 1e-6 * 1e6);
        // c_bstar is irrelevant when the overlaps agree
        let b2 = three_party_bound(0.1, 0.4, n, m, 1e-36, &o).unwrap();
        assert!((b - b2).abs() < 1e-6);
    }

    #[test]
    fn three_party_error_free_limit() {
        let o = overlaps_for_protocol(4, false).unwrap();
        let n = 1_000_000_000_000u64;
        let b = three_party_bound(0.0, 0.0, n, n, 1e-36, &o).unwrap();
        assert!(b / n as f64 > 1.99);
    }

    #[test]
    fn lossless_rate_below_asymptote() {
        let p = QkdParams::new(10_000_000_000, 4).unwrap();
        let r = ell_hdbb84_ours(0.1, 0.0, &p).unwrap();
        assert!(r.rate > 0.0 && r.rate < 0.745016);
        let lossy = ell_hdbb84_ours(0.1, 0.2, &p.with_vacuum(0.2).unwrap()).unwrap();
        assert!(lossy.rate < r.rate);
        assert!(ell_hdbb84_ours(0.1, 0.2, &p).is_err());
    }

    #[test]
    fn binary_case_is_bb84_shape() {
        let p = QkdParams::new(1_000_000_000, 2).unwrap();
        for q in [0.0, 0.01, 0.03, 0.05] {
            let r = ell_hdbb84_ours(q, 0.0, &p).unwrap();
            let n = p.n() as f64;
            let x = q + r.delta;
            let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() - (1.0 - x) * (1.0 - x).log2() };
            let oracle = n * (1.0 - h(x)) - n * 1.2 * h(q) - 2.0 * 1e36f64.log2();
            assert!((r.ell - oracle).abs() < 1e-6 * n);
        }
    }

    #[test]
    fn prior_bound_values() {
        let p = QkdParams::new(10_000_000_000, 4).unwrap();
        let prior = ell_hdbb84_prior(0.1, &p).unwrap();
        let ours = ell_hdbb84_ours(0.1, 0.0, &p).unwrap();
        assert!(prior.rate >= ours.rate);
        assert!(prior.rate - ours.rate < 0.05);
        let zero = ell_hdbb84_prior(0.0, &p).unwrap();
        assert!(zero.rate > 0.9 * 1.86);
    }

    #[test]
    fn params_validation() {
        let mut p = QkdParams::new(1000, 4).unwrap();
        p.p_vac = 0.1;
        assert!(p.validate().is_err());
        assert!(QkdParams::new(1000, 4).unwrap().with_vacuum(1.5).is_err());
        assert!(leak_ec(0.8, 4, 1.2).is_err());
    }
}
