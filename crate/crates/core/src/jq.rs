//! Bounds on `log2 |J_q|`, the number of length-`n` words whose character
//! counts lie within `delta` of an observed count vector.

use std::f64::consts::{LOG2_E, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::compose::for_each_bounded_composition;
use crate::entropy::{
    extended_d_ary_entropy, log2_sum_exp2, log_multinomial_unchecked, neg_x_log2_x, shannon_entropy,
    ProbabilityDistribution,
};
use crate::error::{domain, Error, Result};
use crate::sampling::{delta_for_epsilon, Strategy};

const SUM_TOLERANCE: f64 = 1e-12;
const INTEGRALITY_TOLERANCE: f64 = 1e-9;

/// Relative character counts of a d-ary word, optionally tied to the
/// sample size they were measured on.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CountVector {
    d: u32,
    fractions: Vec<f64>,
    sample_size: Option<u64>,
}

impl CountVector {
    pub fn new(fractions: Vec<f64>, sample_size: Option<u64>) -> Result<Self> {
        let d = fractions.len();
        if d < 2 {
            return Err(domain("d", d as f64, "d >= 2"));
        }
        if let Some(&bad) = fractions.iter().find(|c| !(**c >= 0.0 && **c <= 1.0)) {
            return Err(Error::InvalidDistribution(format!("fraction {bad} outside [0, 1]")));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("fractions sum to {sum}")));
        }
        if let Some(m) = sample_size {
            if m == 0 {
                return Err(domain("sample_size", 0.0, "sample_size >= 1"));
            }
            for &c in &fractions {
                let scaled = c * m as f64;
                if (scaled - scaled.round()).abs() > INTEGRALITY_TOLERANCE.max(64.0 * f64::EPSILON * scaled) {
                    return Err(Error::InvalidDistribution(format!(
                        "fraction {c} is not a multiple of 1/{m}"
                    )));
                }
            }
        }
        Ok(Self {
            d: d as u32,
            fractions,
            sample_size,
        })
    }

    /// Count vector of an observed word with the given absolute counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let m: u64 = counts.iter().sum();
        if m == 0 {
            return Err(domain("sample_size", 0.0, "sample_size >= 1"));
        }
        Self::new(counts.iter().map(|&k| k as f64 / m as f64).collect(), Some(m))
    }

    /// Counts of a word over `0..d`.
    pub fn of_word(word: &[u32], d: u32) -> Result<Self> {
        let mut counts = vec![0u64; d as usize];
        for &s in word {
            if s >= d {
                return Err(domain("symbol", s as f64, "symbol < d"));
            }
            counts[s as usize] += 1;
        }
        Self::from_counts(&counts)
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn sample_size(&self) -> Option<u64> {
        self.sample_size
    }

    /// Index of the largest fraction; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.fractions.iter().enumerate() {
            if c > self.fractions[best] {
                best = i;
            }
        }
        best
    }

    /// Integer counts summing to `m`, by largest-remainder rounding of `m * c_i`.
    /// Remainder ties go to the lowest index.
    pub fn round_to_counts(&self, m: u64) -> Vec<u64> {
        let scaled: Vec<f64> = self.fractions.iter().map(|&c| c * m as f64).collect();
        let mut counts: Vec<u64> = scaled.iter().map(|s| s.floor() as u64).collect();
        let assigned: u64 = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - scaled[a].floor();
            let rb = scaled[b] - scaled[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().take(m.saturating_sub(assigned) as usize) {
            counts[i] += 1;
        }
        counts
    }

    /// Absolute counts, if the vector came from a word.
    pub fn absolute_counts(&self) -> Option<Vec<u64>> {
        self.sample_size.map(|m| self.round_to_counts(m))
    }
}

/// `nu_i = max(c_i - delta, 0)`.
pub fn nu_vector(c: &CountVector, delta: f64) -> Vec<f64> {
    c.fractions.iter().map(|&ci| (ci - delta).max(0.0)).collect()
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(domain("delta", delta, "delta > 0"));
    }
    Ok(())
}

/// The multinomial-sum bound on `log2 |J_q|`. Needs `0 < delta < 1/d`.
pub fn log_jq_f(c: &CountVector, n: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let d = c.d as f64;
    if delta * d >= 1.0 {
        return Err(domain("delta", delta, "delta < 1/d"));
    }
    let nf = n as f64;
    let nu = nu_vector(c, delta);
    let nu_sum: f64 = nu.iter().sum();
    let nu_entropy: f64 = nu.iter().map(|&v| neg_x_log2_x(v)).sum();
    let log_n = if n > 0 { nf.log2() } else { 0.0 };
    Ok(nf * nu_entropy + nf * log_n * (1.0 - nu_sum) + (d + 1.0) * LOG2_E - d / 2.0 * ((1.0 - d * delta) / d).log2())
}

/// Hamming-ball bound on `log2 |J_q|` around the most frequent character.
pub fn log_jq_g(c: &CountVector, n: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let a = c.argmax();
    let nu_a = (c.fractions[a] - delta).max(0.0);
    Ok(n as f64 * extended_d_ary_entropy(1.0 - nu_a, c.d) * (c.d as f64).log2())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct JqBoundReport {
    /// Absent when `delta >= 1/d`.
    pub log_f: Option<f64>,
    pub log_g: f64,
    pub log_min: f64,
    pub log_exact: Option<f64>,
    pub n: u64,
    pub delta: f64,
    pub nu: Vec<f64>,
}

pub fn log_jq_bound(c: &CountVector, n: u64, delta: f64) -> Result<JqBoundReport> {
    check_delta(delta)?;
    let log_g = log_jq_g(c, n, delta)?;
    let log_f = if delta * (c.d as f64) < 1.0 {
        Some(log_jq_f(c, n, delta)?)
    } else {
        None
    };
    Ok(JqBoundReport {
        log_f,
        log_g,
        log_min: log_f.map_or(log_g, |f| f.min(log_g)),
        log_exact: None,
        n,
        delta,
        nu: nu_vector(c, delta),
    })
}

/// [`log_jq_bound`] plus the exact value.
pub fn log_jq_bound_with_exact(c: &CountVector, n: u64, delta: f64) -> Result<JqBoundReport> {
    let mut report = log_jq_bound(c, n, delta)?;
    report.log_exact = Some(log_jq_exact(c, n, delta)?);
    Ok(report)
}

/// Upper limit on the candidate compositions visited by the exact sum.
pub const EXACT_JQ_LIMIT: u128 = 10_000_000;

fn composition_ranges(c: &CountVector, n: u64, delta: f64) -> Result<(Vec<u64>, Vec<u64>)> {
    check_delta(delta)?;
    let nf = n as f64;
    let slack = nf * delta;
    let mut lo = Vec::with_capacity(c.d as usize);
    let mut hi = Vec::with_capacity(c.d as usize);
    let mut size: u128 = 1;
    for &ci in &c.fractions {
        let centre = nf * ci;
        let l = (centre - slack - INTEGRALITY_TOLERANCE).ceil().max(0.0);
        let h = (centre + slack + INTEGRALITY_TOLERANCE).floor().min(nf);
        let (l, h) = (l as u64, h as u64);
        if l > h {
            return Ok((vec![1; c.d as usize], vec![0; c.d as usize]));
        }
        lo.push(l);
        hi.push(h);
        size = size.saturating_mul((h - l + 1) as u128);
    }
    if size > EXACT_JQ_LIMIT {
        return Err(Error::SizeGuard {
            size,
            limit: EXACT_JQ_LIMIT,
        });
    }
    Ok((lo, hi))
}

/// Exact `log2 |J_q|`: log-sum-exp over the multinomials of every count
/// vector `k` with `|k_i - n c_i| <= n delta` and `sum k = n`.
///
/// Returns `-inf` when no count vector qualifies.
pub fn log_jq_exact(c: &CountVector, n: u64, delta: f64) -> Result<f64> {
    let (lo, hi) = composition_ranges(c, n, delta)?;
    let mut terms = Vec::new();
    for_each_bounded_composition(n, &lo, &hi, |k| terms.push(log_multinomial_unchecked(n, k)));
    Ok(log2_sum_exp2(&terms))
}

/// `|J_q|` as an exact integer, `None` if it overflows.
pub fn jq_exact_count(c: &CountVector, n: u64, delta: f64) -> Result<Option<u128>> {
    let (lo, hi) = composition_ranges(c, n, delta)?;
    let mut total: Option<u128> = Some(0);
    for_each_bounded_composition(n, &lo, &hi, |k| {
        total = total.and_then(|t| multinomial_u128(n, k).and_then(|v| t.checked_add(v)));
    });
    Ok(total)
}

fn multinomial_u128(n: u64, k: &[u64]) -> Option<u128> {
    let mut acc: u128 = 1;
    let mut remaining = n;
    for &part in k {
        acc = acc.checked_mul(crate::compose::binomial_u128(remaining, part)?)?;
        remaining -= part;
    }
    Some(acc)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub delta: f64,
    pub f_per_n: Option<f64>,
    pub g_per_n: f64,
    pub shannon: f64,
    /// `F / G`, absent with `F`.
    pub ratio: Option<f64>,
}

/// Tracks `F/n` and `G/n` against `H(p)` using the expected counts `c = p`
/// and the `Psi1` tolerance with `m = n` at failure parameter `epsilon`.
pub fn convergence_report(p: &ProbabilityDistribution, n_schedule: &[u64], epsilon: f64) -> Result<Vec<ConvergenceRow>> {
    if n_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invariant("n schedule must be strictly ascending".into()));
    }
    let c = CountVector::new(p.probabilities().to_vec(), None)?;
    let d = c.d();
    let shannon = shannon_entropy(p);
    n_schedule
        .iter()
        .map(|&n| {
            let delta = delta_for_epsilon(Strategy::Psi1, n, n, d, epsilon)?;
            let report = log_jq_bound(&c, n, delta)?;
            let nf = n as f64;
            Ok(ConvergenceRow {
                n,
                delta,
                f_per_n: report.log_f.map(|f| f / nf),
                g_per_n: report.log_g / nf,
                shannon,
                ratio: report.log_f.map(|f| f / report.log_g),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct UncertaintyDemo {
    pub h_z: f64,
    pub h_x: f64,
    pub gamma: f64,
}

impl UncertaintyDemo {
    pub fn sum(&self) -> f64 {
        self.h_z + self.h_x
    }
}

/// Entropies of a pure state measured in the computational basis and in
/// the Fourier basis `<x_j|psi> = d^{-1/2} sum_k e^{-2 pi i j k / d} psi_k`.
pub fn maassen_uffink_demo(amplitudes: &[Complex64]) -> Result<UncertaintyDemo> {
    let d = amplitudes.len();
    if d < 2 {
        return Err(domain("d", d as f64, "d >= 2"));
    }
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(domain("norm", norm, "|psi|^2 = 1 within 1e-9"));
    }
    let h_z: f64 = amplitudes.iter().map(|a| neg_x_log2_x(a.norm_sqr() / norm)).sum();
    let scale = 1.0 / (d as f64).sqrt();
    let mut h_x = 0.0;
    for j in 0..d {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in amplitudes.iter().enumerate() {
            // reduce jk mod d first to keep the phase argument small
            let phase = -2.0 * PI * ((j * k) % d) as f64 / d as f64;
            acc += Complex64::from_polar(1.0, phase) * a;
        }
        h_x += neg_x_log2_x((acc * scale).norm_sqr() / norm);
    }
    Ok(UncertaintyDemo {
        h_z,
        h_x,
        gamma: (d as f64).log2(),
    })
}

/// A normalized complex Gaussian vector of dimension `d`.
pub fn random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Computational basis state `|index>` of dimension `d`.
pub fn basis_state(d: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    v[index] = Complex64::new(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cv(f: &[f64]) -> CountVector {
        CountVector::new(f.to_vec(), None).unwrap()
    }

    #[test]
    fn count_vector_validation() {
        assert!(CountVector::new(vec![0.5, 0.4], None).is_err());
        assert!(CountVector::new(vec![1.0], None).is_err());
        assert!(CountVector::new(vec![1.2, -0.2], None).is_err());
        assert!(CountVector::new(vec![0.5, 0.5], Some(3)).is_err());
        assert!(CountVector::new(vec![0.5, 0.5], Some(4)).is_ok());
        let c = CountVector::of_word(&[0, 2, 2, 1, 2], 3).unwrap();
        assert_eq!(c.sample_size(), Some(5));
        assert_eq!(c.absolute_counts(), Some(vec![1, 1, 3]));
        assert_eq!(c.argmax(), 2);
        let big = [31_491_115u64, 2_624_259, 2_624_260, 2_624_259];
        let c = CountVector::from_counts(&big).unwrap();
        assert_eq!(c.absolute_counts(), Some(big.to_vec()));
    }

    #[test]
    fn argmax_ties_take_lowest_index() {
        assert_eq!(cv(&[0.25, 0.25, 0.25, 0.25]).argmax(), 0);
        assert_eq!(cv(&[0.1, 0.45, 0.45]).argmax(), 1);
    }

    #[test]
    fn largest_remainder_rounding() {
        let c = cv(&[0.8, 1.0 / 15.0, 1.0 / 15.0, 1.0 / 15.0]);
        let k = c.round_to_counts(100);
        assert_eq!(k.iter().sum::<u64>(), 100);
        assert_eq!(k, vec![80, 7, 7, 6]);
        assert_eq!(cv(&[1.0 / 3.0; 3]).round_to_counts(10), vec![4, 3, 3]);
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu_vector(&cv(&[1.0, 0.0, 0.0]), 0.1), vec![0.9, 0.0, 0.0]);
        assert!(nu_vector(&cv(&[0.3, 0.3, 0.4]), 0.5).iter().all(|&v| v == 0.0));
        let nu = nu_vector(&cv(&[0.8, 1.0 / 15.0, 1.0 / 15.0, 1.0 / 15.0]), 0.05);
        assert!((nu[0] - 0.75).abs() < 1e-15);
        for v in &nu[1..] {
            assert!((v - 0.016_666_666_666_666_67).abs() < 1e-12);
        }
    }

    #[test]
    fn f_term_by_term() {
        let f = log_jq_f(&cv(&[1.0, 0.0]), 100, 0.1).unwrap();
        let oracle = -100.0 * 0.9 * 0.9f64.log2() + 100.0 * 100f64.log2() * 0.1 + 3.0 * LOG2_E - 0.4f64.log2();
        assert!((f - oracle).abs() < 1e-9);
        assert!((f - 85.768_853_525_355_998).abs() < 1e-9);
        assert!(log_jq_f(&cv(&[0.5, 0.5]), 10, 0.5).is_err());
        assert!(log_jq_f(&cv(&[0.5, 0.5]), 10, 0.0).is_err());
    }

    #[test]
    fn g_examples() {
        let g = log_jq_g(&cv(&[1.0, 0.0, 0.0, 0.0]), 1000, 1.5).unwrap();
        assert!((g - 2000.0).abs() < 1e-9);
        let g = log_jq_g(&cv(&[0.8, 1.0 / 15.0, 1.0 / 15.0, 1.0 / 15.0]), 1_000_000, 1e-15).unwrap();
        assert!((g / 1e6 - 2.0 * 0.519_460_297_515_796_8).abs() < 1e-9);
        // argmax, not character 0
        let shifted = log_jq_g(&cv(&[1.0 / 15.0, 0.8, 1.0 / 15.0, 1.0 / 15.0]), 1_000_000, 1e-15).unwrap();
        assert!((shifted - g).abs() < 1e-6);
    }

    #[test]
    fn bound_falls_back_to_g() {
        let r = log_jq_bound(&cv(&[0.6, 0.4]), 50, 0.5).unwrap();
        assert!(r.log_f.is_none());
        assert_eq!(r.log_min, r.log_g);
        let r = log_jq_bound(&cv(&[0.8, 1.0 / 15.0, 1.0 / 15.0, 1.0 / 15.0]), 10_000, 0.01).unwrap();
        assert_eq!(r.log_min, r.log_f.unwrap().min(r.log_g));
    }

    #[test]
    fn exact_small_cases() {
        let c = cv(&[0.5, 0.5]);
        assert!((log_jq_exact(&c, 4, 0.25).unwrap() - 14f64.log2()).abs() < 1e-12);
        assert_eq!(jq_exact_count(&c, 4, 0.25).unwrap(), Some(14));
        // only k = n c survives: 10!/(5!3!2!) = 2520
        let c = cv(&[0.5, 0.3, 0.2]);
        assert!((log_jq_exact(&c, 10, 0.01).unwrap() - 2520f64.log2()).abs() < 1e-9);
        assert_eq!(jq_exact_count(&c, 10, 0.01).unwrap(), Some(2520));
    }

    #[test]
    fn exact_guard() {
        let c = cv(&[0.25; 4]);
        assert!(matches!(log_jq_exact(&c, 100_000, 0.2), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn exact_against_word_enumeration() {
        // all 3^10 words
        let q = CountVector::of_word(&[0, 0, 0, 0, 1, 1, 1, 2, 2, 2], 3).unwrap();
        let delta = 0.15;
        let mut count = 0u128;
        for code in 0..3u32.pow(10) {
            let mut k = [0u32; 3];
            let mut x = code;
            for _ in 0..10 {
                k[(x % 3) as usize] += 1;
                x /= 3;
            }
            if k.iter().zip(q.fractions()).all(|(&ki, &ci)| (ki as f64 / 10.0 - ci).abs() <= delta + 1e-12) {
                count += 1;
            }
        }
        assert_eq!(jq_exact_count(&q, 10, delta).unwrap(), Some(count));
        assert!((log_jq_exact(&q, 10, delta).unwrap() - (count as f64).log2()).abs() < 1e-9);
    }

    #[test]
    fn convergence_rows() {
        let p = ProbabilityDistribution::new(vec![0.8, 1.0 / 15.0, 1.0 / 15.0, 1.0 / 15.0]).unwrap();
        let rows = convergence_report(&p, &[10_000, 1_000_000], 1e-36).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].shannon - 1.038_920_595_031_593_6).abs() < 1e-14);
        assert!(rows[1].delta < rows[0].delta);
        assert!(convergence_report(&p, &[100, 10], 1e-36).is_err());
    }

    #[test]
    fn uncertainty_demo_extremes() {
        let r = maassen_uffink_demo(&basis_state(4, 0)).unwrap();
        assert!(r.h_z.abs() < 1e-12 && (r.h_x - 2.0).abs() < 1e-12);
        let uniform = vec![Complex64::new(0.5, 0.0); 4];
        let r = maassen_uffink_demo(&uniform).unwrap();
        assert!((r.h_z - 2.0).abs() < 1e-12 && r.h_x.abs() < 1e-12);
        assert!(maassen_uffink_demo(&[Complex64::new(1.0, 0.0), Complex64::new(0.1, 0.0)]).is_err());
    }

    #[test]
    fn random_states_respect_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 2..=8 {
            for _ in 0..200 {
                let r = maassen_uffink_demo(&random_state(d, &mut rng)).unwrap();
                assert!(r.sum() >= r.gamma - 1e-9);
            }
        }
    }
}
