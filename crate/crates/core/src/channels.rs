//! Channel models producing the statistics fed into the rate formulas.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{domain, Error, Result};
use crate::jq::CountVector;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelModel {
    /// The ideal symbol survives with probability `1 - q`, otherwise it is
    /// replaced by one of the other `d - 1` symbols uniformly.
    Depolarizing { d: u32, q: f64 },
    ExplicitCounts { counts: CountVector },
    /// Depolarizing errors on the detected signals plus independent
    /// erasure to vacuum with probability `p_vac`.
    LossyDepolarizing { d: u32, q: f64, p_vac: f64 },
}

fn check_q(d: u32, q: f64) -> Result<()> {
    if d < 2 {
        return Err(domain("d", d as f64, "d >= 2"));
    }
    let max = (d - 1) as f64 / d as f64;
    if !(0.0..=max).contains(&q) {
        return Err(domain("Q", q, "0 <= Q <= (d-1)/d"));
    }
    Ok(())
}

impl ChannelModel {
    pub fn depolarizing(d: u32, q: f64) -> Result<Self> {
        check_q(d, q)?;
        Ok(ChannelModel::Depolarizing { d, q })
    }

    pub fn lossy(d: u32, q: f64, p_vac: f64) -> Result<Self> {
        check_q(d, q)?;
        if !(0.0..=1.0).contains(&p_vac) {
            return Err(domain("p_vac", p_vac, "0 <= p_vac <= 1"));
        }
        Ok(ChannelModel::LossyDepolarizing { d, q, p_vac })
    }

    pub fn explicit(counts: CountVector) -> Self {
        ChannelModel::ExplicitCounts { counts }
    }

    /// Re-checks the invariants of a channel built by hand.
    pub fn validate(&self) -> Result<()> {
        match self {
            ChannelModel::Depolarizing { d, q } => check_q(*d, *q),
            ChannelModel::LossyDepolarizing { d, q, p_vac } => Self::lossy(*d, *q, *p_vac).map(|_| ()),
            ChannelModel::ExplicitCounts { counts } => {
                CountVector::new(counts.fractions().to_vec(), counts.sample_size()).map(|_| ())
            }
        }
    }

    pub fn d(&self) -> u32 {
        match self {
            ChannelModel::Depolarizing { d, .. } | ChannelModel::LossyDepolarizing { d, .. } => *d,
            ChannelModel::ExplicitCounts { counts } => counts.d(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ChannelModel::Depolarizing { .. } => "depolarizing",
            ChannelModel::ExplicitCounts { .. } => "explicit-counts",
            ChannelModel::LossyDepolarizing { .. } => "lossy-depolarizing",
        }
    }

    pub fn p_vac(&self) -> f64 {
        match self {
            ChannelModel::LossyDepolarizing { p_vac, .. } => *p_vac,
            _ => 0.0,
        }
    }
}

/// Expected X-basis statistics of the ideal state `|x_0>` after the channel.
pub fn expected_counts_qrng(channel: &ChannelModel) -> Result<CountVector> {
    match channel {
        ChannelModel::Depolarizing { d, q } | ChannelModel::LossyDepolarizing { d, q, .. } => {
            check_q(*d, *q)?;
            let mut c = vec![q / (*d - 1) as f64; *d as usize];
            c[0] = 1.0 - q;
            CountVector::new(c, None)
        }
        ChannelModel::ExplicitCounts { counts } => Ok(counts.clone()),
    }
}

/// Expected relative Hamming distance between the two parties' raw words.
pub fn expected_hamming_distance_qkd(channel: &ChannelModel) -> Result<f64> {
    match channel {
        ChannelModel::Depolarizing { q, .. } | ChannelModel::LossyDepolarizing { q, .. } => Ok(*q),
        ChannelModel::ExplicitCounts { .. } => Err(Error::ChannelKind("explicit-counts")),
    }
}

/// Multinomial draw of `m` symbols from the expected statistics, as
/// sequential conditional binomials.
pub fn sample_counts(channel: &ChannelModel, m: u64, seed: u64) -> Result<CountVector> {
    if m == 0 {
        return Err(domain("m", 0.0, "m >= 1"));
    }
    let p = expected_counts_qrng(channel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::with_capacity(p.d() as usize);
    let mut remaining = m;
    let mut mass_left = 1.0;
    let (head, _) = p.fractions().split_at(p.fractions().len() - 1);
    for &pi in head {
        let cond = if mass_left > 0.0 { (pi / mass_left).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(remaining, cond)
            .map_err(|e| Error::Invariant(format!("binomial draw: {e}")))?
            .sample(&mut rng);
        counts.push(k);
        remaining -= k;
        mass_left -= pi;
    }
    counts.push(remaining);
    CountVector::from_counts(&counts)
}

/// Mean `|a - b|` for a uniformly random ordered pair of distinct symbols
/// in `0..d`, which is `(d + 1) / 3`.
pub fn mean_mismatch_magnitude(d: u32) -> f64 {
    (d as f64 + 1.0) / 3.0
}

/// Average measured difference under uniform mismatches: `Q (d + 1) / 3`.
pub fn d0_from_depolarizing(q: f64, d: u32) -> Result<f64> {
    check_q(d, q)?;
    Ok(q * mean_mismatch_magnitude(d))
}

/// How the average difference `d0` fed to the entangled-source rate is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum D0Model {
    /// `Q (d + 1) / 3` with `Q = 1 - c_0`: every mismatch equally likely.
    #[default]
    UniformMismatch,
    /// `sum_i i c_i`: outcome `i` read as an offset `i` from the ideal symbol 0.
    SymbolOffset,
    Fixed { value: f64 },
}

impl D0Model {
    pub fn name(&self) -> &'static str {
        match self {
            D0Model::UniformMismatch => "uniform-mismatch",
            D0Model::SymbolOffset => "symbol-offset",
            D0Model::Fixed { .. } => "fixed",
        }
    }

    pub fn d0(&self, counts: &CountVector) -> Result<f64> {
        match *self {
            D0Model::UniformMismatch => {
                let d = counts.d();
                let q = (1.0 - counts.fractions()[0]).clamp(0.0, (d - 1) as f64 / d as f64);
                d0_from_depolarizing(q, d)
            }
            D0Model::SymbolOffset => Ok(counts.fractions().iter().enumerate().map(|(i, &c)| i as f64 * c).sum()),
            D0Model::Fixed { value } => {
                if value >= 0.0 && value.is_finite() {
                    Ok(value)
                } else {
                    Err(domain("d0", value, "d0 >= 0"))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depolarizing_counts() {
        let c = expected_counts_qrng(&ChannelModel::depolarizing(4, 0.0).unwrap()).unwrap();
        assert_eq!(c.fractions(), &[1.0, 0.0, 0.0, 0.0]);
        let c = expected_counts_qrng(&ChannelModel::depolarizing(4, 0.75).unwrap()).unwrap();
        assert!(c.fractions().iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let c = expected_counts_qrng(&ChannelModel::depolarizing(4, 0.1).unwrap()).unwrap();
        assert!((c.fractions()[0] - 0.9).abs() < 1e-15);
        assert!((c.fractions()[3] - 0.1 / 3.0).abs() < 1e-15);
        assert!(ChannelModel::depolarizing(4, 0.8).is_err());
        assert!(ChannelModel::lossy(4, 0.1, 1.5).is_err());
    }

    #[test]
    fn hamming_distance() {
        assert_eq!(expected_hamming_distance_qkd(&ChannelModel::depolarizing(4, 0.1).unwrap()).unwrap(), 0.1);
        assert_eq!(expected_hamming_distance_qkd(&ChannelModel::lossy(4, 0.1, 0.2).unwrap()).unwrap(), 0.1);
        let explicit = ChannelModel::explicit(CountVector::new(vec![0.5, 0.5], None).unwrap());
        assert!(matches!(expected_hamming_distance_qkd(&explicit), Err(Error::ChannelKind(_))));
    }

    #[test]
    fn mismatch_magnitude_by_enumeration() {
        for d in 2u32..=9 {
            let mut total = 0u64;
            for a in 0..d {
                for b in 0..d {
                    total += a.abs_diff(b) as u64;
                }
            }
            let mean = total as f64 / (d * (d - 1)) as f64;
            assert!((mean - mean_mismatch_magnitude(d)).abs() < 1e-12);
        }
        assert!((d0_from_depolarizing(0.1, 4).unwrap() - 0.1 * 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(d0_from_depolarizing(0.3, 2).unwrap(), 0.3);
        assert_eq!(d0_from_depolarizing(0.0, 7).unwrap(), 0.0);
    }

    #[test]
    fn d0_models() {
        let c = CountVector::new(vec![0.8, 0.19, 0.005, 0.005], None).unwrap();
        assert!((D0Model::SymbolOffset.d0(&c).unwrap() - 0.215).abs() < 1e-12);
        assert!((D0Model::UniformMismatch.d0(&c).unwrap() - 0.2 * 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(D0Model::Fixed { value: 0.3 }.d0(&c).unwrap(), 0.3);
        assert!(D0Model::Fixed { value: -1.0 }.d0(&c).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_exact_at_zero_noise() {
        let ch = ChannelModel::depolarizing(4, 0.0).unwrap();
        let c = sample_counts(&ch, 1000, 1).unwrap();
        assert_eq!(c.absolute_counts(), Some(vec![1000, 0, 0, 0]));
        let ch = ChannelModel::depolarizing(5, 0.3).unwrap();
        assert_eq!(sample_counts(&ch, 5000, 9).unwrap(), sample_counts(&ch, 5000, 9).unwrap());
        assert_eq!(sample_counts(&ch, 5000, 9).unwrap().sample_size(), Some(5000));
    }

    #[test]
    fn sampled_counts_concentrate() {
        let ch = ChannelModel::depolarizing(4, 0.2).unwrap();
        let p = expected_counts_qrng(&ch).unwrap();
        let m = 1_000_000u64;
        let mut good = 0;
        for seed in 0..100 {
            let c = sample_counts(&ch, m, seed).unwrap();
            let ok = c.fractions().iter().zip(p.fractions()).all(|(&x, &e)| {
                (x - e).abs() <= 5.0 * (e * (1.0 - e) / m as f64).sqrt()
            });
            good += ok as u32;
        }
        assert!(good >= 99);
    }
}
