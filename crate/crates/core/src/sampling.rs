//! Classical sampling strategies and their failure probabilities.
//!
//! Every strategy picks a uniformly random subset `t` of exactly `m` out of
//! `N = n + m` positions, guesses a statistic of the unobserved `n`
//! positions from the observed ones, and fails when any coordinate of the
//! guess misses by more than `delta`:
//!
//! | strategy    | statistic                                         |
//! |-------------|---------------------------------------------------|
//! | `Psi0`      | relative Hamming weight                           |
//! | `Psi1`      | every relative character count                    |
//! | `Psi2`      | relative Hamming distance of a word pair          |
//! | `Psi2Plus0` | Hamming distance and the count of symbol `b*` in A |
//!
//! Failure only depends on how many positions of each *class* land in the
//! sample (the class of a position is what the statistic sees of it), so the
//! exact probability is a multivariate hypergeometric sum over class
//! counts. [`enumerate_failure_probability`] walks every subset instead and
//! is kept as an independent check for small words.

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::compose::{binomial_u128, for_each_bounded_composition};
use crate::entropy::ln_factorial;
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Psi0,
    Psi1,
    Psi2,
    #[serde(rename = "psi2plus0", alias = "psi2-plus0")]
    Psi2Plus0,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Psi0, Strategy::Psi1, Strategy::Psi2, Strategy::Psi2Plus0];

    pub fn is_two_party(self) -> bool {
        matches!(self, Strategy::Psi2 | Strategy::Psi2Plus0)
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Psi0 => "psi0",
            Strategy::Psi1 => "psi1",
            Strategy::Psi2 => "psi2",
            Strategy::Psi2Plus0 => "psi2plus0",
        }
    }
}

/// A sampling scenario: strategy, unobserved count `n`, sample size `m`,
/// alphabet size `d` and tolerance `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSpec {
    pub strategy: Strategy,
    pub n: u64,
    pub m: u64,
    pub d: u32,
    pub delta: f64,
    /// Distinguished symbol `b*` whose count `Psi2Plus0` tracks.
    pub count_index: u32,
}

impl SamplingSpec {
    pub fn new(strategy: Strategy, n: u64, m: u64, d: u32, delta: f64) -> Result<Self> {
        let spec = Self {
            strategy,
            n,
            m,
            d,
            delta,
            count_index: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_count_index(mut self, b_star: u32) -> Result<Self> {
        self.count_index = b_star;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Invariant("sample size m must be at least 1".into()));
        }
        if self.m > self.n {
            return Err(Error::Invariant(format!(
                "sample size m = {} exceeds unobserved count n = {}",
                self.m, self.n
            )));
        }
        if self.d < 2 {
            return Err(domain("d", self.d as f64, "d >= 2"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(domain("delta", self.delta, "delta > 0"));
        }
        if self.count_index >= self.d {
            return Err(domain("count_index", self.count_index as f64, "b* < d"));
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.n + self.m
    }
}

/// Outcome of a failure-probability evaluation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FailureEstimate {
    /// Analytic upper bound, unclamped (may exceed 1).
    pub analytic_bound: f64,
    pub empirical: Option<f64>,
    pub exact: Option<f64>,
    pub trials: Option<u64>,
    pub std_error: Option<f64>,
    pub seed: Option<u64>,
}

impl FailureEstimate {
    /// The analytic bound as a probability.
    pub fn reported_bound(&self) -> f64 {
        self.analytic_bound.min(1.0)
    }
}

fn exponent(n: u64, m: u64, delta: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    -delta * delta * m * (n + m) / (m + n + 2.0)
}

/// Analytic failure bound for `spec`, unclamped.
pub fn epsilon_cl(spec: &SamplingSpec) -> Result<f64> {
    spec.validate()?;
    let tail = exponent(spec.n, spec.m, spec.delta).exp();
    Ok(match spec.strategy {
        Strategy::Psi0 | Strategy::Psi2 => 2.0 * tail,
        Strategy::Psi1 => 2.0 * spec.d as f64 * tail,
        Strategy::Psi2Plus0 => 4.0 * tail,
    })
}

/// Smallest `delta` for which [`epsilon_cl`] is at most `epsilon^2`.
pub fn delta_for_epsilon(strategy: Strategy, n: u64, m: u64, d: u32, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain("epsilon", epsilon, "0 < epsilon < 1"));
    }
    if m == 0 || m > n {
        return Err(Error::Invariant(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    if d < 2 {
        return Err(domain("d", d as f64, "d >= 2"));
    }
    let prefactor: f64 = match strategy {
        Strategy::Psi0 | Strategy::Psi2 => 2.0,
        Strategy::Psi1 => 2.0 * d as f64,
        Strategy::Psi2Plus0 => 4.0,
    };
    // ln(prefactor / eps^2) without forming eps^2, which underflows below 1e-154.
    let log_term = prefactor.ln() - 2.0 * epsilon.ln();
    let (nf, mf) = (n as f64, m as f64);
    Ok(((mf + nf + 2.0) * log_term / (mf * (mf + nf))).sqrt())
}

/// The word (or word pair) a strategy is evaluated on. Symbols are `0..d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleWord {
    Single(Vec<u32>),
    Pair(Vec<u32>, Vec<u32>),
}

impl SampleWord {
    pub fn len(&self) -> usize {
        match self {
            SampleWord::Single(q) => q.len(),
            SampleWord::Pair(a, _) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Positions grouped by what the strategy's statistics can see of them.
#[derive(Debug, Clone)]
struct ClassModel {
    /// Class label per position.
    labels: Vec<u8>,
    /// Number of positions per class.
    sizes: Vec<u64>,
    /// Each statistic counts the positions whose class is in its list.
    stats: Vec<Vec<usize>>,
    /// Positions counted by each statistic.
    stat_totals: Vec<u64>,
}

fn check_word(word: &SampleWord, spec: &SamplingSpec) -> Result<()> {
    let total = spec.total() as usize;
    match (word, spec.strategy.is_two_party()) {
        (SampleWord::Single(q), false) => {
            if q.len() != total {
                return Err(Error::LengthMismatch(format!("word has length {}, expected n + m = {total}", q.len())));
            }
            check_symbols(q, spec.d)
        }
        (SampleWord::Pair(a, b), true) => {
            if a.len() != total || b.len() != total {
                return Err(Error::LengthMismatch(format!(
                    "word pair has lengths ({}, {}), expected n + m = {total}",
                    a.len(),
                    b.len()
                )));
            }
            check_symbols(a, spec.d)?;
            check_symbols(b, spec.d)
        }
        (SampleWord::Single(_), true) => Err(Error::LengthMismatch(format!(
            "{} needs a word pair",
            spec.strategy.name()
        ))),
        (SampleWord::Pair(..), false) => Err(Error::LengthMismatch(format!(
            "{} needs a single word",
            spec.strategy.name()
        ))),
    }
}

fn check_symbols(q: &[u32], d: u32) -> Result<()> {
    match q.iter().find(|&&s| s >= d) {
        Some(&s) => Err(domain("symbol", s as f64, "symbol < d")),
        None => Ok(()),
    }
}

fn class_model(word: &SampleWord, spec: &SamplingSpec) -> ClassModel {
    let (labels, classes, stats): (Vec<u8>, usize, Vec<Vec<usize>>) = match (spec.strategy, word) {
        (Strategy::Psi0, SampleWord::Single(q)) => (q.iter().map(|&s| (s != 0) as u8).collect(), 2, vec![vec![1]]),
        (Strategy::Psi1, SampleWord::Single(q)) => (
            q.iter().map(|&s| s as u8).collect(),
            spec.d as usize,
            (0..spec.d as usize).map(|j| vec![j]).collect(),
        ),
        (Strategy::Psi2, SampleWord::Pair(a, b)) => (
            a.iter().zip(b).map(|(x, y)| (x != y) as u8).collect(),
            2,
            vec![vec![1]],
        ),
        (Strategy::Psi2Plus0, SampleWord::Pair(a, b)) => (
            // bit 1: mismatch, bit 0: A holds b*
            a.iter()
                .zip(b)
                .map(|(x, y)| (((x != y) as u8) << 1) | ((*x == spec.count_index) as u8))
                .collect(),
            4,
            vec![vec![2, 3], vec![1, 3]],
        ),
        _ => unreachable!("word shape checked by check_word"),
    };
    let mut sizes = vec![0u64; classes];
    for &l in &labels {
        sizes[l as usize] += 1;
    }
    let stat_totals = stats.iter().map(|cls| cls.iter().map(|&c| sizes[c]).sum()).collect();
    ClassModel {
        labels,
        sizes,
        stats,
        stat_totals,
    }
}

/// `|sampled/m - rest/n| > delta`, evaluated as `|sampled*n - rest*m| > delta*m*n`
/// with a relative slack so that exact ties count as success.
#[inline]
pub(crate) fn deviates(sampled: u64, rest: u64, n: u64, m: u64, delta: f64) -> bool {
    let lhs = (sampled as i128 * n as i128 - rest as i128 * m as i128).unsigned_abs() as f64;
    lhs > delta * (m as f64) * (n as f64) * (1.0 + 1e-12)
}

fn class_counts_fail(model: &ClassModel, sampled: &[u64], spec: &SamplingSpec) -> bool {
    class_counts_fail_at(model, sampled, spec, spec.delta)
}

fn class_counts_fail_at(model: &ClassModel, sampled: &[u64], spec: &SamplingSpec, delta: f64) -> bool {
    model.stats.iter().zip(&model.stat_totals).any(|(classes, &total)| {
        let s: u64 = classes.iter().map(|&c| sampled[c]).sum();
        deviates(s, total - s, spec.n, spec.m, delta)
    })
}

/// Upper limit on class-count compositions visited by the exact evaluator.
pub const EXACT_COMPOSITION_LIMIT: u128 = 10_000_000;

/// Exact failure probability of `spec` on `word`, by summing the
/// multivariate hypergeometric law of the per-class sample counts.
pub fn exact_failure_probability(word: &SampleWord, spec: &SamplingSpec) -> Result<f64> {
    spec.validate()?;
    check_word(word, spec)?;
    let model = class_model(word, spec);
    let m = spec.m;
    let bound: u128 = model.sizes.iter().map(|&s| s.min(m) as u128 + 1).product();
    if bound > EXACT_COMPOSITION_LIMIT {
        return Err(Error::SizeGuard {
            size: bound,
            limit: EXACT_COMPOSITION_LIMIT,
        });
    }
    let lo = vec![0u64; model.sizes.len()];
    let total = spec.total();
    if let Some(denominator) = binomial_u128(total, m) {
        // Integer path: count failing subsets exactly.
        let mut failing: u128 = 0;
        let mut overflow = false;
        for_each_bounded_composition(m, &lo, &model.sizes, |k| {
            if class_counts_fail(&model, k, spec) {
                let mut ways: u128 = 1;
                for (&size, &take) in model.sizes.iter().zip(k) {
                    match binomial_u128(size, take).and_then(|b| ways.checked_mul(b)) {
                        Some(w) => ways = w,
                        None => {
                            overflow = true;
                            return;
                        }
                    }
                }
                failing += ways;
            }
        });
        if !overflow {
            return Ok(failing as f64 / denominator as f64);
        }
    }
    let ln_denominator = ln_binomial(total, m);
    let mut prob = 0.0;
    for_each_bounded_composition(m, &lo, &model.sizes, |k| {
        if class_counts_fail(&model, k, spec) {
            let ln_ways: f64 = model.sizes.iter().zip(k).map(|(&s, &t)| ln_binomial(s, t)).sum();
            prob += (ln_ways - ln_denominator).exp();
        }
    });
    Ok(prob.min(1.0))
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Largest word length [`enumerate_failure_probability`] accepts.
pub const ENUMERATION_MAX_LEN: u64 = 24;

/// Exact failure probability by visiting every size-`m` subset and
/// evaluating the strategy's guess and target directly on the word.
pub fn enumerate_failure_probability(word: &SampleWord, spec: &SamplingSpec) -> Result<f64> {
    spec.validate()?;
    check_word(word, spec)?;
    let total = spec.total();
    if total > ENUMERATION_MAX_LEN {
        return Err(Error::SizeGuard {
            size: total as u128,
            limit: ENUMERATION_MAX_LEN as u128,
        });
    }
    let m = spec.m;
    let full: u32 = if total == 32 { u32::MAX } else { (1u32 << total) - 1 };
    let mut subset: u32 = (1u32 << m) - 1;
    let mut failing: u64 = 0;
    let mut visited: u64 = 0;
    loop {
        visited += 1;
        if subset_fails(word, spec, subset) {
            failing += 1;
        }
        // Gosper's hack: next integer with the same popcount.
        let c = subset & subset.wrapping_neg();
        let r = subset + c;
        if r > full || r == 0 {
            break;
        }
        subset = (((r ^ subset) >> 2) / c) | r;
        if subset > full {
            break;
        }
    }
    debug_assert_eq!(Some(visited as u128), binomial_u128(total, m));
    Ok(failing as f64 / visited as f64)
}

fn subset_fails(word: &SampleWord, spec: &SamplingSpec, subset: u32) -> bool {
    let (n, m, delta) = (spec.n, spec.m, spec.delta);
    let inside = |i: usize| subset >> i & 1 == 1;
    let tally = |hit: &dyn Fn(usize) -> bool, len: usize| {
        let mut sampled = 0u64;
        let mut rest = 0u64;
        for i in 0..len {
            if hit(i) {
                if inside(i) {
                    sampled += 1
                } else {
                    rest += 1
                }
            }
        }
        (sampled, rest)
    };
    match (spec.strategy, word) {
        (Strategy::Psi0, SampleWord::Single(q)) => {
            let (s, r) = tally(&|i| q[i] != 0, q.len());
            deviates(s, r, n, m, delta)
        }
        (Strategy::Psi1, SampleWord::Single(q)) => (0..spec.d).any(|j| {
            let (s, r) = tally(&|i| q[i] == j, q.len());
            deviates(s, r, n, m, delta)
        }),
        (Strategy::Psi2, SampleWord::Pair(a, b)) => {
            let (s, r) = tally(&|i| a[i] != b[i], a.len());
            deviates(s, r, n, m, delta)
        }
        (Strategy::Psi2Plus0, SampleWord::Pair(a, b)) => {
            let (s, r) = tally(&|i| a[i] != b[i], a.len());
            let (s2, r2) = tally(&|i| a[i] == spec.count_index, a.len());
            deviates(s, r, n, m, delta) || deviates(s2, r2, n, m, delta)
        }
        _ => unreachable!("word shape checked by check_word"),
    }
}

/// Trials per RNG stream; stream `b` covers trials `b*TRIALS_PER_STREAM..`.
const TRIALS_PER_STREAM: u64 = 4096;

/// Monte Carlo estimate of the failure probability.
///
/// Trials are split into fixed blocks, each drawing from its own ChaCha8
/// stream of the given seed, so the estimate is identical however the
/// blocks are scheduled.
pub fn empirical_failure_probability(
    word: &SampleWord,
    spec: &SamplingSpec,
    trials: u64,
    seed: u64,
) -> Result<FailureEstimate> {
    let mut out = empirical_failure_probabilities(word, spec, &[spec.delta], trials, seed)?;
    Ok(out.remove(0))
}

/// Monte Carlo estimates at several tolerances from one shared set of
/// subset draws. Entry `i` equals the single-tolerance estimate for
/// `deltas[i]` with the same seed.
pub fn empirical_failure_probabilities(
    word: &SampleWord,
    spec: &SamplingSpec,
    deltas: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<FailureEstimate>> {
    spec.validate()?;
    check_word(word, spec)?;
    if trials == 0 {
        return Err(domain("trials", 0.0, "trials >= 1"));
    }
    let specs = deltas
        .iter()
        .map(|&delta| {
            let s = SamplingSpec { delta, ..*spec };
            s.validate().map(|_| s)
        })
        .collect::<Result<Vec<_>>>()?;
    let model = class_model(word, spec);
    let blocks = trials.div_ceil(TRIALS_PER_STREAM);
    let failures = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let start = block * TRIALS_PER_STREAM;
            let count = TRIALS_PER_STREAM.min(trials - start);
            run_block(&model, spec, deltas, seed, block, count)
        })
        .reduce(
            || vec![0u64; deltas.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    specs
        .iter()
        .zip(failures)
        .map(|(s, f)| {
            let p = f as f64 / trials as f64;
            Ok(FailureEstimate {
                analytic_bound: epsilon_cl(s)?,
                empirical: Some(p),
                exact: None,
                trials: Some(trials),
                std_error: Some((p * (1.0 - p) / trials as f64).sqrt()),
                seed: Some(seed),
            })
        })
        .collect()
}

fn run_block(model: &ClassModel, spec: &SamplingSpec, deltas: &[f64], seed: u64, block: u64, count: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let total = model.labels.len() as u32;
    let m = spec.m as u32;
    // The arrangement left by one trial is as good a start as any other.
    let mut positions: Vec<u8> = model.labels.clone();
    let mut sampled = vec![0u64; model.sizes.len()];
    let mut failures = vec![0u64; deltas.len()];
    // Uniform precomputes its rejection zone; gen_range would redo it per draw.
    let steps: Vec<Uniform<u32>> = (0..m).map(|i| Uniform::new(i, total)).collect();
    for _ in 0..count {
        sampled.iter_mut().for_each(|s| *s = 0);
        // Partial Fisher-Yates: the first m slots become a uniform m-subset.
        for (i, step) in steps.iter().enumerate() {
            let j = step.sample(&mut rng) as usize;
            positions.swap(i, j);
            sampled[positions[i] as usize] += 1;
        }
        for (f, &delta) in failures.iter_mut().zip(deltas) {
            if class_counts_fail_at(model, &sampled, spec, delta) {
                *f += 1;
            }
        }
    }
    failures
}

/// One representative word per count class of a strategy, for words of
/// length `n + m` over `d` symbols.
///
/// Failure depends on a word only through its class counts, so the maximum
/// over these representatives is the maximum over all `d^(n+m)` words.
pub fn count_class_representatives(spec: &SamplingSpec) -> Vec<SampleWord> {
    let total = spec.total();
    let d = spec.d;
    let mut out = Vec::new();
    match spec.strategy {
        Strategy::Psi0 => {
            for w in 0..=total {
                out.push(SampleWord::Single(weight_word(total, w, 1)));
            }
        }
        Strategy::Psi1 => {
            let lo = vec![0u64; d as usize];
            let hi = vec![total; d as usize];
            for_each_bounded_composition(total, &lo, &hi, |k| {
                let mut q = Vec::with_capacity(total as usize);
                for (sym, &count) in k.iter().enumerate() {
                    q.extend(std::iter::repeat_n(sym as u32, count as usize));
                }
                out.push(SampleWord::Single(q));
            });
        }
        Strategy::Psi2 => {
            for w in 0..=total {
                out.push(SampleWord::Pair(vec![0; total as usize], weight_word(total, w, 1)));
            }
        }
        Strategy::Psi2Plus0 => {
            let b = spec.count_index;
            let other = (b + 1) % d;
            // (A, B) per class; bit 1 = mismatch, bit 0 = A holds b*.
            let pairs = [(other, other), (b, b), (other, b), (b, other)];
            for_each_bounded_composition(total, &[0; 4], &[total; 4], |k| {
                let mut a = Vec::with_capacity(total as usize);
                let mut bw = Vec::with_capacity(total as usize);
                for (class, &count) in k.iter().enumerate() {
                    let (x, y) = pairs[class];
                    a.extend(std::iter::repeat_n(x, count as usize));
                    bw.extend(std::iter::repeat_n(y, count as usize));
                }
                out.push(SampleWord::Pair(a, bw));
            });
        }
    }
    out
}

fn weight_word(total: u64, weight: u64, symbol: u32) -> Vec<u32> {
    let mut q = vec![symbol; weight as usize];
    q.resize(total as usize, 0);
    q
}

/// Worst-case exact failure probability over all words: the quantity the
/// analytic bound is a bound for.
pub fn worst_case_failure_probability(spec: &SamplingSpec) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for word in count_class_representatives(spec) {
        worst = worst.max(exact_failure_probability(&word, spec)?);
    }
    Ok(worst)
}

/// Draws a uniformly random word (or pair) of length `n + m` for `spec`.
pub fn random_word<R: Rng + ?Sized>(spec: &SamplingSpec, rng: &mut R) -> SampleWord {
    let total = spec.total() as usize;
    let draw = |rng: &mut R| (0..total).map(|_| rng.gen_range(0..spec.d)).collect::<Vec<u32>>();
    if spec.strategy.is_two_party() {
        let a = draw(rng);
        let b = draw(rng);
        SampleWord::Pair(a, b)
    } else {
        SampleWord::Single(draw(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(strategy: Strategy, n: u64, m: u64, d: u32, delta: f64) -> SamplingSpec {
        SamplingSpec::new(strategy, n, m, d, delta).unwrap()
    }

    fn zero_one_word() -> SampleWord {
        let mut q = vec![0u32; 10];
        q.extend(vec![1u32; 10]);
        SampleWord::Single(q)
    }

    // Hypergeometric oracle for the 0^10 1^10 word: K ~ H(20, 10, 10) ones in
    // the sample, failure iff |k/10 - (10-k)/10| > delta.
    fn zero_one_oracle(delta: f64) -> f64 {
        let c = |n: u64, k: u64| binomial_u128(n, k).unwrap() as f64;
        (0..=10u64)
            .filter(|&k| ((k as f64 - (10 - k) as f64) / 10.0).abs() > delta + 1e-12)
            .map(|k| c(10, k) * c(10, 10 - k) / c(20, 10))
            .sum()
    }

    #[test]
    fn analytic_values() {
        let s0 = spec(Strategy::Psi0, 10, 10, 2, 0.3);
        let psi0 = epsilon_cl(&s0).unwrap();
        assert!((psi0 - 2.0 * (-0.09f64 * 10.0 * 20.0 / 22.0).exp()).abs() < 1e-15);
        assert!((psi0 - 0.882_466_335_519_967_97).abs() < 1e-14);
        let s20 = spec(Strategy::Psi2Plus0, 10, 10, 2, 0.3);
        let psi20 = epsilon_cl(&s20).unwrap();
        assert!((psi20 - 2.0 * 0.882_466_335_519_967_97).abs() < 1e-14);
        let est = FailureEstimate {
            analytic_bound: psi20,
            empirical: None,
            exact: None,
            trials: None,
            std_error: None,
            seed: None,
        };
        assert_eq!(est.reported_bound(), 1.0);
        assert_eq!(epsilon_cl(&spec(Strategy::Psi2, 10, 10, 2, 0.3)).unwrap(), psi0);
    }

    #[test]
    fn psi1_over_psi0_is_d() {
        for d in [2u32, 3, 7, 16] {
            let a = epsilon_cl(&spec(Strategy::Psi1, 50, 20, d, 0.17)).unwrap();
            let b = epsilon_cl(&spec(Strategy::Psi0, 50, 20, d, 0.17)).unwrap();
            assert!((a / b - d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(SamplingSpec::new(Strategy::Psi0, 5, 6, 2, 0.1).is_err());
        assert!(SamplingSpec::new(Strategy::Psi0, 5, 0, 2, 0.1).is_err());
        assert!(SamplingSpec::new(Strategy::Psi0, 5, 5, 1, 0.1).is_err());
        assert!(SamplingSpec::new(Strategy::Psi0, 5, 5, 2, 0.0).is_err());
        assert!(SamplingSpec::new(Strategy::Psi0, 5, 5, 2, 0.1).unwrap().with_count_index(2).is_err());
    }

    #[test]
    fn delta_inversion_values() {
        let n = 93_000_000;
        let m = 7_000_000;
        let delta = delta_for_epsilon(Strategy::Psi1, n, m, 4, 1e-36).unwrap();
        // sqrt((m+n+2) ln(8e72) / (m (m+n)))
        let oracle = ((1e8 + 2.0) * (8f64.ln() + 72.0 * 10f64.ln()) / (7e6 * 1e8)).sqrt();
        assert!((delta - oracle).abs() < 1e-15);
        assert!((delta - 4.897019e-3).abs() < 1e-9, "delta = {delta}");

        let d20 = delta_for_epsilon(Strategy::Psi2Plus0, 1_000_000, 1_000_000, 4, 1e-36).unwrap();
        let oracle = (2_000_002.0 * (4f64.ln() + 72.0 * 10f64.ln()) / (1e6 * 2e6)).sqrt();
        assert!((d20 - oracle).abs() < 1e-15);
        assert!((d20 - 0.01292952).abs() < 1e-8, "delta = {d20}");

        assert!(delta_for_epsilon(Strategy::Psi0, 10, 10, 2, 0.0).is_err());
        assert!(delta_for_epsilon(Strategy::Psi0, 10, 10, 2, 1.0).is_err());
        assert!(delta_for_epsilon(Strategy::Psi0, 10, 11, 2, 0.5).is_err());
    }

    #[test]
    fn all_zero_word_never_fails() {
        for strategy in Strategy::ALL {
            let s = spec(strategy, 10, 6, 3, 0.05);
            let word = if strategy.is_two_party() {
                SampleWord::Pair(vec![0; 16], vec![0; 16])
            } else {
                SampleWord::Single(vec![0; 16])
            };
            assert_eq!(exact_failure_probability(&word, &s).unwrap(), 0.0);
            assert_eq!(enumerate_failure_probability(&word, &s).unwrap(), 0.0);
            let est = empirical_failure_probability(&word, &s, 5000, 3).unwrap();
            assert_eq!(est.empirical, Some(0.0));
        }
    }

    #[test]
    fn identical_pair_never_fails_psi2() {
        let q: Vec<u32> = (0..18).map(|i| (i * 7 % 5) as u32).collect();
        let s = spec(Strategy::Psi2, 9, 9, 5, 0.01);
        let word = SampleWord::Pair(q.clone(), q);
        assert_eq!(exact_failure_probability(&word, &s).unwrap(), 0.0);
        assert_eq!(empirical_failure_probability(&word, &s, 10_000, 9).unwrap().empirical, Some(0.0));
    }

    #[test]
    fn zero_one_word_matches_hypergeometric_oracle() {
        let word = zero_one_word();
        for delta in [0.05, 0.1, 0.2, 0.35] {
            let s = spec(Strategy::Psi0, 10, 10, 2, delta);
            let oracle = zero_one_oracle(delta);
            let exact = exact_failure_probability(&word, &s).unwrap();
            let walked = enumerate_failure_probability(&word, &s).unwrap();
            assert!((exact - oracle).abs() < 1e-15, "delta {delta}: {exact} vs {oracle}");
            assert!((walked - oracle).abs() < 1e-15);
        }
        let s = spec(Strategy::Psi0, 10, 10, 2, 1.0);
        assert_eq!(exact_failure_probability(&word, &s).unwrap(), 0.0);
    }

    #[test]
    fn monte_carlo_within_three_sigma() {
        let word = zero_one_word();
        let s = spec(Strategy::Psi0, 10, 10, 2, 0.05);
        let exact = exact_failure_probability(&word, &s).unwrap();
        let est = empirical_failure_probability(&word, &s, 100_000, 2024).unwrap();
        let sigma = (exact * (1.0 - exact) / 1e5).sqrt();
        assert!((est.empirical.unwrap() - exact).abs() <= 3.0 * sigma);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let word = SampleWord::Pair((0..20).map(|i| i % 3).collect(), (0..20).map(|i| (i / 2) % 3).collect());
        let s = spec(Strategy::Psi2Plus0, 10, 10, 3, 0.1);
        let a = empirical_failure_probability(&word, &s, 20_000, 77).unwrap();
        let b = empirical_failure_probability(&word, &s, 20_000, 77).unwrap();
        assert_eq!(a, b);
        let c = empirical_failure_probability(&word, &s, 20_000, 78).unwrap();
        assert_ne!(a.empirical, c.empirical);
    }

    #[test]
    fn word_shape_errors() {
        let s = spec(Strategy::Psi0, 5, 5, 2, 0.1);
        assert!(matches!(
            exact_failure_probability(&SampleWord::Single(vec![0; 9]), &s),
            Err(Error::LengthMismatch(_))
        ));
        assert!(exact_failure_probability(&SampleWord::Pair(vec![0; 10], vec![0; 10]), &s).is_err());
        assert!(exact_failure_probability(&SampleWord::Single(vec![2; 10]), &s).is_err());
        let s2 = spec(Strategy::Psi2, 5, 5, 2, 0.1);
        assert!(exact_failure_probability(&SampleWord::Pair(vec![0; 10], vec![0; 9]), &s2).is_err());
        assert!(empirical_failure_probability(&SampleWord::Single(vec![0; 10]), &s, 0, 1).is_err());
    }

    #[test]
    fn enumeration_guard() {
        let s = spec(Strategy::Psi0, 13, 12, 2, 0.1);
        assert!(matches!(
            enumerate_failure_probability(&SampleWord::Single(vec![0; 25]), &s),
            Err(Error::SizeGuard { .. })
        ));
        // The class reduction has no such limit.
        let mut q = vec![0u32; 200];
        q[..70].iter_mut().for_each(|s| *s = 1);
        let big = spec(Strategy::Psi0, 120, 80, 2, 0.1);
        let p = exact_failure_probability(&SampleWord::Single(q), &big).unwrap();
        assert!(p > 0.0 && p < epsilon_cl(&big).unwrap());
    }

    #[test]
    fn class_representatives_count() {
        assert_eq!(count_class_representatives(&spec(Strategy::Psi0, 5, 5, 4, 0.1)).len(), 11);
        // C(10 + 2, 2)
        assert_eq!(count_class_representatives(&spec(Strategy::Psi1, 5, 5, 3, 0.1)).len(), 66);
        // C(10 + 3, 3)
        assert_eq!(count_class_representatives(&spec(Strategy::Psi2Plus0, 5, 5, 2, 0.1)).len(), 286);
    }
}
