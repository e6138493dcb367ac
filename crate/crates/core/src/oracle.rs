//! Brute-force ground truth and the evaluation metrics computed against it.
//!
//! Everything here is independent of the decoders: the exact constrained
//! distribution is found by enumerating the prefix tree, and the metrics only
//! consume sequences and model probabilities.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::constrain::Constrainer;
use crate::error::{CoreError, Result};
use crate::model::SequenceModel;
use crate::vocab::{Prefix, TokenId};

/// The model distribution conditioned on validity, found by exhaustive
/// enumeration of valid prefixes.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    /// Complete valid sequence -> conditioned probability `P(s) / z`.
    probs: BTreeMap<Prefix, f64>,
    /// Total unconditioned model mass on valid complete sequences.
    z: f64,
}

impl ExactDistribution {
    /// Enumerates all valid complete sequences by depth-first search over the
    /// prefix tree, pruning invalid and zero-probability branches. Fails with
    /// `InstanceTooLarge` after visiting `node_budget` prefixes, so callers
    /// can bound runaway instances.
    pub fn enumerate(
        model: &dyn SequenceModel,
        constrainer: &dyn Constrainer,
        max_len: usize,
        node_budget: u64,
    ) -> Result<Self> {
        if !constrainer.check(&Prefix::empty()).is_valid() {
            return Err(CoreError::EmptyLanguage);
        }
        let eos = model.vocabulary().eos_id();
        let v = model.vocabulary().len() as TokenId;
        let mut leaves = BTreeMap::new();
        let mut visited = 0u64;
        // (prefix, unconditioned probability of the prefix)
        let mut stack: Vec<(Prefix, f64)> = vec![(Prefix::empty(), 1.0)];
        while let Some((prefix, p)) = stack.pop() {
            visited += 1;
            if visited > node_budget {
                return Err(CoreError::InstanceTooLarge { budget: node_budget });
            }
            if prefix.is_complete(eos) {
                *leaves.entry(prefix).or_insert(0.0) += p;
                continue;
            }
            if prefix.len() >= max_len {
                continue;
            }
            let dist = model.next_distribution(&prefix)?;
            for t in 0..v {
                let pt = p * dist.prob(t);
                if pt == 0.0 {
                    continue;
                }
                let child = prefix.child(t);
                if constrainer.check(&child).is_valid() {
                    stack.push((child, pt));
                }
            }
        }
        let z: f64 = leaves.values().sum();
        if z <= 0.0 {
            return Err(CoreError::EmptyLanguage);
        }
        let probs = leaves.into_iter().map(|(s, p)| (s, p / z)).collect();
        Ok(Self { probs, z })
    }

    /// Unconditioned model mass on valid sequences (the normalizer).
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, seq: &Prefix) -> f64 {
        self.probs.get(seq).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Prefix, f64)> {
        self.probs.iter().map(|(s, &p)| (s, p))
    }

    pub fn support(&self) -> impl Iterator<Item = &Prefix> {
        self.probs.keys()
    }
}

/// Relative frequencies over observed complete sequences.
#[derive(Debug, Clone, Default)]
pub struct EmpiricalDistribution {
    counts: BTreeMap<Prefix, u64>,
    total: u64,
}

impl EmpiricalDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples<'a, I: IntoIterator<Item = &'a Prefix>>(samples: I) -> Self {
        let mut d = Self::new();
        for s in samples {
            d.record(s);
        }
        d
    }

    pub fn record(&mut self, seq: &Prefix) {
        *self.counts.entry(seq.clone()).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, seq: &Prefix) -> u64 {
        self.counts.get(seq).copied().unwrap_or(0)
    }

    pub fn freq(&self, seq: &Prefix) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(seq) as f64 / self.total as f64
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Prefix, u64)> {
        self.counts.iter().map(|(s, &c)| (s, c))
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
}

/// Total variation distance between the empirical frequencies and an exact
/// distribution: half the L1 distance over the union of supports.
pub fn tv_distance(empirical: &EmpiricalDistribution, exact: &ExactDistribution) -> f64 {
    let mut l1 = 0.0;
    for (seq, p) in exact.iter() {
        l1 += (empirical.freq(seq) - p).abs();
    }
    // Empirical mass outside the exact support.
    for (seq, _) in empirical.iter() {
        if exact.prob(seq) == 0.0 {
            l1 += empirical.freq(seq);
        }
    }
    l1 / 2.0
}

/// Estimated KL divergence (natural log) from the empirical distribution to
/// the model: `sum_s f(s) ln(f(s) / P(s))`, plus `add_log_z` if given.
///
/// With `add_log_z = Some(ln z)` where `z` is the model mass on valid
/// sequences, the result estimates the divergence to the model conditioned on
/// validity, since conditioning divides every `P(s)` by `z`. Samples with zero
/// model probability are an error.
pub fn kl_divergence(
    empirical: &EmpiricalDistribution,
    model: &dyn SequenceModel,
    add_log_z: Option<f64>,
) -> Result<f64> {
    if empirical.total() == 0 {
        return Err(CoreError::InvalidArgument("no samples".into()));
    }
    let mut kl = 0.0;
    for (seq, _) in empirical.iter() {
        let f = empirical.freq(seq);
        let p = crate::model::joint_probability(model, seq)?;
        if p == 0.0 {
            return Err(CoreError::ZeroProbabilitySample(seq.clone()));
        }
        kl += f * (f / p).ln();
    }
    Ok(kl + add_log_z.unwrap_or(0.0))
}

/// KL estimates over a sliding window stepping one sample at a time: entry
/// `x` covers samples `x .. x + window`.
pub fn sliding_window_kl(
    samples: &[Prefix],
    window: usize,
    model: &dyn SequenceModel,
    add_log_z: Option<f64>,
) -> Result<Vec<f64>> {
    if window == 0 || window > samples.len() {
        return Err(CoreError::InvalidArgument(format!(
            "window {window} outside 1..={}",
            samples.len()
        )));
    }
    samples
        .windows(window)
        .map(|w| kl_divergence(&EmpiricalDistribution::from_samples(w), model, add_log_z))
        .collect()
}

/// Probability that any of `k` draws without replacement from `n` samples
/// (`c` of them correct) hits a correct one:
/// `1 - prod_{i=0}^{k-1} (n - c - i) / (n - i)`.
pub fn em_at_k(n: u64, c: u64, k: u64) -> Result<f64> {
    if c > n {
        return Err(CoreError::InvalidArgument(format!(
            "correct count {c} exceeds sample count {n}"
        )));
    }
    if k > n {
        return Err(CoreError::InvalidArgument(format!(
            "k = {k} exceeds sample count {n}"
        )));
    }
    if k > n - c {
        // Not enough incorrect samples to fill k draws.
        return Ok(1.0);
    }
    let mut miss = 1.0;
    for i in 0..k {
        miss *= (n - c - i) as f64 / (n - i) as f64;
    }
    Ok(1.0 - miss)
}

/// Pearson chi-square goodness-of-fit p-value of observed counts against the
/// exact distribution. Cells with expected count below `min_expected` are
/// pooled into one.
pub fn chi_square_p(
    empirical: &EmpiricalDistribution,
    exact: &ExactDistribution,
    min_expected: f64,
) -> Result<f64> {
    for (seq, _) in empirical.iter() {
        if exact.prob(seq) == 0.0 {
            return Err(CoreError::ZeroProbabilitySample(seq.clone()));
        }
    }
    let observed: Vec<u64> = exact.support().map(|s| empirical.count(s)).collect();
    let expected: Vec<f64> = exact.iter().map(|(_, p)| p).collect();
    chi_square_p_counts(&observed, &expected, min_expected)
}

/// Chi-square goodness-of-fit p-value from parallel observed counts and
/// expected probabilities.
pub fn chi_square_p_counts(
    observed: &[u64],
    expected_probs: &[f64],
    min_expected: f64,
) -> Result<f64> {
    if observed.len() != expected_probs.len() {
        return Err(CoreError::InvalidArgument("count/probability length mismatch".into()));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(CoreError::InvalidArgument("no samples".into()));
    }
    let mut stat = 0.0;
    let mut cells = 0usize;
    let mut pooled_exp = 0.0;
    let mut pooled_obs = 0.0;
    for (&obs, &p) in observed.iter().zip(expected_probs) {
        let expected = n as f64 * p;
        if expected < min_expected {
            pooled_exp += expected;
            pooled_obs += obs as f64;
        } else {
            stat += (obs as f64 - expected).powi(2) / expected;
            cells += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    if cells < 2 {
        return Err(CoreError::InvalidArgument(
            "fewer than two cells for the goodness-of-fit test".into(),
        ));
    }
    let dof = (cells - 1) as f64;
    let chi = ChiSquared::new(dof)
        .map_err(|e| CoreError::Internal(format!("chi-square dof {dof}: {e}")))?;
    Ok(1.0 - chi.cdf(stat))
}
