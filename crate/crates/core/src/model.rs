//! Sequence model contracts and the table-backed backends used by the
//! benchmarks.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::vocab::{Prefix, TokenId, Vocabulary};

/// A normalized probability vector over the vocabulary for one decoding step.
#[derive(Debug, Clone, PartialEq)]
pub struct NextTokenDistribution {
    probs: Vec<f64>,
}

impl NextTokenDistribution {
    pub const NORM_TOL: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(CoreError::BadRow { sum: f64::NAN });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > Self::NORM_TOL {
            return Err(CoreError::BadRow { sum });
        }
        Ok(Self { probs })
    }

    /// Normalizes an arbitrary non-negative weight vector.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(CoreError::BadRow { sum });
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, token: TokenId) -> f64 {
        self.probs[token as usize]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Applies temperature as logit scaling (p^(1/T), renormalized).
    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        if temperature <= 0.0 {
            return Err(CoreError::InvalidArgument(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        if (temperature - 1.0).abs() < 1e-12 {
            return Ok(self.clone());
        }
        let inv = 1.0 / temperature;
        Self::from_weights(self.probs.iter().map(|&p| p.powf(inv)).collect())
    }
}

/// An autoregressive next-token model. Implementations are deterministic
/// (same prefix, same distribution) and immutable after construction, so they
/// can be shared across concurrent decoding sessions.
pub trait SequenceModel: Sync {
    fn vocabulary(&self) -> &Vocabulary;

    /// The distribution over the next token given an incomplete prefix.
    /// Querying after a complete prefix is an error.
    fn next_distribution(&self, prefix: &Prefix) -> Result<NextTokenDistribution>;
}

/// Product of per-step conditionals, accumulated in log space.
///
/// Returns `P(seq) = prod_i P(s_i | s_<i})`; the empty sequence has
/// probability 1.
pub fn joint_probability(model: &dyn SequenceModel, seq: &Prefix) -> Result<f64> {
    seq.validate(model.vocabulary())?;
    let mut log_p = 0.0f64;
    let mut prefix = Prefix::empty();
    for &t in seq.tokens() {
        let dist = model.next_distribution(&prefix)?;
        let p = dist.prob(t);
        if p == 0.0 {
            return Ok(0.0);
        }
        log_p += p.ln();
        prefix.push(t);
    }
    Ok(log_p.exp())
}

/// Uniform distribution over the whole vocabulary at every step.
#[derive(Debug, Clone)]
pub struct UniformModel {
    vocab: Vocabulary,
}

impl UniformModel {
    pub fn new(vocab: Vocabulary) -> Self {
        Self { vocab }
    }
}

impl SequenceModel for UniformModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, prefix: &Prefix) -> Result<NextTokenDistribution> {
        prefix.validate(&self.vocab)?;
        if prefix.is_complete(self.vocab.eos_id()) {
            return Err(CoreError::QueryAfterComplete);
        }
        let v = self.vocab.len();
        NextTokenDistribution::new(vec![1.0 / v as f64; v])
    }
}

/// A model defined by explicit conditional rows: prefix -> probability vector.
#[derive(Debug, Clone)]
pub struct TableModel {
    vocab: Vocabulary,
    rows: HashMap<Prefix, Vec<f64>>,
    temperature: f64,
}

#[derive(Serialize, Deserialize)]
struct TableModelFile {
    vocabulary: Vec<TokenEntry>,
    rows: Vec<RowEntry>,
}

#[derive(Serialize, Deserialize)]
struct TokenEntry {
    id: TokenId,
    text: String,
    eos: bool,
}

#[derive(Serialize, Deserialize)]
struct RowEntry {
    prefix: Vec<TokenId>,
    probs: Vec<f64>,
}

impl TableModel {
    /// Loader tolerance for row normalization.
    pub const FILE_NORM_TOL: f64 = 1e-6;

    pub fn new(vocab: Vocabulary, rows: HashMap<Prefix, Vec<f64>>) -> Result<Self> {
        for (prefix, probs) in &rows {
            prefix.validate(&vocab)?;
            if probs.len() != vocab.len() {
                return Err(CoreError::InvalidArgument(format!(
                    "row for {prefix:?} has {} entries, vocabulary has {}",
                    probs.len(),
                    vocab.len()
                )));
            }
            NextTokenDistribution::new(probs.clone())?;
        }
        Ok(Self {
            vocab,
            rows,
            temperature: 1.0,
        })
    }

    /// Builds the exact autoregressive factorization of a finite distribution
    /// over complete sequences. Each sequence must end with EOS; weights are
    /// normalized over the set.
    pub fn from_sequence_weights(vocab: Vocabulary, leaves: &[(Prefix, f64)]) -> Result<Self> {
        if leaves.is_empty() {
            return Err(CoreError::InvalidArgument("no sequences given".into()));
        }
        let total: f64 = leaves.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(CoreError::InvalidArgument("non-positive total weight".into()));
        }
        let mut acc: HashMap<Prefix, Vec<f64>> = HashMap::new();
        for (seq, w) in leaves {
            seq.validate(&vocab)?;
            if !seq.is_complete(vocab.eos_id()) {
                return Err(CoreError::InvalidArgument(format!(
                    "sequence {seq:?} does not end with EOS"
                )));
            }
            if *w < 0.0 {
                return Err(CoreError::InvalidArgument("negative weight".into()));
            }
            let mut prefix = Prefix::empty();
            for &t in seq.tokens() {
                let row = acc
                    .entry(prefix.clone())
                    .or_insert_with(|| vec![0.0; vocab.len()]);
                row[t as usize] += w / total;
                prefix.push(t);
            }
        }
        let mut rows = HashMap::with_capacity(acc.len());
        for (prefix, weights) in acc {
            let sum: f64 = weights.iter().sum();
            rows.insert(prefix, weights.into_iter().map(|x| x / sum).collect());
        }
        Ok(Self {
            vocab,
            rows,
            temperature: 1.0,
        })
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        if temperature <= 0.0 {
            return Err(CoreError::InvalidArgument(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        self.temperature = temperature;
        Ok(self)
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        let mut rows: Vec<_> = self
            .rows
            .iter()
            .map(|(p, probs)| RowEntry {
                prefix: p.tokens().to_vec(),
                probs: probs.clone(),
            })
            .collect();
        rows.sort_by(|a, b| a.prefix.cmp(&b.prefix));
        let file = TableModelFile {
            vocabulary: (0..self.vocab.len() as TokenId)
                .map(|id| TokenEntry {
                    id,
                    text: self.vocab.text(id).to_string(),
                    eos: id == self.vocab.eos_id(),
                })
                .collect(),
            rows,
        };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let file: TableModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let mut texts = vec![String::new(); file.vocabulary.len()];
        let mut eos = None;
        for entry in &file.vocabulary {
            if (entry.id as usize) >= texts.len() || !texts[entry.id as usize].is_empty() {
                return Err(CoreError::InvalidArgument(format!(
                    "vocabulary ids are not dense and unique (id {})",
                    entry.id
                )));
            }
            texts[entry.id as usize] = entry.text.clone();
            if entry.eos {
                if eos.is_some() {
                    return Err(CoreError::InvalidArgument("multiple EOS tokens".into()));
                }
                eos = Some(entry.id);
            }
        }
        let eos = eos.ok_or_else(|| CoreError::InvalidArgument("no EOS token".into()))?;
        let vocab = Vocabulary::new(texts, eos)?;
        let mut rows = HashMap::with_capacity(file.rows.len());
        for row in file.rows {
            let sum: f64 = row.probs.iter().sum();
            if (sum - 1.0).abs() > Self::FILE_NORM_TOL {
                return Err(CoreError::BadRow { sum });
            }
            // Renormalize exactly so downstream checks at 1e-9 hold.
            let probs: Vec<f64> = row.probs.into_iter().map(|p| p / sum).collect();
            rows.insert(Prefix::new(row.prefix), probs);
        }
        Self::new(vocab, rows)
    }
}

impl SequenceModel for TableModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, prefix: &Prefix) -> Result<NextTokenDistribution> {
        prefix.validate(&self.vocab)?;
        if prefix.is_complete(self.vocab.eos_id()) {
            return Err(CoreError::QueryAfterComplete);
        }
        let row = self
            .rows
            .get(prefix)
            .ok_or_else(|| CoreError::MissingRow(prefix.clone()))?;
        let dist = NextTokenDistribution::new(row.clone())?;
        dist.with_temperature(self.temperature)
    }
}
