//! The constrainer contract and the small compositional constrainers.
//!
//! A constrainer answers, for a prefix, whether some valid complete extension
//! exists. Verdicts must be prefix-monotone: once a prefix is invalid, every
//! extension is invalid. The exactness guarantees of the backtracking sampler
//! additionally require completability-soundness: `Valid` always means at
//! least one valid completion exists. The trie and DFA constrainers are sound
//! by construction; [`Conjunction`] is not in general (see its docs).

use std::collections::BTreeSet;

use crate::error::{CoreError, Result};
use crate::vocab::{Prefix, TokenId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Invalid,
    Valid,
}

impl Validity {
    pub fn is_valid(self) -> bool {
        matches!(self, Validity::Valid)
    }
}

pub trait Constrainer: Sync {
    fn check(&self, prefix: &Prefix) -> Validity;
}

/// The ids `t` with `check(prefix :: [t]) = Valid`.
///
/// The prefix itself must be valid; calling this on an invalid prefix is a
/// contract violation.
pub fn valid_next_tokens(
    constrainer: &dyn Constrainer,
    vocab: &Vocabulary,
    prefix: &Prefix,
) -> Result<BTreeSet<TokenId>> {
    if !constrainer.check(prefix).is_valid() {
        return Err(CoreError::ContractViolation(format!(
            "valid_next_tokens called on invalid prefix {prefix:?}"
        )));
    }
    Ok(vocab
        .ids()
        .filter(|&t| constrainer.check(&prefix.child(t)).is_valid())
        .collect())
}

/// Accepts everything: `c == 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct AllAccepting;

impl Constrainer for AllAccepting {
    fn check(&self, _prefix: &Prefix) -> Validity {
        Validity::Valid
    }
}

/// Valid while the number of non-EOS tokens stays within the cap. A prefix at
/// the cap can still complete with EOS, so this is completability-sound.
#[derive(Debug, Clone, Copy)]
pub struct LengthCap {
    max_tokens: usize,
    eos_id: TokenId,
}

impl LengthCap {
    pub fn new(max_tokens: usize, eos_id: TokenId) -> Self {
        Self { max_tokens, eos_id }
    }
}

impl Constrainer for LengthCap {
    fn check(&self, prefix: &Prefix) -> Validity {
        let body = prefix
            .tokens()
            .iter()
            .filter(|&&t| t != self.eos_id)
            .count();
        if body <= self.max_tokens {
            Validity::Valid
        } else {
            Validity::Invalid
        }
    }
}

/// Valid iff every child constrainer says valid.
///
/// Note the weaker semantics: each child individually promises a completion,
/// but there may be no completion satisfying all children at once, so a
/// conjunction can be completability-unsound even when its children are sound.
/// Exact-sampling guarantees are stated only for sound constrainers; decoders
/// fall back to the step budget when driven into a dead end.
pub struct Conjunction {
    children: Vec<Box<dyn Constrainer + Send>>,
}

impl Conjunction {
    pub fn new(children: Vec<Box<dyn Constrainer + Send>>) -> Self {
        Self { children }
    }
}

impl Constrainer for Conjunction {
    fn check(&self, prefix: &Prefix) -> Validity {
        if self.children.iter().all(|c| c.check(prefix).is_valid()) {
            Validity::Valid
        } else {
            Validity::Invalid
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_accepting_yields_full_vocabulary() {
        let vocab = Vocabulary::with_eos_last(&["a", "b", "<eos>"]).unwrap();
        let set = valid_next_tokens(&AllAccepting, &vocab, &Prefix::empty()).unwrap();
        assert_eq!(set.len(), vocab.len());
    }

    #[test]
    fn length_cap_allows_eos_at_cap() {
        let cap = LengthCap::new(2, 2);
        assert!(cap.check(&Prefix::new(vec![0, 1])).is_valid());
        assert!(cap.check(&Prefix::new(vec![0, 1, 2])).is_valid());
        assert!(!cap.check(&Prefix::new(vec![0, 1, 0])).is_valid());
    }

    #[test]
    fn conjunction_is_intersection() {
        let c = Conjunction::new(vec![
            Box::new(LengthCap::new(3, 2)),
            Box::new(LengthCap::new(1, 2)),
        ]);
        assert!(c.check(&Prefix::new(vec![0])).is_valid());
        assert!(!c.check(&Prefix::new(vec![0, 0])).is_valid());
    }

    #[test]
    fn valid_next_tokens_rejects_invalid_prefix() {
        let vocab = Vocabulary::with_eos_last(&["a", "<eos>"]).unwrap();
        let cap = LengthCap::new(0, 1);
        assert!(valid_next_tokens(&cap, &vocab, &Prefix::new(vec![0])).is_err());
    }
}
