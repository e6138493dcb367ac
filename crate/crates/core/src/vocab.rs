//! Token vocabulary and (partial) sequences.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub type TokenId = u32;

/// A dense, integer-identified token alphabet with a designated end-of-sequence
/// marker. Ids are `0..len()` and texts are unique and non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    texts: Vec<String>,
    eos_id: TokenId,
}

impl Vocabulary {
    pub fn new(texts: Vec<String>, eos_id: TokenId) -> Result<Self> {
        if texts.is_empty() {
            return Err(CoreError::InvalidArgument("empty vocabulary".into()));
        }
        if (eos_id as usize) >= texts.len() {
            return Err(CoreError::InvalidArgument(format!(
                "eos id {eos_id} outside vocabulary of size {}",
                texts.len()
            )));
        }
        for (i, t) in texts.iter().enumerate() {
            if t.is_empty() {
                return Err(CoreError::InvalidArgument(format!("token {i} has empty text")));
            }
            if texts[..i].contains(t) {
                return Err(CoreError::InvalidArgument(format!("duplicate token text {t:?}")));
            }
        }
        Ok(Self { texts, eos_id })
    }

    /// Convenience constructor from `&str` texts; EOS is the last token.
    pub fn with_eos_last(texts: &[&str]) -> Result<Self> {
        let eos = (texts.len() - 1) as TokenId;
        Self::new(texts.iter().map(|s| s.to_string()).collect(), eos)
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn eos_id(&self) -> TokenId {
        self.eos_id
    }

    pub fn text(&self, id: TokenId) -> &str {
        &self.texts[id as usize]
    }

    pub fn id_of(&self, text: &str) -> Option<TokenId> {
        self.texts.iter().position(|t| t == text).map(|i| i as TokenId)
    }

    pub fn contains(&self, id: TokenId) -> bool {
        (id as usize) < self.texts.len()
    }

    /// All token ids, including EOS.
    pub fn ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        (0..self.texts.len() as TokenId).into_iter()
    }

    /// Render a sequence by joining token texts, dropping a trailing EOS.
    pub fn render(&self, prefix: &Prefix, sep: &str) -> String {
        prefix
            .tokens()
            .iter()
            .filter(|&&t| t != self.eos_id)
            .map(|&t| self.text(t))
            .collect::<Vec<_>>()
            .join(sep)
    }
}

/// An ordered list of token ids: a partial sequence. A prefix whose last token
/// is EOS is complete; nothing may follow EOS.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Prefix(Vec<TokenId>);

impl Prefix {
    pub fn empty() -> Self {
        Prefix(Vec::new())
    }

    pub fn new(tokens: Vec<TokenId>) -> Self {
        Prefix(tokens)
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<TokenId> {
        self.0.last().copied()
    }

    pub fn is_complete(&self, eos_id: TokenId) -> bool {
        self.last() == Some(eos_id)
    }

    pub fn child(&self, token: TokenId) -> Prefix {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(token);
        Prefix(v)
    }

    pub fn push(&mut self, token: TokenId) {
        self.0.push(token);
    }

    /// The prefix made of the first `depth` tokens.
    pub fn truncated(&self, depth: usize) -> Prefix {
        Prefix(self.0[..depth].to_vec())
    }

    /// Checks ids against the vocabulary and that no token follows EOS.
    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        for (i, &t) in self.0.iter().enumerate() {
            if !vocab.contains(t) {
                return Err(CoreError::MalformedSequence {
                    id: t,
                    vocab_size: vocab.len(),
                });
            }
            if t == vocab.eos_id() && i + 1 != self.0.len() {
                return Err(CoreError::QueryAfterComplete);
            }
        }
        Ok(())
    }
}

impl From<Vec<TokenId>> for Prefix {
    fn from(v: Vec<TokenId>) -> Self {
        Prefix(v)
    }
}

impl From<&[TokenId]> for Prefix {
    fn from(v: &[TokenId]) -> Self {
        Prefix(v.to_vec())
    }
}

impl fmt::Debug for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prefix{:?}", self.0)
    }
}
