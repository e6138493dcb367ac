//! Sampling sequences from autoregressive token models under hard validity
//! constraints.
//!
//! The centerpiece is [`decode::DecodeSession::backtrack_sample`], a sampler
//! that maintains a per-prefix validity estimate (`Q`) and a per-prefix held
//! next token (`N`), and uses rejection updates to revise earlier choices when
//! newly observed invalid continuations shrink a branch's estimated validity.
//! The returned sequences follow the model distribution conditioned on the
//! constraint, which plain per-step masking ("greedy" constrained decoding)
//! does not.
//!
//! Alongside the sampler, the crate ships:
//! - unconstrained, greedily constrained, and ASAp baseline decoders,
//! - trie / DFA / length-cap / conjunction constrainers,
//! - a brute-force enumeration oracle with KL and EM@k metrics,
//! - synthetic benchmark generators (binary dataset, two-version API bench).

pub mod bench;
pub mod constrain;
pub mod decode;
pub mod dfa;
pub mod error;
pub mod model;
pub mod oracle;
pub mod trie;
pub mod vocab;

pub use constrain::{valid_next_tokens, AllAccepting, Constrainer, Validity};
pub use error::{CoreError, Result};
pub use model::{joint_probability, NextTokenDistribution, SequenceModel, TableModel, UniformModel};
pub use vocab::{Prefix, TokenId, Vocabulary};
