use crate::vocab::Prefix;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    #[error("malformed sequence: token id {id} out of range for vocabulary of size {vocab_size}")]
    MalformedSequence { id: u32, vocab_size: usize },

    #[error("model queried after a complete prefix")]
    QueryAfterComplete,

    #[error("no conditional row for prefix {0:?}")]
    MissingRow(Prefix),

    #[error("distribution row does not normalize: sum = {sum}")]
    BadRow { sum: f64 },

    #[error("constrainer contract violation: {0}")]
    ContractViolation(String),

    #[error("constrained language is empty")]
    EmptyLanguage,

    #[error("dead end: no valid next token at {0:?} (unsound constrainer?)")]
    DeadEnd(Prefix),

    #[error("model-call budget of {budget} exhausted (Q[eps] = {q_root}, deepest prefix len = {deepest})")]
    BudgetExhausted {
        budget: u64,
        q_root: f64,
        deepest: usize,
    },

    #[error("max sequence length {max_len} exceeded without EOS")]
    Truncated { max_len: usize },

    #[error("instance too large for enumeration (budget {budget} nodes)")]
    InstanceTooLarge { budget: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample has zero model probability: {0:?}")]
    ZeroProbabilitySample(Prefix),

    #[error("pattern error: {0}")]
    Pattern(String),

    #[error("ingestion error at line {line}: {msg}")]
    Ingestion { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}
