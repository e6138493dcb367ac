use backsample::CoreError;

pub type Result<T> = std::result::Result<T, CliError>;

/// Exit code 0 is success; each failure class gets its own code so scripts
/// can tell them apart.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(CoreError),
    /// The oracle check ran to completion and found mismatches.
    OracleFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(
                CoreError::BudgetExhausted { .. }
                | CoreError::Truncated { .. }
                | CoreError::InstanceTooLarge { .. },
            ) => EXIT_BUDGET,
            CliError::Core(_) => 1,
            CliError::OracleFailed { .. } => EXIT_ORACLE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::OracleFailed { failed, total } => {
                write!(f, "oracle check failed on {failed} of {total} problems")
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(CoreError::Io(e))
    }
}
