use fractal_trace::Status;

/// Process exit codes. Each outcome has its own code.
pub mod code {
    pub const CONVERGED: i32 = 0;
    /// I/O failures and library errors other than rejected input.
    pub const FAILED: i32 = 1;
    pub const DIVERGENT: i32 = 2;
    pub const BUDGET_EXCEEDED: i32 = 3;
    /// Malformed config, unknown operation, parameters the library rejects.
    pub const INVALID: i32 = 4;
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Invalid(String),
    Io(String),
    Failed(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid: {m}"),
            CliError::Io(m) => write!(f, "i/o: {m}"),
            CliError::Failed(m) => write!(f, "failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fractal_trace::Error> for CliError {
    fn from(e: fractal_trace::Error) -> Self {
        use fractal_trace::Error as E;
        match e {
            E::InvalidInput(_) | E::Precondition(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

/// Severity-ordered outcome of one run; a sweep reports the worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Converged,
    BudgetExceeded,
    Divergent,
    Failed,
    Invalid,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Converged => code::CONVERGED,
            Outcome::BudgetExceeded => code::BUDGET_EXCEEDED,
            Outcome::Divergent => code::DIVERGENT,
            Outcome::Failed => code::FAILED,
            Outcome::Invalid => code::INVALID,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::BudgetExceeded => "budget_exceeded",
            Outcome::Divergent => "divergent",
            Outcome::Failed => "failed",
            Outcome::Invalid => "invalid",
        }
    }
}

impl From<Status> for Outcome {
    fn from(s: Status) -> Self {
        match s {
            Status::Converged => Outcome::Converged,
            Status::BudgetExceeded => Outcome::BudgetExceeded,
            Status::Divergent => Outcome::Divergent,
        }
    }
}

impl From<&CliError> for Outcome {
    fn from(e: &CliError) -> Self {
        match e {
            CliError::Invalid(_) => Outcome::Invalid,
            CliError::Io(_) | CliError::Failed(_) => Outcome::Failed,
        }
    }
}
