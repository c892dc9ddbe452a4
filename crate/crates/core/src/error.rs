use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("super-indicial weight beta = {beta}")]
    SuperIndicial { beta: f64 },
    #[error("borderline weight b = 1/2 is excluded")]
    BorderlineB,
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("not in space: {0}")]
    NotInSpace(String),
    #[error("series did not converge: {0}")]
    NonConvergent(String),
    #[error("eigensolver did not converge after {0} sweeps")]
    EigenNonConvergent(usize),
    #[error("no indicial root {0} of beta within the truncated spectrum")]
    TruncationExhausted(&'static str),
    #[error("ambiguous eigenvalue lookup: {0} eigenvalues within tolerance")]
    Ambiguous(usize),
    #[error("undeclared tail; integration to infinity refused")]
    UndeclaredTail,
    #[error("numerical overflow: {0}")]
    Overflow(String),
    #[error("eta invariant unavailable for spectrum source {0}")]
    EtaUnavailable(String),
    #[error("violation witness: {0}")]
    ViolationWitness(String),
}

pub type Result<T> = std::result::Result<T, Error>;

