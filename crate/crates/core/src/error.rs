use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index out of domain: {x} not in [1, {n}]")]
    IndexOutOfDomain { x: u64, n: u64 },
    #[error("value {value} at index {x} outside [1, {valbound}]")]
    ValueOutOfRange { x: u64, value: u64, valbound: u64 },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("index outside chain: {x}")]
    OutsideChain { x: u64 },
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("{what} cap exceeded: {size} > {cap}")]
    CapExceeded {
        what: &'static str,
        size: u64,
        cap: u64,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("recursion budget exhausted after {0} classify calls")]
    Budget(u64),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
