use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("singular matrix")]
    SingularMatrix,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
    #[error("reduction did not terminate after {0} steps")]
    ReductionOverflow(usize),
    #[error("word too long: {0} letters")]
    WordOverflow(usize),
    #[error("outside flow box: 1 + s r = {0}")]
    OutOfBox(f64),
    #[error("directions undefined: singular value ratio {0}")]
    Isotropic(f64),
    #[error("degenerate basis")]
    DegenerateBasis,
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
