use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("point is not a valid non-identity curve point")]
    MalformedPoint,
    #[error("authentication tag mismatch")]
    TagMismatch,
    #[error("scalar out of range")]
    OutOfRange,
    #[error("invalid key encoding: {0}")]
    InvalidKeyEncoding(&'static str),
}
