use rand::CryptoRng;

use super::curve::{CurveId, Point, Scalar};
use crate::error::CryptoError;

/// Private scalar `d ∈ [1, n−1]` with its public point `d·G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyPair {
    private: Scalar,
    public: Point,
}

impl KeyPair {
    pub fn generate<R: CryptoRng + ?Sized>(curve: CurveId, rng: &mut R) -> Self {
        let private = Scalar::random_nonzero(curve, rng);
        Self::from_private(private).expect("non-zero scalar")
    }

    pub fn from_private(private: Scalar) -> Result<Self, CryptoError> {
        let public = Point::mul_base(&private).ok_or(CryptoError::OutOfRange)?;
        Ok(KeyPair { private, public })
    }

    pub fn private(&self) -> &Scalar {
        &self.private
    }

    pub fn public(&self) -> &Point {
        &self.public
    }

    pub fn curve(&self) -> CurveId {
        self.public.curve()
    }

    /// `.sk` file body: lowercase hex of the big-endian scalar.
    pub fn to_sk_string(&self) -> String {
        format!("{}\n", hex::encode(self.private.to_bytes()))
    }

    pub fn from_sk_string(curve: CurveId, text: &str) -> Result<Self, CryptoError> {
        let bytes: [u8; 32] = hex::decode(text.trim())
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or(CryptoError::InvalidKeyEncoding("expected 64 hex digits"))?;
        let private = Scalar::from_be_bytes(curve, &bytes).ok_or(CryptoError::OutOfRange)?;
        Self::from_private(private)
    }
}

/// `.pk` file body: hex of the compressed point.
pub fn public_to_pk_string(public: &Point) -> String {
    format!("{}\n", hex::encode(public.to_compressed()))
}

pub fn public_from_pk_string(curve: CurveId, text: &str) -> Result<Point, CryptoError> {
    let bytes = hex::decode(text.trim()).map_err(|_| CryptoError::InvalidKeyEncoding("invalid hex"))?;
    Point::from_compressed(curve, &bytes)
}
