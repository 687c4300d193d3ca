//! The three cryptographic suites behind SCMS, CCMS and C-SCMS.
//!
//! | profile | curve          | hash    | cipher  |
//! |---------|----------------|---------|---------|
//! | SCMS    | NIST P-256     | SHA-256 | AES-128 |
//! | CCMS    | brainpoolP256r1| SHA-256 | AES-128 |
//! | C-SCMS  | SM2-256        | SM3     | SM4-128 |
//!
//! [`CryptoProfile`] bundles one row of that table and exposes the
//! primitives (keygen, sign/verify, digest, KEM, AEAD) with the row's
//! algorithms filled in.

pub mod curve;
pub mod hash;
pub mod kem;
pub mod keys;
pub mod sig;
pub mod symmetric;

use std::fmt;
use std::str::FromStr;

use rand::CryptoRng;
use serde::{Deserialize, Serialize};

pub use self::curve::{CurveId, Point, Scalar, scalar_mul_count};
pub use self::hash::HashAlg;
pub use self::kem::KemCiphertext;
pub use self::keys::KeyPair;
pub use self::sig::Signature;
pub use self::symmetric::SymmetricAlg;

use crate::error::CryptoError;

/// One standard's default algorithm suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CryptoProfile {
    Scms,
    Ccms,
    Cscms,
}

impl CryptoProfile {
    pub const ALL: [CryptoProfile; 3] = [CryptoProfile::Scms, CryptoProfile::Ccms, CryptoProfile::Cscms];

    pub fn curve(self) -> CurveId {
        match self {
            CryptoProfile::Scms => CurveId::NistP256,
            CryptoProfile::Ccms => CurveId::BrainpoolP256,
            CryptoProfile::Cscms => CurveId::Sm2,
        }
    }

    pub fn hash(self) -> HashAlg {
        match self {
            CryptoProfile::Scms | CryptoProfile::Ccms => HashAlg::Sha256,
            CryptoProfile::Cscms => HashAlg::Sm3,
        }
    }

    pub fn symmetric(self) -> SymmetricAlg {
        match self {
            CryptoProfile::Scms | CryptoProfile::Ccms => SymmetricAlg::Aes128,
            CryptoProfile::Cscms => SymmetricAlg::Sm4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CryptoProfile::Scms => "scms",
            CryptoProfile::Ccms => "ccms",
            CryptoProfile::Cscms => "cscms",
        }
    }

    pub fn generate_keypair<R: CryptoRng + ?Sized>(self, rng: &mut R) -> KeyPair {
        KeyPair::generate(self.curve(), rng)
    }

    pub fn sign<R: CryptoRng + ?Sized>(self, key: &KeyPair, message: &[u8], rng: &mut R) -> Signature {
        sig::sign(self.curve(), self.hash(), key, message, rng)
    }

    pub fn verify(self, public: &Point, message: &[u8], signature: &Signature) -> bool {
        sig::verify(self.curve(), self.hash(), public, message, signature)
    }

    pub fn digest(self, data: &[u8]) -> [u8; 32] {
        self.hash().digest(data)
    }

    pub fn kem_encapsulate<R: CryptoRng + ?Sized>(
        self,
        recipient: &Point,
        key_to_wrap: &[u8; 16],
        rng: &mut R,
    ) -> Result<KemCiphertext, CryptoError> {
        kem::encapsulate(self.hash(), recipient, key_to_wrap, rng)
    }

    pub fn kem_decapsulate(self, recipient: &KeyPair, ct: &KemCiphertext) -> Result<[u8; 16], CryptoError> {
        kem::decapsulate(self.hash(), recipient, ct)
    }

    pub fn aead_encrypt(self, key: &[u8; 16], nonce: &[u8; 12], plaintext: &[u8]) -> Vec<u8> {
        self.symmetric().aead_encrypt(key, nonce, plaintext)
    }

    pub fn aead_decrypt(self, key: &[u8; 16], nonce: &[u8; 12], sealed: &[u8]) -> Result<Vec<u8>, CryptoError> {
        self.symmetric().aead_decrypt(key, nonce, sealed)
    }
}

impl fmt::Display for CryptoProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CryptoProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown profile `{s}` (expected scms, ccms or cscms)"))
    }
}
