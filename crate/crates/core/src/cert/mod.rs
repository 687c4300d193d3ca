//! The CertificateBase model shared by all three systems.
//!
//! A certificate is either *explicit* (carries the subject's verification
//! key and an issuer signature) or *implicit* (carries an ECQV
//! reconstruction value and no signature). Enrollment and authorization
//! certificates differ only in the application permission they carry.

mod chain;
mod ecqv;

use std::fmt;

use rand::CryptoRng;
use thiserror::Error;

pub use self::chain::{ChainError, ChainFailure, ValidationReport, validate_chain};
pub use self::ecqv::{EcqvIssuance, ecqv_derive_private, ecqv_hash_scalar, ecqv_issue, ecqv_reconstruct_public};

use crate::codec::{self, CodecError};
use crate::crypto::{CryptoProfile, HashAlg, KeyPair, Point, Signature};

/// Seconds since 2004-01-01T00:00:00Z.
pub type Time32 = u32;
/// Microseconds since 2004-01-01T00:00:00Z.
pub type Time64 = u64;

/// Seconds between the Unix epoch and the 2004-01-01 epoch.
pub const EPOCH_2004_UNIX: u64 = 1_072_915_200;

pub const CERT_VERSION: u8 = 3;
pub const MAX_NAME_LEN: usize = 64;

/// Application permission carried by enrollment certificates (management range).
pub const PSID_ENROLLMENT: u32 = 0x23;
/// Application permission carried by authorization certificates (BSM).
pub const PSID_BSM: u32 = 0x20;

pub fn time32_from_unix(unix_secs: u64) -> Time32 {
    u32::try_from(unix_secs.saturating_sub(EPOCH_2004_UNIX)).unwrap_or(u32::MAX)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error("issuer certificate is not valid at the requested time")]
    IssuerExpired,
    #[error("operation not defined for this certificate type")]
    WrongCertType,
    #[error("malformed or mismatched curve point")]
    MalformedPoint,
    #[error("scalar out of range")]
    OutOfRange,
    #[error("public key reconstruction produced the identity")]
    BadReconstruction,
    #[error("certificate name: {0}")]
    InvalidName(&'static str),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Low-order eight bytes of a certificate digest.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HashedId8(pub [u8; 8]);

impl HashedId8 {
    /// Last eight bytes of `digest`.
    pub fn from_digest(digest: &[u8; 32]) -> Self {
        let mut id = [0u8; 8];
        id.copy_from_slice(&digest[24..]);
        HashedId8(id)
    }

    pub fn of_bytes(hash: HashAlg, bytes: &[u8]) -> Self {
        Self::from_digest(&hash.digest(bytes))
    }
}

impl fmt::Debug for HashedId8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HashedId8({})", hex::encode(self.0))
    }
}

impl fmt::Display for HashedId8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// UTF-8 subject name of at most [`MAX_NAME_LEN`] bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CertName(String);

impl CertName {
    pub fn new(name: impl Into<String>) -> Result<Self, CertError> {
        let name = name.into();
        if name.len() > MAX_NAME_LEN {
            return Err(CertError::InvalidName("longer than 64 bytes"));
        }
        Ok(CertName(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CertName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Validity {
    pub start: Time32,
    pub duration_secs: u32,
}

impl Validity {
    pub fn new(start: Time32, duration_secs: u32) -> Self {
        Validity { start, duration_secs }
    }

    /// Last second (exclusive) of the window.
    pub fn end(&self) -> u64 {
        u64::from(self.start) + u64::from(self.duration_secs)
    }

    pub fn contains(&self, t: Time32) -> bool {
        t >= self.start && u64::from(t) < self.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CertType {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IssuerId {
    SelfSigned,
    Digest(HashedId8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerifyKeyIndicator {
    VerificationKey(Point),
    ReconstructionValue(Point),
}

impl VerifyKeyIndicator {
    pub fn point(&self) -> &Point {
        match self {
            VerifyKeyIndicator::VerificationKey(p) | VerifyKeyIndicator::ReconstructionValue(p) => p,
        }
    }
}

/// What a certificate authorizes its holder to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CertKind {
    /// CA certificates (root, ECA/EA, RA, ACA/AA); no application permissions.
    Authority,
    Enrollment,
    Authorization,
}

impl CertKind {
    pub fn app_permissions(self) -> Vec<u32> {
        match self {
            CertKind::Authority => Vec::new(),
            CertKind::Enrollment => vec![PSID_ENROLLMENT],
            CertKind::Authorization => vec![PSID_BSM],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ToBeSignedCertificate {
    pub id: CertName,
    pub validity: Validity,
    /// PSID (IEEE) / AID (YD/T) values; one numeric space.
    pub app_permissions: Vec<u32>,
    pub verify_key_indicator: VerifyKeyIndicator,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Certificate {
    pub version: u8,
    pub cert_type: CertType,
    pub issuer: IssuerId,
    pub tbs: ToBeSignedCertificate,
    pub signature: Option<Signature>,
}

impl Certificate {
    /// Checks the type/indicator/signature bijection.
    pub fn is_consistent(&self) -> bool {
        matches!(
            (self.cert_type, &self.tbs.verify_key_indicator, &self.signature),
            (CertType::Explicit, VerifyKeyIndicator::VerificationKey(_), Some(_))
                | (CertType::Implicit, VerifyKeyIndicator::ReconstructionValue(_), None)
        ) && self.version == CERT_VERSION
    }

    pub fn is_explicit(&self) -> bool {
        self.cert_type == CertType::Explicit
    }

    /// The subject key carried by an explicit certificate.
    pub fn verification_key(&self) -> Option<&Point> {
        match &self.tbs.verify_key_indicator {
            VerifyKeyIndicator::VerificationKey(p) => Some(p),
            VerifyKeyIndicator::ReconstructionValue(_) => None,
        }
    }

    pub fn kind(&self) -> Option<CertKind> {
        match self.tbs.app_permissions.as_slice() {
            [] => Some(CertKind::Authority),
            [PSID_ENROLLMENT] => Some(CertKind::Enrollment),
            [PSID_BSM] => Some(CertKind::Authorization),
            _ => None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        codec::encode_certificate(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        codec::decode_certificate(bytes)
    }

    pub fn hashed_id8(&self, profile: CryptoProfile) -> HashedId8 {
        codec::hashed_id8(profile, self)
    }
}

/// Message fed to the signature scheme for a certificate or a signed
/// message: `H(content) ‖ H(signer certificate)`. The signature scheme hashes
/// it once more, giving `H(H(content) ‖ H(signer))`. Self-signed roots use
/// the empty string as signer certificate.
pub fn signature_input(hash: HashAlg, content: &[u8], signer_cert_bytes: &[u8]) -> [u8; 64] {
    let mut out = [0u8; 64];
    out[..32].copy_from_slice(&hash.digest(content));
    out[32..].copy_from_slice(&hash.digest(signer_cert_bytes));
    out
}

fn sign_certificate<R: CryptoRng + ?Sized>(
    profile: CryptoProfile,
    cert: &mut Certificate,
    signer_key: &KeyPair,
    signer_cert_bytes: &[u8],
    rng: &mut R,
) {
    let input = signature_input(profile.hash(), &codec::signing_bytes(cert), signer_cert_bytes);
    cert.signature = Some(profile.sign(signer_key, &input, rng));
}

/// Verifies an explicit certificate's signature against its issuer's key.
pub fn verify_certificate_signature(
    profile: CryptoProfile,
    cert: &Certificate,
    issuer_public: &Point,
    issuer_cert_bytes: &[u8],
) -> bool {
    let Some(sig) = &cert.signature else {
        return false;
    };
    let input = signature_input(profile.hash(), &codec::signing_bytes(cert), issuer_cert_bytes);
    profile.verify(issuer_public, &input, sig)
}

fn check_issuer(profile: CryptoProfile, issuer_cert: &Certificate, issuer_key: &KeyPair, start: Time32) -> Result<(), CertError> {
    if !issuer_cert.is_explicit() {
        return Err(CertError::WrongCertType);
    }
    if issuer_key.curve() != profile.curve() {
        return Err(CertError::MalformedPoint);
    }
    if !issuer_cert.tbs.validity.contains(start) {
        return Err(CertError::IssuerExpired);
    }
    Ok(())
}

/// Creates a self-signed explicit trust anchor and its keypair.
pub fn self_sign_root<R: CryptoRng + ?Sized>(
    profile: CryptoProfile,
    name: &str,
    validity: Validity,
    rng: &mut R,
) -> Result<(Certificate, KeyPair), CertError> {
    let key = profile.generate_keypair(rng);
    let mut cert = Certificate {
        version: CERT_VERSION,
        cert_type: CertType::Explicit,
        issuer: IssuerId::SelfSigned,
        tbs: ToBeSignedCertificate {
            id: CertName::new(name)?,
            validity,
            app_permissions: CertKind::Authority.app_permissions(),
            verify_key_indicator: VerifyKeyIndicator::VerificationKey(*key.public()),
        },
        signature: None,
    };
    sign_certificate(profile, &mut cert, &key, &[], rng);
    Ok((cert, key))
}

/// Issues an explicit certificate binding `subject_public`.
#[allow(clippy::too_many_arguments)]
pub fn issue_explicit<R: CryptoRng + ?Sized>(
    profile: CryptoProfile,
    issuer_cert: &Certificate,
    issuer_key: &KeyPair,
    subject_public: &Point,
    kind: CertKind,
    name: &str,
    validity: Validity,
    rng: &mut R,
) -> Result<Certificate, CertError> {
    check_issuer(profile, issuer_cert, issuer_key, validity.start)?;
    if subject_public.curve() != profile.curve() {
        return Err(CertError::MalformedPoint);
    }
    let issuer_bytes = issuer_cert.to_bytes();
    let mut cert = Certificate {
        version: CERT_VERSION,
        cert_type: CertType::Explicit,
        issuer: IssuerId::Digest(HashedId8::of_bytes(profile.hash(), &issuer_bytes)),
        tbs: ToBeSignedCertificate {
            id: CertName::new(name)?,
            validity,
            app_permissions: kind.app_permissions(),
            verify_key_indicator: VerifyKeyIndicator::VerificationKey(*subject_public),
        },
        signature: None,
    };
    sign_certificate(profile, &mut cert, issuer_key, &issuer_bytes, rng);
    Ok(cert)
}
