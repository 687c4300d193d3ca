//! Chain validation from a trust anchor down to a leaf.

use std::fmt;

use super::ecqv::issuer_digest;
use super::{Certificate, CertType, IssuerId, Time32, ecqv_reconstruct_public, verify_certificate_signature};
use crate::crypto::{CryptoProfile, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainError {
    /// `at_time` is outside the certificate's validity window.
    Expired,
    /// Issuer identifier does not match the next certificate up, or the
    /// anchor is not a self-signed explicit certificate.
    UnknownIssuer,
    BadSignature,
    BadReconstruction,
}

impl fmt::Display for ChainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainError::Expired => "Expired",
            ChainError::UnknownIssuer => "UnknownIssuer",
            ChainError::BadSignature => "BadSignature",
            ChainError::BadReconstruction => "BadReconstruction",
        })
    }
}

/// First failing link; index 0 is the leaf, the anchor is last.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainFailure {
    pub index: usize,
    pub reason: ChainError,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    /// Leaf public key (contained or reconstructed) on success.
    pub result: Result<Point, ChainFailure>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.result.is_ok()
    }

    pub fn leaf_key(&self) -> Option<&Point> {
        self.result.as_ref().ok()
    }

    pub fn failure(&self) -> Option<ChainFailure> {
        self.result.err()
    }

    fn fail(index: usize, reason: ChainError) -> Self {
        ValidationReport { result: Err(ChainFailure { index, reason }) }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.result {
            Ok(_) => f.write_str("OK"),
            Err(ChainFailure { index, reason }) => write!(f, "FAIL {index} {reason}"),
        }
    }
}

/// Validates `leaf ← intermediates… ← root` at `at_time`.
///
/// `intermediates` are ordered leaf-side first. Links are checked from the
/// anchor downward, so the reported index is the highest failing link.
pub fn validate_chain(
    profile: CryptoProfile,
    leaf: &Certificate,
    intermediates: &[Certificate],
    root: &Certificate,
    at_time: Time32,
) -> ValidationReport {
    let chain: Vec<&Certificate> = std::iter::once(leaf).chain(intermediates).chain(std::iter::once(root)).collect();
    let root_index = chain.len() - 1;

    let Some(root_key) = root.verification_key().filter(|_| root.issuer == IssuerId::SelfSigned && root.is_consistent())
    else {
        return ValidationReport::fail(root_index, ChainError::UnknownIssuer);
    };
    if root_key.curve() != profile.curve() {
        return ValidationReport::fail(root_index, ChainError::UnknownIssuer);
    }
    if !verify_certificate_signature(profile, root, root_key, &[]) {
        return ValidationReport::fail(root_index, ChainError::BadSignature);
    }
    if !root.tbs.validity.contains(at_time) {
        return ValidationReport::fail(root_index, ChainError::Expired);
    }

    let mut parent_key = *root_key;
    let mut parent_bytes = root.to_bytes();
    for index in (0..root_index).rev() {
        let cert = chain[index];
        let expected = crate::cert::HashedId8::of_bytes(profile.hash(), &parent_bytes);
        if issuer_digest(cert) != Some(expected) || !cert.is_consistent() {
            return ValidationReport::fail(index, ChainError::UnknownIssuer);
        }
        let key = match cert.cert_type {
            CertType::Explicit => {
                if !verify_certificate_signature(profile, cert, &parent_key, &parent_bytes) {
                    return ValidationReport::fail(index, ChainError::BadSignature);
                }
                *cert.verification_key().expect("consistent explicit certificate")
            }
            CertType::Implicit => match ecqv_reconstruct_public(profile, cert, &parent_key) {
                Ok(k) => k,
                Err(_) => return ValidationReport::fail(index, ChainError::BadReconstruction),
            },
        };
        if !cert.tbs.validity.contains(at_time) {
            return ValidationReport::fail(index, ChainError::Expired);
        }
        parent_key = key;
        parent_bytes = cert.to_bytes();
    }
    ValidationReport { result: Ok(parent_key) }
}
