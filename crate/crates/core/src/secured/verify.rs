//! Receiver-side verification of [`SignedData`].

use std::collections::HashMap;
use std::fmt;

use super::{CertResolver, SignedData, SignerId, key_id};
use crate::cert::{
    CertType, Certificate, ChainFailure, HashedId8, IssuerId, Time32, Validity, ecqv_reconstruct_public,
    signature_input, validate_chain,
};
use crate::codec;
use crate::crypto::{CryptoProfile, HashAlg, Point, scalar_mul_count};

/// How the signing public key was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyPath {
    /// Explicit certificate: the key is read from the certificate.
    ContainedKey,
    /// Implicit certificate: the key is rebuilt as `e·P_u + Q_issuer`.
    Reconstructed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    UnresolvedSigner,
    ChainInvalid(ChainFailure),
    BadSignature,
    /// The hashId names neither the profile hash nor SHA-256.
    HashIdMismatch,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::UnresolvedSigner => f.write_str("UnresolvedSigner"),
            RejectReason::ChainInvalid(c) => write!(f, "ChainInvalid({} {})", c.index, c.reason),
            RejectReason::BadSignature => f.write_str("BadSignature"),
            RejectReason::HashIdMismatch => f.write_str("HashIdMismatch"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyOutcome {
    pub verdict: Result<KeyPath, RejectReason>,
    /// Certificate that signed the message, once resolved.
    pub signer: Option<Certificate>,
    /// Signing public key (contained or reconstructed) on acceptance.
    pub signer_key: Option<Point>,
    /// Scalar multiplications performed by this call (operation-count probe).
    pub scalar_muls: u64,
}

impl VerifyOutcome {
    pub fn is_accepted(&self) -> bool {
        self.verdict.is_ok()
    }

    pub fn path(&self) -> Option<KeyPath> {
        self.verdict.ok()
    }
}

/// Trust anchor plus the authority certificates a receiver knows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustChain {
    pub root: Certificate,
    pub authorities: Vec<Certificate>,
}

impl TrustChain {
    pub fn new(root: Certificate, authorities: Vec<Certificate>) -> Self {
        TrustChain { root, authorities }
    }

    /// Issuer certificates from `leaf` upward, excluding the root. Stops at
    /// the first issuer it cannot find; chain validation then reports it.
    pub fn path_for(&self, profile: CryptoProfile, leaf: &Certificate) -> Vec<Certificate> {
        let root_id = self.root.hashed_id8(profile);
        let ids: Vec<HashedId8> = self.authorities.iter().map(|c| c.hashed_id8(profile)).collect();
        let mut path = Vec::new();
        let mut current = leaf;
        while let IssuerId::Digest(issuer) = current.issuer {
            if issuer == root_id || path.len() > self.authorities.len() {
                break;
            }
            match ids.iter().position(|id| *id == issuer) {
                Some(i) => {
                    path.push(self.authorities[i].clone());
                    current = &self.authorities[i];
                }
                None => break,
            }
        }
        path
    }
}

fn hash_id_allowed(profile: CryptoProfile, hash_id: HashAlg) -> bool {
    hash_id == profile.hash() || hash_id == HashAlg::Sha256
}

fn resolve<'a>(msg: &'a SignedData, resolver: &'a dyn CertResolver) -> Option<&'a Certificate> {
    match &msg.signer {
        SignerId::Certificate(c) => Some(c),
        SignerId::Digest(id) => resolver.resolve(id),
    }
}

fn check_signature(profile: CryptoProfile, msg: &SignedData, cert: &Certificate, key: &Point) -> bool {
    let input = signature_input(msg.hash_id, &codec::encode_tbs_data(&msg.tbs), &cert.to_bytes());
    profile.verify(key, &input, &msg.signature)
}

fn path_of(cert: &Certificate) -> KeyPath {
    match cert.cert_type {
        CertType::Explicit => KeyPath::ContainedKey,
        CertType::Implicit => KeyPath::Reconstructed,
    }
}

/// Full verification: resolve the signer, validate its chain to the root at
/// `at_time`, then check the signature with the contained or reconstructed key.
pub fn verify_signed_data(
    profile: CryptoProfile,
    msg: &SignedData,
    resolver: &dyn CertResolver,
    chain: &TrustChain,
    at_time: Time32,
) -> VerifyOutcome {
    let start = scalar_mul_count();
    let (verdict, signer) = full_verify(profile, msg, resolver, chain, at_time);
    let signer_key = verdict.as_ref().ok().map(|(_, k)| *k);
    VerifyOutcome { verdict: verdict.map(|(p, _)| p), signer, signer_key, scalar_muls: scalar_mul_count() - start }
}

type Verified = (KeyPath, Point);

fn full_verify(
    profile: CryptoProfile,
    msg: &SignedData,
    resolver: &dyn CertResolver,
    chain: &TrustChain,
    at_time: Time32,
) -> (Result<Verified, RejectReason>, Option<Certificate>) {
    if !hash_id_allowed(profile, msg.hash_id) {
        return (Err(RejectReason::HashIdMismatch), None);
    }
    let Some(cert) = resolve(msg, resolver) else {
        return (Err(RejectReason::UnresolvedSigner), None);
    };
    let path = chain.path_for(profile, cert);
    let report = validate_chain(profile, cert, &path, &chain.root, at_time);
    let verdict = match report.result {
        Err(f) => Err(RejectReason::ChainInvalid(f)),
        Ok(key) if check_signature(profile, msg, cert, &key) => Ok((path_of(cert), key)),
        Ok(_) => Err(RejectReason::BadSignature),
    };
    (verdict, Some(cert.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CachedSigner {
    validity: Validity,
    issuer_public: Point,
}

/// Certificates whose chain has already been validated by this receiver.
///
/// Only the authenticity of the certificate is cached; the signing key is
/// still taken from an explicit certificate or reconstructed from an
/// implicit one on every message.
#[derive(Debug, Clone, Default)]
pub struct ValidatedCache {
    entries: HashMap<HashedId8, CachedSigner>,
}

impl ValidatedCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Like [`verify_signed_data`], but skips chain validation for certificates
/// already in `cache` and records newly validated ones.
pub fn verify_signed_data_cached(
    profile: CryptoProfile,
    msg: &SignedData,
    resolver: &dyn CertResolver,
    chain: &TrustChain,
    at_time: Time32,
    cache: &mut ValidatedCache,
) -> VerifyOutcome {
    let start = scalar_mul_count();
    let (verdict, signer) = cached_verify(profile, msg, resolver, chain, at_time, cache);
    let signer_key = verdict.as_ref().ok().map(|(_, k)| *k);
    VerifyOutcome { verdict: verdict.map(|(p, _)| p), signer, signer_key, scalar_muls: scalar_mul_count() - start }
}

fn cached_verify(
    profile: CryptoProfile,
    msg: &SignedData,
    resolver: &dyn CertResolver,
    chain: &TrustChain,
    at_time: Time32,
    cache: &mut ValidatedCache,
) -> (Result<Verified, RejectReason>, Option<Certificate>) {
    if !hash_id_allowed(profile, msg.hash_id) {
        return (Err(RejectReason::HashIdMismatch), None);
    }
    let Some(cert) = resolve(msg, resolver) else {
        return (Err(RejectReason::UnresolvedSigner), None);
    };
    let id = cert.hashed_id8(profile);
    let hit = cache.entries.get(&id).filter(|c| c.validity.contains(at_time)).copied();
    let Some(entry) = hit else {
        let (verdict, signer) = full_verify(profile, msg, resolver, chain, at_time);
        if verdict.is_ok()
            && let Some(issuer_public) = issuer_key(profile, cert, chain, at_time)
        {
            cache.entries.insert(id, CachedSigner { validity: cert.tbs.validity, issuer_public });
        }
        return (verdict, signer);
    };
    let key = match cert.verification_key() {
        Some(k) => *k,
        None => match ecqv_reconstruct_public(profile, cert, &entry.issuer_public) {
            Ok(k) => k,
            Err(_) => return (Err(RejectReason::BadSignature), Some(cert.clone())),
        },
    };
    let verdict = if check_signature(profile, msg, cert, &key) {
        Ok((path_of(cert), key))
    } else {
        Err(RejectReason::BadSignature)
    };
    (verdict, Some(cert.clone()))
}

/// Public key of `cert`'s issuer, validated up to the root.
fn issuer_key(profile: CryptoProfile, cert: &Certificate, chain: &TrustChain, at_time: Time32) -> Option<Point> {
    let path = chain.path_for(profile, cert);
    match path.split_first() {
        None => chain.root.verification_key().copied(),
        Some((issuer, rest)) => validate_chain(profile, issuer, rest, &chain.root, at_time).result.ok(),
    }
}

/// Verifies a message signed with [`super::sign_with_key`] against a bare key.
pub fn verify_with_key(profile: CryptoProfile, msg: &SignedData, public: &Point) -> bool {
    if msg.hash_id != profile.hash() || msg.signer != SignerId::Digest(key_id(profile, public)) {
        return false;
    }
    let input = signature_input(msg.hash_id, &codec::encode_tbs_data(&msg.tbs), &[]);
    profile.verify(public, &input, &msg.signature)
}
