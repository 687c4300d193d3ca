//! Signed and SignedEncrypted envelopes.
//!
//! Every application payload (BSM, CAM, DENM) and every PKI flow message
//! travels in one of these two structures.

mod verify;

use std::collections::HashMap;

use rand::CryptoRng;
use thiserror::Error;

pub use self::verify::{
    KeyPath, RejectReason, TrustChain, ValidatedCache, VerifyOutcome, verify_signed_data, verify_signed_data_cached,
    verify_with_key,
};

use crate::cert::{CertError, Certificate, HashedId8, Time64, ecqv_reconstruct_public, signature_input};
use crate::codec::{self, CodecError, Opaque, Writer};
use crate::crypto::symmetric::NONCE_LEN;
use crate::crypto::{CryptoProfile, HashAlg, KemCiphertext, KeyPair, Point, Scalar, Signature};
use crate::error::CryptoError;

pub const PROTOCOL_VERSION: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SecuredError {
    #[error("private key does not match the signer certificate")]
    KeyCertMismatch,
    #[error("decryption failed: authentication tag mismatch")]
    TagMismatch,
    #[error("malformed or mismatched curve point")]
    MalformedPoint,
    #[error("operation not defined for this certificate type")]
    WrongCertType,
    #[error("decode: {0}")]
    Decode(#[from] CodecError),
}

impl From<CryptoError> for SecuredError {
    fn from(e: CryptoError) -> Self {
        match e {
            CryptoError::TagMismatch => SecuredError::TagMismatch,
            _ => SecuredError::MalformedPoint,
        }
    }
}

impl From<CertError> for SecuredError {
    fn from(e: CertError) -> Self {
        match e {
            CertError::WrongCertType => SecuredError::WrongCertType,
            CertError::Codec(c) => SecuredError::Decode(c),
            _ => SecuredError::KeyCertMismatch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SignerMode {
    Digest,
    #[default]
    Certificate,
}

/// Which hash the `hashId` field names.
///
/// `Profile` uses the profile hash everywhere. `Sha256` forces SHA-256 in
/// the hashId (and in the two-hash signature input) while the signature
/// primitive itself stays the profile's; it only differs from `Profile`
/// for C-SCMS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum HashIdPolicy {
    #[default]
    Profile,
    Sha256,
}

impl HashIdPolicy {
    pub fn resolve(self, profile: CryptoProfile) -> HashAlg {
        match self {
            HashIdPolicy::Profile => profile.hash(),
            HashIdPolicy::Sha256 => HashAlg::Sha256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HeaderInfo {
    pub app_id: u32,
    /// Informational only; freshness is not enforced.
    pub generation_time: Time64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TbsData {
    pub header: HeaderInfo,
    pub payload: Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SignerId {
    Digest(HashedId8),
    Certificate(Box<Certificate>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedData {
    pub hash_id: HashAlg,
    pub tbs: TbsData,
    pub signer: SignerId,
    pub signature: Signature,
}

impl SignedData {
    pub fn payload(&self) -> &[u8] {
        self.tbs.payload.as_slice()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        codec::encode_signed_data(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        codec::decode_signed_data(bytes)
    }

    /// Identifier of the signing certificate or key.
    pub fn signer_id(&self, profile: CryptoProfile) -> HashedId8 {
        match &self.signer {
            SignerId::Digest(h) => *h,
            SignerId::Certificate(c) => c.hashed_id8(profile),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedEncryptedData {
    pub recipient: HashedId8,
    pub kem: KemCiphertext,
    pub nonce: [u8; NONCE_LEN],
    /// AEAD output (`ciphertext ‖ tag`) over an encoded [`SignedData`].
    pub ciphertext: Opaque,
}

impl SignedEncryptedData {
    pub fn to_bytes(&self) -> Vec<u8> {
        codec::encode_signed_encrypted(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        codec::decode_signed_encrypted(bytes)
    }
}

/// A certificate together with the private key it certifies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Credential {
    certificate: Certificate,
    key: KeyPair,
}

impl Credential {
    /// Checks the correspondence: contained key for explicit certificates,
    /// ECQV reconstruction under `issuer_public` for implicit ones.
    pub fn new(
        profile: CryptoProfile,
        certificate: Certificate,
        private: Scalar,
        issuer_public: Option<&Point>,
    ) -> Result<Self, SecuredError> {
        let key = KeyPair::from_private(private).map_err(|_| SecuredError::KeyCertMismatch)?;
        let expected = match certificate.verification_key() {
            Some(p) => *p,
            None => {
                let issuer = issuer_public.ok_or(SecuredError::KeyCertMismatch)?;
                ecqv_reconstruct_public(profile, &certificate, issuer)?
            }
        };
        if expected != *key.public() {
            return Err(SecuredError::KeyCertMismatch);
        }
        Ok(Credential { certificate, key })
    }

    /// Skips the correspondence check; [`sign_data`] still self-verifies.
    pub fn new_unchecked(certificate: Certificate, key: KeyPair) -> Self {
        Credential { certificate, key }
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn key(&self) -> &KeyPair {
        &self.key
    }
}

/// Identifier for a bare public key (no certificate yet): the HashedId8 of
/// its wire encoding.
pub fn key_id(profile: CryptoProfile, public: &Point) -> HashedId8 {
    let mut w = Writer::new();
    w.point(public);
    HashedId8::of_bytes(profile.hash(), &w.into_bytes())
}

fn build_tbs(payload: &[u8], app_id: u32, generation_time: Time64) -> Result<TbsData, SecuredError> {
    Ok(TbsData { header: HeaderInfo { app_id, generation_time }, payload: Opaque::try_from(payload)? })
}

#[allow(clippy::too_many_arguments)]
pub fn sign_data<R: CryptoRng + ?Sized>(
    profile: CryptoProfile,
    payload: &[u8],
    app_id: u32,
    signer: &Credential,
    mode: SignerMode,
    policy: HashIdPolicy,
    generation_time: Time64,
    rng: &mut R,
) -> Result<SignedData, SecuredError> {
    let hash_id = policy.resolve(profile);
    let tbs = build_tbs(payload, app_id, generation_time)?;
    let cert_bytes = signer.certificate.to_bytes();
    let input = signature_input(hash_id, &codec::encode_tbs_data(&tbs), &cert_bytes);
    let signature = profile.sign(&signer.key, &input, rng);

    let expected = signer.certificate.verification_key().unwrap_or(signer.key.public());
    if !profile.verify(expected, &input, &signature) {
        return Err(SecuredError::KeyCertMismatch);
    }
    let signer = match mode {
        SignerMode::Digest => SignerId::Digest(HashedId8::of_bytes(profile.hash(), &cert_bytes)),
        SignerMode::Certificate => SignerId::Certificate(Box::new(signer.certificate.clone())),
    };
    Ok(SignedData { hash_id, tbs, signer, signature })
}

/// Signs with a key that has no certificate (canonical keys, proof of
/// possession). The signer field carries [`key_id`] and the signer
/// certificate in the signature input is the empty string.
pub fn sign_with_key<R: CryptoRng + ?Sized>(
    profile: CryptoProfile,
    payload: &[u8],
    app_id: u32,
    key: &KeyPair,
    generation_time: Time64,
    rng: &mut R,
) -> Result<SignedData, SecuredError> {
    let hash_id = profile.hash();
    let tbs = build_tbs(payload, app_id, generation_time)?;
    let input = signature_input(hash_id, &codec::encode_tbs_data(&tbs), &[]);
    let signature = profile.sign(key, &input, rng);
    Ok(SignedData { hash_id, tbs, signer: SignerId::Digest(key_id(profile, key.public())), signature })
}

/// Encrypts to an explicit recipient certificate.
pub fn encrypt_signed<R: CryptoRng + ?Sized>(
    profile: CryptoProfile,
    inner: &SignedData,
    recipient_cert: &Certificate,
    rng: &mut R,
) -> Result<SignedEncryptedData, SecuredError> {
    let public = recipient_cert.verification_key().ok_or(SecuredError::WrongCertType)?;
    encrypt_signed_to(profile, inner, recipient_cert.hashed_id8(profile), public, rng)
}

/// Encrypts to any public key, labelled with `recipient`.
pub fn encrypt_signed_to<R: CryptoRng + ?Sized>(
    profile: CryptoProfile,
    inner: &SignedData,
    recipient: HashedId8,
    recipient_public: &Point,
    rng: &mut R,
) -> Result<SignedEncryptedData, SecuredError> {
    if recipient_public.curve() != profile.curve() {
        return Err(SecuredError::MalformedPoint);
    }
    let mut key = [0u8; 16];
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut key);
    rng.fill_bytes(&mut nonce);
    let kem = profile.kem_encapsulate(recipient_public, &key, rng)?;
    let sealed = profile.aead_encrypt(&key, &nonce, &inner.to_bytes());
    Ok(SignedEncryptedData { recipient, kem, nonce, ciphertext: Opaque::new(sealed)? })
}

pub fn decrypt_signed(
    profile: CryptoProfile,
    msg: &SignedEncryptedData,
    recipient: &KeyPair,
) -> Result<SignedData, SecuredError> {
    let key = profile.kem_decapsulate(recipient, &msg.kem)?;
    let plain = profile.aead_decrypt(&key, &msg.nonce, msg.ciphertext.as_slice())?;
    Ok(SignedData::from_bytes(&plain)?)
}

/// Looks up certificates named by digest in a signer field.
pub trait CertResolver {
    fn resolve(&self, id: &HashedId8) -> Option<&Certificate>;
}

impl CertResolver for HashMap<HashedId8, Certificate> {
    fn resolve(&self, id: &HashedId8) -> Option<&Certificate> {
        self.get(id)
    }
}

/// Resolver that knows no certificates.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoResolver;

impl CertResolver for NoResolver {
    fn resolve(&self, _: &HashedId8) -> Option<&Certificate> {
        None
    }
}
