//! Elliptic Curve Qu-Vanstone implicit certificates.
//!
//! ```text
//! requester: k_u,  R_u = k_u·G
//! issuer:    k random, P_u = R_u + k·G, cert carries P_u
//!            e = H(cert) mod n,  r = e·k + d_ca
//! requester: d_u = e·k_u + r           (private key)
//! anyone:    Q_u = e·P_u + Q_ca        (public key, equals d_u·G)
//! ```

use rand::CryptoRng;

use super::{
    CERT_VERSION, CertError, CertKind, CertName, CertType, Certificate, HashedId8, IssuerId, ToBeSignedCertificate,
    Validity, VerifyKeyIndicator, check_issuer,
};
use crate::codec;
use crate::crypto::{CryptoProfile, KeyPair, Point, Scalar};

/// Implicit certificate plus the private-key contribution `r` for its requester.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcqvIssuance {
    pub certificate: Certificate,
    pub contribution: Scalar,
}

/// `e = int(H(encoded cert)) mod n`, with `0` replaced by `1`.
pub fn ecqv_hash_scalar(profile: CryptoProfile, cert: &Certificate) -> Scalar {
    let digest = profile.digest(&codec::encode_certificate(cert));
    let e = Scalar::reduce(profile.curve(), &digest);
    if e.is_zero() { Scalar::one(profile.curve()) } else { e }
}

#[allow(clippy::too_many_arguments)]
pub fn ecqv_issue<R: CryptoRng + ?Sized>(
    profile: CryptoProfile,
    issuer_cert: &Certificate,
    issuer_key: &KeyPair,
    request_public: &Point,
    kind: CertKind,
    name: &str,
    validity: Validity,
    rng: &mut R,
) -> Result<EcqvIssuance, CertError> {
    check_issuer(profile, issuer_cert, issuer_key, validity.start)?;
    if request_public.curve() != profile.curve() {
        return Err(CertError::MalformedPoint);
    }
    let issuer = IssuerId::Digest(issuer_cert.hashed_id8(profile));
    let id = CertName::new(name)?;
    loop {
        let k = KeyPair::generate(profile.curve(), rng);
        let Some(reconstruction) = request_public.add(k.public()) else {
            continue;
        };
        let certificate = Certificate {
            version: CERT_VERSION,
            cert_type: CertType::Implicit,
            issuer,
            tbs: ToBeSignedCertificate {
                id: id.clone(),
                validity,
                app_permissions: kind.app_permissions(),
                verify_key_indicator: VerifyKeyIndicator::ReconstructionValue(reconstruction),
            },
            signature: None,
        };
        let e = ecqv_hash_scalar(profile, &certificate);
        let contribution = e.mul(k.private()).add(issuer_key.private());
        return Ok(EcqvIssuance { certificate, contribution });
    }
}

fn reconstruction_value(cert: &Certificate) -> Result<&Point, CertError> {
    match (&cert.cert_type, &cert.tbs.verify_key_indicator) {
        (CertType::Implicit, VerifyKeyIndicator::ReconstructionValue(p)) => Ok(p),
        _ => Err(CertError::WrongCertType),
    }
}

/// `Q_u = e·P_u + Q_issuer`.
pub fn ecqv_reconstruct_public(
    profile: CryptoProfile,
    cert: &Certificate,
    issuer_public: &Point,
) -> Result<Point, CertError> {
    let p_u = reconstruction_value(cert)?;
    if p_u.curve() != profile.curve() || issuer_public.curve() != profile.curve() {
        return Err(CertError::MalformedPoint);
    }
    let e = ecqv_hash_scalar(profile, cert);
    p_u.mul(&e)
        .and_then(|ep| ep.add(issuer_public))
        .ok_or(CertError::BadReconstruction)
}

/// `d_u = e·k_u + r mod n`.
pub fn ecqv_derive_private(
    profile: CryptoProfile,
    cert: &Certificate,
    request_private: &Scalar,
    contribution: &Scalar,
) -> Result<Scalar, CertError> {
    reconstruction_value(cert)?;
    let curve = profile.curve();
    if request_private.curve() != curve || contribution.curve() != curve || request_private.is_zero() {
        return Err(CertError::OutOfRange);
    }
    let d = ecqv_hash_scalar(profile, cert).mul(request_private).add(contribution);
    if d.is_zero() {
        return Err(CertError::OutOfRange);
    }
    Ok(d)
}

/// Identifier of the certificate that issued `cert`, if not self-signed.
pub(crate) fn issuer_digest(cert: &Certificate) -> Option<HashedId8> {
    match cert.issuer {
        IssuerId::Digest(h) => Some(h),
        IssuerId::SelfSigned => None,
    }
}
