//! ```text
//! Certificate := version u8 | type u8 | issuer | tbs | signature?
//! issuer      := 0x00 (self) | 0x01 HashedId8
//! tbs         := name var | start u32 | duration u32
//!                | count u16 | permission u32 * count
//!                | indicator u8 (0 key, 1 reconstruction) | point
//! ```

use super::{CodecError, Reader, Writer};
use crate::cert::{
    CERT_VERSION, CertName, CertType, Certificate, HashedId8, IssuerId, MAX_NAME_LEN, ToBeSignedCertificate, Validity,
    VerifyKeyIndicator,
};
use crate::crypto::CryptoProfile;

fn write_unsigned(w: &mut Writer, cert: &Certificate) {
    w.u8(cert.version);
    w.u8(match cert.cert_type {
        CertType::Explicit => 0,
        CertType::Implicit => 1,
    });
    match cert.issuer {
        IssuerId::SelfSigned => w.u8(0),
        IssuerId::Digest(h) => w.u8(1).raw(&h.0),
    };
    let tbs = &cert.tbs;
    w.var(tbs.id.as_str().as_bytes());
    w.u32(tbs.validity.start).u32(tbs.validity.duration_secs);
    let count = u16::try_from(tbs.app_permissions.len()).expect("permission list exceeds 65535 entries");
    w.u16(count);
    for p in &tbs.app_permissions {
        w.u32(*p);
    }
    match &tbs.verify_key_indicator {
        VerifyKeyIndicator::VerificationKey(p) => w.u8(0).point(p),
        VerifyKeyIndicator::ReconstructionValue(p) => w.u8(1).point(p),
    };
}

/// Bytes covered by the issuer signature: everything except the signature field.
pub fn signing_bytes(cert: &Certificate) -> Vec<u8> {
    let mut w = Writer::new();
    write_unsigned(&mut w, cert);
    w.into_bytes()
}

pub fn encode_certificate(cert: &Certificate) -> Vec<u8> {
    let mut w = Writer::new();
    write_unsigned(&mut w, cert);
    match &cert.signature {
        None => w.u8(0),
        Some(s) => w.u8(1).signature(s),
    };
    w.into_bytes()
}

pub(crate) fn read_certificate(r: &mut Reader<'_>) -> Result<Certificate, CodecError> {
    let version = r.u8()?;
    if version != CERT_VERSION {
        return Err(CodecError::UnknownEnum { field: "version", value: version });
    }
    let cert_type = match r.u8()? {
        0 => CertType::Explicit,
        1 => CertType::Implicit,
        value => return Err(CodecError::UnknownEnum { field: "cert type", value }),
    };
    let issuer = match r.u8()? {
        0 => IssuerId::SelfSigned,
        1 => IssuerId::Digest(HashedId8(r.array()?)),
        value => return Err(CodecError::UnknownEnum { field: "issuer", value }),
    };
    let name = r.var()?;
    if name.len() > MAX_NAME_LEN {
        return Err(CodecError::TooLong { field: "name", len: name.len(), max: MAX_NAME_LEN });
    }
    let name = std::str::from_utf8(name).map_err(|_| CodecError::InvalidField("name"))?;
    let id = CertName::new(name).map_err(|_| CodecError::InvalidField("name"))?;
    let validity = Validity::new(r.u32()?, r.u32()?);
    let count = r.u16()?;
    let app_permissions = (0..count).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
    let verify_key_indicator = match r.u8()? {
        0 => VerifyKeyIndicator::VerificationKey(r.point()?),
        1 => VerifyKeyIndicator::ReconstructionValue(r.point()?),
        value => return Err(CodecError::UnknownEnum { field: "verify key indicator", value }),
    };
    let signature = if r.present("signature")? { Some(r.signature()?) } else { None };
    let cert = Certificate {
        version,
        cert_type,
        issuer,
        tbs: ToBeSignedCertificate { id, validity, app_permissions, verify_key_indicator },
        signature,
    };
    if !cert.is_consistent() {
        return Err(CodecError::InvalidField("certificate type, key indicator and signature disagree"));
    }
    Ok(cert)
}

pub fn decode_certificate(bytes: &[u8]) -> Result<Certificate, CodecError> {
    let mut r = Reader::new(bytes);
    let cert = read_certificate(&mut r)?;
    r.finish()?;
    Ok(cert)
}

/// Low-order eight bytes of the profile digest of the encoded certificate.
pub fn hashed_id8(profile: CryptoProfile, cert: &Certificate) -> HashedId8 {
    HashedId8::of_bytes(profile.hash(), &encode_certificate(cert))
}
