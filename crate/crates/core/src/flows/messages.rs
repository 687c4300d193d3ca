//! Payloads carried inside the flow SPDUs.
//!
//! Each payload starts with a one-byte type tag so a transcript can be read
//! back without context. Field encodings follow the canonical codec.

use crate::cert::{Certificate, HashedId8};
use crate::codec::cert::read_certificate;
use crate::codec::{CodecError, Reader, Writer};
use crate::crypto::{CurveId, Point, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowPayload {
    /// SCMS / C-SCMS enrollment request: subject name and the request key
    /// (ECQV request point for implicit issuance, verification key otherwise).
    EeEcaCertRequest { name: String, public: Point },
    EcaEeCertResponse { certificate: Certificate, contribution: Option<Scalar> },
    /// CCMS proof-of-possession body, signed with the new enrolment key.
    InnerEcRequest { name: String, public: Point },
    /// CCMS outer body (signed with the canonical key): the encoded inner SignedData.
    EnrolmentRequest { inner: Vec<u8> },
    EnrolmentResponse { certificate: Certificate },
    EeRaCertRequest { caterpillar: Point, expansion_key: [u8; 16], batch_size: u32 },
    RaEeCertAck { request: HashedId8, batch_size: u32 },
    RaAcaCertRequest { batch: HashedId8, index: u32, cocoon: Point },
    /// Certificate plus private-key contribution for one butterfly index.
    AcaResponse { certificate: Certificate, contribution: Scalar },
    /// `encrypted` is a SignedEncrypted AcaResponse addressed to the cocoon key.
    AcaRaCertResponse { batch: HashedId8, index: u32, encrypted: Vec<u8> },
    EeRaDownloadRequest { request: HashedId8 },
    /// Download bundle: RaEeCertInfo (batch id, size, indices) and the
    /// encrypted AcaResponses in index order.
    RaEeDownload { batch: HashedId8, batch_size: u32, indices: Vec<u32>, responses: Vec<Vec<u8>> },
    EcSignature { public: Point },
    AuthorizationRequest { public: Point, ea: HashedId8, ec_signature: Vec<u8> },
    AuthorizationValidationRequest { request: HashedId8, public: Point, ec_signature: Vec<u8> },
    AuthorizationValidationResponse { request: HashedId8, approved: bool },
    AuthorizationResponse { certificate: Option<Certificate> },
}

impl FlowPayload {
    pub fn type_tag(&self) -> u8 {
        match self {
            FlowPayload::EeEcaCertRequest { .. } => 0x01,
            FlowPayload::EcaEeCertResponse { .. } => 0x02,
            FlowPayload::InnerEcRequest { .. } => 0x03,
            FlowPayload::EnrolmentRequest { .. } => 0x04,
            FlowPayload::EnrolmentResponse { .. } => 0x05,
            FlowPayload::EeRaCertRequest { .. } => 0x06,
            FlowPayload::RaEeCertAck { .. } => 0x07,
            FlowPayload::RaAcaCertRequest { .. } => 0x08,
            FlowPayload::AcaResponse { .. } => 0x09,
            FlowPayload::AcaRaCertResponse { .. } => 0x0a,
            FlowPayload::EeRaDownloadRequest { .. } => 0x0b,
            FlowPayload::RaEeDownload { .. } => 0x0c,
            FlowPayload::EcSignature { .. } => 0x0d,
            FlowPayload::AuthorizationRequest { .. } => 0x0e,
            FlowPayload::AuthorizationValidationRequest { .. } => 0x0f,
            FlowPayload::AuthorizationValidationResponse { .. } => 0x10,
            FlowPayload::AuthorizationResponse { .. } => 0x11,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FlowPayload::EeEcaCertRequest { .. } => "EeEcaCertRequest",
            FlowPayload::EcaEeCertResponse { .. } => "EcaEeCertResponse",
            FlowPayload::InnerEcRequest { .. } => "InnerEcRequest",
            FlowPayload::EnrolmentRequest { .. } => "EnrolmentRequest",
            FlowPayload::EnrolmentResponse { .. } => "EnrolmentResponse",
            FlowPayload::EeRaCertRequest { .. } => "EeRaCertRequest",
            FlowPayload::RaEeCertAck { .. } => "RaEeCertAck",
            FlowPayload::RaAcaCertRequest { .. } => "RaAcaCertRequest",
            FlowPayload::AcaResponse { .. } => "AcaResponse",
            FlowPayload::AcaRaCertResponse { .. } => "AcaRaCertResponse",
            FlowPayload::EeRaDownloadRequest { .. } => "EeRaDownloadRequest",
            FlowPayload::RaEeDownload { .. } => "RaEeDownload",
            FlowPayload::EcSignature { .. } => "EcSignature",
            FlowPayload::AuthorizationRequest { .. } => "AuthorizationRequest",
            FlowPayload::AuthorizationValidationRequest { .. } => "AuthorizationValidationRequest",
            FlowPayload::AuthorizationValidationResponse { .. } => "AuthorizationValidationResponse",
            FlowPayload::AuthorizationResponse { .. } => "AuthorizationResponse",
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(self.type_tag());
        match self {
            FlowPayload::EeEcaCertRequest { name, public } | FlowPayload::InnerEcRequest { name, public } => {
                w.var(name.as_bytes()).point(public);
            }
            FlowPayload::EcaEeCertResponse { certificate, contribution } => {
                w.raw(&certificate.to_bytes());
                match contribution {
                    None => w.u8(0),
                    Some(r) => w.u8(1).raw(&r.to_bytes()),
                };
            }
            FlowPayload::EnrolmentRequest { inner } => {
                w.var(inner);
            }
            FlowPayload::EnrolmentResponse { certificate } => {
                w.raw(&certificate.to_bytes());
            }
            FlowPayload::EeRaCertRequest { caterpillar, expansion_key, batch_size } => {
                w.point(caterpillar).raw(expansion_key).u32(*batch_size);
            }
            FlowPayload::RaEeCertAck { request, batch_size } => {
                w.raw(&request.0).u32(*batch_size);
            }
            FlowPayload::RaAcaCertRequest { batch, index, cocoon } => {
                w.raw(&batch.0).u32(*index).point(cocoon);
            }
            FlowPayload::AcaResponse { certificate, contribution } => {
                w.raw(&certificate.to_bytes()).raw(&contribution.to_bytes());
            }
            FlowPayload::AcaRaCertResponse { batch, index, encrypted } => {
                w.raw(&batch.0).u32(*index).var(encrypted);
            }
            FlowPayload::EeRaDownloadRequest { request } => {
                w.raw(&request.0);
            }
            FlowPayload::RaEeDownload { batch, batch_size, indices, responses } => {
                w.raw(&batch.0).u32(*batch_size);
                w.u16(len16(indices.len()));
                for i in indices {
                    w.u32(*i);
                }
                w.u16(len16(responses.len()));
                for r in responses {
                    w.var(r);
                }
            }
            FlowPayload::EcSignature { public } => {
                w.point(public);
            }
            FlowPayload::AuthorizationRequest { public, ea, ec_signature } => {
                w.point(public).raw(&ea.0).var(ec_signature);
            }
            FlowPayload::AuthorizationValidationRequest { request, public, ec_signature } => {
                w.raw(&request.0).point(public).var(ec_signature);
            }
            FlowPayload::AuthorizationValidationResponse { request, approved } => {
                w.raw(&request.0).u8(u8::from(!*approved));
            }
            FlowPayload::AuthorizationResponse { certificate } => {
                match certificate {
                    None => w.u8(0),
                    Some(c) => w.u8(1).raw(&c.to_bytes()),
                };
            }
        }
        w.into_bytes()
    }

    /// Decodes a payload; scalars are range-checked against `curve`.
    pub fn decode(bytes: &[u8], curve: CurveId) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let tag = r.u8()?;
        let p = match tag {
            0x01 | 0x03 => {
                let name = read_name(&mut r)?;
                let public = r.point()?;
                if tag == 0x01 {
                    FlowPayload::EeEcaCertRequest { name, public }
                } else {
                    FlowPayload::InnerEcRequest { name, public }
                }
            }
            0x02 => {
                let certificate = read_certificate(&mut r)?;
                let contribution = if r.present("contribution")? { Some(read_scalar(&mut r, curve)?) } else { None };
                FlowPayload::EcaEeCertResponse { certificate, contribution }
            }
            0x04 => FlowPayload::EnrolmentRequest { inner: r.var()?.to_vec() },
            0x05 => FlowPayload::EnrolmentResponse { certificate: read_certificate(&mut r)? },
            0x06 => FlowPayload::EeRaCertRequest { caterpillar: r.point()?, expansion_key: r.array()?, batch_size: r.u32()? },
            0x07 => FlowPayload::RaEeCertAck { request: HashedId8(r.array()?), batch_size: r.u32()? },
            0x08 => FlowPayload::RaAcaCertRequest { batch: HashedId8(r.array()?), index: r.u32()?, cocoon: r.point()? },
            0x09 => FlowPayload::AcaResponse {
                certificate: read_certificate(&mut r)?,
                contribution: read_scalar(&mut r, curve)?,
            },
            0x0a => FlowPayload::AcaRaCertResponse {
                batch: HashedId8(r.array()?),
                index: r.u32()?,
                encrypted: r.var()?.to_vec(),
            },
            0x0b => FlowPayload::EeRaDownloadRequest { request: HashedId8(r.array()?) },
            0x0c => {
                let batch = HashedId8(r.array()?);
                let batch_size = r.u32()?;
                let n = r.u16()?;
                let indices = (0..n).map(|_| r.u32()).collect::<Result<_, _>>()?;
                let n = r.u16()?;
                let responses = (0..n).map(|_| r.var().map(<[u8]>::to_vec)).collect::<Result<_, _>>()?;
                FlowPayload::RaEeDownload { batch, batch_size, indices, responses }
            }
            0x0d => FlowPayload::EcSignature { public: r.point()? },
            0x0e => FlowPayload::AuthorizationRequest {
                public: r.point()?,
                ea: HashedId8(r.array()?),
                ec_signature: r.var()?.to_vec(),
            },
            0x0f => FlowPayload::AuthorizationValidationRequest {
                request: HashedId8(r.array()?),
                public: r.point()?,
                ec_signature: r.var()?.to_vec(),
            },
            0x10 => {
                let request = HashedId8(r.array()?);
                let approved = match r.u8()? {
                    0 => true,
                    1 => false,
                    value => return Err(CodecError::UnknownEnum { field: "validation verdict", value }),
                };
                FlowPayload::AuthorizationValidationResponse { request, approved }
            }
            0x11 => {
                let certificate = if r.present("certificate")? { Some(read_certificate(&mut r)?) } else { None };
                FlowPayload::AuthorizationResponse { certificate }
            }
            value => return Err(CodecError::UnknownEnum { field: "flow payload", value }),
        };
        r.finish()?;
        Ok(p)
    }
}

fn len16(n: usize) -> u16 {
    u16::try_from(n).expect("list longer than 65535 entries")
}

fn read_name(r: &mut Reader<'_>) -> Result<String, CodecError> {
    let raw = r.var()?;
    if raw.len() > crate::cert::MAX_NAME_LEN {
        return Err(CodecError::TooLong { field: "name", len: raw.len(), max: crate::cert::MAX_NAME_LEN });
    }
    String::from_utf8(raw.to_vec()).map_err(|_| CodecError::InvalidField("name"))
}

fn read_scalar(r: &mut Reader<'_>, curve: CurveId) -> Result<Scalar, CodecError> {
    Scalar::from_be_bytes(curve, &r.array()?).ok_or(CodecError::InvalidField("scalar"))
}
