//! ```text
//! SignedData          := 0x03 | hashId u8 | tbsData | signer | r ‖ s
//! tbsData             := appId u32 | generationTime u64 | payload var
//! signer              := 0x00 HashedId8 | 0x01 Certificate
//! SignedEncryptedData := 0x03 | recipient HashedId8
//!                        | ephemeral point | wrapped 16 | tag 16
//!                        | nonce 12 | ciphertext var
//! ```

use super::cert::{encode_certificate, read_certificate};
use super::{CodecError, Reader, Writer};
use crate::cert::HashedId8;
use crate::crypto::{HashAlg, KemCiphertext};
use crate::secured::{HeaderInfo, PROTOCOL_VERSION, SignedData, SignedEncryptedData, SignerId, TbsData};

fn write_tbs(w: &mut Writer, tbs: &TbsData) {
    w.u32(tbs.header.app_id).u64(tbs.header.generation_time).var(tbs.payload.as_slice());
}

/// Bytes covered by a message signature.
pub fn encode_tbs_data(tbs: &TbsData) -> Vec<u8> {
    let mut w = Writer::new();
    write_tbs(&mut w, tbs);
    w.into_bytes()
}

pub fn encode_signed_data(msg: &SignedData) -> Vec<u8> {
    let mut w = Writer::new();
    w.u8(PROTOCOL_VERSION).u8(msg.hash_id.tag());
    write_tbs(&mut w, &msg.tbs);
    match &msg.signer {
        SignerId::Digest(h) => w.u8(0).raw(&h.0),
        SignerId::Certificate(c) => w.u8(1).raw(&encode_certificate(c)),
    };
    w.signature(&msg.signature);
    w.into_bytes()
}

fn read_version(r: &mut Reader<'_>) -> Result<(), CodecError> {
    match r.u8()? {
        PROTOCOL_VERSION => Ok(()),
        value => Err(CodecError::UnknownEnum { field: "protocol version", value }),
    }
}

pub fn decode_signed_data(bytes: &[u8]) -> Result<SignedData, CodecError> {
    let mut r = Reader::new(bytes);
    read_version(&mut r)?;
    let tag = r.u8()?;
    let hash_id = HashAlg::from_tag(tag).ok_or(CodecError::UnknownEnum { field: "hash id", value: tag })?;
    let header = HeaderInfo { app_id: r.u32()?, generation_time: r.u64()? };
    let payload = r.opaque()?;
    let signer = match r.u8()? {
        0 => SignerId::Digest(HashedId8(r.array()?)),
        1 => SignerId::Certificate(Box::new(read_certificate(&mut r)?)),
        value => return Err(CodecError::UnknownEnum { field: "signer", value }),
    };
    let signature = r.signature()?;
    r.finish()?;
    Ok(SignedData { hash_id, tbs: TbsData { header, payload }, signer, signature })
}

pub fn encode_signed_encrypted(msg: &SignedEncryptedData) -> Vec<u8> {
    let mut w = Writer::new();
    w.u8(PROTOCOL_VERSION)
        .raw(&msg.recipient.0)
        .point(&msg.kem.ephemeral)
        .raw(&msg.kem.wrapped_key)
        .raw(&msg.kem.tag)
        .raw(&msg.nonce)
        .var(msg.ciphertext.as_slice());
    w.into_bytes()
}

pub fn decode_signed_encrypted(bytes: &[u8]) -> Result<SignedEncryptedData, CodecError> {
    let mut r = Reader::new(bytes);
    read_version(&mut r)?;
    let recipient = HashedId8(r.array()?);
    let kem = KemCiphertext { ephemeral: r.point()?, wrapped_key: r.array()?, tag: r.array()? };
    let nonce = r.array()?;
    let ciphertext = r.opaque()?;
    r.finish()?;
    Ok(SignedEncryptedData { recipient, kem, nonce, ciphertext })
}
