//! Canonical binary encoding for certificates and secured messages.
//!
//! Rules, applied uniformly:
//! - integers are big-endian;
//! - variable-length fields carry a 2-byte big-endian length prefix;
//! - enumerations are one byte;
//! - optional fields carry a presence byte (`0x00` absent, `0x01` present);
//! - a curve point is a one-byte curve tag followed by its 33-byte
//!   compressed SEC1 form;
//! - signatures are `r ‖ s`, 32 + 32 bytes;
//! - structures are their fields concatenated in declaration order.
//!
//! Each value therefore has exactly one encoding, and decoders reject any
//! input that is short, long, or carries an unknown discriminant.

pub(crate) mod cert;
mod message;

use std::fmt;

pub use self::cert::{decode_certificate, encode_certificate, hashed_id8, signing_bytes};
pub use self::message::{
    decode_signed_data, decode_signed_encrypted, encode_signed_data, encode_signed_encrypted, encode_tbs_data,
};

use crate::crypto::curve::COMPRESSED_LEN;
use crate::crypto::{CurveId, Point, Signature};
use thiserror::Error;

/// Longest value a 2-byte length prefix can describe.
pub const MAX_VAR_LEN: usize = u16::MAX as usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("input truncated")]
    Truncated,
    #[error("trailing bytes after value")]
    TrailingBytes,
    #[error("malformed curve point")]
    MalformedPoint,
    #[error("unknown {field} discriminant {value:#04x}")]
    UnknownEnum { field: &'static str, value: u8 },
    #[error("{field} is {len} bytes, limit is {max}")]
    TooLong { field: &'static str, len: usize, max: usize },
    #[error("invalid {0}")]
    InvalidField(&'static str),
}

/// Byte string whose length fits a 2-byte prefix.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Opaque(Vec<u8>);

impl Opaque {
    pub fn new(bytes: Vec<u8>) -> Result<Self, CodecError> {
        if bytes.len() > MAX_VAR_LEN {
            return Err(CodecError::TooLong { field: "opaque", len: bytes.len(), max: MAX_VAR_LEN });
        }
        Ok(Opaque(bytes))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Opaque {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Opaque({} bytes)", self.0.len())
    }
}

impl TryFrom<&[u8]> for Opaque {
    type Error = CodecError;

    fn try_from(value: &[u8]) -> Result<Self, Self::Error> {
        Opaque::new(value.to_vec())
    }
}

#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u16(&mut self, v: u16) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    /// Length-prefixed bytes.
    ///
    /// # Panics
    /// If `bytes` is longer than [`MAX_VAR_LEN`]; callers hold an [`Opaque`]
    /// or another bounded type.
    pub fn var(&mut self, bytes: &[u8]) -> &mut Self {
        let len = u16::try_from(bytes.len()).expect("variable field exceeds 65535 bytes");
        self.u16(len).raw(bytes)
    }

    pub fn point(&mut self, p: &Point) -> &mut Self {
        self.u8(p.curve().tag()).raw(&p.to_compressed())
    }

    pub fn signature(&mut self, s: &Signature) -> &mut Self {
        self.raw(&s.to_bytes())
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug)]
pub struct Reader<'a> {
    data: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Reader { data }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.data.len() < n {
            return Err(CodecError::Truncated);
        }
        let (head, tail) = self.data.split_at(n);
        self.data = tail;
        Ok(head)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.array::<1>()?[0])
    }

    pub fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn var(&mut self) -> Result<&'a [u8], CodecError> {
        let len = self.u16()? as usize;
        self.take(len)
    }

    pub fn opaque(&mut self) -> Result<Opaque, CodecError> {
        Ok(Opaque(self.var()?.to_vec()))
    }

    /// Presence flag of an optional field.
    pub fn present(&mut self, field: &'static str) -> Result<bool, CodecError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            value => Err(CodecError::UnknownEnum { field, value }),
        }
    }

    pub fn point(&mut self) -> Result<Point, CodecError> {
        let tag = self.u8()?;
        let curve = CurveId::from_tag(tag).ok_or(CodecError::UnknownEnum { field: "curve", value: tag })?;
        let bytes = self.take(COMPRESSED_LEN)?;
        Point::from_compressed(curve, bytes).map_err(|_| CodecError::MalformedPoint)
    }

    pub fn signature(&mut self) -> Result<Signature, CodecError> {
        Ok(Signature::from_bytes(&self.array()?))
    }

    pub fn remaining(&self) -> usize {
        self.data.len()
    }

    pub fn finish(self) -> Result<(), CodecError> {
        if self.data.is_empty() { Ok(()) } else { Err(CodecError::TrailingBytes) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_are_big_endian() {
        let mut w = Writer::new();
        w.u8(1).u16(0x0203).u32(0x0405_0607).u64(0x08090a0b0c0d0e0f);
        assert_eq!(w.into_bytes(), (1u8..=15).collect::<Vec<_>>());
    }

    #[test]
    fn var_prefix_and_truncation() {
        let mut w = Writer::new();
        w.var(b"abc");
        let bytes = w.into_bytes();
        assert_eq!(bytes, [0, 3, b'a', b'b', b'c']);
        assert_eq!(Reader::new(&bytes[..4]).var(), Err(CodecError::Truncated));
        let mut r = Reader::new(&bytes);
        assert_eq!(r.var().unwrap(), b"abc");
        r.finish().unwrap();
    }

    #[test]
    fn opaque_bound() {
        assert!(Opaque::new(vec![0; MAX_VAR_LEN]).is_ok());
        assert!(matches!(Opaque::new(vec![0; MAX_VAR_LEN + 1]), Err(CodecError::TooLong { .. })));
    }

    #[test]
    fn presence_flag_strict() {
        assert_eq!(Reader::new(&[2]).present("x"), Err(CodecError::UnknownEnum { field: "x", value: 2 }));
    }
}
