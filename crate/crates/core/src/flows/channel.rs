//! GBA-style bootstrap and the AEAD channel it yields.
//!
//! One challenge–response round over a pre-shared 16-byte subscriber
//! secret:
//!
//! ```text
//! EE → AS   0x20 | name var
//! AS → EE   0x21 | challenge[16]
//! EE → AS   0x22 | H(secret ‖ challenge)
//! session_key = H(secret ‖ challenge ‖ 0x01)[..16]
//! ```
//!
//! Channel frames are `0x30 | counter u64 | AEAD(ciphertext ‖ tag) var`,
//! with nonce `direction ‖ 0x000000 ‖ counter`. Receivers require strictly
//! increasing counters.

use crate::codec::{CodecError, Reader, Writer};
use crate::crypto::CryptoProfile;
use crate::crypto::symmetric::NONCE_LEN;

pub const GBA_AUTH_REQUEST: u8 = 0x20;
pub const GBA_CHALLENGE: u8 = 0x21;
pub const GBA_AUTH_RESPONSE: u8 = 0x22;
pub const CHANNEL_FRAME: u8 = 0x30;

pub const SUBSCRIBER_SECRET_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelSide {
    /// The end entity.
    Device,
    /// The authentication system.
    Network,
}

impl ChannelSide {
    fn direction_byte(self) -> u8 {
        match self {
            ChannelSide::Device => 0x01,
            ChannelSide::Network => 0x02,
        }
    }

    fn peer(self) -> Self {
        match self {
            ChannelSide::Device => ChannelSide::Network,
            ChannelSide::Network => ChannelSide::Device,
        }
    }
}

/// One endpoint of an authenticated channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecureChannel {
    profile: CryptoProfile,
    session_key: [u8; 16],
    side: ChannelSide,
    send_counter: u64,
    recv_counter: u64,
}

/// Frame failed authentication, was replayed, or was malformed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelAuthFailure;

impl SecureChannel {
    pub fn new(profile: CryptoProfile, session_key: [u8; 16], side: ChannelSide) -> Self {
        SecureChannel { profile, session_key, side, send_counter: 0, recv_counter: 0 }
    }

    pub fn session_key(&self) -> &[u8; 16] {
        &self.session_key
    }

    pub fn side(&self) -> ChannelSide {
        self.side
    }

    fn nonce(side: ChannelSide, counter: u64) -> [u8; NONCE_LEN] {
        let mut n = [0u8; NONCE_LEN];
        n[0] = side.direction_byte();
        n[4..].copy_from_slice(&counter.to_be_bytes());
        n
    }

    pub fn seal(&mut self, plaintext: &[u8]) -> Vec<u8> {
        self.send_counter += 1;
        let sealed = self.profile.aead_encrypt(&self.session_key, &Self::nonce(self.side, self.send_counter), plaintext);
        let mut w = Writer::new();
        w.u8(CHANNEL_FRAME).u64(self.send_counter).var(&sealed);
        w.into_bytes()
    }

    pub fn open(&mut self, frame: &[u8]) -> Result<Vec<u8>, ChannelAuthFailure> {
        let parse = || -> Result<(u64, &[u8]), CodecError> {
            let mut r = Reader::new(frame);
            if r.u8()? != CHANNEL_FRAME {
                return Err(CodecError::InvalidField("frame type"));
            }
            let counter = r.u64()?;
            let sealed = r.var()?;
            r.finish()?;
            Ok((counter, sealed))
        };
        let (counter, sealed) = parse().map_err(|_| ChannelAuthFailure)?;
        if counter <= self.recv_counter {
            return Err(ChannelAuthFailure);
        }
        let plain = self
            .profile
            .aead_decrypt(&self.session_key, &Self::nonce(self.side.peer(), counter), sealed)
            .map_err(|_| ChannelAuthFailure)?;
        self.recv_counter = counter;
        Ok(plain)
    }
}

pub(crate) fn gba_response(profile: CryptoProfile, secret: &[u8; 16], challenge: &[u8; 16]) -> [u8; 32] {
    profile.hash().digest_parts(&[secret, challenge])
}

pub(crate) fn gba_session_key(profile: CryptoProfile, secret: &[u8; 16], challenge: &[u8; 16]) -> [u8; 16] {
    let d = profile.hash().digest_parts(&[secret, challenge, &[0x01]]);
    d[..16].try_into().expect("16 of 32 bytes")
}
