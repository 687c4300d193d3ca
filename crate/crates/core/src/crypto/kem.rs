//! ECIES-style wrapping of a 16-byte symmetric key to a recipient point.
//!
//! ```text
//! (k_e, K_e)  ephemeral keypair
//! shared      = x(k_e · Q_recipient)
//! k_enc       = H(shared ‖ 00000001)[..16]
//! k_mac       = H(shared ‖ 00000002)
//! wrapped     = key ⊕ k_enc
//! tag         = H(k_mac ‖ wrapped)[..16]
//! ```
//!
//! The same layout is used on all three curves. It is not wire-compatible
//! with IEEE 1363a ECIES nor with the SM2 public-key encryption format.

use rand::CryptoRng;

use super::curve::Point;
use super::hash::HashAlg;
use super::keys::KeyPair;
use crate::error::CryptoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KemCiphertext {
    pub ephemeral: Point,
    pub wrapped_key: [u8; 16],
    pub tag: [u8; 16],
}

struct Derived {
    k_enc: [u8; 16],
    k_mac: [u8; 32],
}

fn derive(hash: HashAlg, shared: &Point) -> Derived {
    let x = shared.x_bytes();
    let enc = hash.digest_parts(&[&x, &1u32.to_be_bytes()]);
    let k_mac = hash.digest_parts(&[&x, &2u32.to_be_bytes()]);
    let mut k_enc = [0u8; 16];
    k_enc.copy_from_slice(&enc[..16]);
    Derived { k_enc, k_mac }
}

fn tag(hash: HashAlg, k_mac: &[u8; 32], wrapped: &[u8; 16]) -> [u8; 16] {
    let full = hash.digest_parts(&[k_mac, wrapped]);
    let mut t = [0u8; 16];
    t.copy_from_slice(&full[..16]);
    t
}

pub fn encapsulate<R: CryptoRng + ?Sized>(
    hash: HashAlg,
    recipient: &Point,
    key_to_wrap: &[u8; 16],
    rng: &mut R,
) -> Result<KemCiphertext, CryptoError> {
    let ephemeral = KeyPair::generate(recipient.curve(), rng);
    let shared = recipient.mul(ephemeral.private()).ok_or(CryptoError::MalformedPoint)?;
    let d = derive(hash, &shared);
    let mut wrapped_key = *key_to_wrap;
    wrapped_key.iter_mut().zip(d.k_enc).for_each(|(w, k)| *w ^= k);
    Ok(KemCiphertext {
        ephemeral: *ephemeral.public(),
        wrapped_key,
        tag: tag(hash, &d.k_mac, &wrapped_key),
    })
}

pub fn decapsulate(hash: HashAlg, recipient: &KeyPair, ct: &KemCiphertext) -> Result<[u8; 16], CryptoError> {
    if ct.ephemeral.curve() != recipient.curve() {
        return Err(CryptoError::MalformedPoint);
    }
    let shared = ct.ephemeral.mul(recipient.private()).ok_or(CryptoError::MalformedPoint)?;
    let d = derive(hash, &shared);
    if tag(hash, &d.k_mac, &ct.wrapped_key) != ct.tag {
        return Err(CryptoError::TagMismatch);
    }
    let mut key = ct.wrapped_key;
    key.iter_mut().zip(d.k_enc).for_each(|(w, k)| *w ^= k);
    Ok(key)
}
