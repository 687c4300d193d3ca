//! Caterpillar → cocoon key expansion.
//!
//! The RA holds only the caterpillar public key `A` and a per-batch
//! expansion key; for index `i` it computes `B_i = A + f(i)·G`. The end
//! entity, knowing `a`, derives the matching `b_i = a + f(i)`.
//!
//! `f(i)` is one block-cipher call: the index as a 16-byte big-endian block
//! encrypted under the expansion key with the curve's companion cipher
//! (AES-128 for NIST P-256 and brainpoolP256r1, SM4 for SM2), read as an
//! integer mod n, with 0 mapped to 1.

use rand::CryptoRng;
use thiserror::Error;

use crate::crypto::{CurveId, KeyPair, Point, Scalar, SymmetricAlg};

pub const EXPANSION_KEY_LEN: usize = 16;
pub const DEFAULT_BATCH_SIZE: u32 = 20;
pub const MAX_BATCH_SIZE: u32 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ButterflyError {
    #[error("malformed or mismatched curve point")]
    MalformedPoint,
    #[error("scalar out of range")]
    OutOfRange,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaterpillarKey {
    pub keypair: KeyPair,
    pub expansion_key: [u8; EXPANSION_KEY_LEN],
}

impl CaterpillarKey {
    pub fn generate<R: CryptoRng + ?Sized>(curve: CurveId, rng: &mut R) -> Self {
        let keypair = KeyPair::generate(curve, rng);
        let mut expansion_key = [0u8; EXPANSION_KEY_LEN];
        rng.fill_bytes(&mut expansion_key);
        CaterpillarKey { keypair, expansion_key }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CocoonPublic {
    pub index: u32,
    pub point: Point,
}

fn cipher_for(curve: CurveId) -> SymmetricAlg {
    match curve {
        CurveId::NistP256 | CurveId::BrainpoolP256 => SymmetricAlg::Aes128,
        CurveId::Sm2 => SymmetricAlg::Sm4,
    }
}

pub fn prf_f(expansion_key: &[u8; EXPANSION_KEY_LEN], index: u32, curve: CurveId) -> Scalar {
    let mut block = [0u8; 16];
    block[12..].copy_from_slice(&index.to_be_bytes());
    let mut wide = [0u8; 32];
    wide[16..].copy_from_slice(&cipher_for(curve).encrypt_block(expansion_key, &block));
    let f = Scalar::reduce(curve, &wide);
    if f.is_zero() { Scalar::one(curve) } else { f }
}

pub fn expand_cocoon_public(
    caterpillar: &Point,
    expansion_key: &[u8; EXPANSION_KEY_LEN],
    index: u32,
    curve: CurveId,
) -> Result<CocoonPublic, ButterflyError> {
    if caterpillar.curve() != curve {
        return Err(ButterflyError::MalformedPoint);
    }
    let f = prf_f(expansion_key, index, curve);
    let point = Point::mul_base(&f)
        .and_then(|fg| caterpillar.add(&fg))
        .ok_or(ButterflyError::MalformedPoint)?;
    Ok(CocoonPublic { index, point })
}

pub fn expand_cocoon_private(
    caterpillar: &Scalar,
    expansion_key: &[u8; EXPANSION_KEY_LEN],
    index: u32,
    curve: CurveId,
) -> Result<Scalar, ButterflyError> {
    if caterpillar.curve() != curve || caterpillar.is_zero() {
        return Err(ButterflyError::OutOfRange);
    }
    let b = caterpillar.add(&prf_f(expansion_key, index, curve));
    if b.is_zero() {
        return Err(ButterflyError::OutOfRange);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn prf_deterministic_and_distinct() {
        let key = [0x42; 16];
        for curve in CurveId::ALL {
            assert_eq!(prf_f(&key, 5, curve), prf_f(&key, 5, curve));
            let mut seen = std::collections::HashSet::new();
            for i in 0..10_000 {
                assert!(seen.insert(prf_f(&key, i, curve).to_bytes()));
            }
        }
    }

    #[test]
    fn public_private_commute() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for curve in CurveId::ALL {
            let cat = CaterpillarKey::generate(curve, &mut rng);
            for i in 0..100 {
                let b = expand_cocoon_private(cat.keypair.private(), &cat.expansion_key, i, curve).unwrap();
                let pb = expand_cocoon_public(cat.keypair.public(), &cat.expansion_key, i, curve).unwrap();
                assert_eq!(Point::mul_base(&b).unwrap(), pb.point);
                assert_eq!(pb.index, i);
            }
        }
    }

    #[test]
    fn modular_wrap_keeps_identity() {
        // a = n − 1, so a + f(i) wraps.
        for curve in CurveId::ALL {
            let a = Scalar::one(curve).neg();
            let key = [7u8; 16];
            let b = expand_cocoon_private(&a, &key, 3, curve).unwrap();
            let pa = Point::mul_base(&a).unwrap();
            assert_eq!(Point::mul_base(&b).unwrap(), expand_cocoon_public(&pa, &key, 3, curve).unwrap().point);
        }
    }

    #[test]
    fn zero_caterpillar_rejected() {
        let z = Scalar::zero(CurveId::NistP256);
        assert_eq!(expand_cocoon_private(&z, &[0; 16], 0, CurveId::NistP256), Err(ButterflyError::OutOfRange));
    }
}
