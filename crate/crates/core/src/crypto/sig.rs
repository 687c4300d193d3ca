//! ECDSA (NIST P-256, brainpoolP256r1) and the SM2 signature scheme.
//!
//! The scheme is chosen by the curve. SM2 prefixes the message with the
//! signer identity hash `Z_A` computed over the fixed user id
//! [`SM2_DEFAULT_USER_ID`].

use rand::CryptoRng;

use super::curve::{CurveId, Point, Scalar, curve_constants};
use super::hash::HashAlg;
use super::keys::KeyPair;

pub const SM2_DEFAULT_USER_ID: &[u8; 16] = b"1234567812345678";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature {
    pub r: [u8; 32],
    pub s: [u8; 32],
}

impl Signature {
    pub const LEN: usize = 64;

    pub fn to_bytes(&self) -> [u8; 64] {
        let mut out = [0u8; 64];
        out[..32].copy_from_slice(&self.r);
        out[32..].copy_from_slice(&self.s);
        out
    }

    pub fn from_bytes(bytes: &[u8; 64]) -> Self {
        let mut r = [0u8; 32];
        let mut s = [0u8; 32];
        r.copy_from_slice(&bytes[..32]);
        s.copy_from_slice(&bytes[32..]);
        Signature { r, s }
    }
}

/// `Z_A = H(ENTL_A ‖ ID_A ‖ a ‖ b ‖ x_G ‖ y_G ‖ x_A ‖ y_A)`.
pub fn sm2_identity_hash(hash: HashAlg, user_id: &[u8], public: &Point) -> [u8; 32] {
    let entl = u16::try_from(user_id.len() * 8).expect("user id fits ENTL").to_be_bytes();
    let [a, b, gx, gy] = curve_constants(public.curve());
    hash.digest_parts(&[
        &entl,
        user_id,
        &a,
        &b,
        &gx,
        &gy,
        &public.x_bytes(),
        &public.y_bytes(),
    ])
}

fn message_scalar(curve: CurveId, hash: HashAlg, public: &Point, message: &[u8]) -> Scalar {
    let digest = match curve {
        CurveId::Sm2 => {
            let z = sm2_identity_hash(hash, SM2_DEFAULT_USER_ID, public);
            hash.digest_parts(&[&z, message])
        }
        _ => hash.digest(message),
    };
    Scalar::reduce(curve, &digest)
}

/// Signs `message` with the scheme of the key's curve.
pub fn sign<R: CryptoRng + ?Sized>(
    curve: CurveId,
    hash: HashAlg,
    key: &KeyPair,
    message: &[u8],
    rng: &mut R,
) -> Signature {
    assert_eq!(key.curve(), curve, "key curve does not match profile");
    let e = message_scalar(curve, hash, key.public(), message);
    let d = key.private();
    loop {
        let k = Scalar::random_nonzero(curve, rng);
        let big_r = Point::mul_base(&k).expect("non-zero nonce");
        let x1 = Scalar::reduce(curve, &big_r.x_bytes());
        let (r, s) = match curve {
            CurveId::Sm2 => {
                let r = e.add(&x1);
                if r.is_zero() || r.add(&k).is_zero() {
                    continue;
                }
                let inv = d.add(&Scalar::one(curve)).invert().expect("d ≠ n−1");
                (r, inv.mul(&k.sub(&r.mul(d))))
            }
            _ => {
                if x1.is_zero() {
                    continue;
                }
                let kinv = k.invert().expect("non-zero nonce");
                (x1, kinv.mul(&e.add(&x1.mul(d))))
            }
        };
        if s.is_zero() {
            continue;
        }
        return Signature { r: r.to_bytes(), s: s.to_bytes() };
    }
}

/// Returns `false` for out-of-range `r`/`s` rather than erroring.
pub fn verify(curve: CurveId, hash: HashAlg, public: &Point, message: &[u8], sig: &Signature) -> bool {
    if public.curve() != curve {
        return false;
    }
    let in_range = |b: &[u8; 32]| Scalar::from_be_bytes(curve, b).filter(|s| !s.is_zero());
    let (Some(r), Some(s)) = (in_range(&sig.r), in_range(&sig.s)) else {
        return false;
    };
    let e = message_scalar(curve, hash, public, message);
    match curve {
        CurveId::Sm2 => {
            let t = r.add(&s);
            if t.is_zero() {
                return false;
            }
            let Some(x) = Point::mul_base_add(&s, &t, public) else {
                return false;
            };
            e.add(&Scalar::reduce(curve, &x.x_bytes())) == r
        }
        _ => {
            let w = s.invert().expect("non-zero s");
            let Some(x) = Point::mul_base_add(&e.mul(&w), &r.mul(&w), public) else {
                return false;
            };
            Scalar::reduce(curve, &x.x_bytes()) == r
        }
    }
}
