//! Prime-order group arithmetic over the three 256-bit curves.
//!
//! Scalars and points are stored as canonical big-endian bytes tagged with
//! their curve and are lifted into the backend field types per operation.
//! Every variable-base or fixed-base scalar multiplication bumps a
//! thread-local counter so callers can observe how many multiplications a
//! code path performed.

use std::cell::Cell;
use std::fmt;

use primeorder::PrimeCurveParams;
use primeorder::elliptic_curve::ff::PrimeField;
use primeorder::elliptic_curve::group::Group;
use primeorder::elliptic_curve::ops::Reduce;
use primeorder::elliptic_curve::point::AffineCoordinates;
use primeorder::elliptic_curve::sec1::FromSec1Point;
use primeorder::elliptic_curve::{CurveArithmetic, FieldBytes};
use primeorder::{AffinePoint, ProjectivePoint};
use rand::CryptoRng;
use serde::{Deserialize, Serialize};

use crate::error::CryptoError;

/// Length of a compressed SEC1 point.
pub const COMPRESSED_LEN: usize = 33;

thread_local! {
    static SCALAR_MULS: Cell<u64> = const { Cell::new(0) };
}

/// Number of scalar multiplications performed on this thread so far.
pub fn scalar_mul_count() -> u64 {
    SCALAR_MULS.with(Cell::get)
}

fn bump(n: u64) {
    SCALAR_MULS.with(|c| c.set(c.get() + n));
}

/// Curves selectable by a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CurveId {
    #[serde(rename = "nist-p256")]
    NistP256,
    #[serde(rename = "brainpool-p256")]
    BrainpoolP256,
    #[serde(rename = "sm2-256")]
    Sm2,
}

impl CurveId {
    pub const ALL: [CurveId; 3] = [CurveId::NistP256, CurveId::BrainpoolP256, CurveId::Sm2];

    pub fn name(self) -> &'static str {
        match self {
            CurveId::NistP256 => "nist-p256",
            CurveId::BrainpoolP256 => "brainpool-p256",
            CurveId::Sm2 => "sm2-256",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// One-byte wire discriminant.
    pub fn tag(self) -> u8 {
        match self {
            CurveId::NistP256 => 0,
            CurveId::BrainpoolP256 => 1,
            CurveId::Sm2 => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.tag() == tag)
    }

    /// Group order as big-endian bytes.
    pub fn order(self) -> [u8; 32] {
        // n - 1 + 1, computed through the backend so the constant cannot drift.
        let minus_one = Scalar::one(self).neg();
        let mut be = minus_one.to_bytes();
        for byte in be.iter_mut().rev() {
            let (v, carry) = byte.overflowing_add(1);
            *byte = v;
            if !carry {
                break;
            }
        }
        be
    }
}

impl fmt::Display for CurveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

macro_rules! dispatch {
    ($curve:expr, $C:ident => $body:expr) => {
        match $curve {
            CurveId::NistP256 => {
                type $C = p256::NistP256;
                $body
            }
            CurveId::BrainpoolP256 => {
                type $C = bp256::BrainpoolP256r1;
                $body
            }
            CurveId::Sm2 => {
                type $C = sm2::Sm2;
                $body
            }
        }
    };
}

/// Integer modulo the group order of a curve, always canonical (`< n`).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scalar {
    curve: CurveId,
    be: [u8; 32],
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({}, {})", self.curve, hex::encode(self.be))
    }
}

fn lift<C: PrimeCurveParams>(be: &[u8; 32]) -> C::Scalar {
    let repr = FieldBytes::<C>::try_from(&be[..]).expect("32-byte field");
    Option::from(C::Scalar::from_repr(repr)).expect("canonical scalar")
}

fn lower<C: PrimeCurveParams>(s: &C::Scalar) -> [u8; 32] {
    let repr = s.to_repr();
    let mut out = [0u8; 32];
    out.copy_from_slice(repr.as_ref());
    out
}

fn scalar_binop<C: PrimeCurveParams>(
    a: &[u8; 32],
    b: &[u8; 32],
    op: fn(C::Scalar, C::Scalar) -> C::Scalar,
) -> [u8; 32] {
    lower::<C>(&op(lift::<C>(a), lift::<C>(b)))
}

impl Scalar {
    /// Parses a canonical big-endian scalar; `None` when `≥ n`.
    pub fn from_be_bytes(curve: CurveId, be: &[u8; 32]) -> Option<Self> {
        let ok = dispatch!(curve, C => {
            let repr = FieldBytes::<C>::try_from(&be[..]).expect("32-byte field");
            bool::from(<C as CurveArithmetic>::Scalar::from_repr(repr).is_some())
        });
        ok.then_some(Scalar { curve, be: *be })
    }

    /// Interprets 32 big-endian bytes as an integer and reduces it mod `n`.
    pub fn reduce(curve: CurveId, be: &[u8; 32]) -> Self {
        let be = dispatch!(curve, C => {
            let repr = FieldBytes::<C>::try_from(&be[..]).expect("32-byte field");
            let s = <<C as CurveArithmetic>::Scalar as Reduce<FieldBytes<C>>>::reduce(&repr);
            lower::<C>(&s)
        });
        Scalar { curve, be }
    }

    pub fn from_u64(curve: CurveId, v: u64) -> Self {
        let mut be = [0u8; 32];
        be[24..].copy_from_slice(&v.to_be_bytes());
        Scalar { curve, be }
    }

    pub fn zero(curve: CurveId) -> Self {
        Scalar { curve, be: [0u8; 32] }
    }

    pub fn one(curve: CurveId) -> Self {
        Self::from_u64(curve, 1)
    }

    /// Uniform non-zero scalar by rejection sampling.
    pub fn random_nonzero<R: CryptoRng + ?Sized>(curve: CurveId, rng: &mut R) -> Self {
        loop {
            let mut be = [0u8; 32];
            rng.fill_bytes(&mut be);
            if let Some(s) = Self::from_be_bytes(curve, &be).filter(|s| !s.is_zero()) {
                return s;
            }
        }
    }

    pub fn curve(&self) -> CurveId {
        self.curve
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.be
    }

    pub fn is_zero(&self) -> bool {
        self.be.iter().all(|&b| b == 0)
    }

    fn check(&self, other: &Scalar) {
        assert_eq!(self.curve, other.curve, "scalar curve mismatch");
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        self.check(other);
        let be = dispatch!(self.curve, C => scalar_binop::<C>(&self.be, &other.be, |a, b| a + b));
        Scalar { curve: self.curve, be }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.check(other);
        let be = dispatch!(self.curve, C => scalar_binop::<C>(&self.be, &other.be, |a, b| a - b));
        Scalar { curve: self.curve, be }
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        self.check(other);
        let be = dispatch!(self.curve, C => scalar_binop::<C>(&self.be, &other.be, |a, b| a * b));
        Scalar { curve: self.curve, be }
    }

    pub fn neg(&self) -> Scalar {
        let be = dispatch!(self.curve, C => lower::<C>(&-lift::<C>(&self.be)));
        Scalar { curve: self.curve, be }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn invert(&self) -> Option<Scalar> {
        let be = dispatch!(self.curve, C => {
            let inv: Option<<C as CurveArithmetic>::Scalar> = lift::<C>(&self.be).invert().into();
            inv.map(|s| lower::<C>(&s))
        })?;
        Some(Scalar { curve: self.curve, be })
    }
}

/// Affine curve point, validated on-curve and never the identity.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point {
    curve: CurveId,
    x: [u8; 32],
    y: [u8; 32],
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({}, {})", self.curve, hex::encode(self.to_compressed()))
    }
}

fn affine<C: PrimeCurveParams>(p: &Point) -> AffinePoint<C> {
    let x = FieldBytes::<C>::try_from(&p.x[..]).expect("32-byte field");
    let y = FieldBytes::<C>::try_from(&p.y[..]).expect("32-byte field");
    Option::from(AffinePoint::<C>::from_coordinates(&x, &y)).expect("validated point")
}

fn from_projective<C: PrimeCurveParams>(curve: CurveId, p: ProjectivePoint<C>) -> Option<Point> {
    if bool::from(p.is_identity()) {
        return None;
    }
    let a = p.to_affine();
    let mut x = [0u8; 32];
    let mut y = [0u8; 32];
    x.copy_from_slice(a.x().as_ref());
    y.copy_from_slice(a.y().as_ref());
    Some(Point { curve, x, y })
}

impl Point {
    /// Fixed-base multiplication `k·G`; `None` only for `k = 0`.
    pub fn mul_base(k: &Scalar) -> Option<Point> {
        bump(1);
        dispatch!(k.curve, C => {
            let p = ProjectivePoint::<C>::generator() * lift::<C>(&k.be);
            from_projective::<C>(k.curve, p)
        })
    }

    /// Generator of the curve.
    pub fn generator(curve: CurveId) -> Point {
        dispatch!(curve, C => {
            from_projective::<C>(curve, ProjectivePoint::<C>::generator()).expect("generator")
        })
    }

    /// Variable-base multiplication `k·self`.
    pub fn mul(&self, k: &Scalar) -> Option<Point> {
        assert_eq!(self.curve, k.curve, "point/scalar curve mismatch");
        bump(1);
        dispatch!(self.curve, C => {
            let p = ProjectivePoint::<C>::from(affine::<C>(self)) * lift::<C>(&k.be);
            from_projective::<C>(self.curve, p)
        })
    }

    /// `a·G + b·self`, counted as two multiplications.
    pub fn mul_base_add(a: &Scalar, b: &Scalar, q: &Point) -> Option<Point> {
        assert!(a.curve == b.curve && b.curve == q.curve, "curve mismatch");
        bump(2);
        dispatch!(q.curve, C => {
            let g = ProjectivePoint::<C>::generator() * lift::<C>(&a.be);
            let p = ProjectivePoint::<C>::from(affine::<C>(q)) * lift::<C>(&b.be);
            from_projective::<C>(q.curve, g + p)
        })
    }

    /// Group addition; `None` when the sum is the identity.
    pub fn add(&self, other: &Point) -> Option<Point> {
        assert_eq!(self.curve, other.curve, "point curve mismatch");
        dispatch!(self.curve, C => {
            let p = ProjectivePoint::<C>::from(affine::<C>(self))
                + ProjectivePoint::<C>::from(affine::<C>(other));
            from_projective::<C>(self.curve, p)
        })
    }

    pub fn curve(&self) -> CurveId {
        self.curve
    }

    pub fn x_bytes(&self) -> [u8; 32] {
        self.x
    }

    pub fn y_bytes(&self) -> [u8; 32] {
        self.y
    }

    pub fn to_compressed(&self) -> [u8; COMPRESSED_LEN] {
        let mut out = [0u8; COMPRESSED_LEN];
        out[0] = 0x02 | (self.y[31] & 1);
        out[1..].copy_from_slice(&self.x);
        out
    }

    /// Decodes a 33-byte compressed SEC1 point.
    pub fn from_compressed(curve: CurveId, bytes: &[u8]) -> Result<Point, CryptoError> {
        if bytes.len() != COMPRESSED_LEN || !(bytes[0] == 0x02 || bytes[0] == 0x03) {
            return Err(CryptoError::MalformedPoint);
        }
        dispatch!(curve, C => {
            let a = AffinePoint::<C>::from_sec1_bytes(bytes).map_err(|_| CryptoError::MalformedPoint)?;
            from_projective::<C>(curve, ProjectivePoint::<C>::from(a)).ok_or(CryptoError::MalformedPoint)
        })
    }

    /// Builds a point from affine coordinates, rejecting off-curve input.
    pub fn from_coordinates(curve: CurveId, x: &[u8; 32], y: &[u8; 32]) -> Result<Point, CryptoError> {
        dispatch!(curve, C => {
            let xr = FieldBytes::<C>::try_from(&x[..]).expect("32-byte field");
            let yr = FieldBytes::<C>::try_from(&y[..]).expect("32-byte field");
            let a: Option<AffinePoint<C>> = AffinePoint::<C>::from_coordinates(&xr, &yr).into();
            a.ok_or(CryptoError::MalformedPoint)?;
        });
        Ok(Point { curve, x: *x, y: *y })
    }

    /// Uncompressed SEC1 encoding (`04 ‖ x ‖ y`).
    pub fn to_uncompressed(&self) -> [u8; 65] {
        let mut out = [0u8; 65];
        out[0] = 0x04;
        out[1..33].copy_from_slice(&self.x);
        out[33..].copy_from_slice(&self.y);
        out
    }
}

/// Curve coefficients `a`, `b` and generator coordinates, big-endian.
pub(crate) fn curve_constants(curve: CurveId) -> [[u8; 32]; 4] {
    dispatch!(curve, C => {
        let conv = |f: &<C as primeorder::elliptic_curve::hazmat::FieldArithmetic>::FieldElement| {
            let mut out = [0u8; 32];
            out.copy_from_slice(f.to_repr().as_ref());
            out
        };
        [
            conv(&C::EQUATION_A),
            conv(&C::EQUATION_B),
            conv(&C::GENERATOR.0),
            conv(&C::GENERATOR.1),
        ]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn compressed_round_trip_all_curves() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for curve in CurveId::ALL {
            let k = Scalar::random_nonzero(curve, &mut rng);
            let p = Point::mul_base(&k).unwrap();
            let c = p.to_compressed();
            assert_eq!(Point::from_compressed(curve, &c).unwrap(), p);
        }
    }

    #[test]
    fn scalar_field_identities() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for curve in CurveId::ALL {
            let a = Scalar::random_nonzero(curve, &mut rng);
            let b = Scalar::random_nonzero(curve, &mut rng);
            assert_eq!(a.add(&b).sub(&b), a);
            assert_eq!(a.mul(&a.invert().unwrap()), Scalar::one(curve));
            assert!(a.add(&a.neg()).is_zero());
            assert!(Scalar::zero(curve).invert().is_none());
        }
    }

    #[test]
    fn order_is_rejected_and_reduces_to_zero() {
        for curve in CurveId::ALL {
            let n = curve.order();
            assert!(Scalar::from_be_bytes(curve, &n).is_none());
            assert!(Scalar::reduce(curve, &n).is_zero());
        }
    }

    #[test]
    fn known_group_orders() {
        assert_eq!(
            hex::encode(CurveId::NistP256.order()),
            "ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551"
        );
        assert_eq!(
            hex::encode(CurveId::BrainpoolP256.order()),
            "a9fb57dba1eea9bc3e660a909d838d718c397aa3b561a6f7901e0e82974856a7"
        );
        assert_eq!(
            hex::encode(CurveId::Sm2.order()),
            "fffffffeffffffffffffffffffffffff7203df6b21c6052b53bbf40939d54123"
        );
    }

    #[test]
    fn mul_counter_tracks_operations() {
        let before = scalar_mul_count();
        let k = Scalar::from_u64(CurveId::Sm2, 7);
        let p = Point::mul_base(&k).unwrap();
        let _ = p.mul(&k);
        let _ = Point::mul_base_add(&k, &k, &p);
        assert_eq!(scalar_mul_count() - before, 4);
    }

    #[test]
    fn off_curve_and_bad_prefix_rejected() {
        let mut bad = [0u8; 33];
        bad[0] = 0x05;
        assert_eq!(Point::from_compressed(CurveId::NistP256, &bad), Err(CryptoError::MalformedPoint));
        assert!(Point::from_coordinates(CurveId::NistP256, &[1u8; 32], &[2u8; 32]).is_err());
    }
}
