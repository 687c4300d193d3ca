use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sm2::dsa::signature::{Signer, Verifier};
use v2xcms_core::crypto::{CryptoProfile, CurveId, KeyPair, Point, Scalar, Signature};
use v2xcms_core::error::CryptoError;

fn random_bytes(rng: &mut ChaCha20Rng, max: usize) -> Vec<u8> {
    let len = rng.random_range(0..=max);
    let mut v = vec![0u8; len];
    rng.fill_bytes(&mut v);
    v
}

#[test]
fn sign_verify_thousand_pairs_per_profile() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x51_6e);
    for profile in CryptoProfile::ALL {
        for _ in 0..1000 {
            let kp = profile.generate_keypair(&mut rng);
            let msg = random_bytes(&mut rng, 256);
            let sig = profile.sign(&kp, &msg, &mut rng);
            assert!(profile.verify(kp.public(), &msg, &sig));

            if !msg.is_empty() {
                let mut m = msg.clone();
                let i = rng.random_range(0..m.len());
                m[i] ^= 1 << rng.random_range(0..8);
                assert!(!profile.verify(kp.public(), &m, &sig), "{profile}: message flip accepted");
            }

            let mut raw = sig.to_bytes();
            let i = rng.random_range(0..raw.len());
            raw[i] ^= 1 << rng.random_range(0..8);
            assert!(
                !profile.verify(kp.public(), &msg, &Signature::from_bytes(&raw)),
                "{profile}: signature flip accepted"
            );
        }
    }
}

#[test]
fn flipping_message_bit_rejects_for_each_profile() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for profile in CryptoProfile::ALL {
        let kp = profile.generate_keypair(&mut rng);
        let sig = profile.sign(&kp, b"", &mut rng);
        assert!(profile.verify(kp.public(), b"", &sig));
        let m = b"basic safety message".to_vec();
        let sig = profile.sign(&kp, &m, &mut rng);
        for bit in 0..m.len() * 8 {
            let mut t = m.clone();
            t[bit / 8] ^= 1 << (bit % 8);
            assert!(!profile.verify(kp.public(), &t, &sig));
        }
    }
}

// Independent SM2 implementation (RustCrypto `sm2::dsa`) in both directions.
#[test]
fn sm2_cross_check_with_independent_implementation() {
    let distid = "1234567812345678";
    let mut rng = ChaCha20Rng::seed_from_u64(0x5312);
    for _ in 0..50 {
        let kp = CryptoProfile::Cscms.generate_keypair(&mut rng);
        let msg = random_bytes(&mut rng, 64);

        let ours = CryptoProfile::Cscms.sign(&kp, &msg, &mut rng);
        let vk = sm2::dsa::VerifyingKey::from_sec1_bytes(distid, &kp.public().to_uncompressed()).unwrap();
        let theirs_view = sm2::dsa::Signature::from_slice(&ours.to_bytes()).unwrap();
        assert!(vk.verify(&msg, &theirs_view).is_ok());

        let sk = sm2::dsa::SigningKey::from_slice(distid, &kp.private().to_bytes()).unwrap();
        let theirs: sm2::dsa::Signature = sk.sign(&msg);
        let bytes: [u8; 64] = theirs.to_bytes().into();
        assert!(CryptoProfile::Cscms.verify(kp.public(), &msg, &Signature::from_bytes(&bytes)));
    }
    let kp = CryptoProfile::Cscms.generate_keypair(&mut rng);
    let sig = CryptoProfile::Cscms.sign(&kp, b"abc", &mut rng);
    let vk = sm2::dsa::VerifyingKey::from_sec1_bytes(distid, &kp.public().to_uncompressed()).unwrap();
    assert!(vk.verify(b"abc", &sm2::dsa::Signature::from_slice(&sig.to_bytes()).unwrap()).is_ok());
}

#[test]
fn kem_thousand_trials_per_profile() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x6b656d);
    for profile in CryptoProfile::ALL {
        for _ in 0..1000 {
            let kp = profile.generate_keypair(&mut rng);
            let other = profile.generate_keypair(&mut rng);
            let mut key = [0u8; 16];
            rng.fill_bytes(&mut key);
            let ct = profile.kem_encapsulate(kp.public(), &key, &mut rng).unwrap();
            assert_eq!(profile.kem_decapsulate(&kp, &ct).unwrap(), key);
            assert_eq!(profile.kem_decapsulate(&other, &ct), Err(CryptoError::TagMismatch));
        }
    }
}

#[test]
fn kem_fixed_seed_repeats() {
    for profile in CryptoProfile::ALL {
        let kp = profile.generate_keypair(&mut ChaCha20Rng::seed_from_u64(2));
        let a = profile.kem_encapsulate(kp.public(), &[9; 16], &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        let b = profile.kem_encapsulate(kp.public(), &[9; 16], &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(profile.kem_decapsulate(&kp, &a).unwrap(), [9; 16]);
    }
}

#[test]
fn aead_round_trip_lengths_per_profile() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    for profile in CryptoProfile::ALL {
        for len in [0usize, 1, 15, 16, 17, 200, 4096] {
            let mut key = [0u8; 16];
            let mut nonce = [0u8; 12];
            rng.fill_bytes(&mut key);
            rng.fill_bytes(&mut nonce);
            let mut pt = vec![0u8; len];
            rng.fill_bytes(&mut pt);
            let sealed = profile.aead_encrypt(&key, &nonce, &pt);
            assert_eq!(profile.aead_decrypt(&key, &nonce, &sealed).unwrap(), pt);
            if len > 0 {
                let mut t = sealed.clone();
                t[len / 2] ^= 0x10;
                assert_eq!(profile.aead_decrypt(&key, &nonce, &t), Err(CryptoError::TagMismatch));
            }
            let mut t = sealed.clone();
            *t.last_mut().unwrap() ^= 1;
            assert_eq!(profile.aead_decrypt(&key, &nonce, &t), Err(CryptoError::TagMismatch));
        }
    }
}

#[test]
fn sampled_private_scalars_stay_in_range() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x5ca1a5);
    for curve in CurveId::ALL {
        let n = curve.order();
        for _ in 0..100_000 {
            let s = Scalar::random_nonzero(curve, &mut rng);
            assert!(!s.is_zero());
            assert!(s.to_bytes() < n);
        }
    }
}

#[test]
fn generated_keypairs_satisfy_public_identity() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    for curve in CurveId::ALL {
        for _ in 0..100 {
            let kp = KeyPair::generate(curve, &mut rng);
            assert_eq!(Point::mul_base(kp.private()), Some(*kp.public()));
            assert!(kp.private().to_bytes() < curve.order());
        }
    }
}
