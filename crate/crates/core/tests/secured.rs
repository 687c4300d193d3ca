use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use v2xcms_core::cert::{
    CertKind, Certificate, PSID_BSM, Validity, ecqv_derive_private, ecqv_issue, issue_explicit, self_sign_root,
};
use v2xcms_core::codec::CodecError;
use v2xcms_core::crypto::{CryptoProfile, HashAlg, KeyPair};
use v2xcms_core::secured::{
    Credential, HashIdPolicy, KeyPath, NoResolver, RejectReason, SecuredError, SignedData, SignerMode, TrustChain,
    ValidatedCache, decrypt_signed, encrypt_signed, sign_data, verify_signed_data, verify_signed_data_cached,
};

const NOW: u32 = 1_000;

struct Setup {
    chain: TrustChain,
    aca: Certificate,
    aca_key: KeyPair,
    explicit: Credential,
    implicit: Credential,
}

fn setup(profile: CryptoProfile, rng: &mut ChaCha20Rng) -> Setup {
    let (root, root_key) = self_sign_root(profile, "root", Validity::new(0, 100_000), rng).unwrap();
    let aca_key = profile.generate_keypair(rng);
    let aca =
        issue_explicit(profile, &root, &root_key, aca_key.public(), CertKind::Authority, "aca", Validity::new(0, 50_000), rng)
            .unwrap();
    let ee = profile.generate_keypair(rng);
    let cert =
        issue_explicit(profile, &aca, &aca_key, ee.public(), CertKind::Authorization, "at", Validity::new(0, 5_000), rng).unwrap();
    let explicit = Credential::new(profile, cert, *ee.private(), None).unwrap();
    let k_u = profile.generate_keypair(rng);
    let iss = ecqv_issue(profile, &aca, &aca_key, k_u.public(), CertKind::Authorization, "pc", Validity::new(0, 5_000), rng)
        .unwrap();
    let d = ecqv_derive_private(profile, &iss.certificate, k_u.private(), &iss.contribution).unwrap();
    let implicit = Credential::new(profile, iss.certificate, d, Some(aca_key.public())).unwrap();
    Setup { chain: TrustChain::new(root, vec![aca.clone()]), aca, aca_key, explicit, implicit }
}

fn bsm(rng: &mut ChaCha20Rng) -> Vec<u8> {
    let mut b = vec![0u8; 200];
    rng.fill_bytes(&mut b);
    b
}

#[test]
fn twelve_combination_round_trip() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x12);
    for profile in CryptoProfile::ALL {
        let s = setup(profile, &mut rng);
        for (cred, path) in [(&s.explicit, KeyPath::ContainedKey), (&s.implicit, KeyPath::Reconstructed)] {
            let mut resolver = HashMap::new();
            resolver.insert(cred.certificate().hashed_id8(profile), cred.certificate().clone());
            for mode in [SignerMode::Certificate, SignerMode::Digest] {
                let payload = bsm(&mut rng);
                let msg =
                    sign_data(profile, &payload, PSID_BSM, cred, mode, HashIdPolicy::Profile, 42, &mut rng).unwrap();
                assert_eq!(msg.hash_id, profile.hash());
                let wire = SignedData::from_bytes(&msg.to_bytes()).unwrap();
                let out = verify_signed_data(profile, &wire, &resolver, &s.chain, NOW);
                assert_eq!(out.verdict, Ok(path), "{profile} {mode:?}");
                if mode == SignerMode::Digest {
                    let out = verify_signed_data(profile, &wire, &NoResolver, &s.chain, NOW);
                    assert_eq!(out.verdict, Err(RejectReason::UnresolvedSigner));
                }
            }
        }
    }
}

#[test]
fn payload_bit_flips_rejected() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x13);
    for profile in CryptoProfile::ALL {
        let s = setup(profile, &mut rng);
        for cred in [&s.explicit, &s.implicit] {
            let msg = sign_data(profile, &bsm(&mut rng), PSID_BSM, cred, SignerMode::Certificate, HashIdPolicy::Profile, 1, &mut rng)
                .unwrap();
            for bit in (0..200 * 8).step_by(37) {
                let mut m = msg.clone();
                let mut p = m.tbs.payload.clone().into_vec();
                p[bit / 8] ^= 1 << (bit % 8);
                m.tbs.payload = p.as_slice().try_into().unwrap();
                let out = verify_signed_data(profile, &m, &NoResolver, &s.chain, NOW);
                assert_eq!(out.verdict, Err(RejectReason::BadSignature));
            }
            let mut m = msg.clone();
            m.tbs.header.app_id ^= 1;
            assert_eq!(verify_signed_data(profile, &m, &NoResolver, &s.chain, NOW).verdict, Err(RejectReason::BadSignature));
        }
    }
}

#[test]
fn mismatched_private_key_is_key_cert_mismatch() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x14);
    for profile in CryptoProfile::ALL {
        let s = setup(profile, &mut rng);
        let other = profile.generate_keypair(&mut rng);
        for cred in [&s.explicit, &s.implicit] {
            let issuer = Some(s.aca_key.public());
            assert_eq!(
                Credential::new(profile, cred.certificate().clone(), *other.private(), issuer),
                Err(SecuredError::KeyCertMismatch)
            );
        }
        let bad = Credential::new_unchecked(s.explicit.certificate().clone(), other);
        assert_eq!(
            sign_data(profile, b"x", PSID_BSM, &bad, SignerMode::Certificate, HashIdPolicy::Profile, 0, &mut rng),
            Err(SecuredError::KeyCertMismatch)
        );
    }
}

#[test]
fn cross_profile_never_verifies() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x15);
    let c = setup(CryptoProfile::Cscms, &mut rng);
    let s = setup(CryptoProfile::Scms, &mut rng);
    for _ in 0..100 {
        let msg = sign_data(
            CryptoProfile::Cscms,
            &bsm(&mut rng),
            PSID_BSM,
            &c.explicit,
            SignerMode::Certificate,
            HashIdPolicy::Profile,
            0,
            &mut rng,
        )
        .unwrap();
        for chain in [&s.chain, &c.chain] {
            assert!(!verify_signed_data(CryptoProfile::Scms, &msg, &NoResolver, chain, NOW).is_accepted());
        }
    }
}

#[test]
fn sha256_hash_id_override_for_cscms() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x16);
    let profile = CryptoProfile::Cscms;
    let s = setup(profile, &mut rng);
    let msg =
        sign_data(profile, b"bsm", PSID_BSM, &s.explicit, SignerMode::Certificate, HashIdPolicy::Sha256, 0, &mut rng).unwrap();
    assert_eq!(msg.hash_id, HashAlg::Sha256);
    assert!(verify_signed_data(profile, &msg, &NoResolver, &s.chain, NOW).is_accepted());
    // Relabelling the hashId changes the signature input.
    let mut m = msg.clone();
    m.hash_id = HashAlg::Sm3;
    assert_eq!(verify_signed_data(profile, &m, &NoResolver, &s.chain, NOW).verdict, Err(RejectReason::BadSignature));
    // SM3 is never acceptable under a SHA-256 profile.
    let ccms = setup(CryptoProfile::Ccms, &mut rng);
    let mut m = sign_data(CryptoProfile::Ccms, b"x", PSID_BSM, &ccms.explicit, SignerMode::Certificate, HashIdPolicy::Profile, 0, &mut rng)
        .unwrap();
    m.hash_id = HashAlg::Sm3;
    assert_eq!(
        verify_signed_data(CryptoProfile::Ccms, &m, &NoResolver, &ccms.chain, NOW).verdict,
        Err(RejectReason::HashIdMismatch)
    );
}

#[test]
fn expired_signer_is_chain_invalid() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x17);
    let profile = CryptoProfile::Scms;
    let s = setup(profile, &mut rng);
    let msg = sign_data(profile, b"x", PSID_BSM, &s.implicit, SignerMode::Certificate, HashIdPolicy::Profile, 0, &mut rng).unwrap();
    let out = verify_signed_data(profile, &msg, &NoResolver, &s.chain, 6_000);
    assert!(matches!(out.verdict, Err(RejectReason::ChainInvalid(f)) if f.index == 0));
    let no_aca = TrustChain::new(s.chain.root.clone(), vec![]);
    assert!(matches!(
        verify_signed_data(profile, &msg, &NoResolver, &no_aca, NOW).verdict,
        Err(RejectReason::ChainInvalid(_))
    ));
    let _ = &s.aca;
}

#[test]
fn encrypt_decrypt_round_trip_up_to_frame_limit() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x18);
    for profile in CryptoProfile::ALL {
        let s = setup(profile, &mut rng);
        let recipient_cert = &s.aca;
        // Digest-mode SignedData adds 89 bytes around the payload, the AEAD tag 16.
        let max = 65_535 - 16 - 89;
        for len in [0usize, 1, 200, 4096, 65_000, max] {
            let mut payload = vec![0u8; len];
            rng.fill_bytes(&mut payload);
            let inner =
                sign_data(profile, &payload, PSID_BSM, &s.explicit, SignerMode::Digest, HashIdPolicy::Profile, 7, &mut rng)
                    .unwrap();
            let enc = encrypt_signed(profile, &inner, recipient_cert, &mut rng).unwrap();
            assert_eq!(enc.recipient, recipient_cert.hashed_id8(profile));
            let wire = v2xcms_core::secured::SignedEncryptedData::from_bytes(&enc.to_bytes()).unwrap();
            assert_eq!(decrypt_signed(profile, &wire, &s.aca_key).unwrap(), inner);
            let wrong = profile.generate_keypair(&mut rng);
            assert_eq!(decrypt_signed(profile, &wire, &wrong), Err(SecuredError::TagMismatch));
        }
        let inner = sign_data(profile, &vec![1; max + 1], PSID_BSM, &s.explicit, SignerMode::Digest, HashIdPolicy::Profile, 7, &mut rng)
            .unwrap();
        assert!(matches!(
            encrypt_signed(profile, &inner, recipient_cert, &mut rng),
            Err(SecuredError::Decode(CodecError::TooLong { .. }))
        ));
        assert!(matches!(
            sign_data(profile, &vec![1; 65_536], PSID_BSM, &s.explicit, SignerMode::Digest, HashIdPolicy::Profile, 7, &mut rng),
            Err(SecuredError::Decode(CodecError::TooLong { .. }))
        ));
        // Implicit recipients need a reconstructed key first.
        assert_eq!(
            encrypt_signed(profile, &inner, s.implicit.certificate(), &mut rng).err(),
            Some(SecuredError::WrongCertType)
        );
    }
}

#[test]
fn encryption_deterministic_under_fixed_seed() {
    let profile = CryptoProfile::Ccms;
    let s = setup(profile, &mut ChaCha20Rng::seed_from_u64(0x19));
    let inner = sign_data(
        profile,
        b"fixed",
        PSID_BSM,
        &s.explicit,
        SignerMode::Certificate,
        HashIdPolicy::Profile,
        0,
        &mut ChaCha20Rng::seed_from_u64(1),
    )
    .unwrap();
    let a = encrypt_signed(profile, &inner, &s.aca, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
    let b = encrypt_signed(profile, &inner, &s.aca, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
}

#[test]
fn implicit_signer_costs_exactly_one_more_scalar_mul_with_trusted_certificate() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x1a);
    for profile in CryptoProfile::ALL {
        let s = setup(profile, &mut rng);
        let mut cache = ValidatedCache::new();
        let mut counts = Vec::new();
        for cred in [&s.explicit, &s.implicit] {
            let msg = sign_data(profile, &bsm(&mut rng), PSID_BSM, cred, SignerMode::Certificate, HashIdPolicy::Profile, 0, &mut rng)
                .unwrap();
            let cold = verify_signed_data_cached(profile, &msg, &NoResolver, &s.chain, NOW, &mut cache);
            assert!(cold.is_accepted());
            let warm = verify_signed_data_cached(profile, &msg, &NoResolver, &s.chain, NOW, &mut cache);
            assert!(warm.is_accepted());
            counts.push(warm.scalar_muls);
            // Tampering is still caught on the warm path.
            let mut m = msg.clone();
            m.tbs.header.generation_time ^= 1;
            assert_eq!(
                verify_signed_data_cached(profile, &m, &NoResolver, &s.chain, NOW, &mut cache).verdict,
                Err(RejectReason::BadSignature)
            );
        }
        assert_eq!(counts[1], counts[0] + 1, "{profile}: {counts:?}");
        assert_eq!(cache.len(), 2);
    }
}

#[test]
fn bit_flip_anywhere_in_wire_message_never_verifies() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x1b);
    let profile = CryptoProfile::Scms;
    let s = setup(profile, &mut rng);
    let msg = sign_data(profile, &bsm(&mut rng), PSID_BSM, &s.implicit, SignerMode::Certificate, HashIdPolicy::Profile, 0, &mut rng)
        .unwrap();
    let bytes = msg.to_bytes();
    for i in (0..bytes.len() * 8).step_by(11) {
        let mut b = bytes.clone();
        b[i / 8] ^= 1 << (i % 8);
        if let Ok(m) = SignedData::from_bytes(&b) {
            assert!(!verify_signed_data(profile, &m, &NoResolver, &s.chain, NOW).is_accepted(), "bit {i}");
        }
    }
}
