//! Golden fixtures: byte stability, round trips, and identifiers and
//! butterfly points recomputed by an independent implementation (Python
//! hashlib plus affine arithmetic over the published curve parameters).

use std::fs;
use std::path::PathBuf;

use v2xcms_core::cert::{Certificate, PSID_BSM};
use v2xcms_core::crypto::CryptoProfile;
use v2xcms_core::fixtures::{BUTTERFLY_BATCH, GOLDEN_SEED, golden_fixtures, golden_time, stale_fixtures};
use v2xcms_core::flows::derive_rng;
use v2xcms_core::secured::{NoResolver, SignedData, SignedEncryptedData, TrustChain, decrypt_signed, verify_signed_data};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(p: CryptoProfile, name: &str) -> Vec<u8> {
    fs::read(dir().join(p.name()).join(name)).unwrap_or_else(|e| panic!("{p}/{name}: {e}"))
}

fn cert(p: CryptoProfile, name: &str) -> Certificate {
    Certificate::from_bytes(&read(p, name)).unwrap()
}

/// (profile, root id, signer id, recipient id, B_0, B_19)
const ORACLE: [(CryptoProfile, &str, &str, &str, &str, &str); 3] = [
    (
        CryptoProfile::Scms,
        "600fb843d563ca33",
        "59c8e5b6a792c346",
        "4bfe556d74450979",
        "0291253937a8e930a176644667dac4f6ac3c9085a97e641c2f75684b15f8ef0e19",
        "024cbefdeeb695accbf4a35929384cc0abbcdd7483751fc12b4f0870d01d5dea60",
    ),
    (
        CryptoProfile::Ccms,
        "d6b1a7ca1a1251f1",
        "6d5c31da17d68029",
        "386cbb6cbec57bfb",
        "034348449a9e73e527a6dc925eb6ab8acfa0a1d3bc43d739a375719b9750694165",
        "0237ed528c3dd27fd8969fc96312567ef868f2df010568c0c2a1421972040b9e5c",
    ),
    (
        CryptoProfile::Cscms,
        "ed7152682051adef",
        "672f306d666d6ac7",
        "13d7c6ffeeeba3b1",
        "0237bdb45572f7d268b89413726b1651c9674c2d3eaca8c86912ce7f94fe465856",
        "02fb51e01951b11fe813af588faa154a16681ca70cfb9fad00e8595a368743071a",
    ),
];

#[test]
fn regenerating_twice_is_byte_identical_and_matches_disk() {
    let first = golden_fixtures();
    assert_eq!(first, golden_fixtures());
    assert_eq!(stale_fixtures(&dir()), Vec::<String>::new(), "run `v2xcms fixtures --regen`");
}

#[test]
fn identifiers_match_oracle() {
    for (p, root, signer, recipient, _, _) in ORACLE {
        let hex = |c: Certificate| c.hashed_id8(p).to_string();
        assert_eq!(hex(cert(p, "root.cert")), root, "{p}");
        assert_eq!(hex(cert(p, "signer.cert")), signer, "{p}");
        assert_eq!(hex(cert(p, "recipient.cert")), recipient, "{p}");
        assert_eq!(String::from_utf8(read(p, "root.id")).unwrap(), format!("{root}\n"));
    }
}

#[test]
fn butterfly_listing_matches_oracle() {
    for (p, _, _, _, b0, b19) in ORACLE {
        let text = String::from_utf8(read(p, &format!("butterfly_{BUTTERFLY_BATCH}.txt"))).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), BUTTERFLY_BATCH as usize);
        assert_eq!(lines[0], format!("0 {b0}"));
        assert_eq!(lines[19], format!("19 {b19}"));
    }
}

#[test]
fn files_round_trip_through_the_codec() {
    for p in CryptoProfile::ALL {
        for name in ["root.cert", "signer.cert", "recipient.cert"] {
            let bytes = read(p, name);
            assert_eq!(Certificate::from_bytes(&bytes).unwrap().to_bytes(), bytes, "{p}/{name}");
        }
        let bsm = read(p, "bsm.msg");
        assert_eq!(SignedData::from_bytes(&bsm).unwrap().to_bytes(), bsm);
        let enc = read(p, "encrypted.msg");
        assert_eq!(SignedEncryptedData::from_bytes(&enc).unwrap().to_bytes(), enc);
    }
}

#[test]
fn golden_message_verifies_and_decrypts() {
    for p in CryptoProfile::ALL {
        let trust = TrustChain::new(cert(p, "root.cert"), vec![]);
        let bsm = SignedData::from_bytes(&read(p, "bsm.msg")).unwrap();
        assert_eq!(bsm.payload().len(), 200);
        assert_eq!(bsm.tbs.header.app_id, PSID_BSM);
        let out = verify_signed_data(p, &bsm, &NoResolver, &trust, golden_time());
        assert!(out.is_accepted(), "{p}: {:?}", out.verdict);
        assert_eq!(out.signer.unwrap(), cert(p, "signer.cert"));

        // The recipient key is the first draw of its labelled stream.
        let key = p.generate_keypair(&mut derive_rng(GOLDEN_SEED, &format!("{p}/recipient")));
        let enc = SignedEncryptedData::from_bytes(&read(p, "encrypted.msg")).unwrap();
        assert_eq!(enc.recipient, cert(p, "recipient.cert").hashed_id8(p));
        assert_eq!(decrypt_signed(p, &enc, &key).unwrap(), bsm);
    }
}

#[test]
fn signer_certificate_types() {
    use v2xcms_core::cert::CertType;
    assert_eq!(cert(CryptoProfile::Scms, "signer.cert").cert_type, CertType::Implicit);
    assert_eq!(cert(CryptoProfile::Ccms, "signer.cert").cert_type, CertType::Explicit);
    assert_eq!(cert(CryptoProfile::Cscms, "signer.cert").cert_type, CertType::Explicit);
}

#[test]
fn fake_clock_report_is_stable() {
    let csv = fs::read_to_string(dir().join("bench_fakeclock.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("target,algorithm,samples,min_us,median_us,mean_us,p95_us"));
    for row in lines {
        assert_eq!(row.split(',').nth(2), Some("30"), "{row}");
    }
}
