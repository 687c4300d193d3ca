//! Golden fixtures: seeded artifacts whose bytes must never drift.
//!
//! Layout under the fixtures directory:
//!
//! ```text
//! <profile>/root.cert          self-signed root
//! <profile>/root.id            hex HashedId8 of root.cert
//! <profile>/signer.cert        certificate that signed bsm.msg (implicit for scms)
//! <profile>/bsm.msg            SignedData, 200-byte payload, certificate signer
//! <profile>/encrypted.msg      bsm.msg encrypted to recipient.cert
//! <profile>/recipient.cert     explicit encryption recipient
//! <profile>/butterfly.seed     caterpillar private key and expansion key, hex
//! <profile>/butterfly_20.txt   `index compressed-point-hex` for indices 0..20
//! bench_fakeclock.csv          micro-benchmark report under a fake clock
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::bench::{FakeClock, ReportFormat, crypto_suite_specs, emit_report, run_micro_bench_with};
use crate::butterfly::{EXPANSION_KEY_LEN, expand_cocoon_public};
use crate::cert::{CertKind, Time32, Validity, ecqv_issue, issue_explicit, self_sign_root, time32_from_unix};
use crate::crypto::{CryptoProfile, Scalar};
use crate::secured::{Credential, HashIdPolicy, SignerMode, encrypt_signed, sign_data};

pub const GOLDEN_SEED: u64 = 20_040_101;
pub const BUTTERFLY_BATCH: u32 = 20;

/// Time at which every golden artifact is issued and valid.
pub fn golden_time() -> Time32 {
    time32_from_unix(1_700_000_000)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenFile {
    /// Path relative to the fixtures directory, `/`-separated.
    pub path: String,
    pub bytes: Vec<u8>,
}

fn file(path: String, bytes: Vec<u8>) -> GoldenFile {
    GoldenFile { path, bytes }
}

fn rng(profile: CryptoProfile, label: &str) -> ChaCha20Rng {
    crate::flows::derive_rng(GOLDEN_SEED, &format!("{profile}/{label}"))
}

fn profile_files(p: CryptoProfile) -> Vec<GoldenFile> {
    let now = golden_time();
    let dir = p.name();
    let mut out = Vec::new();

    let mut r = rng(p, "root");
    let (root, root_key) = self_sign_root(p, "golden root", Validity::new(now, 20 * 365 * 86_400), &mut r)
        .expect("static name fits");
    out.push(file(format!("{dir}/root.cert"), root.to_bytes()));
    out.push(file(format!("{dir}/root.id"), format!("{}\n", root.hashed_id8(p)).into_bytes()));

    let mut r = rng(p, "signer");
    let validity = Validity::new(now, 7 * 86_400);
    let signer = if p == CryptoProfile::Scms {
        let request = p.generate_keypair(&mut r);
        let issued = ecqv_issue(p, &root, &root_key, request.public(), CertKind::Authorization, "golden signer", validity, &mut r)
            .expect("fresh root issues");
        let d = crate::cert::ecqv_derive_private(p, &issued.certificate, request.private(), &issued.contribution)
            .expect("derivation succeeds");
        Credential::new(p, issued.certificate, d, root.verification_key()).expect("ECQV pair corresponds")
    } else {
        let key = p.generate_keypair(&mut r);
        let cert = issue_explicit(p, &root, &root_key, key.public(), CertKind::Authorization, "golden signer", validity, &mut r)
            .expect("fresh root issues");
        Credential::new_unchecked(cert, key)
    };
    out.push(file(format!("{dir}/signer.cert"), signer.certificate().to_bytes()));

    let mut r = rng(p, "bsm");
    let mut payload = vec![0u8; 200];
    r.fill_bytes(&mut payload);
    let bsm = sign_data(
        p,
        &payload,
        crate::cert::PSID_BSM,
        &signer,
        SignerMode::Certificate,
        HashIdPolicy::Profile,
        u64::from(now) * 1_000_000,
        &mut r,
    )
    .expect("golden signer signs");
    out.push(file(format!("{dir}/bsm.msg"), bsm.to_bytes()));

    let mut r = rng(p, "recipient");
    let recipient_key = p.generate_keypair(&mut r);
    let recipient = issue_explicit(
        p,
        &root,
        &root_key,
        recipient_key.public(),
        CertKind::Enrollment,
        "golden recipient",
        validity,
        &mut r,
    )
    .expect("fresh root issues");
    let encrypted = encrypt_signed(p, &bsm, &recipient, &mut r).expect("explicit recipient");
    out.push(file(format!("{dir}/recipient.cert"), recipient.to_bytes()));
    out.push(file(format!("{dir}/encrypted.msg"), encrypted.to_bytes()));

    let mut r = rng(p, "butterfly");
    let a = Scalar::random_nonzero(p.curve(), &mut r);
    let mut key = [0u8; EXPANSION_KEY_LEN];
    r.fill_bytes(&mut key);
    let caterpillar = crate::crypto::Point::mul_base(&a).expect("nonzero scalar");
    out.push(file(
        format!("{dir}/butterfly.seed"),
        format!("{}\n{}\n", hex::encode(a.to_bytes()), hex::encode(key)).into_bytes(),
    ));
    let mut listing = String::new();
    for i in 0..BUTTERFLY_BATCH {
        let c = expand_cocoon_public(&caterpillar, &key, i, p.curve()).expect("valid caterpillar");
        writeln!(listing, "{i} {}", hex::encode(c.point.to_compressed())).expect("string write");
    }
    out.push(file(format!("{dir}/butterfly_{BUTTERFLY_BATCH}.txt"), listing.into_bytes()));
    out
}

/// Micro-benchmark CSV with every sample drawn from a [`FakeClock`].
pub fn fake_clock_csv() -> Vec<u8> {
    let reports: Vec<_> = crypto_suite_specs(30)
        .into_iter()
        .enumerate()
        .map(|(i, spec)| {
            let spec = spec.warmup(0);
            run_micro_bench_with(&spec, &mut FakeClock::new(i as u64), GOLDEN_SEED).expect("suite specs are valid")
        })
        .collect();
    emit_report(&reports, ReportFormat::Csv)
}

/// Every golden file, regenerated from [`GOLDEN_SEED`].
pub fn golden_fixtures() -> Vec<GoldenFile> {
    let mut files: Vec<_> = CryptoProfile::ALL.into_iter().flat_map(profile_files).collect();
    files.push(file("bench_fakeclock.csv".into(), fake_clock_csv()));
    files
}

/// Writes every golden file under `dir`; returns the paths written.
pub fn write_fixtures(dir: &Path) -> io::Result<Vec<PathBuf>> {
    golden_fixtures()
        .into_iter()
        .map(|f| {
            let path = dir.join(&f.path);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, &f.bytes)?;
            Ok(path)
        })
        .collect()
}

/// Relative paths of golden files that are missing or differ under `dir`.
pub fn stale_fixtures(dir: &Path) -> Vec<String> {
    golden_fixtures()
        .into_iter()
        .filter(|f| fs::read(dir.join(&f.path)).ok().as_deref() != Some(f.bytes.as_slice()))
        .map(|f| f.path)
        .collect()
}
