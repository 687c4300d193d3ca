use std::hint::black_box;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{Algorithm, BenchError, BenchReport, BenchSpec, BenchTarget, Clock, MonotonicClock, SampleBuffer, host_descriptor};
use crate::cert::{Time32, time32_from_unix};
use crate::crypto::{CryptoProfile, CurveId, KeyPair};
use crate::flows::{Deployment, FlowError, MessageBus};
use crate::secured::{
    Credential, HashIdPolicy, NoResolver, SignedData, SignerMode, TrustChain, ValidatedCache, sign_data,
    verify_signed_data_cached,
};

/// Warmup, then `spec.iterations` timed calls of `op` on fresh inputs from
/// `prepare`. Input preparation and result drops happen outside the timed
/// region; the sample buffer is sized up front.
fn timed<I, O>(
    spec: &BenchSpec,
    clock: &mut dyn Clock,
    mut prepare: impl FnMut() -> I,
    mut op: impl FnMut(I) -> O,
) -> SampleBuffer {
    for _ in 0..spec.warmup {
        black_box(op(prepare()));
    }
    let mut samples = SampleBuffer::with_capacity(spec.iterations as usize);
    for _ in 0..spec.iterations {
        let input = prepare();
        let t0 = clock.now_ns();
        let out = op(black_box(input));
        let t1 = clock.now_ns();
        black_box(out);
        samples.record(t1.saturating_sub(t0));
    }
    samples
}

fn random_bytes(rng: &mut ChaCha20Rng, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng.fill_bytes(&mut v);
    v
}

fn profile_for(curve: CurveId) -> CryptoProfile {
    CryptoProfile::ALL.into_iter().find(|p| p.curve() == curve).expect("every curve has a profile")
}

/// Runs a micro-benchmark on the monotonic clock.
pub fn run_micro_bench(spec: &BenchSpec) -> Result<BenchReport, BenchError> {
    run_micro_bench_with(spec, &mut MonotonicClock::new(), 0)
}

/// Runs a micro-benchmark with an explicit clock; `seed` fixes the inputs.
pub fn run_micro_bench_with(spec: &BenchSpec, clock: &mut dyn Clock, seed: u64) -> Result<BenchReport, BenchError> {
    spec.validate()?;
    if spec.target.is_e2e() {
        return Err(BenchError::UnknownTarget(format!("{} is an end-to-end target", spec.target)));
    }
    // Inputs and in-operation randomness come from separate streams so the
    // two closures can borrow them independently.
    let mut inputs = ChaCha20Rng::seed_from_u64(seed);
    let mut op_rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
    let n = spec.payload_bytes;
    let samples = match (spec.target, spec.resolve()?) {
        (BenchTarget::Keygen | BenchTarget::KemKeygen, Algorithm::Curve(curve)) => {
            timed(spec, clock, || (), |()| KeyPair::generate(curve, &mut op_rng))
        }
        (BenchTarget::Sign, Algorithm::Curve(curve)) => {
            let p = profile_for(curve);
            let key = p.generate_keypair(&mut inputs);
            timed(spec, clock, || random_bytes(&mut inputs, n), |m| p.sign(&key, &m, &mut op_rng))
        }
        (BenchTarget::Verify, Algorithm::Curve(curve)) => {
            let p = profile_for(curve);
            let key = p.generate_keypair(&mut inputs);
            let mut sign_rng = ChaCha20Rng::seed_from_u64(seed ^ 0x516);
            timed(
                spec,
                clock,
                || {
                    let m = random_bytes(&mut inputs, n);
                    let s = p.sign(&key, &m, &mut sign_rng);
                    (m, s)
                },
                |(m, s)| p.verify(key.public(), &m, &s),
            )
        }
        (BenchTarget::KemEncap, Algorithm::Curve(curve)) => {
            let p = profile_for(curve);
            let recipient = *p.generate_keypair(&mut inputs).public();
            timed(
                spec,
                clock,
                || {
                    let mut k = [0u8; 16];
                    inputs.fill_bytes(&mut k);
                    k
                },
                |k| p.kem_encapsulate(&recipient, &k, &mut op_rng),
            )
        }
        (BenchTarget::KemDecap, Algorithm::Curve(curve)) => {
            let p = profile_for(curve);
            let recipient = p.generate_keypair(&mut inputs);
            let mut enc_rng = ChaCha20Rng::seed_from_u64(seed ^ 0xe4c);
            timed(
                spec,
                clock,
                || {
                    let mut k = [0u8; 16];
                    inputs.fill_bytes(&mut k);
                    p.kem_encapsulate(recipient.public(), &k, &mut enc_rng).expect("valid recipient")
                },
                |ct| p.kem_decapsulate(&recipient, &ct),
            )
        }
        (BenchTarget::Hash, Algorithm::Hash(h)) => timed(spec, clock, || random_bytes(&mut inputs, n), |m| h.digest(&m)),
        (BenchTarget::SymEncrypt, Algorithm::Symmetric(alg)) => {
            let key: [u8; 16] = random_bytes(&mut inputs, 16).try_into().expect("16 bytes");
            timed(
                spec,
                clock,
                || {
                    let nonce: [u8; 12] = random_bytes(&mut inputs, 12).try_into().expect("12 bytes");
                    (nonce, random_bytes(&mut inputs, n))
                },
                |(nonce, m)| alg.aead_encrypt(&key, &nonce, &m),
            )
        }
        (BenchTarget::SymDecrypt, Algorithm::Symmetric(alg)) => {
            let key: [u8; 16] = random_bytes(&mut inputs, 16).try_into().expect("16 bytes");
            timed(
                spec,
                clock,
                || {
                    let nonce: [u8; 12] = random_bytes(&mut inputs, 12).try_into().expect("12 bytes");
                    let sealed = alg.aead_encrypt(&key, &nonce, &random_bytes(&mut inputs, n));
                    (nonce, sealed)
                },
                |(nonce, sealed)| alg.aead_decrypt(&key, &nonce, &sealed),
            )
        }
        _ => unreachable!("resolve() pairs targets with algorithm kinds"),
    };
    Ok(BenchReport::from_samples(spec.clone(), samples.as_slice(), host_descriptor()))
}

/// Completed PKI for one profile: an authorized signing credential and
/// the receiver's trust store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PkiState {
    pub profile: CryptoProfile,
    pub now: Time32,
    pub credential: Credential,
    pub trust: TrustChain,
}

impl PkiState {
    pub fn new(profile: CryptoProfile, now: Time32, credential: Credential, trust: TrustChain) -> Self {
        PkiState { profile, now, credential, trust }
    }

    /// Runs bootstrap → enroll → authorize (batch of one) under `seed`.
    pub fn provision(profile: CryptoProfile, seed: u64) -> Result<Self, FlowError> {
        let now = time32_from_unix(1_700_000_000);
        let mut dep = Deployment::new(profile, now, seed);
        let mut ee = dep.bootstrap("bench-vehicle");
        let mut bus = MessageBus::new();
        dep.enroll(&mut ee, &mut bus)?;
        let credential = dep.authorize(&mut ee, 1, &mut bus)?.remove(0);
        Ok(PkiState { profile, now, credential, trust: dep.trust() })
    }

    fn sign_bsm(&self, payload: &[u8], rng: &mut ChaCha20Rng) -> SignedData {
        sign_data(
            self.profile,
            payload,
            crate::cert::PSID_BSM,
            &self.credential,
            SignerMode::Certificate,
            HashIdPolicy::Profile,
            u64::from(self.now) * 1_000_000,
            rng,
        )
        .expect("credential signs its own messages")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum E2eOperation {
    Generate,
    Verify,
}

impl E2eOperation {
    pub fn target(self) -> BenchTarget {
        match self {
            E2eOperation::Generate => BenchTarget::E2eSign,
            E2eOperation::Verify => BenchTarget::E2eVerify,
        }
    }
}

/// End-to-end BSM benchmark on the monotonic clock.
pub fn run_e2e_bench(
    state: Option<&PkiState>,
    profile: CryptoProfile,
    operation: E2eOperation,
    iterations: u32,
) -> Result<BenchReport, BenchError> {
    let spec = BenchSpec::new(operation.target(), profile.name()).iterations(iterations);
    run_e2e_bench_with(state, &spec, &mut MonotonicClock::new(), 0)
}

/// End-to-end benchmark: `generate` times `sign_data` of a BSM with the
/// certificate in the signer field; `verify` times verification by a
/// receiver that has already validated the signer's chain once, so every
/// message still pays for the contained or reconstructed key.
pub fn run_e2e_bench_with(
    state: Option<&PkiState>,
    spec: &BenchSpec,
    clock: &mut dyn Clock,
    seed: u64,
) -> Result<BenchReport, BenchError> {
    spec.validate()?;
    let Algorithm::Profile(profile) = spec.resolve()? else {
        return Err(BenchError::UnknownTarget(format!("{} is not an end-to-end target", spec.target)));
    };
    let state = state.filter(|s| s.profile == profile).ok_or(BenchError::MissingPkiState(profile))?;
    let mut inputs = ChaCha20Rng::seed_from_u64(seed);
    let mut op_rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
    let n = spec.payload_bytes;
    let samples = match spec.target {
        BenchTarget::E2eSign => timed(spec, clock, || random_bytes(&mut inputs, n), |m| state.sign_bsm(&m, &mut op_rng)),
        BenchTarget::E2eVerify => {
            let mut cache = warm_cache(state, &mut op_rng);
            timed(
                spec,
                clock,
                || state.sign_bsm(&random_bytes(&mut inputs, n), &mut op_rng),
                |msg| verify_signed_data_cached(profile, &msg, &NoResolver, &state.trust, state.now, &mut cache),
            )
        }
        _ => return Err(BenchError::UnknownTarget(format!("{} is not an end-to-end target", spec.target))),
    };
    Ok(BenchReport::from_samples(spec.clone(), samples.as_slice(), host_descriptor()))
}

fn warm_cache(state: &PkiState, rng: &mut ChaCha20Rng) -> ValidatedCache {
    let mut cache = ValidatedCache::new();
    let msg = state.sign_bsm(b"warm-up", rng);
    let out = verify_signed_data_cached(state.profile, &msg, &NoResolver, &state.trust, state.now, &mut cache);
    assert!(out.is_accepted(), "benchmark credential must verify: {:?}", out.verdict);
    cache
}

/// Scalar multiplications in one warm-cache verification, the operation
/// the e2e verify benchmark times.
pub fn e2e_verify_scalar_muls(state: &PkiState) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut cache = warm_cache(state, &mut rng);
    let msg = state.sign_bsm(&[0u8; super::E2E_PAYLOAD_BYTES], &mut rng);
    let out = verify_signed_data_cached(state.profile, &msg, &NoResolver, &state.trust, state.now, &mut cache);
    assert!(out.is_accepted());
    out.scalar_muls
}
