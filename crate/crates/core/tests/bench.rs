use v2xcms_core::bench::{
    BenchError, BenchReport, BenchSpec, BenchTarget, Clock, E2eOperation, FakeClock, PkiState, ReportFormat,
    crypto_suite_specs, e2e_verify_scalar_muls, emit_report, expected_ordering_held, report_state_allocations,
    run_e2e_bench, run_e2e_bench_with, run_micro_bench, run_micro_bench_with,
};
use v2xcms_core::crypto::CryptoProfile;

fn check_shape(r: &BenchReport, n: usize) {
    assert_eq!(r.samples, n);
    assert!(r.min_us <= r.median_us && r.median_us <= r.p95_us, "{r:?}");
    assert!(r.mean_us >= r.min_us, "{r:?}");
}

/// The samples a fake-clocked run records: each timed iteration reads the
/// clock twice and keeps the difference.
fn fake_samples(seed: u64, n: usize) -> Vec<u64> {
    let mut c = FakeClock::new(seed);
    (0..n)
        .map(|_| {
            let a = c.now_ns();
            c.now_ns() - a
        })
        .collect()
}

#[test]
fn statistics_are_order_statistics_of_the_samples() {
    let spec = BenchSpec::new(BenchTarget::Hash, "sm3-256").iterations(101).warmup(3);
    let r = run_micro_bench_with(&spec, &mut FakeClock::new(5), 0).unwrap();
    let mut s = fake_samples(5, 101);
    let mean = s.iter().sum::<u64>() as f64 / 101.0 / 1000.0;
    s.sort();
    assert_eq!(r.samples, 101);
    assert_eq!(r.min_us, s[0] as f64 / 1000.0);
    assert_eq!(r.median_us, s[50] as f64 / 1000.0);
    // nearest rank: ceil(0.95 · 101) = 96
    assert_eq!(r.p95_us, s[95] as f64 / 1000.0);
    assert!((r.mean_us - mean).abs() < 1e-9);
    assert!(r.mean_us <= s[100] as f64 / 1000.0);
}

#[test]
fn every_micro_target_produces_a_report() {
    for spec in crypto_suite_specs(30) {
        let spec = spec.warmup(2);
        let r = run_micro_bench(&spec).unwrap_or_else(|e| panic!("{spec:?}: {e}"));
        check_shape(&r, 30);
        assert!(r.median_us > 0.0, "{spec:?}");
    }
}

#[test]
fn iteration_floor_and_unknown_targets() {
    let spec = BenchSpec::new(BenchTarget::Sign, "nist-p256").iterations(10);
    assert_eq!(run_micro_bench(&spec), Err(BenchError::TooFewIterations(10)));
    assert!(matches!("sha3".parse::<BenchTarget>(), Err(BenchError::UnknownTarget(_))));
    let spec = BenchSpec::new(BenchTarget::Sign, "ed25519");
    assert!(matches!(run_micro_bench(&spec), Err(BenchError::UnknownAlgorithm { .. })));
}

#[test]
fn timed_region_allocates_report_state_once() {
    for n in [30u32, 300] {
        let spec = BenchSpec::new(BenchTarget::Hash, "sha-256").iterations(n).warmup(5).payload_bytes(64);
        let before = report_state_allocations();
        run_micro_bench_with(&spec, &mut FakeClock::new(1), 0).unwrap();
        assert_eq!(report_state_allocations() - before, 1, "{n} iterations");
    }
}

#[test]
fn e2e_requires_pki_state() {
    assert_eq!(
        run_e2e_bench(None, CryptoProfile::Scms, E2eOperation::Verify, 30),
        Err(BenchError::MissingPkiState(CryptoProfile::Scms))
    );
    let ccms = PkiState::provision(CryptoProfile::Ccms, 1).unwrap();
    assert_eq!(
        run_e2e_bench(Some(&ccms), CryptoProfile::Scms, E2eOperation::Generate, 30),
        Err(BenchError::MissingPkiState(CryptoProfile::Scms))
    );
}

#[test]
fn e2e_reports_for_every_profile() {
    for p in CryptoProfile::ALL {
        let state = PkiState::provision(p, 2).unwrap();
        for op in [E2eOperation::Generate, E2eOperation::Verify] {
            let spec = BenchSpec::new(op.target(), p.name()).iterations(30).warmup(2);
            assert_eq!(spec.payload_bytes, 200);
            let r = run_e2e_bench_with(Some(&state), &spec, &mut FakeClock::new(3), 0).unwrap();
            check_shape(&r, 30);
        }
    }
}

#[test]
fn implicit_verification_costs_an_extra_multiplication() {
    let muls: Vec<u64> = CryptoProfile::ALL
        .into_iter()
        .map(|p| e2e_verify_scalar_muls(&PkiState::provision(p, 4).unwrap()))
        .collect();
    let (scms, ccms, cscms) = (muls[0], muls[1], muls[2]);
    assert!(scms > ccms, "SCMS {scms} vs CCMS {ccms}");
    assert_eq!(scms, ccms + 1);
    assert_eq!(cscms, ccms);
}

#[test]
fn csv_and_json_output() {
    let spec = BenchSpec::new(BenchTarget::Sign, "sm2-256").iterations(30);
    let r = BenchReport::from_samples(spec, &[1500; 30], "test host");
    let csv = String::from_utf8(emit_report(std::slice::from_ref(&r), ReportFormat::Csv)).unwrap();
    assert_eq!(
        csv,
        "target,algorithm,samples,min_us,median_us,mean_us,p95_us\nsign,sm2-256,30,1.500,1.500,1.500,1.500\n"
    );
    let json = emit_report(&[r.clone(), r.clone()], ReportFormat::Json);
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v[1]["spec"]["target"], "sign");
    assert_eq!(v[0]["median_us"], 1.5);
    assert_eq!(v[0]["host"], "test host");
    let back: Vec<BenchReport> = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, vec![r.clone(), r]);
}

fn synthetic(target: BenchTarget, alg: &str, median_ns: u64) -> BenchReport {
    BenchReport::from_samples(BenchSpec::new(target, alg).iterations(30), &[median_ns; 30], "synthetic")
}

#[test]
fn ordering_verdicts() {
    let reports = vec![
        synthetic(BenchTarget::Sign, "sm2-256", 2000),
        synthetic(BenchTarget::Sign, "nist-p256", 1000),
        synthetic(BenchTarget::Verify, "sm2-256", 1000),
        synthetic(BenchTarget::Verify, "nist-p256", 1400),
        synthetic(BenchTarget::KemEncap, "sm2-256", 1000),
        synthetic(BenchTarget::KemEncap, "nist-p256", 2000),
        synthetic(BenchTarget::E2eVerify, "scms", 900),
        synthetic(BenchTarget::E2eVerify, "ccms", 1000),
    ];
    let v = expected_ordering_held(&reports);
    let held: Vec<_> = v.iter().map(|v| (v.claim, v.expected_ordering_held)).collect();
    assert_eq!(
        held,
        vec![
            ("a", Some(true)),
            ("b", Some(false)),
            ("c", Some(false)),
            ("d", Some(false)),
            ("e", None),
            ("hash", None)
        ]
    );
    assert!(v[0].to_string().ends_with("expected_ordering_held: true"));
}
