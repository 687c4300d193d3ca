use v2xcms_core::cert::{CertType, HashedId8, Time32, time32_from_unix};
use v2xcms_core::crypto::CryptoProfile;
use v2xcms_core::flows::{
    Deployment, EndEntity, FlowError, MessageBus, Transcript, aa_handle_request, build_enrolment_request,
    derive_rng, download_batch, ea_handle_enrolment,
};
use v2xcms_core::flows::messages::FlowPayload;
use v2xcms_core::secured::{
    HashIdPolicy, NoResolver, SignedData, SignedEncryptedData, SignerId, SignerMode, encrypt_signed, key_id,
    sign_data, sign_with_key, verify_signed_data,
};

const PROFILES: [CryptoProfile; 3] = [CryptoProfile::Scms, CryptoProfile::Ccms, CryptoProfile::Cscms];
const YEAR: u32 = 365 * 86_400;

fn now() -> Time32 {
    time32_from_unix(1_700_000_000)
}

/// Bootstrap, enroll and authorize one vehicle; returns the transcript and
/// the first error, if any.
fn run(profile: CryptoProfile, seed: u64, batch: u32, bus: MessageBus) -> (Transcript, Result<EndEntity, FlowError>) {
    let mut dep = Deployment::new(profile, now(), seed);
    let mut ee = dep.bootstrap("vehicle-1");
    let mut bus = bus;
    let result = dep
        .enroll(&mut ee, &mut bus)
        .and_then(|_| dep.authorize(&mut ee, batch, &mut bus))
        .map(|_| ee);
    (bus.into_transcript(), result)
}

#[test]
fn end_to_end_every_profile() {
    for p in PROFILES {
        let mut dep = Deployment::new(p, now(), 1);
        let mut ee = dep.bootstrap("vehicle-1");
        let mut bus = MessageBus::new();
        let ec = dep.enroll(&mut ee, &mut bus).unwrap();
        assert_eq!(ee.enrollment.as_ref().unwrap().certificate(), &ec);
        let creds = dep.authorize(&mut ee, 5, &mut bus).unwrap();
        let expected = if p == CryptoProfile::Ccms { 1 } else { 5 };
        assert_eq!(creds.len(), expected, "{p}");

        let trust = dep.trust();
        for cred in &creds {
            let mut rng = derive_rng(9, "bsm");
            let msg = sign_data(
                p,
                b"basic safety message",
                0x20,
                cred,
                SignerMode::Certificate,
                HashIdPolicy::Profile,
                u64::from(now()) * 1_000_000,
                &mut rng,
            )
            .unwrap();
            let out = verify_signed_data(p, &msg, &NoResolver, &trust, now() + 60);
            assert!(out.is_accepted(), "{p}: {:?}", out.verdict);
        }
    }
}

#[test]
fn certificate_types_per_profile() {
    let expect = [
        (CryptoProfile::Scms, CertType::Implicit, CertType::Implicit),
        (CryptoProfile::Ccms, CertType::Explicit, CertType::Explicit),
        (CryptoProfile::Cscms, CertType::Explicit, CertType::Explicit),
    ];
    for (p, enrollment, authorization) in expect {
        let (_, ee) = run(p, 2, 3, MessageBus::new());
        let ee = ee.unwrap();
        assert_eq!(ee.enrollment.unwrap().certificate().cert_type, enrollment, "{p}");
        for c in &ee.authorization {
            assert_eq!(c.certificate().cert_type, authorization, "{p}");
        }
    }
}

#[test]
fn message_counts() {
    for batch in [1u32, 4, 20] {
        let cases = [
            // enrollment 2, authorization 4 + 2n
            (CryptoProfile::Scms, 2 + 4 + 2 * batch as usize),
            // enrolment 2, authorization 4 (batch ignored)
            (CryptoProfile::Ccms, 2 + 4),
            // GBA 3, enrollment 2×2 relayed, authorization 4×2 relayed + 2n
            (CryptoProfile::Cscms, 3 + 4 + 8 + 2 * batch as usize),
        ];
        for (p, n) in cases {
            let (t, r) = run(p, 3, batch, MessageBus::new());
            r.unwrap();
            assert_eq!(t.len(), n, "{p} batch {batch}");
        }
    }
}

#[test]
fn transcripts_are_deterministic() {
    for p in PROFILES {
        let a = run(p, 42, 3, MessageBus::new()).0;
        let b = run(p, 42, 3, MessageBus::new()).0;
        let c = run(p, 43, 3, MessageBus::new()).0;
        assert_eq!(a.dump(), b.dump(), "{p}");
        assert_ne!(a.dump(), c.dump(), "{p}");
        assert_eq!(Transcript::parse(&a.dump()).unwrap(), a);
    }
}

#[test]
fn every_tampered_message_is_rejected() {
    for p in PROFILES {
        let (clean, ok) = run(p, 5, 2, MessageBus::new());
        ok.unwrap();
        for (i, entry) in clean.entries.iter().enumerate() {
            let bits = entry.bytes.len() * 8;
            // First byte, a spread through the body, the last byte.
            let mut probes = vec![0, 7, bits - 1, bits - 8];
            probes.extend((1..8).map(|k| k * bits / 8 + k));
            for bit in probes {
                let (_, r) = run(p, 5, 2, MessageBus::flipping_bit(i, bit));
                assert!(r.is_err(), "{p}: message {i} ({}→{}) bit {bit} accepted", entry.from, entry.to);
            }
        }
    }
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Byte strings that would link a message to the enrolled vehicle.
fn identity_markers(p: CryptoProfile, ee: &EndEntity) -> Vec<Vec<u8>> {
    let enrollment = ee.enrollment.as_ref().unwrap();
    let cert = enrollment.certificate();
    vec![
        ee.name.as_bytes().to_vec(),
        ee.canonical.public().to_compressed().to_vec(),
        enrollment.key().public().to_compressed().to_vec(),
        cert.to_bytes(),
        cert.hashed_id8(p).0.to_vec(),
        ee.caterpillar.as_ref().unwrap().keypair.public().to_compressed().to_vec(),
        ee.caterpillar.as_ref().unwrap().keypair.private().to_bytes().to_vec(),
        ee.caterpillar.as_ref().unwrap().expansion_key.to_vec(),
    ]
}

#[test]
fn aca_never_sees_enrollee_identity() {
    for p in [CryptoProfile::Scms, CryptoProfile::Cscms] {
        let (t, ee) = run(p, 6, 4, MessageBus::new());
        let ee = ee.unwrap();
        let markers = identity_markers(p, &ee);
        let inbound: Vec<_> = t.inbound_to("ACA").collect();
        assert_eq!(inbound.len(), 4);
        for e in &inbound {
            assert_eq!(e.from, if p == CryptoProfile::Scms { "RA" } else { "PRA" });
            for m in &markers {
                assert!(!contains(&e.bytes, m), "{p}: identity marker reached the ACA");
            }
        }
        // Negative control: the same scan does find the name in the
        // enrollment request the ECA receives.
        let eca: Vec<_> = t.inbound_to("ECA").collect();
        assert!(eca.iter().any(|e| contains(&e.bytes, ee.name.as_bytes())), "{p}: scanner control");
    }
}

fn is_raw_allowed(from: &str, to: &str) -> bool {
    (from.starts_with("EE:") && to == "GBA-AS") || (from == "GBA-AS" && to.starts_with("EE:"))
}

#[test]
fn no_raw_payloads_between_pki_actors() {
    for p in PROFILES {
        let (t, r) = run(p, 7, 3, MessageBus::new());
        r.unwrap();
        for e in &t.entries {
            if is_raw_allowed(&e.from, &e.to) {
                assert!(matches!(e.bytes[0], 0x20..=0x22 | 0x30), "{p}: {}→{}", e.from, e.to);
                continue;
            }
            let secured = SignedData::from_bytes(&e.bytes).is_ok() || SignedEncryptedData::from_bytes(&e.bytes).is_ok();
            assert!(secured, "{p}: raw payload {}→{}", e.from, e.to);
        }
    }
}

#[test]
fn replayed_channel_frame_fails_authentication() {
    let p = CryptoProfile::Cscms;
    let (clean, ok) = run(p, 8, 2, MessageBus::new());
    ok.unwrap();
    let frames: Vec<(usize, Vec<u8>)> = clean
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.from == "EE:vehicle-1" && e.to == "GBA-AS" && e.bytes[0] == 0x30)
        .map(|(i, e)| (i, e.bytes.clone()))
        .collect();
    assert!(frames.len() >= 2);
    let (target, _) = frames[1];
    let replay = frames[0].1.clone();
    let hook = move |i: usize, _: &str, _: &str, bytes: &mut Vec<u8>| {
        if i == target {
            *bytes = replay.clone();
        }
    };
    let (_, r) = run(p, 8, 2, MessageBus::with_tamper(Box::new(hook)));
    assert_eq!(r.err(), Some(FlowError::ChannelAuthFailure));
}

#[test]
fn unregistered_canonical_key_is_refused() {
    for p in PROFILES {
        let mut dep = Deployment::new(p, now(), 9);
        let mut stranger = EndEntity::new(p, "stranger", derive_rng(9, "stranger"));
        // Provision the GBA secret but not the canonical key.
        if let Some(gba) = &mut dep.gba {
            gba.subscriber_secrets.insert("stranger".into(), [3; 16]);
            stranger.subscriber_secret = Some([3; 16]);
        }
        let r = dep.enroll(&mut stranger, &mut MessageBus::new());
        assert_eq!(r.err(), Some(FlowError::UnregisteredCanonicalKey), "{p}");
    }
}

#[test]
fn unknown_gba_subscriber_is_refused() {
    let mut dep = Deployment::new(CryptoProfile::Cscms, now(), 9);
    let mut ee = EndEntity::new(CryptoProfile::Cscms, "ghost", derive_rng(9, "ghost"));
    ee.subscriber_secret = Some([1; 16]);
    let r = dep.enroll(&mut ee, &mut MessageBus::new());
    assert_eq!(r.err(), Some(FlowError::UnknownSubscriber));
}

#[test]
fn forged_inner_proof_of_possession() {
    let p = CryptoProfile::Ccms;
    let mut dep = Deployment::new(p, now(), 10);
    let mut ee = dep.bootstrap("vehicle-1");
    let ctx = dep.context();
    let key = p.generate_keypair(&mut ee.rng);
    let forger = p.generate_keypair(&mut ee.rng);
    let ea_cert = dep.enrollment_authority.certificate().clone();
    let request = build_enrolment_request(&ctx, &mut ee, &key, &forger, &ea_cert).unwrap();
    assert_eq!(ea_handle_enrolment(&ctx, &mut dep.enrollment_authority, &request).err(), Some(FlowError::BadInnerPoP));

    let honest = build_enrolment_request(&ctx, &mut ee, &key, &key, &ea_cert).unwrap();
    assert!(ea_handle_enrolment(&ctx, &mut dep.enrollment_authority, &honest).is_ok());
}

#[test]
fn forged_authorization_proof_of_possession() {
    let p = CryptoProfile::Ccms;
    let mut dep = Deployment::new(p, now(), 11);
    let ctx = dep.context();
    let mut rng = derive_rng(11, "forger");
    let claimed = p.generate_keypair(&mut rng);
    let forger = p.generate_keypair(&mut rng);
    let payload = FlowPayload::AuthorizationRequest {
        public: *claimed.public(),
        ea: dep.enrollment_authority.id(),
        ec_signature: vec![],
    };
    let mut sd = sign_with_key(p, &payload.encode(), 0x23, &forger, 0, &mut rng).unwrap();
    sd.signer = SignerId::Digest(key_id(p, claimed.public()));
    let sealed = encrypt_signed(p, &sd, dep.authorization_authority.certificate(), &mut rng).unwrap();
    let r = aa_handle_request(&ctx, &mut dep.authorization_authority, &sealed.to_bytes());
    assert_eq!(r.err(), Some(FlowError::BadPoP));
}

#[test]
fn download_without_acknowledged_request() {
    for p in [CryptoProfile::Scms, CryptoProfile::Cscms] {
        let mut dep = Deployment::new(p, now(), 12);
        let mut ee = dep.bootstrap("vehicle-1");
        let mut bus = MessageBus::new();
        dep.enroll(&mut ee, &mut bus).unwrap();
        let ctx = dep.context();
        let ra = dep.registration_authority.as_mut().unwrap();
        let r = download_batch(&ctx, &mut ee, ra, HashedId8([7; 8]), &mut bus);
        assert_eq!(r.err(), Some(FlowError::DownloadBeforeAck), "{p}");
    }
}

#[test]
fn enrolment_from_another_ea_is_not_validated() {
    let p = CryptoProfile::Ccms;
    let mut home = Deployment::new(p, now(), 13);
    let mut foreign = Deployment::new(p, now(), 14);
    let mut ee = foreign.bootstrap("vehicle-1");
    let mut bus = MessageBus::new();
    foreign.enroll(&mut ee, &mut bus).unwrap();

    let ctx = home.context();
    let r = v2xcms_core::flows::ccms_authorize(
        &ctx,
        &mut ee,
        &mut home.authorization_authority,
        &mut home.enrollment_authority,
        &mut bus,
    );
    assert_eq!(r.err(), Some(FlowError::ValidationRejected));
    // The same vehicle is authorized at its own EA.
    assert!(foreign.authorize(&mut ee, 1, &mut bus).is_ok());
}

#[test]
fn expired_enrollment_cannot_request_authorization() {
    for p in [CryptoProfile::Scms, CryptoProfile::Cscms] {
        let mut dep = Deployment::new(p, now(), 15);
        let mut ee = dep.bootstrap("vehicle-1");
        let mut bus = MessageBus::new();
        dep.enroll(&mut ee, &mut bus).unwrap();
        dep.now = now() + 4 * YEAR;
        let r = dep.authorize(&mut ee, 2, &mut bus);
        assert_eq!(r.err(), Some(FlowError::EnrollmentChainInvalid), "{p}");
    }
}

#[test]
fn batch_size_bounds() {
    let mut dep = Deployment::new(CryptoProfile::Scms, now(), 16);
    let mut ee = dep.bootstrap("vehicle-1");
    let mut bus = MessageBus::new();
    dep.enroll(&mut ee, &mut bus).unwrap();
    assert!(matches!(dep.authorize(&mut ee, 0, &mut bus), Err(FlowError::InvalidRequest(_))));
    assert!(matches!(dep.authorize(&mut ee, 101, &mut bus), Err(FlowError::InvalidRequest(_))));
    assert_eq!(dep.authorize(&mut ee, 100, &mut bus).unwrap().len(), 100);
}

#[test]
fn pseudonym_keys_are_unlinkable_on_the_wire() {
    // Different batches for the same vehicle share no public key bytes.
    let mut dep = Deployment::new(CryptoProfile::Scms, now(), 17);
    let mut ee = dep.bootstrap("vehicle-1");
    let mut keys = Vec::new();
    let mut bus = MessageBus::new();
    dep.enroll(&mut ee, &mut bus).unwrap();
    for _ in 0..2 {
        let creds = dep.authorize(&mut ee, 3, &mut bus).unwrap();
        keys.extend(creds.iter().map(|c| c.key().public().to_compressed()));
    }
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 6);
}
