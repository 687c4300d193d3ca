//! Enrollment: SCMS / C-SCMS (canonical-key request to the ECA) and CCMS
//! (encrypted double-signed request to the EA).

use std::collections::HashMap;

use super::actors::{ENROLLMENT_LIFETIME, Authority, EndEntity, FlowContext, open_encrypted};
use super::bus::MessageBus;
use super::messages::FlowPayload;
use super::transport::Link;
use super::{FlowError, PSID_CERT_MANAGEMENT};
use crate::cert::{CertKind, Certificate, HashedId8, Validity, ecqv_derive_private, ecqv_issue, issue_explicit, validate_chain};
use crate::crypto::{CryptoProfile, KeyPair, Point};
use crate::secured::{
    Credential, SignedData, SignerId, encrypt_signed, encrypt_signed_to, key_id, sign_with_key, verify_with_key,
};

/// Validates `cert` against the context's trust store at the current time.
pub(crate) fn chain_ok(ctx: &FlowContext, cert: &Certificate) -> bool {
    let path = ctx.trust.path_for(ctx.profile, cert);
    validate_chain(ctx.profile, cert, &path, &ctx.trust.root, ctx.now).is_ok()
}

/// Bare-key signer lookup: the signer must be a key id present in `registry`.
fn registered_key(sd: &SignedData, registry: &HashMap<HashedId8, Point>) -> Result<Point, FlowError> {
    match &sd.signer {
        SignerId::Digest(id) => registry.get(id).copied().ok_or(FlowError::UnregisteredCanonicalKey),
        SignerId::Certificate(_) => Err(FlowError::UnregisteredCanonicalKey),
    }
}

/// SCMS enrollment: implicit certificate, ECQV key derivation.
pub fn scms_enroll(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    eca: &mut Authority,
    bus: &mut MessageBus,
) -> Result<Certificate, FlowError> {
    canonical_enroll(ctx, ee, eca, Link::Direct, bus)
}

/// C-SCMS enrollment: explicit certificate, carried over the GBA channel.
pub fn cscms_enroll(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    gba: &mut Authority,
    eca: &mut Authority,
    bus: &mut MessageBus,
) -> Result<Certificate, FlowError> {
    canonical_enroll(ctx, ee, eca, Link::Gba(gba), bus)
}

fn canonical_enroll(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    eca: &mut Authority,
    mut link: Link<'_>,
    bus: &mut MessageBus,
) -> Result<Certificate, FlowError> {
    let request_key = ctx.profile.generate_keypair(&mut ee.rng);
    let payload = FlowPayload::EeEcaCertRequest { name: ee.name.clone(), public: *request_key.public() };
    let sd =
        sign_with_key(ctx.profile, &payload.encode(), PSID_CERT_MANAGEMENT, &ee.canonical, ctx.generation_time(), &mut ee.rng)?;
    ee.enrollment_key = Some(request_key);

    let delivered = link.up(ee, eca.name(), sd.to_bytes(), bus)?;
    let response = eca_handle_request(ctx, eca, &delivered)?;
    let delivered = link.down(ee, eca.name(), response, bus)?;
    ee_finish_enrollment(ctx, ee, eca.certificate(), &delivered)
}

/// ECA side of [`scms_enroll`] / [`cscms_enroll`].
pub fn eca_handle_request(ctx: &FlowContext, eca: &mut Authority, bytes: &[u8]) -> Result<Vec<u8>, FlowError> {
    let sd = SignedData::from_bytes(bytes)?;
    let canonical = registered_key(&sd, &eca.canonical_registry)?;
    if !verify_with_key(ctx.profile, &sd, &canonical) {
        return Err(FlowError::BadRequestSignature);
    }
    let FlowPayload::EeEcaCertRequest { name, public } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected enrollment request"));
    };
    let validity = Validity::new(ctx.now, ENROLLMENT_LIFETIME);
    let (certificate, contribution) = match ctx.profile {
        CryptoProfile::Scms => {
            let issued = ecqv_issue(
                ctx.profile,
                eca.credential.certificate(),
                eca.credential.key(),
                &public,
                CertKind::Enrollment,
                &name,
                validity,
                &mut eca.rng,
            )?;
            (issued.certificate, Some(issued.contribution))
        }
        _ => {
            let cert = issue_explicit(
                ctx.profile,
                eca.credential.certificate(),
                eca.credential.key(),
                &public,
                CertKind::Enrollment,
                &name,
                validity,
                &mut eca.rng,
            )?;
            (cert, None)
        }
    };
    eca.record_issued(&certificate);
    let response = FlowPayload::EcaEeCertResponse { certificate, contribution };
    Ok(eca.sign(ctx, &response)?.to_bytes())
}

fn ee_finish_enrollment(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    eca_cert: &Certificate,
    bytes: &[u8],
) -> Result<Certificate, FlowError> {
    let sd = SignedData::from_bytes(bytes)?;
    ctx.verify_authority(&sd, Some(eca_cert)).map_err(|_| FlowError::BadResponse("response signature"))?;
    let FlowPayload::EcaEeCertResponse { certificate, contribution } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected enrollment response"));
    };
    let request_key = ee.enrollment_key.as_ref().ok_or(FlowError::UnexpectedMessage("no enrollment in progress"))?;
    let issuer_public = eca_cert.verification_key().copied();
    let private = match (&contribution, certificate.is_explicit()) {
        (Some(r), false) => ecqv_derive_private(ctx.profile, &certificate, request_key.private(), r)?,
        (None, true) => *request_key.private(),
        _ => return Err(FlowError::BadResponse("certificate type and contribution disagree")),
    };
    let credential = Credential::new(ctx.profile, certificate.clone(), private, issuer_public.as_ref())?;
    finish(ctx, ee, credential)
}

fn finish(ctx: &FlowContext, ee: &mut EndEntity, credential: Credential) -> Result<Certificate, FlowError> {
    let cert = credential.certificate().clone();
    if cert.kind() != Some(CertKind::Enrollment) || !chain_ok(ctx, &cert) {
        return Err(FlowError::BadResponse("enrollment certificate chain"));
    }
    ee.enrollment = Some(credential);
    ee.enrollment_key = None;
    Ok(cert)
}

/// Builds the CCMS enrolment request: an inner request signed by
/// `pop_signer` (normally the new enrolment key itself), wrapped in an outer
/// request signed with the canonical key, encrypted to the EA.
pub fn build_enrolment_request(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    enrolment_key: &KeyPair,
    pop_signer: &KeyPair,
    ea_cert: &Certificate,
) -> Result<Vec<u8>, FlowError> {
    let inner_payload = FlowPayload::InnerEcRequest { name: ee.name.clone(), public: *enrolment_key.public() };
    let mut inner =
        sign_with_key(ctx.profile, &inner_payload.encode(), PSID_CERT_MANAGEMENT, pop_signer, ctx.generation_time(), &mut ee.rng)?;
    // The signer field always names the key being certified, so a forged
    // PoP is a signature mismatch rather than an obviously foreign signer.
    inner.signer = SignerId::Digest(key_id(ctx.profile, enrolment_key.public()));
    let outer_payload = FlowPayload::EnrolmentRequest { inner: inner.to_bytes() };
    let outer = sign_with_key(
        ctx.profile,
        &outer_payload.encode(),
        PSID_CERT_MANAGEMENT,
        &ee.canonical,
        ctx.generation_time(),
        &mut ee.rng,
    )?;
    Ok(encrypt_signed(ctx.profile, &outer, ea_cert, &mut ee.rng)?.to_bytes())
}

/// CCMS enrolment: explicit enrolment credential from the EA.
pub fn ccms_enrol(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    ea: &mut Authority,
    bus: &mut MessageBus,
) -> Result<Certificate, FlowError> {
    let enrolment_key = ctx.profile.generate_keypair(&mut ee.rng);
    let request = build_enrolment_request(ctx, ee, &enrolment_key, &enrolment_key.clone(), ea.certificate())?;
    ee.enrollment_key = Some(enrolment_key);

    let delivered = bus.deliver(&ee.actor_name(), ea.name(), request);
    let response = ea_handle_enrolment(ctx, ea, &delivered)?;
    let delivered = bus.deliver(ea.name(), &ee.actor_name(), response);

    let sd = open_encrypted(ctx.profile, &delivered, key_id(ctx.profile, enrolment_key.public()), &enrolment_key)?;
    ctx.verify_authority(&sd, Some(ea.certificate())).map_err(|_| FlowError::BadResponse("response signature"))?;
    let FlowPayload::EnrolmentResponse { certificate } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected enrolment response"));
    };
    let credential = Credential::new(ctx.profile, certificate, *enrolment_key.private(), None)?;
    finish(ctx, ee, credential)
}

/// EA side of [`ccms_enrol`].
pub fn ea_handle_enrolment(ctx: &FlowContext, ea: &mut Authority, bytes: &[u8]) -> Result<Vec<u8>, FlowError> {
    let outer = ea.open(bytes)?;
    let canonical = registered_key(&outer, &ea.canonical_registry)?;
    if !verify_with_key(ctx.profile, &outer, &canonical) {
        return Err(FlowError::BadRequestSignature);
    }
    let FlowPayload::EnrolmentRequest { inner } = ctx.decode(&outer)? else {
        return Err(FlowError::UnexpectedMessage("expected enrolment request"));
    };
    let inner = SignedData::from_bytes(&inner)?;
    let FlowPayload::InnerEcRequest { name, public } = ctx.decode(&inner)? else {
        return Err(FlowError::UnexpectedMessage("expected inner enrolment request"));
    };
    if !verify_with_key(ctx.profile, &inner, &public) {
        return Err(FlowError::BadInnerPoP);
    }
    let certificate = issue_explicit(
        ctx.profile,
        ea.credential.certificate(),
        ea.credential.key(),
        &public,
        CertKind::Enrollment,
        &name,
        Validity::new(ctx.now, ENROLLMENT_LIFETIME),
        &mut ea.rng,
    )?;
    ea.record_issued(&certificate);
    let response = ea.sign(ctx, &FlowPayload::EnrolmentResponse { certificate })?;
    Ok(encrypt_signed_to(ctx.profile, &response, key_id(ctx.profile, &public), &public, &mut ea.rng)?.to_bytes())
}
