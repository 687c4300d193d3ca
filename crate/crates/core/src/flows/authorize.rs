//! Authorization: butterfly batches through an RA/PRA and the ACA
//! (SCMS, C-SCMS), and the CCMS AA ⇄ EA validation round.

use super::actors::{AUTHORIZATION_LIFETIME, Authority, EndEntity, FlowContext, PendingBatch, Role, open_encrypted};
use super::bus::MessageBus;
use super::enroll::chain_ok;
use super::messages::FlowPayload;
use super::transport::Link;
use super::{FlowError, PSID_CERT_MANAGEMENT};
use crate::butterfly::{CaterpillarKey, MAX_BATCH_SIZE, expand_cocoon_private, expand_cocoon_public};
use crate::cert::{CertKind, Certificate, HashedId8, Validity, ecqv_derive_private, ecqv_issue, issue_explicit};
use crate::crypto::{CryptoProfile, KeyPair, Point, Scalar};
use crate::secured::{
    Credential, HashIdPolicy, RejectReason, SignedData, SignerMode, TrustChain, encrypt_signed, encrypt_signed_to,
    key_id, sign_data, sign_with_key, verify_signed_data, verify_with_key,
};

/// Name written into every pseudonym certificate; carries no identity.
const PSEUDONYM_NAME: &str = "";

fn authority_by_id<'a>(trust: &'a TrustChain, profile: CryptoProfile, id: &HashedId8) -> Option<&'a Certificate> {
    trust.authorities.iter().find(|c| c.hashed_id8(profile) == *id)
}

fn request_id(ctx: &FlowContext, sd: &SignedData) -> HashedId8 {
    HashedId8::of_bytes(ctx.profile.hash(), &sd.to_bytes())
}

fn ee_sign(ctx: &FlowContext, ee: &mut EndEntity, payload: &FlowPayload, mode: SignerMode) -> Result<SignedData, FlowError> {
    let cred = ee.enrollment.as_ref().ok_or(FlowError::NotEnrolled)?;
    Ok(sign_data(
        ctx.profile,
        &payload.encode(),
        PSID_CERT_MANAGEMENT,
        cred,
        mode,
        HashIdPolicy::Profile,
        ctx.generation_time(),
        &mut ee.rng,
    )?)
}

/// Verifies a request signed by an enrollment certificate; returns the
/// certificate and its (contained or reconstructed) public key.
fn verify_enrollee(ctx: &FlowContext, sd: &SignedData) -> Result<(Certificate, Point), FlowError> {
    let out = verify_signed_data(ctx.profile, sd, &crate::secured::NoResolver, &ctx.trust, ctx.now);
    match out.verdict {
        Ok(_) => {}
        Err(RejectReason::BadSignature | RejectReason::HashIdMismatch) => return Err(FlowError::BadRequestSignature),
        Err(RejectReason::ChainInvalid(_) | RejectReason::UnresolvedSigner) => {
            return Err(FlowError::EnrollmentChainInvalid);
        }
    }
    let cert = out.signer.expect("accepted message has a signer");
    if cert.kind() != Some(CertKind::Enrollment) {
        return Err(FlowError::EnrollmentChainInvalid);
    }
    Ok((cert, out.signer_key.expect("accepted message has a key")))
}

/// SCMS butterfly authorization with implicit pseudonym certificates.
pub fn scms_authorize(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    ra: &mut Authority,
    aca: &mut Authority,
    batch_size: u32,
    bus: &mut MessageBus,
) -> Result<Vec<Credential>, FlowError> {
    butterfly_authorize(ctx, ee, Link::Direct, ra, aca, batch_size, bus)
}

/// C-SCMS butterfly authorization with explicit pseudonym certificates,
/// the EE side tunnelled through the GBA-AS.
pub fn cscms_authorize(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    gba: &mut Authority,
    pra: &mut Authority,
    aca: &mut Authority,
    batch_size: u32,
    bus: &mut MessageBus,
) -> Result<Vec<Credential>, FlowError> {
    butterfly_authorize(ctx, ee, Link::Gba(gba), pra, aca, batch_size, bus)
}

fn butterfly_authorize(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    mut link: Link<'_>,
    ra: &mut Authority,
    aca: &mut Authority,
    batch_size: u32,
    bus: &mut MessageBus,
) -> Result<Vec<Credential>, FlowError> {
    if batch_size == 0 || batch_size > MAX_BATCH_SIZE {
        return Err(FlowError::InvalidRequest("batch size out of range"));
    }
    let caterpillar = CaterpillarKey::generate(ctx.profile.curve(), &mut ee.rng);
    let payload = FlowPayload::EeRaCertRequest {
        caterpillar: *caterpillar.keypair.public(),
        expansion_key: caterpillar.expansion_key,
        batch_size,
    };
    let sd = ee_sign(ctx, ee, &payload, SignerMode::Certificate)?;
    let request = request_id(ctx, &sd);
    let sealed = encrypt_signed(ctx.profile, &sd, ra.certificate(), &mut ee.rng)?;
    ee.caterpillar = Some(caterpillar);

    let delivered = link.up(ee, ra.name(), sealed.to_bytes(), bus)?;
    let ack = ra_handle_request(ctx, ra, &delivered)?;
    let ack = link.down(ee, ra.name(), ack, bus)?;
    let ack = SignedData::from_bytes(&ack)?;
    ctx.verify_authority(&ack, Some(ra.certificate())).map_err(|_| FlowError::BadResponse("acknowledgement signature"))?;
    match ctx.decode(&ack)? {
        FlowPayload::RaEeCertAck { request: r, batch_size: n } if r == request && n == batch_size => {}
        FlowPayload::RaEeCertAck { .. } => return Err(FlowError::BadResponse("acknowledgement for another request")),
        _ => return Err(FlowError::UnexpectedMessage("expected acknowledgement")),
    }
    ee.acked_request = Some(request);

    for msg in ra_build_aca_requests(ctx, ra, &request)? {
        let delivered = bus.deliver(ra.name(), aca.name(), msg);
        let response = aca_handle_request(ctx, aca, &delivered)?;
        let delivered = bus.deliver(aca.name(), ra.name(), response);
        ra_accept_aca_response(ctx, ra, aca.certificate(), &delivered)?;
    }

    download_over(ctx, ee, &mut link, ra, request, bus)
}

/// RA side of the certificate request: verify, expand cocoons, acknowledge.
pub fn ra_handle_request(ctx: &FlowContext, ra: &mut Authority, bytes: &[u8]) -> Result<Vec<u8>, FlowError> {
    let sd = ra.open(bytes)?;
    let (enrollment_cert, enrollment_key) = verify_enrollee(ctx, &sd)?;
    let FlowPayload::EeRaCertRequest { caterpillar, expansion_key, batch_size } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected certificate request"));
    };
    if batch_size == 0 || batch_size > MAX_BATCH_SIZE {
        return Err(FlowError::InvalidRequest("batch size out of range"));
    }
    let cocoons = (0..batch_size)
        .map(|i| expand_cocoon_public(&caterpillar, &expansion_key, i, ctx.profile.curve()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| FlowError::InvalidRequest("caterpillar key"))?;
    let request = request_id(ctx, &sd);
    ra.pending.insert(
        request,
        PendingBatch {
            batch_size,
            cocoons,
            enrollment_cert,
            enrollment_key,
            responses: vec![None; batch_size as usize],
        },
    );
    Ok(ra.sign(ctx, &FlowPayload::RaEeCertAck { request, batch_size })?.to_bytes())
}

/// One RA-signed request per cocoon key. Carries nothing about the enrollee.
pub fn ra_build_aca_requests(ctx: &FlowContext, ra: &mut Authority, batch: &HashedId8) -> Result<Vec<Vec<u8>>, FlowError> {
    let cocoons = ra.pending.get(batch).ok_or(FlowError::DownloadBeforeAck)?.cocoons.clone();
    cocoons
        .iter()
        .map(|c| {
            let payload = FlowPayload::RaAcaCertRequest { batch: *batch, index: c.index, cocoon: c.point };
            Ok(ra.sign(ctx, &payload)?.to_bytes())
        })
        .collect()
}

/// ACA: issue one pseudonym certificate for a cocoon key. The certificate
/// and contribution are encrypted to the cocoon key, so the RA cannot read them.
pub fn aca_handle_request(ctx: &FlowContext, aca: &mut Authority, bytes: &[u8]) -> Result<Vec<u8>, FlowError> {
    let sd = SignedData::from_bytes(bytes)?;
    let out = ctx.verify_authority(&sd, None).map_err(|_| FlowError::BadRequestSignature)?;
    let signer = out.signer.expect("accepted message has a signer");
    if !matches!(signer.tbs.id.as_str(), "RA" | "PRA") {
        return Err(FlowError::InvalidRequest("signer is not a registration authority"));
    }
    let FlowPayload::RaAcaCertRequest { batch, index, cocoon } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected RA certificate request"));
    };
    let validity = Validity::new(ctx.now, AUTHORIZATION_LIFETIME);
    let (certificate, contribution) = match ctx.profile {
        CryptoProfile::Scms => {
            let issued = ecqv_issue(
                ctx.profile,
                aca.credential.certificate(),
                aca.credential.key(),
                &cocoon,
                CertKind::Authorization,
                PSEUDONYM_NAME,
                validity,
                &mut aca.rng,
            )?;
            (issued.certificate, issued.contribution)
        }
        _ => {
            // Explicit variant: the ACA randomises the key as B + c·G and
            // hands c to the device.
            let c = Scalar::random_nonzero(ctx.profile.curve(), &mut aca.rng);
            let key = KeyPair::from_private(c)
                .ok()
                .and_then(|cg| cocoon.add(cg.public()))
                .ok_or(FlowError::InvalidRequest("cocoon key"))?;
            let cert = issue_explicit(
                ctx.profile,
                aca.credential.certificate(),
                aca.credential.key(),
                &key,
                CertKind::Authorization,
                PSEUDONYM_NAME,
                validity,
                &mut aca.rng,
            )?;
            (cert, c)
        }
    };
    aca.record_issued(&certificate);
    let inner = aca.sign(ctx, &FlowPayload::AcaResponse { certificate, contribution })?;
    let encrypted = encrypt_signed_to(ctx.profile, &inner, key_id(ctx.profile, &cocoon), &cocoon, &mut aca.rng)?;
    let outer = FlowPayload::AcaRaCertResponse { batch, index, encrypted: encrypted.to_bytes() };
    Ok(aca.sign(ctx, &outer)?.to_bytes())
}

pub fn ra_accept_aca_response(
    ctx: &FlowContext,
    ra: &mut Authority,
    aca_cert: &Certificate,
    bytes: &[u8],
) -> Result<(), FlowError> {
    let sd = SignedData::from_bytes(bytes)?;
    ctx.verify_authority(&sd, Some(aca_cert)).map_err(|_| FlowError::BadResponse("ACA response signature"))?;
    let FlowPayload::AcaRaCertResponse { batch, index, encrypted } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected ACA response"));
    };
    let pending = ra.pending.get_mut(&batch).ok_or(FlowError::BadResponse("unknown batch"))?;
    let slot = pending.responses.get_mut(index as usize).ok_or(FlowError::BadResponse("index out of range"))?;
    *slot = Some(encrypted);
    Ok(())
}

/// Downloads a batch directly from the RA. Fails with
/// [`FlowError::DownloadBeforeAck`] if the RA holds no such request.
pub fn download_batch(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    ra: &mut Authority,
    request: HashedId8,
    bus: &mut MessageBus,
) -> Result<Vec<Credential>, FlowError> {
    download_over(ctx, ee, &mut Link::Direct, ra, request, bus)
}

fn download_over(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    link: &mut Link<'_>,
    ra: &mut Authority,
    request: HashedId8,
    bus: &mut MessageBus,
) -> Result<Vec<Credential>, FlowError> {
    let sd = ee_sign(ctx, ee, &FlowPayload::EeRaDownloadRequest { request }, SignerMode::Certificate)?;
    let sealed = encrypt_signed(ctx.profile, &sd, ra.certificate(), &mut ee.rng)?;
    let delivered = link.up(ee, ra.name(), sealed.to_bytes(), bus)?;
    let bundle = ra_handle_download(ctx, ra, &delivered)?;
    let delivered = link.down(ee, ra.name(), bundle, bus)?;
    ee_accept_download(ctx, ee, ra.certificate(), request, &delivered)
}

pub fn ra_handle_download(ctx: &FlowContext, ra: &mut Authority, bytes: &[u8]) -> Result<Vec<u8>, FlowError> {
    let sd = ra.open(bytes)?;
    let (cert, _) = verify_enrollee(ctx, &sd)?;
    let FlowPayload::EeRaDownloadRequest { request } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected download request"));
    };
    let pending = ra.pending.get(&request).ok_or(FlowError::DownloadBeforeAck)?;
    if pending.enrollment_cert != cert {
        return Err(FlowError::InvalidRequest("batch belongs to another enrollee"));
    }
    let responses = pending
        .responses
        .iter()
        .cloned()
        .collect::<Option<Vec<_>>>()
        .ok_or(FlowError::DownloadBeforeAck)?;
    let pending = ra.pending.remove(&request).expect("checked above");
    let payload = FlowPayload::RaEeDownload {
        batch: request,
        batch_size: pending.batch_size,
        indices: pending.cocoons.iter().map(|c| c.index).collect(),
        responses,
    };
    let signed = ra.sign(ctx, &payload)?;
    let recipient = pending.enrollment_cert.hashed_id8(ctx.profile);
    Ok(encrypt_signed_to(ctx.profile, &signed, recipient, &pending.enrollment_key, &mut ra.rng)?.to_bytes())
}

fn ee_accept_download(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    ra_cert: &Certificate,
    request: HashedId8,
    bytes: &[u8],
) -> Result<Vec<Credential>, FlowError> {
    let enrollment = ee.enrollment.as_ref().ok_or(FlowError::NotEnrolled)?;
    let sd = open_encrypted(ctx.profile, bytes, enrollment.certificate().hashed_id8(ctx.profile), enrollment.key())?;
    ctx.verify_authority(&sd, Some(ra_cert)).map_err(|_| FlowError::BadResponse("download signature"))?;
    let FlowPayload::RaEeDownload { batch, batch_size, indices, responses } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected download bundle"));
    };
    if batch != request || indices.len() != batch_size as usize || responses.len() != indices.len() {
        return Err(FlowError::BadResponse("bundle does not match the request"));
    }
    let caterpillar = ee.caterpillar.as_ref().ok_or(FlowError::UnexpectedMessage("no caterpillar key"))?;
    let curve = ctx.profile.curve();
    let mut credentials = Vec::with_capacity(indices.len());
    for (&index, encrypted) in indices.iter().zip(&responses) {
        let b = expand_cocoon_private(caterpillar.keypair.private(), &caterpillar.expansion_key, index, curve)
            .map_err(|_| FlowError::BadResponse("cocoon key"))?;
        let cocoon = KeyPair::from_private(b).map_err(|_| FlowError::BadResponse("cocoon key"))?;
        let inner = open_encrypted(ctx.profile, encrypted, key_id(ctx.profile, cocoon.public()), &cocoon)?;
        let out = ctx.verify_authority(&inner, None).map_err(|_| FlowError::BadResponse("ACA signature"))?;
        let aca_public = out.signer_key.expect("accepted message has a key");
        let FlowPayload::AcaResponse { certificate, contribution } = ctx.decode(&inner)? else {
            return Err(FlowError::UnexpectedMessage("expected ACA response"));
        };
        let private = if certificate.is_explicit() {
            b.add(&contribution)
        } else {
            ecqv_derive_private(ctx.profile, &certificate, &b, &contribution)?
        };
        let credential = Credential::new(ctx.profile, certificate, private, Some(&aca_public))?;
        if credential.certificate().kind() != Some(CertKind::Authorization) || !chain_ok(ctx, credential.certificate()) {
            return Err(FlowError::BadResponse("authorization certificate chain"));
        }
        credentials.push(credential);
    }
    ee.authorization.extend(credentials.iter().cloned());
    ee.acked_request = None;
    Ok(credentials)
}

/// CCMS authorization: one certificate from the AA after the EA vouches
/// for the enrolment credential.
pub fn ccms_authorize(
    ctx: &FlowContext,
    ee: &mut EndEntity,
    aa: &mut Authority,
    ea: &mut Authority,
    bus: &mut MessageBus,
) -> Result<Credential, FlowError> {
    let auth_key = ctx.profile.generate_keypair(&mut ee.rng);
    let ec_signature = ee_sign(ctx, ee, &FlowPayload::EcSignature { public: *auth_key.public() }, SignerMode::Digest)?;
    let ec_signature = encrypt_signed(ctx.profile, &ec_signature, ea.certificate(), &mut ee.rng)?.to_bytes();
    let payload = FlowPayload::AuthorizationRequest { public: *auth_key.public(), ea: ea.id(), ec_signature };
    let sd = sign_with_key(ctx.profile, &payload.encode(), PSID_CERT_MANAGEMENT, &auth_key, ctx.generation_time(), &mut ee.rng)?;
    let sealed = encrypt_signed(ctx.profile, &sd, aa.certificate(), &mut ee.rng)?;
    ee.authorization_key = Some(auth_key);

    let delivered = bus.deliver(&ee.actor_name(), aa.name(), sealed.to_bytes());
    let validation = aa_handle_request(ctx, aa, &delivered)?;
    let delivered = bus.deliver(aa.name(), ea.name(), validation);
    let verdict = ea_handle_validation(ctx, ea, &delivered)?;
    let delivered = bus.deliver(ea.name(), aa.name(), verdict);
    let response = aa_handle_validation(ctx, aa, &delivered)?;
    let delivered = bus.deliver(aa.name(), &ee.actor_name(), response);

    let sd = open_encrypted(ctx.profile, &delivered, key_id(ctx.profile, auth_key.public()), &auth_key)?;
    ctx.verify_authority(&sd, Some(aa.certificate())).map_err(|_| FlowError::BadResponse("response signature"))?;
    let FlowPayload::AuthorizationResponse { certificate } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected authorization response"));
    };
    ee.authorization_key = None;
    let certificate = certificate.ok_or(FlowError::ValidationRejected)?;
    let credential = Credential::new(ctx.profile, certificate, *auth_key.private(), None)?;
    if credential.certificate().kind() != Some(CertKind::Authorization) || !chain_ok(ctx, credential.certificate()) {
        return Err(FlowError::BadResponse("authorization certificate chain"));
    }
    ee.authorization.push(credential.clone());
    Ok(credential)
}

/// AA: check proof of possession, forward the enrolment signature to the EA.
pub fn aa_handle_request(ctx: &FlowContext, aa: &mut Authority, bytes: &[u8]) -> Result<Vec<u8>, FlowError> {
    let sd = aa.open(bytes)?;
    let FlowPayload::AuthorizationRequest { public, ea, ec_signature } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected authorization request"));
    };
    if !verify_with_key(ctx.profile, &sd, &public) {
        return Err(FlowError::BadPoP);
    }
    let ea_cert = authority_by_id(&ctx.trust, ctx.profile, &ea).ok_or(FlowError::InvalidRequest("unknown EA"))?.clone();
    let request = request_id(ctx, &sd);
    aa.pending_validation.insert(request, public);
    let payload = FlowPayload::AuthorizationValidationRequest { request, public, ec_signature };
    let signed = aa.sign(ctx, &payload)?;
    Ok(encrypt_signed(ctx.profile, &signed, &ea_cert, &mut aa.rng)?.to_bytes())
}

/// EA: approve iff the enrolment signature is by a certificate this EA
/// issued, is valid, and covers the key the AA is about to certify.
pub fn ea_handle_validation(ctx: &FlowContext, ea: &mut Authority, bytes: &[u8]) -> Result<Vec<u8>, FlowError> {
    let sd = ea.open(bytes)?;
    let out = ctx.verify_authority(&sd, None).map_err(|_| FlowError::BadRequestSignature)?;
    let aa_cert = out.signer.expect("accepted message has a signer");
    if aa_cert.tbs.id.as_str() != Role::Aa.name() {
        return Err(FlowError::InvalidRequest("signer is not an authorization authority"));
    }
    let FlowPayload::AuthorizationValidationRequest { request, public, ec_signature } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected validation request"));
    };
    let approved = open_encrypted(ctx.profile, &ec_signature, ea.id(), ea.credential.key())
        .ok()
        .is_some_and(|ec| {
            let out = verify_signed_data(ctx.profile, &ec, &ea.issued, &ctx.trust, ctx.now);
            out.is_accepted()
                && out.signer.as_ref().and_then(Certificate::kind) == Some(CertKind::Enrollment)
                && ctx.decode(&ec).ok() == Some(FlowPayload::EcSignature { public })
        });
    let signed = ea.sign(ctx, &FlowPayload::AuthorizationValidationResponse { request, approved })?;
    Ok(encrypt_signed(ctx.profile, &signed, &aa_cert, &mut ea.rng)?.to_bytes())
}

/// AA: issue on approval, otherwise answer with an empty response.
pub fn aa_handle_validation(ctx: &FlowContext, aa: &mut Authority, bytes: &[u8]) -> Result<Vec<u8>, FlowError> {
    let sd = aa.open(bytes)?;
    let out = ctx.verify_authority(&sd, None).map_err(|_| FlowError::BadResponse("validation signature"))?;
    if out.signer.as_ref().map(|c| c.tbs.id.as_str()) != Some(Role::Ea.name()) {
        return Err(FlowError::BadResponse("validation not signed by an EA"));
    }
    let FlowPayload::AuthorizationValidationResponse { request, approved } = ctx.decode(&sd)? else {
        return Err(FlowError::UnexpectedMessage("expected validation response"));
    };
    let public = aa.pending_validation.remove(&request).ok_or(FlowError::BadResponse("unknown request"))?;
    let certificate = if approved {
        let cert = issue_explicit(
            ctx.profile,
            aa.credential.certificate(),
            aa.credential.key(),
            &public,
            CertKind::Authorization,
            PSEUDONYM_NAME,
            Validity::new(ctx.now, AUTHORIZATION_LIFETIME),
            &mut aa.rng,
        )?;
        aa.record_issued(&cert);
        Some(cert)
    } else {
        None
    };
    let signed = aa.sign(ctx, &FlowPayload::AuthorizationResponse { certificate })?;
    Ok(encrypt_signed_to(ctx.profile, &signed, key_id(ctx.profile, &public), &public, &mut aa.rng)?.to_bytes())
}
