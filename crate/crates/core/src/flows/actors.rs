use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bus::MessageBus;
use super::channel::SecureChannel;
use super::messages::FlowPayload;
use super::{FlowError, PSID_CERT_MANAGEMENT};
use crate::butterfly::{CaterpillarKey, CocoonPublic};
use crate::cert::{
    CertKind, Certificate, HashedId8, Time32, Time64, Validity, issue_explicit, self_sign_root,
};
use crate::crypto::{CryptoProfile, KeyPair, Point};
use crate::secured::{
    Credential, HashIdPolicy, NoResolver, RejectReason, SignedData, SignedEncryptedData, SignerMode, TrustChain,
    VerifyOutcome, decrypt_signed, key_id, sign_data, verify_signed_data,
};

const DAY: u32 = 86_400;
pub(crate) const ROOT_LIFETIME: u32 = 20 * 365 * DAY;
pub(crate) const AUTHORITY_LIFETIME: u32 = 10 * 365 * DAY;
pub(crate) const ENROLLMENT_LIFETIME: u32 = 3 * 365 * DAY;
pub(crate) const AUTHORIZATION_LIFETIME: u32 = 7 * DAY;

/// Deterministic per-actor randomness: ChaCha20 keyed by `SHA-256(seed ‖ label)`.
pub fn derive_rng(seed: u64, label: &str) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update(label.as_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Eca,
    Ea,
    Ra,
    Pra,
    Aca,
    Aa,
    GbaAs,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Eca => "ECA",
            Role::Ea => "EA",
            Role::Ra => "RA",
            Role::Pra => "PRA",
            Role::Aca => "ACA",
            Role::Aa => "AA",
            Role::GbaAs => "GBA-AS",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Public facts every actor shares: profile, current time, trust anchors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowContext {
    pub profile: CryptoProfile,
    pub now: Time32,
    pub trust: TrustChain,
}

impl FlowContext {
    pub fn generation_time(&self) -> Time64 {
        u64::from(self.now) * 1_000_000
    }

    pub(crate) fn decode(&self, sd: &SignedData) -> Result<FlowPayload, FlowError> {
        Ok(FlowPayload::decode(sd.payload(), self.profile.curve())?)
    }

    /// Verifies a SignedData from an authority certificate in the trust store.
    pub(crate) fn verify_authority(
        &self,
        sd: &SignedData,
        expected: Option<&Certificate>,
    ) -> Result<VerifyOutcome, RejectReason> {
        let out = verify_signed_data(self.profile, sd, &NoResolver, &self.trust, self.now);
        out.verdict?;
        let signer = out.signer.as_ref().expect("accepted message has a signer");
        let known = match expected {
            Some(c) => signer == c,
            None => self.trust.authorities.contains(signer),
        };
        if !known {
            return Err(RejectReason::UnresolvedSigner);
        }
        Ok(out)
    }
}

/// Batch state the RA keeps between acknowledgement and download.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingBatch {
    pub batch_size: u32,
    pub cocoons: Vec<CocoonPublic>,
    pub enrollment_cert: Certificate,
    pub enrollment_key: Point,
    /// Encrypted AcaResponses by index, filled as the ACA answers.
    pub responses: Vec<Option<Vec<u8>>>,
}

#[derive(Debug, Clone)]
pub struct Authority {
    pub role: Role,
    pub profile: CryptoProfile,
    pub credential: Credential,
    /// Approved canonical keys, by [`key_id`] (ECA / EA).
    pub canonical_registry: HashMap<HashedId8, Point>,
    /// Append-only identifiers of issued certificates.
    pub issued_log: Vec<HashedId8>,
    /// Issued certificates by id, for resolving digest signers (EA).
    pub issued: HashMap<HashedId8, Certificate>,
    /// Pre-shared subscriber secrets by EE name (GBA-AS).
    pub subscriber_secrets: HashMap<String, [u8; 16]>,
    /// Network ends of established channels by EE name (GBA-AS).
    pub channels: HashMap<String, SecureChannel>,
    /// Outstanding GBA challenges by EE name (GBA-AS).
    pub challenges: HashMap<String, [u8; 16]>,
    /// Open butterfly batches by request id (RA / PRA).
    pub pending: HashMap<HashedId8, PendingBatch>,
    /// Authorization requests awaiting EA validation (AA).
    pub pending_validation: HashMap<HashedId8, Point>,
    pub rng: ChaCha20Rng,
}

impl Authority {
    pub fn new(role: Role, profile: CryptoProfile, credential: Credential, rng: ChaCha20Rng) -> Self {
        Authority {
            role,
            profile,
            credential,
            canonical_registry: HashMap::new(),
            issued_log: Vec::new(),
            issued: HashMap::new(),
            subscriber_secrets: HashMap::new(),
            channels: HashMap::new(),
            challenges: HashMap::new(),
            pending: HashMap::new(),
            pending_validation: HashMap::new(),
            rng,
        }
    }

    pub fn name(&self) -> &'static str {
        self.role.name()
    }

    pub fn certificate(&self) -> &Certificate {
        self.credential.certificate()
    }

    pub fn id(&self) -> HashedId8 {
        self.certificate().hashed_id8(self.profile)
    }

    pub fn register_canonical(&mut self, public: &Point) {
        self.canonical_registry.insert(key_id(self.profile, public), *public);
    }

    pub(crate) fn record_issued(&mut self, cert: &Certificate) {
        let id = cert.hashed_id8(self.profile);
        self.issued_log.push(id);
        self.issued.insert(id, cert.clone());
    }

    pub(crate) fn sign(&mut self, ctx: &FlowContext, payload: &FlowPayload) -> Result<SignedData, FlowError> {
        Ok(sign_data(
            ctx.profile,
            &payload.encode(),
            PSID_CERT_MANAGEMENT,
            &self.credential,
            SignerMode::Certificate,
            HashIdPolicy::Profile,
            ctx.generation_time(),
            &mut self.rng,
        )?)
    }

    /// Decodes a SignedEncrypted addressed to this authority and decrypts it.
    pub(crate) fn open(&self, bytes: &[u8]) -> Result<SignedData, FlowError> {
        open_encrypted(self.profile, bytes, self.id(), self.credential.key())
    }
}

pub(crate) fn open_encrypted(
    profile: CryptoProfile,
    bytes: &[u8],
    recipient: HashedId8,
    key: &KeyPair,
) -> Result<SignedData, FlowError> {
    let msg = SignedEncryptedData::from_bytes(bytes)?;
    if msg.recipient != recipient {
        return Err(FlowError::WrongRecipient);
    }
    Ok(decrypt_signed(profile, &msg, key)?)
}

#[derive(Debug, Clone)]
pub struct EndEntity {
    pub name: String,
    pub profile: CryptoProfile,
    /// Pre-loaded canonical key.
    pub canonical: KeyPair,
    /// Key material of an enrollment request in progress.
    pub enrollment_key: Option<KeyPair>,
    pub enrollment: Option<Credential>,
    pub caterpillar: Option<CaterpillarKey>,
    /// Request id of the acknowledged authorization batch, if any.
    pub acked_request: Option<HashedId8>,
    /// Fresh key of a CCMS authorization request in progress.
    pub authorization_key: Option<KeyPair>,
    pub authorization: Vec<Credential>,
    pub subscriber_secret: Option<[u8; 16]>,
    pub channel: Option<SecureChannel>,
    pub rng: ChaCha20Rng,
}

impl EndEntity {
    pub fn new(profile: CryptoProfile, name: &str, mut rng: ChaCha20Rng) -> Self {
        let canonical = profile.generate_keypair(&mut rng);
        EndEntity {
            name: name.to_owned(),
            profile,
            canonical,
            enrollment_key: None,
            enrollment: None,
            caterpillar: None,
            acked_request: None,
            authorization_key: None,
            authorization: Vec::new(),
            subscriber_secret: None,
            channel: None,
            rng,
        }
    }

    /// Bus address, `EE:<name>`.
    pub fn actor_name(&self) -> String {
        format!("EE:{}", self.name)
    }
}

/// A complete PKI for one profile: root plus the authorities its flows use.
///
/// | profile | enrollment | registration | authorization | bootstrap |
/// |---------|------------|--------------|---------------|-----------|
/// | SCMS    | ECA        | RA           | ACA           | –         |
/// | CCMS    | EA         | –            | AA            | –         |
/// | C-SCMS  | ECA        | PRA          | ACA           | GBA-AS    |
#[derive(Debug, Clone)]
pub struct Deployment {
    pub profile: CryptoProfile,
    pub now: Time32,
    pub seed: u64,
    pub root: Certificate,
    pub root_key: KeyPair,
    pub enrollment_authority: Authority,
    pub registration_authority: Option<Authority>,
    pub authorization_authority: Authority,
    pub gba: Option<Authority>,
}

impl Deployment {
    pub fn new(profile: CryptoProfile, now: Time32, seed: u64) -> Self {
        let mut rng = derive_rng(seed, "root");
        let (root, root_key) = self_sign_root(profile, &format!("{profile} root"), Validity::new(now, ROOT_LIFETIME), &mut rng)
            .expect("root name fits");
        let mut make = |role: Role| {
            let mut arng = derive_rng(seed, role.name());
            let key = profile.generate_keypair(&mut arng);
            let cert = issue_explicit(
                profile,
                &root,
                &root_key,
                key.public(),
                CertKind::Authority,
                role.name(),
                Validity::new(now, AUTHORITY_LIFETIME),
                &mut rng,
            )
            .expect("fresh root covers authority validity");
            Authority::new(role, profile, Credential::new_unchecked(cert, key), arng)
        };
        let (enrol, reg, auth, gba) = match profile {
            CryptoProfile::Scms => (Role::Eca, Some(Role::Ra), Role::Aca, None),
            CryptoProfile::Ccms => (Role::Ea, None, Role::Aa, None),
            CryptoProfile::Cscms => (Role::Eca, Some(Role::Pra), Role::Aca, Some(Role::GbaAs)),
        };
        let enrollment_authority = make(enrol);
        let registration_authority = reg.map(&mut make);
        let authorization_authority = make(auth);
        let gba = gba.map(&mut make);
        Deployment {
            profile,
            now,
            seed,
            root,
            root_key,
            enrollment_authority,
            registration_authority,
            authorization_authority,
            gba,
        }
    }

    pub fn authorities(&self) -> impl Iterator<Item = &Authority> {
        std::iter::once(&self.enrollment_authority)
            .chain(self.registration_authority.as_ref())
            .chain(std::iter::once(&self.authorization_authority))
            .chain(self.gba.as_ref())
    }

    pub fn trust(&self) -> TrustChain {
        TrustChain::new(self.root.clone(), self.authorities().map(|a| a.certificate().clone()).collect())
    }

    pub fn context(&self) -> FlowContext {
        FlowContext { profile: self.profile, now: self.now, trust: self.trust() }
    }

    /// Creates an end entity and provisions it: canonical key registered at
    /// the enrollment authority, subscriber secret shared with the GBA-AS.
    pub fn bootstrap(&mut self, name: &str) -> EndEntity {
        let mut ee = EndEntity::new(self.profile, name, derive_rng(self.seed, &format!("EE:{name}")));
        self.enrollment_authority.register_canonical(ee.canonical.public());
        if let Some(gba) = &mut self.gba {
            let mut secret = [0u8; 16];
            ee.rng.fill_bytes(&mut secret);
            gba.subscriber_secrets.insert(name.to_owned(), secret);
            ee.subscriber_secret = Some(secret);
        }
        ee
    }

    /// Runs the profile's enrollment flow (establishing the GBA channel first for C-SCMS).
    pub fn enroll(&mut self, ee: &mut EndEntity, bus: &mut MessageBus) -> Result<Certificate, FlowError> {
        let ctx = self.context();
        match self.profile {
            CryptoProfile::Scms => super::scms_enroll(&ctx, ee, &mut self.enrollment_authority, bus),
            CryptoProfile::Ccms => super::ccms_enrol(&ctx, ee, &mut self.enrollment_authority, bus),
            CryptoProfile::Cscms => {
                let gba = self.gba.as_mut().expect("C-SCMS deployment has a GBA-AS");
                if ee.channel.is_none() {
                    super::establish_gba_channel(&ctx, ee, gba, bus)?;
                }
                super::cscms_enroll(&ctx, ee, gba, &mut self.enrollment_authority, bus)
            }
        }
    }

    /// Runs the profile's authorization flow; returns the new credentials.
    pub fn authorize(
        &mut self,
        ee: &mut EndEntity,
        batch_size: u32,
        bus: &mut MessageBus,
    ) -> Result<Vec<Credential>, FlowError> {
        let ctx = self.context();
        match self.profile {
            CryptoProfile::Scms => super::scms_authorize(
                &ctx,
                ee,
                self.registration_authority.as_mut().expect("SCMS deployment has an RA"),
                &mut self.authorization_authority,
                batch_size,
                bus,
            ),
            CryptoProfile::Ccms => {
                super::ccms_authorize(&ctx, ee, &mut self.authorization_authority, &mut self.enrollment_authority, bus)
                    .map(|c| vec![c])
            }
            CryptoProfile::Cscms => {
                let gba = self.gba.as_mut().expect("C-SCMS deployment has a GBA-AS");
                if ee.channel.is_none() {
                    super::establish_gba_channel(&ctx, ee, gba, bus)?;
                }
                super::cscms_authorize(
                    &ctx,
                    ee,
                    gba,
                    self.registration_authority.as_mut().expect("C-SCMS deployment has a PRA"),
                    &mut self.authorization_authority,
                    batch_size,
                    bus,
                )
            }
        }
    }
}
