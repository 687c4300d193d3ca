//! Role actors and the enrollment / authorization protocols.
//!
//! Actors run in-process and exchange encoded bytes over a [`MessageBus`],
//! which records a transcript and can tamper with messages in tests. Every
//! message between PKI actors is a SignedData or SignedEncryptedData; only
//! the GBA bootstrap and channel frames are raw.

mod actors;
mod authorize;
mod bus;
mod channel;
mod enroll;
pub mod messages;
mod transport;

use thiserror::Error;

pub use self::actors::{Authority, Deployment, EndEntity, FlowContext, PendingBatch, Role, derive_rng};
pub use self::authorize::{
    aa_handle_request, aa_handle_validation, aca_handle_request, ccms_authorize, cscms_authorize, download_batch,
    ea_handle_validation, ra_accept_aca_response, ra_build_aca_requests, ra_handle_download, ra_handle_request,
    scms_authorize,
};
pub use self::bus::{MessageBus, TamperHook, Transcript, TranscriptEntry};
pub use self::channel::{ChannelAuthFailure, ChannelSide, SUBSCRIBER_SECRET_LEN, SecureChannel};
pub use self::enroll::{
    build_enrolment_request, ccms_enrol, cscms_enroll, ea_handle_enrolment, eca_handle_request, scms_enroll,
};
pub use self::transport::establish_gba_channel;

use crate::cert::CertError;
use crate::codec::CodecError;
use crate::secured::SecuredError;

/// Application permission used on every PKI management message.
pub const PSID_CERT_MANAGEMENT: u32 = crate::cert::PSID_ENROLLMENT;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("canonical key is not registered")]
    UnregisteredCanonicalKey,
    #[error("request signature invalid")]
    BadRequestSignature,
    #[error("enrolment proof-of-possession signature invalid")]
    BadInnerPoP,
    #[error("authorization proof-of-possession signature invalid")]
    BadPoP,
    #[error("enrolment authority rejected the validation request")]
    ValidationRejected,
    #[error("enrollment certificate chain invalid")]
    EnrollmentChainInvalid,
    #[error("download requested before the request was acknowledged")]
    DownloadBeforeAck,
    #[error("secure channel authentication failed")]
    ChannelAuthFailure,
    #[error("unknown GBA subscriber")]
    UnknownSubscriber,
    #[error("GBA authentication response mismatch")]
    BadAuthResponse,
    #[error("response rejected: {0}")]
    BadResponse(&'static str),
    #[error("message addressed to another recipient")]
    WrongRecipient,
    #[error("end entity is not enrolled")]
    NotEnrolled,
    #[error("no GBA channel established")]
    NoChannel,
    #[error("unexpected message: {0}")]
    UnexpectedMessage(&'static str),
    #[error("invalid request: {0}")]
    InvalidRequest(&'static str),
    #[error("malformed message: {0}")]
    Malformed(#[from] CodecError),
    #[error(transparent)]
    Secured(#[from] SecuredError),
    #[error(transparent)]
    Cert(#[from] CertError),
}

impl From<ChannelAuthFailure> for FlowError {
    fn from(_: ChannelAuthFailure) -> Self {
        FlowError::ChannelAuthFailure
    }
}
