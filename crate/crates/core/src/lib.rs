//! Credential management for V2X public-key infrastructures.
//!
//! One data model covers the three deployed systems: the IEEE 1609.2.1
//! SCMS, the ETSI TS 102 941 CCMS and the YD/T 3957-2021 C-SCMS. The crate
//! provides their cryptographic suites, a canonical binary codec for
//! certificates and secured messages, explicit and ECQV implicit certificate
//! issuance, butterfly key expansion, the enrollment and authorization
//! protocol flows, and a benchmark harness.

pub mod bench;
pub mod butterfly;
pub mod cert;
pub mod codec;
pub mod crypto;
pub mod error;
pub mod fixtures;
pub mod flows;
pub mod secured;
