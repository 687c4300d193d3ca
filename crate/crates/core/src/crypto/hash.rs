use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sm3::Sm3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HashAlg {
    #[serde(rename = "sha-256")]
    Sha256,
    #[serde(rename = "sm3-256")]
    Sm3,
}

impl HashAlg {
    pub const ALL: [HashAlg; 2] = [HashAlg::Sha256, HashAlg::Sm3];

    pub fn name(self) -> &'static str {
        match self {
            HashAlg::Sha256 => "sha-256",
            HashAlg::Sm3 => "sm3-256",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.name() == name)
    }

    /// One-byte `hashId` wire value.
    pub fn tag(self) -> u8 {
        match self {
            HashAlg::Sha256 => 0,
            HashAlg::Sm3 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.tag() == tag)
    }

    pub fn digest(self, data: &[u8]) -> [u8; 32] {
        self.digest_parts(&[data])
    }

    /// Digest of the concatenation of `parts`.
    pub fn digest_parts(self, parts: &[&[u8]]) -> [u8; 32] {
        fn run<D: Digest>(parts: &[&[u8]]) -> [u8; 32] {
            let mut h = D::new();
            for p in parts {
                h.update(p);
            }
            let mut out = [0u8; 32];
            out.copy_from_slice(&h.finalize());
            out
        }
        match self {
            HashAlg::Sha256 => run::<Sha256>(parts),
            HashAlg::Sm3 => run::<Sm3>(parts),
        }
    }
}
