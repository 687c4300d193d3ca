//! AES-128 / SM4-128 block cores and their CCM mode (12-byte nonce, 16-byte tag).

use aes::Aes128;
use aes::cipher::BlockCipherEncrypt;
use ccm::Ccm;
use ccm::aead::{Aead, KeyInit};
use ccm::consts::{U12, U16};
use serde::{Deserialize, Serialize};
use sm4::Sm4;

use crate::error::CryptoError;

pub const KEY_LEN: usize = 16;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;

type AesCcm = Ccm<Aes128, U16, U12>;
type Sm4Ccm = Ccm<Sm4, U16, U12>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetricAlg {
    #[serde(rename = "aes-128")]
    Aes128,
    #[serde(rename = "sm4-128")]
    Sm4,
}

impl SymmetricAlg {
    pub const ALL: [SymmetricAlg; 2] = [SymmetricAlg::Aes128, SymmetricAlg::Sm4];

    pub fn name(self) -> &'static str {
        match self {
            SymmetricAlg::Aes128 => "aes-128",
            SymmetricAlg::Sm4 => "sm4-128",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Single-block encryption with the raw cipher core.
    pub fn encrypt_block(self, key: &[u8; KEY_LEN], block: &[u8; 16]) -> [u8; 16] {
        let mut b = (*block).into();
        match self {
            SymmetricAlg::Aes128 => Aes128::new(key.into()).encrypt_block(&mut b),
            SymmetricAlg::Sm4 => Sm4::new(key.into()).encrypt_block(&mut b),
        }
        b.into()
    }

    /// CCM encryption; output is `ciphertext ‖ tag`.
    pub fn aead_encrypt(self, key: &[u8; KEY_LEN], nonce: &[u8; NONCE_LEN], plaintext: &[u8]) -> Vec<u8> {
        let nonce = nonce.into();
        let out = match self {
            SymmetricAlg::Aes128 => AesCcm::new(key.into()).encrypt(nonce, plaintext),
            SymmetricAlg::Sm4 => Sm4Ccm::new(key.into()).encrypt(nonce, plaintext),
        };
        out.expect("CCM length limits exceed any 16-bit framed payload")
    }

    pub fn aead_decrypt(
        self,
        key: &[u8; KEY_LEN],
        nonce: &[u8; NONCE_LEN],
        sealed: &[u8],
    ) -> Result<Vec<u8>, CryptoError> {
        if sealed.len() < TAG_LEN {
            return Err(CryptoError::TagMismatch);
        }
        let nonce = nonce.into();
        match self {
            SymmetricAlg::Aes128 => AesCcm::new(key.into()).decrypt(nonce, sealed),
            SymmetricAlg::Sm4 => Sm4Ccm::new(key.into()).decrypt(nonce, sealed),
        }
        .map_err(|_| CryptoError::TagMismatch)
    }
}
