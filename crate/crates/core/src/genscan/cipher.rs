//! Asset ciphers used by app generators.
//!
//! RC4 and TEA are implemented here; the CBC modes delegate the block
//! primitive to the RustCrypto `aes`/`des` crates and pad with PKCS#7, the
//! `PKCS5Padding` of the Java runtime.

use aes::cipher::{block_padding::Pkcs7, BlockModeDecrypt, BlockModeEncrypt, KeyIvInit};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CipherError {
    #[error("invalid key length {0}")]
    KeyLength(usize),
    #[error("invalid IV length {0}")]
    IvLength(usize),
    #[error("ciphertext length {0} is not a whole number of blocks")]
    BlockLength(usize),
    #[error("bad padding")]
    Padding,
}

pub trait AssetCipher {
    fn encrypt(&self, plaintext: &[u8]) -> Vec<u8>;
    fn decrypt(&self, ciphertext: &[u8]) -> Result<Vec<u8>, CipherError>;
}

/// Alleged RC4 (ARC4) stream cipher, no keystream drop.
#[derive(Clone)]
pub struct Rc4 {
    key: Vec<u8>,
}

impl Rc4 {
    pub fn new(key: &[u8]) -> Result<Self, CipherError> {
        if key.is_empty() || key.len() > 256 {
            return Err(CipherError::KeyLength(key.len()));
        }
        Ok(Self { key: key.to_vec() })
    }

    pub fn apply(&self, data: &[u8]) -> Vec<u8> {
        let mut s: [u8; 256] = std::array::from_fn(|i| i as u8);
        let mut j: u8 = 0;
        for i in 0..256 {
            j = j
                .wrapping_add(s[i])
                .wrapping_add(self.key[i % self.key.len()]);
            s.swap(i, usize::from(j));
        }
        let (mut i, mut j) = (0u8, 0u8);
        data.iter()
            .map(|&b| {
                i = i.wrapping_add(1);
                j = j.wrapping_add(s[usize::from(i)]);
                s.swap(usize::from(i), usize::from(j));
                b ^ s[usize::from(s[usize::from(i)].wrapping_add(s[usize::from(j)]))]
            })
            .collect()
    }
}

impl AssetCipher for Rc4 {
    fn encrypt(&self, plaintext: &[u8]) -> Vec<u8> {
        self.apply(plaintext)
    }
    fn decrypt(&self, ciphertext: &[u8]) -> Result<Vec<u8>, CipherError> {
        Ok(self.apply(ciphertext))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endianness {
    #[default]
    Big,
    Little,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeaVariant {
    #[serde(default = "TeaVariant::default_rounds")]
    pub rounds: u32,
    #[serde(default)]
    pub endianness: Endianness,
}

impl TeaVariant {
    fn default_rounds() -> u32 {
        32
    }
}

impl Default for TeaVariant {
    fn default() -> Self {
        Self {
            rounds: 32,
            endianness: Endianness::Big,
        }
    }
}

const TEA_DELTA: u32 = 0x9E37_79B9;

/// Tiny Encryption Algorithm in ECB over 8-byte blocks. A trailing partial
/// block is passed through unchanged.
#[derive(Clone)]
pub struct Tea {
    key: [u32; 4],
    variant: TeaVariant,
}

impl Tea {
    pub fn new(key: &[u8], variant: TeaVariant) -> Result<Self, CipherError> {
        if key.len() != 16 {
            return Err(CipherError::KeyLength(key.len()));
        }
        let word = |i: usize| {
            let b = [key[i * 4], key[i * 4 + 1], key[i * 4 + 2], key[i * 4 + 3]];
            match variant.endianness {
                Endianness::Big => u32::from_be_bytes(b),
                Endianness::Little => u32::from_le_bytes(b),
            }
        };
        Ok(Self {
            key: [word(0), word(1), word(2), word(3)],
            variant,
        })
    }

    pub fn encrypt_block(&self, mut v0: u32, mut v1: u32) -> (u32, u32) {
        let k = &self.key;
        let mut sum: u32 = 0;
        for _ in 0..self.variant.rounds {
            sum = sum.wrapping_add(TEA_DELTA);
            v0 = v0.wrapping_add(
                (v1 << 4).wrapping_add(k[0]) ^ v1.wrapping_add(sum) ^ (v1 >> 5).wrapping_add(k[1]),
            );
            v1 = v1.wrapping_add(
                (v0 << 4).wrapping_add(k[2]) ^ v0.wrapping_add(sum) ^ (v0 >> 5).wrapping_add(k[3]),
            );
        }
        (v0, v1)
    }

    pub fn decrypt_block(&self, mut v0: u32, mut v1: u32) -> (u32, u32) {
        let k = &self.key;
        let mut sum = TEA_DELTA.wrapping_mul(self.variant.rounds);
        for _ in 0..self.variant.rounds {
            v1 = v1.wrapping_sub(
                (v0 << 4).wrapping_add(k[2]) ^ v0.wrapping_add(sum) ^ (v0 >> 5).wrapping_add(k[3]),
            );
            v0 = v0.wrapping_sub(
                (v1 << 4).wrapping_add(k[0]) ^ v1.wrapping_add(sum) ^ (v1 >> 5).wrapping_add(k[1]),
            );
            sum = sum.wrapping_sub(TEA_DELTA);
        }
        (v0, v1)
    }

    fn process(&self, data: &[u8], f: impl Fn(&Self, u32, u32) -> (u32, u32)) -> Vec<u8> {
        let mut out = data.to_vec();
        for block in out.chunks_exact_mut(8) {
            let (a, b) = match self.variant.endianness {
                Endianness::Big => (
                    u32::from_be_bytes(block[..4].try_into().expect("4 bytes")),
                    u32::from_be_bytes(block[4..].try_into().expect("4 bytes")),
                ),
                Endianness::Little => (
                    u32::from_le_bytes(block[..4].try_into().expect("4 bytes")),
                    u32::from_le_bytes(block[4..].try_into().expect("4 bytes")),
                ),
            };
            let (a, b) = f(self, a, b);
            let (a, b) = match self.variant.endianness {
                Endianness::Big => (a.to_be_bytes(), b.to_be_bytes()),
                Endianness::Little => (a.to_le_bytes(), b.to_le_bytes()),
            };
            block[..4].copy_from_slice(&a);
            block[4..].copy_from_slice(&b);
        }
        out
    }
}

impl AssetCipher for Tea {
    fn encrypt(&self, plaintext: &[u8]) -> Vec<u8> {
        self.process(plaintext, Tea::encrypt_block)
    }
    fn decrypt(&self, ciphertext: &[u8]) -> Result<Vec<u8>, CipherError> {
        Ok(self.process(ciphertext, Tea::decrypt_block))
    }
}

/// AES in CBC mode with PKCS#7 padding; key length selects AES-128/192/256.
#[derive(Clone)]
pub struct AesCbc {
    key: Vec<u8>,
    iv: [u8; 16],
}

impl AesCbc {
    pub fn new(key: &[u8], iv: &[u8]) -> Result<Self, CipherError> {
        if !matches!(key.len(), 16 | 24 | 32) {
            return Err(CipherError::KeyLength(key.len()));
        }
        let iv: [u8; 16] = iv.try_into().map_err(|_| CipherError::IvLength(iv.len()))?;
        Ok(Self {
            key: key.to_vec(),
            iv,
        })
    }
}

macro_rules! cbc_encrypt {
    ($cipher:ty, $key:expr, $iv:expr, $pt:expr) => {
        cbc::Encryptor::<$cipher>::new_from_slices($key, $iv)
            .expect("key and iv lengths validated")
            .encrypt_padded_vec::<Pkcs7>($pt)
    };
}

macro_rules! cbc_decrypt {
    ($cipher:ty, $key:expr, $iv:expr, $ct:expr) => {
        cbc::Decryptor::<$cipher>::new_from_slices($key, $iv)
            .expect("key and iv lengths validated")
            .decrypt_padded_vec::<Pkcs7>($ct)
            .map_err(|_| CipherError::Padding)
    };
}

impl AssetCipher for AesCbc {
    fn encrypt(&self, plaintext: &[u8]) -> Vec<u8> {
        match self.key.len() {
            16 => cbc_encrypt!(aes::Aes128, &self.key, &self.iv, plaintext),
            24 => cbc_encrypt!(aes::Aes192, &self.key, &self.iv, plaintext),
            _ => cbc_encrypt!(aes::Aes256, &self.key, &self.iv, plaintext),
        }
    }

    fn decrypt(&self, ciphertext: &[u8]) -> Result<Vec<u8>, CipherError> {
        if ciphertext.is_empty() || ciphertext.len() % 16 != 0 {
            return Err(CipherError::BlockLength(ciphertext.len()));
        }
        match self.key.len() {
            16 => cbc_decrypt!(aes::Aes128, &self.key, &self.iv, ciphertext),
            24 => cbc_decrypt!(aes::Aes192, &self.key, &self.iv, ciphertext),
            _ => cbc_decrypt!(aes::Aes256, &self.key, &self.iv, ciphertext),
        }
    }
}

/// Single DES in CBC mode with PKCS#7 padding.
#[derive(Clone)]
pub struct DesCbc {
    key: [u8; 8],
    iv: [u8; 8],
}

impl DesCbc {
    pub fn new(key: &[u8], iv: &[u8]) -> Result<Self, CipherError> {
        let key: [u8; 8] = key
            .try_into()
            .map_err(|_| CipherError::KeyLength(key.len()))?;
        let iv: [u8; 8] = iv.try_into().map_err(|_| CipherError::IvLength(iv.len()))?;
        Ok(Self { key, iv })
    }
}

impl AssetCipher for DesCbc {
    fn encrypt(&self, plaintext: &[u8]) -> Vec<u8> {
        cbc_encrypt!(des::Des, &self.key, &self.iv, plaintext)
    }

    fn decrypt(&self, ciphertext: &[u8]) -> Result<Vec<u8>, CipherError> {
        if ciphertext.is_empty() || ciphertext.len() % 8 != 0 {
            return Err(CipherError::BlockLength(ciphertext.len()));
        }
        cbc_decrypt!(des::Des, &self.key, &self.iv, ciphertext)
    }
}
