//! Snapshot fingerprints: 64-bit difference hash over a 9x8 grayscale
//! downscale.

use std::fmt;

use image::imageops::FilterType;
use image::GrayImage;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MIN_DIMENSION: u32 = 9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DhashError {
    #[error("image undecodable: {0}")]
    ImageUndecodable(String),
    #[error("image {width}x{height} is smaller than 9 pixels on a side")]
    TooSmall { width: u32, height: u32 },
}

/// 64 hash bits, row-major, most significant bit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HashBits(pub u64);

impl fmt::Display for HashBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Serialize for HashBits {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HashBits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.len() != 16 {
            return Err(serde::de::Error::custom("hash must be 16 hex digits"));
        }
        u64::from_str_radix(&s, 16)
            .map(HashBits)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VisualFingerprint {
    pub hash_bits: HashBits,
    pub source: String,
}

/// Pluggable snapshot hashing backend.
pub trait SnapshotHasher {
    fn fingerprint(&self, image: &GrayImage, source: &str)
        -> Result<VisualFingerprint, DhashError>;
    fn similarity(&self, a: &VisualFingerprint, b: &VisualFingerprint) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DHash;

impl SnapshotHasher for DHash {
    fn fingerprint(
        &self,
        image: &GrayImage,
        source: &str,
    ) -> Result<VisualFingerprint, DhashError> {
        snapshot_fingerprint(image, source)
    }
    fn similarity(&self, a: &VisualFingerprint, b: &VisualFingerprint) -> f64 {
        similarity(a, b)
    }
}

/// Difference hash of a grayscale pixel grid.
pub fn snapshot_fingerprint(
    image: &GrayImage,
    source: &str,
) -> Result<VisualFingerprint, DhashError> {
    let (width, height) = image.dimensions();
    if width < MIN_DIMENSION || height < MIN_DIMENSION {
        return Err(DhashError::TooSmall { width, height });
    }
    let small = image::imageops::resize(image, 9, 8, FilterType::Triangle);
    let mut bits = 0u64;
    for y in 0..8 {
        for x in 0..8 {
            let left = small.get_pixel(x, y)[0];
            let right = small.get_pixel(x + 1, y)[0];
            bits = (bits << 1) | u64::from(left < right);
        }
    }
    Ok(VisualFingerprint {
        hash_bits: HashBits(bits),
        source: source.to_string(),
    })
}

/// Decode a PNG or JPEG snapshot and fingerprint it.
pub fn fingerprint_image_bytes(
    bytes: &[u8],
    source: &str,
) -> Result<VisualFingerprint, DhashError> {
    let img =
        image::load_from_memory(bytes).map_err(|e| DhashError::ImageUndecodable(e.to_string()))?;
    snapshot_fingerprint(&img.to_luma8(), source)
}

pub fn hamming(a: HashBits, b: HashBits) -> u32 {
    (a.0 ^ b.0).count_ones()
}

/// 1 - hamming/64.
pub fn similarity(a: &VisualFingerprint, b: &VisualFingerprint) -> f64 {
    1.0 - f64::from(hamming(a.hash_bits, b.hash_bits)) / 64.0
}
