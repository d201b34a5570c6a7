//! Central-directory driven ZIP reader.
//!
//! Sizes and offsets come from the central directory only; local headers are
//! consulted just to find where an entry's data begins.

use std::collections::HashMap;
use std::io::Read;

use chrono::{DateTime, NaiveDate, Utc};
use flate2::read::DeflateDecoder;
use thiserror::Error;

const EOCD_SIG: u32 = 0x0605_4b50;
const ZIP64_EOCD_SIG: u32 = 0x0606_4b50;
const ZIP64_LOCATOR_SIG: u32 = 0x0706_4b50;
const CDFH_SIG: u32 = 0x0201_4b50;
const LFH_SIG: u32 = 0x0403_4b50;
const EOCD_MIN: usize = 22;
const MAX_COMMENT: usize = 0xFFFF;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZipError {
    #[error("no end of central directory record")]
    MissingEocd,
    #[error("central directory truncated or out of bounds")]
    TruncatedDirectory,
    #[error("bad central directory record at offset {0}")]
    BadRecord(usize),
    #[error("entry `{0}` has a bad local header")]
    BadLocalHeader(String),
    #[error("entry `{0}` uses unsupported compression method {1}")]
    UnsupportedMethod(String, u16),
    #[error("entry `{0}` failed to inflate")]
    Inflate(String),
    #[error("no entry named `{0}`")]
    NotFound(String),
}

/// One central-directory record, after path normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZipEntry {
    pub path: String,
    pub method: u16,
    pub compressed_size: u64,
    pub size: u64,
    pub local_offset: u64,
    pub mtime: DateTime<Utc>,
    pub crc32: u32,
}

#[derive(Debug, Clone)]
pub struct ZipIndex {
    entries: Vec<ZipEntry>,
    by_path: HashMap<String, usize>,
}

fn u16_at(buf: &[u8], off: usize) -> Option<u16> {
    buf.get(off..off + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
}

fn u32_at(buf: &[u8], off: usize) -> Option<u32> {
    buf.get(off..off + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

fn u64_at(buf: &[u8], off: usize) -> Option<u64> {
    buf.get(off..off + 8).map(|b| {
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        u64::from_le_bytes(a)
    })
}

/// Decode a DOS date/time pair as UTC. Out-of-range fields fall back to the
/// DOS epoch (1980-01-01T00:00:00Z).
pub fn dos_to_utc(date: u16, time: u16) -> DateTime<Utc> {
    let year = 1980 + i32::from(date >> 9);
    let month = u32::from((date >> 5) & 0x0F);
    let day = u32::from(date & 0x1F);
    let hour = u32::from(time >> 11);
    let minute = u32::from((time >> 5) & 0x3F);
    let second = u32::from(time & 0x1F) * 2;
    NaiveDate::from_ymd_opt(year, month, day)
        .and_then(|d| d.and_hms_opt(hour, minute, second))
        .unwrap_or_else(|| {
            NaiveDate::from_ymd_opt(1980, 1, 1)
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .expect("valid epoch")
        })
        .and_utc()
}

/// Normalize an archive path: forward slashes, no leading `/` or `./`,
/// no empty or `.` components.
pub fn normalize_path(raw: &str) -> String {
    raw.replace('\\', "/")
        .split('/')
        .filter(|c| !c.is_empty() && *c != ".")
        .collect::<Vec<_>>()
        .join("/")
}

fn find_eocd(buf: &[u8]) -> Option<usize> {
    if buf.len() < EOCD_MIN {
        return None;
    }
    let lowest = buf.len().saturating_sub(EOCD_MIN + MAX_COMMENT);
    (lowest..=buf.len() - EOCD_MIN)
        .rev()
        .find(|&i| u32_at(buf, i) == Some(EOCD_SIG))
}

impl ZipIndex {
    pub fn parse(buf: &[u8]) -> Result<Self, ZipError> {
        let eocd = find_eocd(buf).ok_or(ZipError::MissingEocd)?;
        let mut total = u64::from(u16_at(buf, eocd + 10).ok_or(ZipError::MissingEocd)?);
        let mut cd_size = u64::from(u32_at(buf, eocd + 12).ok_or(ZipError::MissingEocd)?);
        let mut cd_offset = u64::from(u32_at(buf, eocd + 16).ok_or(ZipError::MissingEocd)?);

        if eocd >= 20 && u32_at(buf, eocd - 20) == Some(ZIP64_LOCATOR_SIG) {
            let z64 = u64_at(buf, eocd - 20 + 8).ok_or(ZipError::TruncatedDirectory)? as usize;
            if u32_at(buf, z64) != Some(ZIP64_EOCD_SIG) {
                return Err(ZipError::TruncatedDirectory);
            }
            total = u64_at(buf, z64 + 32).ok_or(ZipError::TruncatedDirectory)?;
            cd_size = u64_at(buf, z64 + 40).ok_or(ZipError::TruncatedDirectory)?;
            cd_offset = u64_at(buf, z64 + 48).ok_or(ZipError::TruncatedDirectory)?;
        }

        let start = usize::try_from(cd_offset).map_err(|_| ZipError::TruncatedDirectory)?;
        let end = start
            .checked_add(usize::try_from(cd_size).map_err(|_| ZipError::TruncatedDirectory)?)
            .ok_or(ZipError::TruncatedDirectory)?;
        if end > buf.len() {
            return Err(ZipError::TruncatedDirectory);
        }

        let mut entries: Vec<ZipEntry> = Vec::new();
        let mut by_path = HashMap::new();
        let mut pos = start;
        for _ in 0..total {
            let entry = parse_cd_record(buf, &mut pos, end)?;
            match by_path.get(&entry.path) {
                // last record wins, keeping the slot of the first occurrence
                Some(&idx) => entries[idx] = entry,
                None => {
                    by_path.insert(entry.path.clone(), entries.len());
                    entries.push(entry);
                }
            }
        }
        Ok(Self { entries, by_path })
    }

    pub fn entries(&self) -> &[ZipEntry] {
        &self.entries
    }

    pub fn get(&self, path: &str) -> Option<&ZipEntry> {
        self.by_path.get(path).map(|&i| &self.entries[i])
    }

    /// Read and decompress the data for `entry` out of `buf`.
    pub fn read(&self, buf: &[u8], entry: &ZipEntry) -> Result<Vec<u8>, ZipError> {
        let bad = || ZipError::BadLocalHeader(entry.path.clone());
        let lfh = usize::try_from(entry.local_offset).map_err(|_| bad())?;
        if u32_at(buf, lfh) != Some(LFH_SIG) {
            return Err(bad());
        }
        let name_len = usize::from(u16_at(buf, lfh + 26).ok_or_else(bad)?);
        let extra_len = usize::from(u16_at(buf, lfh + 28).ok_or_else(bad)?);
        let data_start = lfh + 30 + name_len + extra_len;
        let data_end = usize::try_from(entry.compressed_size)
            .ok()
            .and_then(|n| data_start.checked_add(n))
            .filter(|&e| e <= buf.len())
            .ok_or_else(bad)?;
        let raw = &buf[data_start..data_end];
        match entry.method {
            0 => Ok(raw.to_vec()),
            8 => {
                let mut out = Vec::with_capacity(entry.size.min(1 << 24) as usize);
                DeflateDecoder::new(raw)
                    .read_to_end(&mut out)
                    .map_err(|_| ZipError::Inflate(entry.path.clone()))?;
                Ok(out)
            }
            m => Err(ZipError::UnsupportedMethod(entry.path.clone(), m)),
        }
    }

    pub fn read_path(&self, buf: &[u8], path: &str) -> Result<Vec<u8>, ZipError> {
        let entry = self
            .get(path)
            .ok_or_else(|| ZipError::NotFound(path.to_string()))?;
        self.read(buf, entry)
    }
}

fn parse_cd_record(buf: &[u8], pos: &mut usize, end: usize) -> Result<ZipEntry, ZipError> {
    let at = *pos;
    let bad = || ZipError::BadRecord(at);
    if at + 46 > end || u32_at(buf, at) != Some(CDFH_SIG) {
        return Err(bad());
    }
    let method = u16_at(buf, at + 10).ok_or_else(bad)?;
    let time = u16_at(buf, at + 12).ok_or_else(bad)?;
    let date = u16_at(buf, at + 14).ok_or_else(bad)?;
    let crc32 = u32_at(buf, at + 16).ok_or_else(bad)?;
    let mut compressed_size = u64::from(u32_at(buf, at + 20).ok_or_else(bad)?);
    let mut size = u64::from(u32_at(buf, at + 24).ok_or_else(bad)?);
    let name_len = usize::from(u16_at(buf, at + 28).ok_or_else(bad)?);
    let extra_len = usize::from(u16_at(buf, at + 30).ok_or_else(bad)?);
    let comment_len = usize::from(u16_at(buf, at + 32).ok_or_else(bad)?);
    let mut local_offset = u64::from(u32_at(buf, at + 42).ok_or_else(bad)?);

    let name_start = at + 46;
    let extra_start = name_start + name_len;
    let next = extra_start + extra_len + comment_len;
    if next > end {
        return Err(bad());
    }
    let name = String::from_utf8_lossy(&buf[name_start..extra_start]);

    // zip64 extended information: present fields follow the order size,
    // compressed size, local offset, and appear only for saturated values.
    let mut extra = &buf[extra_start..extra_start + extra_len];
    while extra.len() >= 4 {
        let id = u16::from_le_bytes([extra[0], extra[1]]);
        let len = usize::from(u16::from_le_bytes([extra[2], extra[3]]));
        let body = extra.get(4..4 + len).ok_or_else(bad)?;
        if id == 0x0001 {
            let mut off = 0;
            for field in [&mut size, &mut compressed_size, &mut local_offset] {
                if *field == u64::from(u32::MAX) {
                    *field = u64_at(body, off).ok_or_else(bad)?;
                    off += 8;
                }
            }
        }
        extra = &extra[4 + len..];
    }

    *pos = next;
    Ok(ZipEntry {
        path: normalize_path(&name),
        method,
        compressed_size,
        size,
        local_offset,
        mtime: dos_to_utc(date, time),
        crc32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dos_epoch_fallback() {
        assert_eq!(dos_to_utc(0, 0).to_rfc3339(), "1980-01-01T00:00:00+00:00");
    }

    #[test]
    fn dos_decoding() {
        // 2020-12-01 13:45:58
        let date = ((2020 - 1980) << 9) | (12 << 5) | 1;
        let time = (13 << 11) | (45 << 5) | (58 / 2);
        assert_eq!(
            dos_to_utc(date, time).to_rfc3339(),
            "2020-12-01T13:45:58+00:00"
        );
    }

    #[test]
    fn path_normalization() {
        assert_eq!(normalize_path("/assets//a/./b.js"), "assets/a/b.js");
        assert_eq!(
            normalize_path("./AndroidManifest.xml"),
            "AndroidManifest.xml"
        );
        assert_eq!(normalize_path("lib\\arm64\\x.so"), "lib/arm64/x.so");
    }

    #[test]
    fn garbage_has_no_eocd() {
        assert_eq!(
            ZipIndex::parse(b"not a zip at all, clearly").unwrap_err(),
            ZipError::MissingEocd
        );
        assert_eq!(ZipIndex::parse(b"").unwrap_err(), ZipError::MissingEocd);
    }

    #[test]
    fn directory_offset_out_of_bounds() {
        let mut eocd = vec![0u8; 22];
        eocd[..4].copy_from_slice(&EOCD_SIG.to_le_bytes());
        eocd[10..12].copy_from_slice(&1u16.to_le_bytes());
        eocd[12..16].copy_from_slice(&46u32.to_le_bytes());
        eocd[16..20].copy_from_slice(&1000u32.to_le_bytes());
        assert_eq!(
            ZipIndex::parse(&eocd).unwrap_err(),
            ZipError::TruncatedDirectory
        );
    }
}
