//! Test fixture writers: ZIP archives through the `zip` crate, binary XML
//! through an independent serializer, and checked-in certificate material.

pub mod axml;

use std::io::{Cursor, Write};
use std::path::PathBuf;

use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipWriter};

pub use axml::{Attr, AxmlWriter, ManifestSpec, Value};

/// One archive member.
#[derive(Debug, Clone)]
pub struct Member {
    pub path: String,
    pub data: Vec<u8>,
    pub deflate: bool,
    /// `(year, month, day, hour, minute, second)`, interpreted by the
    /// reader as UTC.
    pub mtime: (u16, u8, u8, u8, u8, u8),
}

impl Member {
    pub fn stored(path: &str, data: impl Into<Vec<u8>>) -> Self {
        Self {
            path: path.to_string(),
            data: data.into(),
            deflate: false,
            mtime: (2020, 12, 1, 0, 0, 0),
        }
    }

    pub fn deflated(path: &str, data: impl Into<Vec<u8>>) -> Self {
        Self {
            deflate: true,
            ..Self::stored(path, data)
        }
    }

    pub fn at(mut self, mtime: (u16, u8, u8, u8, u8, u8)) -> Self {
        self.mtime = mtime;
        self
    }
}

pub fn zip_bytes(members: &[Member]) -> Vec<u8> {
    let mut w = ZipWriter::new(Cursor::new(Vec::new()));
    for m in members {
        let (y, mo, d, h, mi, s) = m.mtime;
        let opts = SimpleFileOptions::default()
            .compression_method(if m.deflate {
                CompressionMethod::Deflated
            } else {
                CompressionMethod::Stored
            })
            .last_modified_time(
                DateTime::from_date_and_time(y, mo, d, h, mi, s).expect("valid DOS time"),
            );
        w.start_file(m.path.as_str(), opts).expect("start entry");
        w.write_all(&m.data).expect("write entry");
    }
    w.finish().expect("finish archive").into_inner()
}

/// APK-shaped archive: the manifest first, then `extra`.
pub fn apk_bytes(manifest: &ManifestSpec, extra: Vec<Member>) -> Vec<u8> {
    let mut members = vec![Member::stored("AndroidManifest.xml", manifest.to_axml())];
    members.extend(extra);
    zip_bytes(&members)
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Contents of a checked-in fixture file.
pub fn fixture(name: &str) -> Vec<u8> {
    let p = fixture_dir().join(name);
    std::fs::read(&p).unwrap_or_else(|e| panic!("fixture {}: {e}", p.display()))
}
