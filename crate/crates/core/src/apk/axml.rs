//! Android binary XML (AXML) decoder.
//!
//! Layout: an `RES_XML_TYPE` (0x0003) file chunk wrapping a string pool
//! (0x0001), an optional resource map (0x0180) and a flat stream of
//! namespace / element / cdata node chunks (0x0100..=0x0104). All integers
//! are little-endian.

use thiserror::Error;

pub const RES_STRING_POOL_TYPE: u16 = 0x0001;
pub const RES_XML_TYPE: u16 = 0x0003;
pub const RES_XML_START_NAMESPACE_TYPE: u16 = 0x0100;
pub const RES_XML_END_NAMESPACE_TYPE: u16 = 0x0101;
pub const RES_XML_START_ELEMENT_TYPE: u16 = 0x0102;
pub const RES_XML_END_ELEMENT_TYPE: u16 = 0x0103;
pub const RES_XML_CDATA_TYPE: u16 = 0x0104;
pub const RES_XML_RESOURCE_MAP_TYPE: u16 = 0x0180;

const UTF8_FLAG: u32 = 1 << 8;
const NO_INDEX: u32 = u32::MAX;

pub const TYPE_NULL: u8 = 0x00;
pub const TYPE_REFERENCE: u8 = 0x01;
pub const TYPE_STRING: u8 = 0x03;
pub const TYPE_FLOAT: u8 = 0x04;
pub const TYPE_INT_DEC: u8 = 0x10;
pub const TYPE_INT_HEX: u8 = 0x11;
pub const TYPE_INT_BOOLEAN: u8 = 0x12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AxmlError {
    #[error("not a binary XML document (chunk type {0:#06x})")]
    BadMagic(u16),
    #[error("chunk at offset {offset} is malformed: {reason}")]
    BadChunk { offset: usize, reason: &'static str },
    #[error("string index {0} out of range")]
    StringIndex(u32),
    #[error("string {0} is not valid text")]
    BadString(u32),
    #[error("unbalanced element `{0}`")]
    Unbalanced(String),
    #[error("document has no string pool")]
    NoStringPool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    String(String),
    Int(i32),
    Bool(bool),
    Reference(u32),
    /// IEEE-754 bits, kept raw so values compare exactly.
    Float(u32),
    Other {
        data_type: u8,
        data: u32,
    },
}

impl AttrValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttrValue::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            AttrValue::Int(v) => Some(i64::from(*v)),
            AttrValue::String(s) => s.trim().parse().ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub namespace: Option<String>,
    pub name: String,
    pub resource_id: Option<u32>,
    pub value: AttrValue,
}

#[derive(Debug, Clone, PartialEq)]
pub enum XmlEvent {
    Start {
        namespace: Option<String>,
        name: String,
        attributes: Vec<Attribute>,
    },
    End {
        name: String,
    },
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxmlDocument {
    pub strings: Vec<String>,
    pub resource_ids: Vec<u32>,
    pub events: Vec<XmlEvent>,
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn u8(&self, off: usize) -> Option<u8> {
        self.buf.get(off).copied()
    }
    fn u16(&self, off: usize) -> Option<u16> {
        self.buf
            .get(off..off.checked_add(2)?)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
    }
    fn u32(&self, off: usize) -> Option<u32> {
        self.buf
            .get(off..off.checked_add(4)?)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn bad(offset: usize, reason: &'static str) -> AxmlError {
    AxmlError::BadChunk { offset, reason }
}

/// Known framework attribute resource ids, used when a packer blanks the
/// attribute name strings but keeps the resource map intact.
pub fn framework_attr_name(id: u32) -> Option<&'static str> {
    Some(match id {
        0x0101_0001 => "label",
        0x0101_0002 => "icon",
        0x0101_0003 => "name",
        0x0101_020c => "minSdkVersion",
        0x0101_0270 => "targetSdkVersion",
        0x0101_021b => "versionCode",
        0x0101_021c => "versionName",
        0x0101_0202 => "targetActivity",
        0x0101_0010 => "exported",
        _ => return None,
    })
}

pub fn parse(input: &[u8]) -> Result<AxmlDocument, AxmlError> {
    let c = Cursor { buf: input };
    let file_type = c.u16(0).ok_or_else(|| bad(0, "truncated file header"))?;
    if file_type != RES_XML_TYPE {
        return Err(AxmlError::BadMagic(file_type));
    }
    let header_size = usize::from(c.u16(2).ok_or_else(|| bad(0, "truncated file header"))?);
    let total = c.u32(4).ok_or_else(|| bad(0, "truncated file header"))? as usize;
    if header_size < 8 || header_size > total {
        return Err(bad(0, "bad file header size"));
    }
    if total > input.len() {
        return Err(bad(0, "declared size exceeds input"));
    }

    let mut strings: Option<Vec<String>> = None;
    let mut resource_ids = Vec::new();
    let mut events = Vec::new();
    let mut stack: Vec<String> = Vec::new();

    let mut off = header_size;
    while off < total {
        if off + 8 > total {
            return Err(bad(off, "truncated chunk header"));
        }
        let ty = c
            .u16(off)
            .ok_or_else(|| bad(off, "truncated chunk header"))?;
        let hsize = usize::from(
            c.u16(off + 2)
                .ok_or_else(|| bad(off, "truncated chunk header"))?,
        );
        let size = c
            .u32(off + 4)
            .ok_or_else(|| bad(off, "truncated chunk header"))? as usize;
        if size < 8 || hsize < 8 || hsize > size || off.checked_add(size).is_none_or(|e| e > total)
        {
            return Err(bad(off, "chunk size out of bounds"));
        }
        let chunk = Cursor {
            buf: &input[off..off + size],
        };
        match ty {
            RES_STRING_POOL_TYPE => {
                if strings.is_some() {
                    return Err(bad(off, "second string pool"));
                }
                strings = Some(parse_string_pool(&chunk, hsize, off)?);
            }
            RES_XML_RESOURCE_MAP_TYPE => {
                let n = (size - hsize) / 4;
                resource_ids = (0..n)
                    .map(|i| chunk.u32(hsize + i * 4).expect("bounds checked"))
                    .collect();
            }
            RES_XML_START_NAMESPACE_TYPE | RES_XML_END_NAMESPACE_TYPE => {}
            RES_XML_START_ELEMENT_TYPE => {
                let pool = strings.as_deref().ok_or(AxmlError::NoStringPool)?;
                let ev = parse_start(&chunk, hsize, off, pool, &resource_ids)?;
                if let XmlEvent::Start { name, .. } = &ev {
                    stack.push(name.clone());
                }
                events.push(ev);
            }
            RES_XML_END_ELEMENT_TYPE => {
                let pool = strings.as_deref().ok_or(AxmlError::NoStringPool)?;
                let name_idx = chunk
                    .u32(hsize + 4)
                    .ok_or_else(|| bad(off, "truncated end element"))?;
                let name = lookup(pool, name_idx)?.to_string();
                match stack.pop() {
                    Some(open) if open == name => {}
                    _ => return Err(AxmlError::Unbalanced(name)),
                }
                events.push(XmlEvent::End { name });
            }
            RES_XML_CDATA_TYPE => {
                let pool = strings.as_deref().ok_or(AxmlError::NoStringPool)?;
                let idx = chunk
                    .u32(hsize)
                    .ok_or_else(|| bad(off, "truncated cdata"))?;
                events.push(XmlEvent::Text(lookup(pool, idx)?.to_string()));
            }
            // unknown chunks are skipped by size, like the platform parser
            _ => {}
        }
        off += size;
    }
    if let Some(open) = stack.pop() {
        return Err(AxmlError::Unbalanced(open));
    }
    Ok(AxmlDocument {
        strings: strings.ok_or(AxmlError::NoStringPool)?,
        resource_ids,
        events,
    })
}

fn lookup(pool: &[String], idx: u32) -> Result<&str, AxmlError> {
    pool.get(idx as usize)
        .map(String::as_str)
        .ok_or(AxmlError::StringIndex(idx))
}

fn lookup_opt(pool: &[String], idx: u32) -> Result<Option<String>, AxmlError> {
    if idx == NO_INDEX {
        Ok(None)
    } else {
        lookup(pool, idx).map(|s| Some(s.to_string()))
    }
}

fn parse_string_pool(c: &Cursor<'_>, hsize: usize, base: usize) -> Result<Vec<String>, AxmlError> {
    if hsize < 28 {
        return Err(bad(base, "string pool header too small"));
    }
    let count = c.u32(8).ok_or_else(|| bad(base, "truncated pool"))? as usize;
    let flags = c.u32(16).ok_or_else(|| bad(base, "truncated pool"))?;
    let strings_start = c.u32(20).ok_or_else(|| bad(base, "truncated pool"))? as usize;
    let utf8 = flags & UTF8_FLAG != 0;
    if count > 0 && (strings_start < hsize || strings_start > c.buf.len()) {
        return Err(bad(base, "string data offset out of bounds"));
    }
    if hsize
        .checked_add(
            count
                .checked_mul(4)
                .ok_or_else(|| bad(base, "string count overflow"))?,
        )
        .is_none_or(|e| e > c.buf.len())
    {
        return Err(bad(base, "string offsets out of bounds"));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let rel = c.u32(hsize + i * 4).expect("bounds checked") as usize;
        let at = strings_start
            .checked_add(rel)
            .filter(|&a| a < c.buf.len())
            .ok_or(AxmlError::BadString(i as u32))?;
        let s = if utf8 {
            decode_utf8_string(c, at)
        } else {
            decode_utf16_string(c, at)
        };
        out.push(s.ok_or(AxmlError::BadString(i as u32))?);
    }
    Ok(out)
}

fn decode_utf8_string(c: &Cursor<'_>, mut at: usize) -> Option<String> {
    // UTF-16 length first (unused), then UTF-8 byte length.
    let read_len = |at: &mut usize| -> Option<usize> {
        let b0 = c.u8(*at)?;
        *at += 1;
        if b0 & 0x80 != 0 {
            let b1 = c.u8(*at)?;
            *at += 1;
            Some((usize::from(b0 & 0x7F) << 8) | usize::from(b1))
        } else {
            Some(usize::from(b0))
        }
    };
    read_len(&mut at)?;
    let len = read_len(&mut at)?;
    let bytes = c.buf.get(at..at.checked_add(len)?)?;
    String::from_utf8(bytes.to_vec()).ok()
}

fn decode_utf16_string(c: &Cursor<'_>, mut at: usize) -> Option<String> {
    let first = c.u16(at)?;
    at += 2;
    let len = if first & 0x8000 != 0 {
        let second = c.u16(at)?;
        at += 2;
        (usize::from(first & 0x7FFF) << 16) | usize::from(second)
    } else {
        usize::from(first)
    };
    let units: Option<Vec<u16>> = (0..len).map(|i| c.u16(at + i * 2)).collect();
    String::from_utf16(&units?).ok()
}

fn parse_start(
    c: &Cursor<'_>,
    hsize: usize,
    base: usize,
    pool: &[String],
    resource_ids: &[u32],
) -> Result<XmlEvent, AxmlError> {
    let trunc = || bad(base, "truncated start element");
    let ns = c.u32(hsize).ok_or_else(trunc)?;
    let name = c.u32(hsize + 4).ok_or_else(trunc)?;
    let attr_start = usize::from(c.u16(hsize + 8).ok_or_else(trunc)?);
    let attr_size = usize::from(c.u16(hsize + 10).ok_or_else(trunc)?);
    let attr_count = usize::from(c.u16(hsize + 12).ok_or_else(trunc)?);
    if attr_count > 0 && attr_size < 20 {
        return Err(bad(base, "attribute record too small"));
    }
    let mut attributes = Vec::with_capacity(attr_count);
    for i in 0..attr_count {
        let at = hsize + attr_start + i * attr_size;
        let a_ns = c.u32(at).ok_or_else(trunc)?;
        let a_name = c.u32(at + 4).ok_or_else(trunc)?;
        let raw = c.u32(at + 8).ok_or_else(trunc)?;
        let data_type = c.u8(at + 15).ok_or_else(trunc)?;
        let data = c.u32(at + 16).ok_or_else(trunc)?;

        let resource_id = resource_ids.get(a_name as usize).copied();
        let mut attr_name = lookup(pool, a_name)?.to_string();
        if attr_name.is_empty() {
            if let Some(known) = resource_id.and_then(framework_attr_name) {
                attr_name = known.to_string();
            }
        }
        let value = match data_type {
            TYPE_STRING => AttrValue::String(lookup(pool, data)?.to_string()),
            TYPE_INT_DEC | TYPE_INT_HEX => AttrValue::Int(data as i32),
            TYPE_INT_BOOLEAN => AttrValue::Bool(data != 0),
            TYPE_REFERENCE => AttrValue::Reference(data),
            TYPE_FLOAT => AttrValue::Float(data),
            _ if raw != NO_INDEX => AttrValue::String(lookup(pool, raw)?.to_string()),
            _ => AttrValue::Other { data_type, data },
        };
        attributes.push(Attribute {
            namespace: lookup_opt(pool, a_ns)?,
            name: attr_name,
            resource_id,
            value,
        });
    }
    Ok(XmlEvent::Start {
        namespace: lookup_opt(pool, ns)?,
        name: lookup(pool, name)?.to_string(),
        attributes,
    })
}
