//! Signer identity extraction from v1 (`META-INF/*.RSA|DSA|EC`) signature
//! blocks. Only identity is extracted; signatures are not verified.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use x509_parser::prelude::{FromDer, X509Certificate};

use super::ApkError;

const OID_SIGNED_DATA: &[u8] = &[0x2A, 0x86, 0x48, 0x86, 0xF7, 0x0D, 0x01, 0x07, 0x02];
const EMBEDDED_KNOWN_SIGNATURES: &str = include_str!("../../data/known_signatures.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DnField {
    CommonName,
    OrganizationalUnit,
    Organization,
    Locality,
    State,
    Country,
    Email,
}

impl DnField {
    pub const ALL: [DnField; 7] = [
        DnField::CommonName,
        DnField::OrganizationalUnit,
        DnField::Organization,
        DnField::Locality,
        DnField::State,
        DnField::Country,
        DnField::Email,
    ];

    fn from_oid(oid: &str) -> Option<Self> {
        Some(match oid {
            "2.5.4.3" => DnField::CommonName,
            "2.5.4.11" => DnField::OrganizationalUnit,
            "2.5.4.10" => DnField::Organization,
            "2.5.4.7" => DnField::Locality,
            "2.5.4.8" => DnField::State,
            "2.5.4.6" => DnField::Country,
            "1.2.840.113549.1.9.1" => DnField::Email,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignatureClass {
    DeveloperSpecific,
    DebugDefault,
    GeneratorDefault,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignerIdentity {
    /// SHA-256 of the leaf certificate DER, lowercase hex.
    pub fingerprint: String,
    /// Present, non-blank subject fields only.
    pub dn_fields: BTreeMap<DnField, String>,
    pub signature_class: SignatureClass,
    pub completeness: f64,
}

impl SignerIdentity {
    pub fn new(
        fingerprint: String,
        dn_fields: BTreeMap<DnField, String>,
        class: SignatureClass,
    ) -> Self {
        let dn_fields: BTreeMap<_, _> = dn_fields
            .into_iter()
            .filter_map(|(k, v)| {
                let v = v.trim().to_string();
                (!v.is_empty()).then_some((k, v))
            })
            .collect();
        let completeness = dn_fields.len() as f64 / DnField::ALL.len() as f64;
        Self {
            fingerprint,
            dn_fields,
            signature_class: class,
            completeness,
        }
    }

    pub fn field(&self, f: DnField) -> Option<&str> {
        self.dn_fields.get(&f).map(String::as_str)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct KnownSignature {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dn_pattern: Option<BTreeMap<DnField, String>>,
    pub class: SignatureClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Public signatures (debug keys, generator default keys) that say nothing
/// about the developer.
#[derive(Debug, Clone, Default)]
pub struct KnownSignatureDb {
    entries: Vec<KnownSignature>,
}

fn normalize_fp(fp: &str) -> String {
    fp.chars()
        .filter(|c| c.is_ascii_hexdigit())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

impl KnownSignatureDb {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let entries: Vec<KnownSignature> = serde_json::from_str(text)?;
        Ok(Self { entries })
    }

    pub fn embedded() -> Self {
        Self::from_json(EMBEDDED_KNOWN_SIGNATURES).expect("embedded signature db is valid")
    }

    pub fn entries(&self) -> &[KnownSignature] {
        &self.entries
    }

    pub fn classify(&self, fingerprint: &str, dn: &BTreeMap<DnField, String>) -> SignatureClass {
        let fp = normalize_fp(fingerprint);
        for entry in &self.entries {
            if entry.fingerprint.as_deref().map(normalize_fp).as_deref() == Some(fp.as_str()) {
                return entry.class;
            }
            if let Some(pattern) = &entry.dn_pattern {
                let hit = !pattern.is_empty()
                    && pattern
                        .iter()
                        .all(|(k, v)| dn.get(k).map(|x| x.trim()) == Some(v.trim()));
                if hit {
                    return entry.class;
                }
            }
        }
        SignatureClass::DeveloperSpecific
    }
}

// --- minimal BER/DER walker ---------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Tlv<'a> {
    tag: u8,
    content: &'a [u8],
    /// Full element including header.
    raw: &'a [u8],
}

fn read_tlv(buf: &[u8]) -> Option<(Tlv<'_>, &[u8])> {
    let tag = *buf.first()?;
    if tag & 0x1F == 0x1F {
        return None;
    }
    let first = *buf.get(1)?;
    let (header, len) = if first & 0x80 == 0 {
        (2, Some(usize::from(first)))
    } else if first == 0x80 {
        (2, None)
    } else {
        let n = usize::from(first & 0x7F);
        if n > 4 {
            return None;
        }
        let bytes = buf.get(2..2 + n)?;
        let len = bytes
            .iter()
            .fold(0usize, |acc, &b| (acc << 8) | usize::from(b));
        (2 + n, Some(len))
    };
    match len {
        Some(len) => {
            let end = header.checked_add(len)?;
            let raw = buf.get(..end)?;
            Some((
                Tlv {
                    tag,
                    content: &raw[header..],
                    raw,
                },
                &buf[end..],
            ))
        }
        None => {
            // indefinite length: constructed only, terminated by 00 00
            if tag & 0x20 == 0 {
                return None;
            }
            let mut rest = &buf[header..];
            let mut consumed = header;
            loop {
                if rest.len() >= 2 && rest[0] == 0 && rest[1] == 0 {
                    let content = &buf[header..consumed];
                    let raw = &buf[..consumed + 2];
                    return Some((Tlv { tag, content, raw }, &buf[consumed + 2..]));
                }
                let (child, after) = read_tlv(rest)?;
                consumed += child.raw.len();
                rest = after;
            }
        }
    }
}

fn children(content: &[u8]) -> Option<Vec<Tlv<'_>>> {
    let mut out = Vec::new();
    let mut rest = content;
    while !rest.is_empty() {
        let (tlv, after) = read_tlv(rest)?;
        out.push(tlv);
        rest = after;
    }
    Some(out)
}

/// Raw DER certificates carried in a PKCS#7 SignedData block.
pub fn pkcs7_certificates(block: &[u8]) -> Option<Vec<&[u8]>> {
    let (content_info, _) = read_tlv(block)?;
    if content_info.tag != 0x30 {
        return None;
    }
    let ci = children(content_info.content)?;
    let oid = ci.first().filter(|t| t.tag == 0x06)?;
    if oid.content != OID_SIGNED_DATA {
        return None;
    }
    let explicit = ci.get(1).filter(|t| t.tag == 0xA0)?;
    let (signed_data, _) = read_tlv(explicit.content)?;
    if signed_data.tag != 0x30 {
        return None;
    }
    let sd = children(signed_data.content)?;
    let certs = sd.iter().find(|t| t.tag == 0xA0);
    match certs {
        None => Some(Vec::new()),
        Some(set) => Some(
            children(set.content)?
                .into_iter()
                .filter(|t| t.tag == 0x30)
                .map(|t| t.raw)
                .collect(),
        ),
    }
}

struct ParsedCert<'a> {
    der: &'a [u8],
    subject: Vec<u8>,
    issuer: Vec<u8>,
    dn: BTreeMap<DnField, String>,
}

fn parse_cert(der: &[u8]) -> Option<ParsedCert<'_>> {
    let (_, cert) = X509Certificate::from_der(der).ok()?;
    let mut dn = BTreeMap::new();
    for attr in cert.subject().iter_attributes() {
        let Some(field) = DnField::from_oid(&attr.attr_type().to_id_string()) else {
            continue;
        };
        if dn.contains_key(&field) {
            continue;
        }
        let value = attr.as_str().map(str::to_string).unwrap_or_else(|_| {
            String::from_utf8_lossy(attr.attr_value().data.as_ref()).into_owned()
        });
        dn.insert(field, value);
    }
    Some(ParsedCert {
        der,
        subject: cert.subject().as_raw().to_vec(),
        issuer: cert.issuer().as_raw().to_vec(),
        dn,
    })
}

/// Leaf = first certificate whose subject is not the issuer of any other
/// certificate in the block.
fn select_leaf<'a, 'b>(certs: &'b [ParsedCert<'a>]) -> Option<&'b ParsedCert<'a>> {
    certs
        .iter()
        .enumerate()
        .find(|(i, c)| {
            !certs
                .iter()
                .enumerate()
                .any(|(j, other)| j != *i && other.issuer == c.subject)
        })
        .map(|(_, c)| c)
        .or_else(|| certs.first())
}

pub fn is_signature_block(path: &str) -> bool {
    let Some(name) = path.strip_prefix("META-INF/") else {
        return false;
    };
    if name.contains('/') {
        return false;
    }
    let upper = name.to_ascii_uppercase();
    upper.ends_with(".RSA") || upper.ends_with(".DSA") || upper.ends_with(".EC")
}

/// Identity of the leaf signer of one signature block.
pub fn signer_from_block(block: &[u8], db: &KnownSignatureDb) -> Option<SignerIdentity> {
    let ders = pkcs7_certificates(block)?;
    let parsed: Option<Vec<ParsedCert<'_>>> = ders.iter().map(|d| parse_cert(d)).collect();
    let parsed = parsed?;
    let leaf = select_leaf(&parsed)?;
    let fingerprint = hex::encode(Sha256::digest(leaf.der));
    let class = db.classify(&fingerprint, &leaf.dn);
    Some(SignerIdentity::new(fingerprint, leaf.dn.clone(), class))
}

pub(crate) fn signers_from_blocks<'a, I>(
    blocks: I,
    db: &KnownSignatureDb,
) -> Result<Vec<SignerIdentity>, ApkError>
where
    I: IntoIterator<Item = (&'a str, Vec<u8>)>,
{
    blocks
        .into_iter()
        .map(|(path, bytes)| {
            signer_from_block(&bytes, db).ok_or_else(|| ApkError::CertUndecodable(path.to_string()))
        })
        .collect()
}
