use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use culprit_core::apk::{
    self, extract_signers, open_apk, parse_manifest, permission_profile, ApkError,
    DangerousPermissions, DnField, KnownSignatureDb, ManifestInfo, SignatureClass, SignatureStatus,
};
use culprit_testkit::{apk_bytes, fixture, zip_bytes, ManifestSpec, Member};
use proptest::prelude::*;

fn sample_manifest() -> ManifestSpec {
    ManifestSpec::new("com.example.a")
        .permission("android.permission.INTERNET")
        .permission("android.permission.CAMERA")
        .activity("io.dcloud.PandoraEntry", true)
        .sdk(19, 28)
}

#[test]
fn minimal_stored_archive() {
    let bytes = zip_bytes(&[Member::stored(
        "AndroidManifest.xml",
        sample_manifest().to_axml(),
    )]);
    let a = open_apk(&bytes).unwrap();
    assert_eq!(a.entries.len(), 1);
    assert!(a.is_valid());
    let m = a.manifest.as_ref().unwrap();
    assert_eq!(m.package_name, "com.example.a");
    assert_eq!(
        m.permissions,
        BTreeSet::from([
            "android.permission.INTERNET".to_string(),
            "android.permission.CAMERA".to_string()
        ])
    );
    assert_eq!(m.main_activity.as_deref(), Some("io.dcloud.PandoraEntry"));
    assert_eq!((m.min_sdk, m.target_sdk), (Some(19), Some(28)));
    assert_eq!(a.sample_id, apk::sample_digest(&bytes));
}

#[test]
fn renamed_manifest_is_missing() {
    let bytes = zip_bytes(&[Member::stored("manifest.xml", sample_manifest().to_axml())]);
    assert_eq!(open_apk(&bytes).unwrap_err(), ApkError::NoManifest);
}

#[test]
fn not_a_zip() {
    assert!(matches!(
        open_apk(b"definitely not an archive"),
        Err(ApkError::NotAZip(_))
    ));
    let mut truncated = apk_bytes(&sample_manifest(), vec![]);
    truncated.truncate(truncated.len() - 10);
    assert!(matches!(open_apk(&truncated), Err(ApkError::NotAZip(_))));
}

#[test]
fn manifest_mtime_is_utc_dos_time() {
    let bytes = zip_bytes(&[
        Member::stored("AndroidManifest.xml", sample_manifest().to_axml())
            .at((2020, 12, 1, 0, 0, 0)),
        Member::deflated("classes.dex", vec![0u8; 64]).at((2021, 3, 4, 5, 6, 8)),
    ]);
    let a = open_apk(&bytes).unwrap();
    assert_eq!(
        a.manifest_mtime,
        Utc.with_ymd_and_hms(2020, 12, 1, 0, 0, 0).unwrap()
    );
    assert_eq!(
        a.entry("classes.dex").unwrap().mtime,
        Utc.with_ymd_and_hms(2021, 3, 4, 5, 6, 8).unwrap()
    );
}

#[test]
fn undecodable_manifest_still_returns_entries() {
    let bytes = zip_bytes(&[
        Member::stored(
            "AndroidManifest.xml",
            b"<?xml version='1.0'?><manifest/>".to_vec(),
        ),
        Member::stored("assets/a.txt", b"x".to_vec()),
    ]);
    let a = open_apk(&bytes).unwrap();
    assert!(!a.is_valid());
    assert!(a.manifest_error.is_some());
    assert_eq!(a.entries.len(), 2);
}

#[test]
fn zero_permissions() {
    let m = parse_manifest(&ManifestSpec::new("p.q").activity(".Main", true).to_axml()).unwrap();
    assert!(m.permissions.is_empty());
    assert_eq!(m.main_activity.as_deref(), Some("p.q.Main"));
}

#[test]
fn launcher_among_several_activities() {
    let spec = ManifestSpec::new("com.b")
        .activity(".Splash", false)
        .activity("com.b.Home", true)
        .activity(".Settings", false);
    assert_eq!(
        parse_manifest(&spec.to_axml())
            .unwrap()
            .main_activity
            .as_deref(),
        Some("com.b.Home")
    );
}

#[test]
fn anonymous_attribute_names_resolve_through_resource_ids() {
    let mut spec = sample_manifest();
    spec.anonymous_attrs = true;
    let m = parse_manifest(&spec.to_axml()).unwrap();
    assert_eq!(m.main_activity.as_deref(), Some("io.dcloud.PandoraEntry"));
    assert_eq!(m.permissions.len(), 2);
    assert_eq!(m.target_sdk, Some(28));
}

#[test]
fn permission_profile_examples() {
    let db = DangerousPermissions::embedded();
    assert_eq!(db.len(), 30);
    let mk = |ps: &[&str]| ManifestInfo {
        permissions: ps.iter().map(|s| s.to_string()).collect(),
        ..Default::default()
    };
    let p = permission_profile(
        &mk(&[
            "android.permission.ACCESS_FINE_LOCATION",
            "android.permission.INTERNET",
        ]),
        &db,
    );
    assert_eq!((p.dangerous_count, p.normal_count, p.all_count), (1, 1, 2));
    let p = permission_profile(&mk(&[]), &db);
    assert_eq!((p.dangerous_count, p.normal_count, p.all_count), (0, 0, 0));
    let p = permission_profile(&mk(&["android.permission.CAMERA"]), &db);
    assert_eq!((p.dangerous_count, p.normal_count, p.all_count), (1, 0, 1));
}

fn signed_apk(block_name: &str, block: Vec<u8>) -> Vec<u8> {
    apk_bytes(
        &sample_manifest(),
        vec![Member::stored(&format!("META-INF/{block_name}"), block)],
    )
}

// Fingerprints are SHA-256 over the certificate DER as exported by openssl.
const PARTIAL_FP: &str = "0b75175490e1d767e45e8a3cf350b047a0c0205bc102f04d62c8ce44a1375e89";
const CHAIN_LEAF_FP: &str = "12b10b6f4c9ba395c0f253e7f3a34583fa5d23c577fda9ec12da1eb9d3a7d6f1";
const FULL_FP: &str = "9165e632b91ea0bd5e72409707b65c62d3c9c2ad0c459d27bfb8178b61a91ca2";

#[test]
fn partial_dn_completeness() {
    let bytes = signed_apk("CERT.RSA", fixture("partial_dn.RSA"));
    let s = extract_signers(&bytes, &KnownSignatureDb::embedded()).unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].fingerprint, PARTIAL_FP);
    assert_eq!(s[0].field(DnField::CommonName), Some("Acme Dev"));
    assert_eq!(s[0].field(DnField::Organization), Some("Acme Ltd"));
    assert_eq!(s[0].field(DnField::Country), Some("CN"));
    assert_eq!(s[0].completeness, 3.0 / 7.0);
    assert_eq!(s[0].signature_class, SignatureClass::DeveloperSpecific);
}

#[test]
fn full_dn_on_ec_block() {
    let bytes = signed_apk("DEV.EC", fixture("full_dn.EC"));
    let s = extract_signers(&bytes, &KnownSignatureDb::embedded()).unwrap();
    assert_eq!(s[0].fingerprint, FULL_FP);
    assert_eq!(s[0].completeness, 1.0);
    assert_eq!(s[0].field(DnField::Email), Some("dev@fortune.example"));
    assert_eq!(s[0].field(DnField::State), Some("Guangdong"));
    assert_eq!(s[0].field(DnField::OrganizationalUnit), Some("Dev"));
    assert_eq!(s[0].field(DnField::Locality), Some("Shenzhen"));
}

#[test]
fn android_debug_is_known() {
    let bytes = signed_apk("CERT.RSA", fixture("android_debug.RSA"));
    let a = open_apk(&bytes).unwrap();
    assert_eq!(a.signature_status, SignatureStatus::Present);
    assert_eq!(a.signers[0].signature_class, SignatureClass::DebugDefault);
}

#[test]
fn chain_selects_leaf() {
    let bytes = signed_apk("CERT.RSA", fixture("chain.RSA"));
    let s = extract_signers(&bytes, &KnownSignatureDb::embedded()).unwrap();
    assert_eq!(s[0].fingerprint, CHAIN_LEAF_FP);
    assert_eq!(s[0].field(DnField::CommonName), Some("Chain Leaf"));
}

#[test]
fn whitespace_dn_is_blank() {
    let bytes = signed_apk("CERT.DSA", fixture("blank_dn.DSA"));
    let s = extract_signers(&bytes, &KnownSignatureDb::embedded()).unwrap();
    assert_eq!(s[0].completeness, 0.0);
    assert!(s[0].dn_fields.is_empty());
}

#[test]
fn missing_and_broken_signatures() {
    let a = open_apk(&apk_bytes(&sample_manifest(), vec![])).unwrap();
    assert_eq!(a.signature_status, SignatureStatus::Missing);
    assert!(a.signers.is_empty());
    let broken = signed_apk("CERT.RSA", b"\x30\x03garbage".to_vec());
    assert!(matches!(
        open_apk(&broken).unwrap().signature_status,
        SignatureStatus::Undecodable(_)
    ));
    assert!(matches!(
        extract_signers(&broken, &KnownSignatureDb::embedded()),
        Err(ApkError::CertUndecodable(_))
    ));
}

#[test]
fn known_signature_by_fingerprint() {
    let db = KnownSignatureDb::from_json(&format!(
        r#"[{{"fingerprint":"{PARTIAL_FP}","class":"GeneratorDefault","label":"test generator"}}]"#
    ))
    .unwrap();
    let bytes = signed_apk("CERT.RSA", fixture("partial_dn.RSA"));
    assert_eq!(
        extract_signers(&bytes, &db).unwrap()[0].signature_class,
        SignatureClass::GeneratorDefault
    );
}

#[test]
fn duplicate_entries_last_record_wins() {
    let bytes = zip_bytes(&[
        Member::stored("AndroidManifest.xml", sample_manifest().to_axml()),
        Member::stored("assets/x.txt", b"first".to_vec()),
    ]);
    // The zip writer refuses duplicate names, so rename y.txt to x.txt in place.
    let dup = {
        let other = zip_bytes(&[
            Member::stored("AndroidManifest.xml", sample_manifest().to_axml()),
            Member::stored("assets/x.txt", b"first".to_vec()),
            Member::stored("assets/y.txt", b"second".to_vec()),
        ]);
        let mut b = other.clone();
        let needle = b"assets/y.txt";
        let mut i = 0;
        while let Some(pos) = b[i..].windows(needle.len()).position(|w| w == needle) {
            b[i + pos + 7] = b'x';
            i += pos + needle.len();
        }
        b
    };
    let a = open_apk(&dup).unwrap();
    assert_eq!(
        a.entries
            .iter()
            .filter(|e| e.path == "assets/x.txt")
            .count(),
        1
    );
    assert_eq!(a.read_entry("assets/x.txt").unwrap(), b"second");
    assert_eq!(
        open_apk(&bytes)
            .unwrap()
            .read_entry("assets/x.txt")
            .unwrap(),
        b"first"
    );
}

#[test]
fn parsing_is_deterministic() {
    let bytes = signed_apk("CERT.RSA", fixture("chain.RSA"));
    let a = serde_json::to_string(&open_apk(&bytes).unwrap()).unwrap();
    let b = serde_json::to_string(&open_apk(&bytes).unwrap()).unwrap();
    assert_eq!(a, b);
}

fn class_name() -> impl Strategy<Value = String> {
    "[a-z]{1,6}(\\.[a-z]{1,6}){0,2}\\.[A-Z][A-Za-z0-9]{0,8}"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn manifest_round_trip(
        package in "[a-z]{1,8}(\\.[a-z][a-z0-9_]{0,8}){1,3}",
        perms in proptest::collection::btree_set("[A-Za-z._]{1,30}|中文权限[0-9]", 0..8),
        activities in proptest::collection::vec((class_name(), any::<bool>()), 0..5),
        sdk in proptest::option::of((1i32..40, 1i32..40)),
        utf8 in any::<bool>(),
    ) {
        let mut spec = ManifestSpec::new(&package).utf8(utf8);
        for p in &perms {
            spec = spec.permission(p);
        }
        for (a, l) in &activities {
            spec = spec.activity(a, *l);
        }
        if let Some((min, target)) = sdk {
            spec = spec.sdk(min, target);
        }
        let m = parse_manifest(&spec.to_axml()).unwrap();
        prop_assert_eq!(&m.package_name, &package);
        prop_assert_eq!(&m.permissions, &perms);
        let expected = activities.iter().find(|(_, l)| *l).map(|(a, _)| a.clone());
        prop_assert_eq!(m.main_activity, expected);
        prop_assert_eq!(m.min_sdk, sdk.map(|s| i64::from(s.0)));
        prop_assert_eq!(m.target_sdk, sdk.map(|s| i64::from(s.1)));
    }
}
