use std::collections::BTreeSet;

use culprit_core::apk::open_apk;
use culprit_core::genscan::cipher::{AesCbc, AssetCipher, DesCbc, Rc4, Tea, TeaVariant};
use culprit_core::genscan::{
    analyze, decrypt_assets, detect_generator, split_user_content, CipherSpec, FingerprintDb,
    GeneratorFingerprint, GenscanError,
};
use culprit_testkit::{apk_bytes, fixture, ManifestSpec, Member};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Vector {
    key: String,
    #[serde(default)]
    iv: Option<String>,
    plaintext: String,
    ciphertext: String,
}

fn vectors(algo: &str) -> Vec<(Vec<u8>, Vec<u8>, Vec<u8>, Vec<u8>)> {
    let all: std::collections::BTreeMap<String, Vec<Vector>> =
        serde_json::from_slice(&fixture("cipher_vectors.json")).unwrap();
    all[algo]
        .iter()
        .map(|v| {
            let h = |s: &str| hex::decode(s).unwrap();
            (
                h(&v.key),
                v.iv.as_deref().map(h).unwrap_or_default(),
                h(&v.plaintext),
                h(&v.ciphertext),
            )
        })
        .collect()
}

fn check(cipher: &dyn AssetCipher, pt: &[u8], ct: &[u8]) {
    assert_eq!(cipher.encrypt(pt), ct);
    assert_eq!(cipher.decrypt(ct).unwrap(), pt);
}

#[test]
fn rc4_vectors() {
    for (k, _, pt, ct) in vectors("rc4") {
        check(&Rc4::new(&k).unwrap(), &pt, &ct);
    }
}

#[test]
fn tea_vectors() {
    for (k, _, pt, ct) in vectors("tea") {
        check(&Tea::new(&k, TeaVariant::default()).unwrap(), &pt, &ct);
    }
}

#[test]
fn aes_cbc_vectors() {
    for (k, iv, pt, ct) in vectors("aes_cbc") {
        check(&AesCbc::new(&k, &iv).unwrap(), &pt, &ct);
    }
}

#[test]
fn des_cbc_vectors() {
    for (k, iv, pt, ct) in vectors("des_cbc") {
        check(&DesCbc::new(&k, &iv).unwrap(), &pt, &ct);
    }
}

#[test]
fn wrong_padding_is_an_error() {
    let c = AesCbc::new(&[7; 16], &[0; 16]).unwrap();
    let mut ct = c.encrypt(b"hello world");
    *ct.last_mut().unwrap() ^= 0x5a;
    assert!(c.decrypt(&ct).is_err());
    assert!(c.decrypt(&ct[..5]).is_err());
}

fn dcloud_apk() -> Vec<u8> {
    apk_bytes(
        &ManifestSpec::new("com.h5.shop").activity("io.dcloud.PandoraEntry", true),
        vec![
            Member::stored("assets/data/dcloud_control.xml", b"<hbuilder/>".to_vec()),
            Member::stored(
                "assets/apps/H5ABC/www/index.html",
                b"<html>casino</html>".to_vec(),
            ),
            Member::stored("classes.dex", vec![0u8; 32]),
        ],
    )
}

#[test]
fn dcloud_detected_and_split() {
    let apk = open_apk(&dcloud_apk()).unwrap();
    let db = FingerprintDb::embedded();
    let m = detect_generator(&apk, &db).unwrap();
    assert_eq!(m.generator_id, "DCloud");
    assert_eq!(m.confidence, 1.0);
    let content = split_user_content(&apk, db.get("DCloud").unwrap());
    assert_eq!(content.user_entries, ["assets/apps/H5ABC/www/index.html"]);
    assert_eq!(content.template_entries, ["assets/data/dcloud_control.xml"]);
}

#[test]
fn partial_evidence_scores_fraction() {
    let apk = open_apk(&apk_bytes(
        &ManifestSpec::new("com.x").activity("io.dcloud.PandoraEntry", true),
        vec![],
    ))
    .unwrap();
    let m = detect_generator(&apk, &FingerprintDb::embedded()).unwrap();
    assert_eq!(m.generator_id, "DCloud");
    assert_eq!(m.confidence, 0.5);
}

#[test]
fn nothing_fires_on_plain_app() {
    let apk = open_apk(&apk_bytes(
        &ManifestSpec::new("org.plain").activity(".Main", true),
        vec![Member::stored("assets/readme.txt", b"hi".to_vec())],
    ))
    .unwrap();
    assert_eq!(detect_generator(&apk, &FingerprintDb::embedded()), None);
    assert_eq!(
        analyze(&apk, &FingerprintDb::embedded(), None),
        (None, None, vec![])
    );
}

const APPCAN_KEY: &[u8] = b"appcan-sample-key";
const INDEX_HTML: &[u8] = b"<!DOCTYPE html><html><body><script src='https://pay.fortune.example/api'></script></body></html>";

fn appcan_apk() -> Vec<u8> {
    let enc = Rc4::new(APPCAN_KEY).unwrap().encrypt(INDEX_HTML);
    apk_bytes(
        &ManifestSpec::new("org.zywx.wbpalmstar.widgetone.uex12345").activity(".EUExStart", true),
        vec![
            Member::deflated("assets/widget/index.html", enc),
            Member::stored("assets/widget/wgtRes/icon.png", b"\x89PNG....".to_vec()),
            Member::stored("lib/armeabi/libappcan.so", vec![0x7f, b'E', b'L', b'F']),
        ],
    )
}

#[test]
fn appcan_rc4_end_to_end() {
    let apk = open_apk(&appcan_apk()).unwrap();
    let db = FingerprintDb::embedded();
    let m = detect_generator(&apk, &db).unwrap();
    assert_eq!(m.generator_id, "AppCan");
    assert_eq!(m.confidence, 1.0);

    let out = decrypt_assets(&apk, &db, &m, Some(APPCAN_KEY)).unwrap();
    assert_eq!(
        out.decrypted
            .get("assets/widget/index.html")
            .map(Vec::as_slice),
        Some(INDEX_HTML)
    );
    assert!(!out.decrypted.contains_key("assets/widget/wgtRes/icon.png"));
    assert!(out.failed.is_empty());

    assert!(matches!(
        decrypt_assets(&apk, &db, &m, None),
        Err(GenscanError::KeyUnavailable(g)) if g == "AppCan"
    ));
    let wrong = decrypt_assets(&apk, &db, &m, Some(b"not-the-key")).unwrap();
    assert_eq!(wrong.failed, ["assets/widget/index.html"]);

    let (_, content, notes) = analyze(&apk, &db, Some(APPCAN_KEY));
    assert!(notes.is_empty());
    assert_eq!(content.unwrap().decrypted.len(), 1);
}

#[test]
fn db_ciphers_round_trip_through_build() {
    let db = FingerprintDb::embedded();
    for g in db.generators() {
        let key: Vec<u8> = match &g.cipher {
            CipherSpec::None => continue,
            CipherSpec::DesCbc { .. } => vec![0x13; 8],
            _ => vec![0x42; 16],
        };
        let c = culprit_core::genscan::build_cipher(&g.cipher, &key)
            .unwrap()
            .unwrap();
        let pt = format!("<p>{}</p>", g.generator_id).into_bytes();
        assert_eq!(
            c.decrypt(&c.encrypt(&pt)).unwrap(),
            pt,
            "{}",
            g.generator_id
        );
    }
}

fn fingerprint_with(templates: Vec<String>) -> GeneratorFingerprint {
    GeneratorFingerprint {
        generator_id: "T".into(),
        website: None,
        encryption: None,
        rules: vec![],
        cipher: CipherSpec::None,
        template_paths: templates,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn rc4_round_trip(key in proptest::collection::vec(any::<u8>(), 1..64), data in proptest::collection::vec(any::<u8>(), 0..512)) {
        let c = Rc4::new(&key).unwrap();
        prop_assert_eq!(c.decrypt(&c.encrypt(&data)).unwrap(), data);
    }

    #[test]
    fn tea_round_trip(key in proptest::array::uniform16(any::<u8>()), data in proptest::collection::vec(any::<u8>(), 0..200), little in any::<bool>()) {
        let mut v = TeaVariant::default();
        if little {
            v.endianness = culprit_core::genscan::cipher::Endianness::Little;
        }
        let c = Tea::new(&key, v).unwrap();
        let ct = c.encrypt(&data);
        prop_assert_eq!(ct.len(), data.len());
        prop_assert_eq!(c.decrypt(&ct).unwrap(), data);
    }

    #[test]
    fn aes_round_trip(key in proptest::sample::select(vec![16usize, 24, 32]).prop_flat_map(|n| proptest::collection::vec(any::<u8>(), n)),
                      iv in proptest::array::uniform16(any::<u8>()),
                      data in proptest::collection::vec(any::<u8>(), 0..300)) {
        let c = AesCbc::new(&key, &iv).unwrap();
        let ct = c.encrypt(&data);
        prop_assert_eq!(ct.len() % 16, 0);
        prop_assert_eq!(c.decrypt(&ct).unwrap(), data);
    }

    #[test]
    fn des_round_trip(key in proptest::array::uniform8(any::<u8>()), iv in proptest::array::uniform8(any::<u8>()), data in proptest::collection::vec(any::<u8>(), 0..300)) {
        let c = DesCbc::new(&key, &iv).unwrap();
        prop_assert_eq!(c.decrypt(&c.encrypt(&data)).unwrap(), data);
    }

    #[test]
    fn split_partitions_assets(
        paths in proptest::collection::btree_set("(assets|res|lib)/(www|data|res|fonts)/[a-z]{1,4}\\.(js|html|png)", 0..30),
        templates in proptest::collection::vec("assets/(www|data|res|fonts)/", 0..3),
    ) {
        let members: Vec<Member> = paths.iter().map(|p| Member::stored(p, b"x".to_vec())).collect();
        let apk = open_apk(&apk_bytes(&ManifestSpec::new("a.b"), members)).unwrap();
        let c = split_user_content(&apk, &fingerprint_with(templates.clone()));
        let user: BTreeSet<_> = c.user_entries.iter().cloned().collect();
        let tmpl: BTreeSet<_> = c.template_entries.iter().cloned().collect();
        prop_assert!(user.is_disjoint(&tmpl));
        let assets: BTreeSet<String> = paths.iter().filter(|p| p.starts_with("assets/")).cloned().collect();
        prop_assert_eq!(user.union(&tmpl).cloned().collect::<BTreeSet<_>>(), assets);
        for t in &tmpl {
            prop_assert!(templates.iter().any(|p| t.starts_with(p.as_str())));
        }
        for u in &user {
            prop_assert!(!templates.iter().any(|p| u.starts_with(p.as_str())));
        }
    }
}
