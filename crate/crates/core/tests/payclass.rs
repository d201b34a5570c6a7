use culprit_core::payclass::{
    channel_breakdown, classify_all, classify_session, read_observations_jsonl, Channel,
    ChannelPatterns, LicensedDb, PayError, PaymentObservation, ServiceKind,
};
use proptest::prelude::*;

fn obs(session: &str, i: u32, domain: &str, recipient: &str, hint: Channel) -> PaymentObservation {
    PaymentObservation {
        session_id: session.into(),
        request_index: i,
        amount: 88.0,
        payment_domain: domain.into(),
        recipient_id: recipient.into(),
        channel_hint: hint,
    }
}

fn licensed() -> LicensedDb {
    LicensedDb::parse("alipay.com\ntenpay.com\n")
}

#[test]
fn three_scenarios() {
    let pats = ChannelPatterns::default();
    let stable: Vec<_> = (0..4)
        .map(|i| {
            obs(
                "a",
                i,
                "mapi.alipay.com",
                "merchant-77",
                Channel::ThirdPartyRail,
            )
        })
        .collect();
    let rotating: Vec<_> = (0..4)
        .map(|i| {
            obs(
                "b",
                i,
                "pay.h5-cashier.example",
                &format!("mule-{i}"),
                Channel::BankTransfer,
            )
        })
        .collect();
    let single = [obs(
        "c",
        0,
        "mapi.alipay.com",
        "merchant-77",
        Channel::ThirdPartyRail,
    )];

    assert_eq!(
        classify_session(&stable, &licensed(), &pats)
            .unwrap()
            .service_kind,
        ServiceKind::ThirdParty
    );
    let b = classify_session(&rotating, &licensed(), &pats).unwrap();
    assert_eq!(
        (b.service_kind, b.channel),
        (ServiceKind::FourthParty, Channel::BankTransfer)
    );
    assert_eq!(
        classify_session(&single, &licensed(), &pats)
            .unwrap()
            .service_kind,
        ServiceKind::Indeterminate
    );
}

#[test]
fn rotating_recipients_on_a_licensed_domain_are_still_fourth_party() {
    let s: Vec<_> = (0..3)
        .map(|i| {
            obs(
                "s",
                i,
                "mapi.alipay.com",
                &format!("personal-{}", i % 2),
                Channel::ThirdPartyRail,
            )
        })
        .collect();
    assert_eq!(
        classify_session(&s, &licensed(), &ChannelPatterns::default())
            .unwrap()
            .service_kind,
        ServiceKind::FourthParty
    );
}

#[test]
fn currency_addresses_fill_unknown_hints() {
    let pats = ChannelPatterns::default();
    for addr in [
        "1BoatSLRHtKNngkdXEeobR76b53LETtpyT",
        "bc1qar0srrr7xfkvy5l643lydnw9re59gtzzwf5mdq",
        "0x52908400098527886E0F7030069857D2E4169EE7",
        "TJRabPrwbZy45sbavfcjinPJC18kjpRTv8",
    ] {
        assert!(pats.is_currency_address(addr), "{addr}");
    }
    assert!(!pats.is_currency_address("6222020200112233445"));
    let s: Vec<_> = (0..3)
        .map(|i| {
            obs(
                "s",
                i,
                "x.example",
                [
                    "TJRabPrwbZy45sbavfcjinPJC18kjpRTv8",
                    "1BoatSLRHtKNngkdXEeobR76b53LETtpyT",
                ][i as usize % 2],
                Channel::Unknown,
            )
        })
        .collect();
    assert_eq!(
        classify_session(&s, &licensed(), &pats).unwrap().channel,
        Channel::DigitalCurrency
    );
}

#[test]
fn malformed_sessions() {
    let pats = ChannelPatterns::default();
    assert!(matches!(
        classify_session(&[], &licensed(), &pats),
        Err(PayError::EmptySession)
    ));
    let dup = [
        obs("s", 1, "a.com", "r", Channel::Unknown),
        obs("s", 1, "a.com", "r", Channel::Unknown),
    ];
    assert!(matches!(
        classify_session(&dup, &licensed(), &pats),
        Err(PayError::DuplicateIndex(_))
    ));
    let mixed = [
        obs("s", 1, "a.com", "r", Channel::Unknown),
        obs("t", 2, "a.com", "r", Channel::Unknown),
    ];
    assert!(matches!(
        classify_session(&mixed, &licensed(), &pats),
        Err(PayError::MixedSessions)
    ));
    let mut neg = obs("s", 1, "a.com", "r", Channel::Unknown);
    neg.amount = -1.0;
    assert!(matches!(
        classify_session(&[neg], &licensed(), &pats),
        Err(PayError::BadAmount(_))
    ));
    assert!(matches!(
        ChannelPatterns::new(["("]),
        Err(PayError::BadPattern(..))
    ));
}

#[test]
fn breakdown_of_47_services() {
    let mut all = Vec::new();
    let plan = [
        (Channel::ThirdPartyRail, 31),
        (Channel::BankTransfer, 11),
        (Channel::DigitalCurrency, 4),
        (Channel::Unknown, 1),
    ];
    let mut k = 0;
    for (ch, n) in plan {
        for _ in 0..n {
            let sid = format!("svc{k:02}");
            for i in 0..3 {
                all.push(obs(
                    &sid,
                    i,
                    "cashier.example",
                    &format!("acct-{k}-{i}"),
                    ch,
                ));
            }
            k += 1;
        }
    }
    let classes = classify_all(&all, &licensed(), &ChannelPatterns::default()).unwrap();
    assert_eq!(classes.len(), 47);
    let b = channel_breakdown(&classes);
    assert_eq!(b.fourth_party_sessions, 47);
    let pct = |c| b.channels[&c].percent.to_string();
    assert_eq!(pct(Channel::ThirdPartyRail), "65.96");
    assert_eq!(pct(Channel::BankTransfer), "23.40");
    assert_eq!(pct(Channel::DigitalCurrency), "8.51");
    assert_eq!(b.unknown.count, 1);
    assert!(b.notice.is_none());
}

#[test]
fn empty_breakdown_has_notice() {
    let b = channel_breakdown(&[]);
    assert_eq!(b.fourth_party_sessions, 0);
    assert!(b.notice.is_some());
}

#[test]
fn jsonl_observations() {
    let text = r#"{"session_id":"s","request_index":0,"amount":10,"payment_domain":"a.com","recipient_id":"r1"}
{"session_id":"s","request_index":1,"amount":10,"payment_domain":"a.com","recipient_id":"r2","channel_hint":"BankTransfer"}
"#;
    let o = read_observations_jsonl(text.as_bytes()).unwrap();
    assert_eq!(o[0].channel_hint, Channel::Unknown);
    assert_eq!(o[1].channel_hint, Channel::BankTransfer);
    assert!(matches!(
        read_observations_jsonl(&b"{}\n"[..]),
        Err(PayError::BadRecord { line: 1, .. })
    ));
}

fn session() -> impl Strategy<Value = Vec<PaymentObservation>> {
    proptest::collection::vec(
        (
            proptest::sample::select(vec![
                "mapi.alipay.com",
                "pay.tenpay.com",
                "cashier.example",
                "x.top",
            ]),
            proptest::sample::select(vec!["r1", "r2", "r3"]),
            proptest::sample::select(Channel::PRIORITY.to_vec()),
            1u32..100_000,
        ),
        1..8,
    )
    .prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (d, r, c, a))| PaymentObservation {
                session_id: "p".into(),
                request_index: i as u32,
                amount: f64::from(a) / 100.0,
                payment_domain: d.into(),
                recipient_id: r.into(),
                channel_hint: c,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn classification_rules_hold(s in session(), rot in 0usize..8) {
        let pats = ChannelPatterns::default();
        let c = classify_session(&s, &licensed(), &pats).unwrap();
        let recipients: std::collections::BTreeSet<_> = s.iter().map(|o| o.recipient_id.as_str()).collect();
        let expected = if s.len() < 3 {
            ServiceKind::Indeterminate
        } else if recipients.len() >= 2 {
            ServiceKind::FourthParty
        } else if s.iter().all(|o| licensed().contains(&o.payment_domain)) {
            ServiceKind::ThirdParty
        } else {
            ServiceKind::Indeterminate
        };
        prop_assert_eq!(c.service_kind, expected);

        let mut r = s.clone();
        let k = rot % r.len();
        r.rotate_left(k);
        prop_assert_eq!(classify_session(&r, &licensed(), &pats).unwrap(), c);
    }

    #[test]
    fn breakdown_shares_bounded(kinds in proptest::collection::vec((any::<bool>(), proptest::sample::select(Channel::PRIORITY.to_vec())), 0..60)) {
        let classes: Vec<_> = kinds
            .iter()
            .enumerate()
            .map(|(i, &(fourth, ch))| culprit_core::payclass::PaymentClassification {
                session_id: format!("s{i}"),
                service_kind: if fourth { ServiceKind::FourthParty } else { ServiceKind::ThirdParty },
                channel: ch,
                evidence: vec![],
            })
            .collect();
        let b = channel_breakdown(&classes);
        let n = kinds.iter().filter(|k| k.0).count();
        prop_assert_eq!(b.fourth_party_sessions, n);
        let counted: usize = b.channels.values().map(|s| s.count).sum::<usize>() + b.unknown.count;
        prop_assert_eq!(counted, n);
        let units: i64 = b.channels.values().map(|s| s.percent.units()).sum::<i64>() + b.unknown.percent.units();
        if n > 0 {
            prop_assert!((units - 10_000).abs() <= 2);
        } else {
            prop_assert_eq!(units, 0);
        }
    }
}
