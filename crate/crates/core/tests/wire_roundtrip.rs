mod common;

use std::io::Cursor;

use common::{sp, unit_vector};
use entsim::protocols::{simulate, simulate_records, Message, ProtocolId, SimulationConfig};
use entsim::sampling::n_of_p;
use entsim::verify::setting_grid;
use entsim::wire::frame::*;
use entsim::wire::*;
use entsim::Error;
use proptest::prelude::*;

fn config(protocol: ProtocolId, p: f64, rounds: u64, seed: u64) -> SimulationConfig {
    SimulationConfig {
        protocol,
        state: sp(p),
        settings: setting_grid(3),
        rounds_per_setting: rounds,
        seed,
        workers: None,
    }
}

fn cases() -> [(ProtocolId, f64); 6] {
    [
        (ProtocolId::OneBit, 0.95),
        (ProtocolId::Trit, 0.7),
        (ProtocolId::DegorreBit, 0.5),
        (ProtocolId::ClassicalTeleportation, 0.6),
        (ProtocolId::ImprovedOneBit, 0.9),
        (ProtocolId::LocalContent, 0.8),
    ]
}

#[test]
fn networked_runs_match_in_process_runs() {
    for (protocol, p) in cases() {
        let cfg = config(protocol, p, 2000, 40);
        let run = run_networked(&NetworkConfig::loopback(cfg.clone())).unwrap();
        assert_eq!(run.records, simulate_records(&cfg).unwrap(), "{protocol}");
        assert_eq!(run.table, simulate(&cfg).unwrap().table, "{protocol}");
        let audit = audit_transcript(&run.transcript, protocol);
        assert!(
            audit.pass,
            "{protocol}: {:?}",
            &audit.findings[..audit.findings.len().min(3)]
        );
        assert_eq!(audit.rounds, 6000);
    }
}

#[test]
fn improved_one_bit_message_fraction() {
    let cfg = SimulationConfig {
        settings: setting_grid(1),
        ..config(ProtocolId::ImprovedOneBit, 0.9, 100_000, 41)
    };
    let run = run_networked(&NetworkConfig::loopback(cfg)).unwrap();
    let audit = audit_transcript(&run.transcript, ProtocolId::ImprovedOneBit);
    assert!(audit.pass);
    let want = n_of_p(sp(0.9)).unwrap();
    assert!(
        (audit.message_fraction - want).abs() < 0.01,
        "{}",
        audit.message_fraction
    );
    assert!((want - 0.694).abs() < 1e-3);
}

#[test]
fn local_content_messages_follow_the_shared_bit() {
    let run = run_networked(&NetworkConfig::loopback(config(
        ProtocolId::LocalContent,
        0.8,
        1000,
        42,
    )))
    .unwrap();
    let t = &run.transcript;
    let talking: Vec<u64> = t
        .frames(Channel::RefereeToAlice)
        .filter(|f| f.kind == FrameKind::SharedRandomness)
        .filter(|f| decode_shared(&f.payload).unwrap().flag == Some(true))
        .map(|f| f.round)
        .collect();
    let sent: Vec<u64> = t.frames(Channel::AliceToBob).map(|f| f.round).collect();
    assert_eq!(talking, sent);
    assert!(t
        .frames(Channel::AliceToBob)
        .all(|f| f.payload.len() == VECTOR_LEN));
    for (r, rec) in run.records.iter().enumerate() {
        assert_eq!(rec.message.is_silent(), !talking.contains(&(r as u64)));
    }
}

fn trit_transcript() -> Transcript {
    run_networked(&NetworkConfig::loopback(config(
        ProtocolId::Trit,
        0.7,
        10,
        43,
    )))
    .unwrap()
    .transcript
}

fn position(t: &Transcript, channel: Channel, round: u64, kind: FrameKind) -> usize {
    t.entries
        .iter()
        .position(|(c, f)| *c == channel && f.round == round && f.kind == kind)
        .unwrap()
}

fn flagged_rounds(t: &Transcript, protocol: ProtocolId) -> Vec<Option<u64>> {
    let a = audit_transcript(t, protocol);
    assert!(!a.pass);
    a.findings.into_iter().map(|f| f.round).collect()
}

#[test]
fn audit_flags_tampering() {
    let clean = trit_transcript();
    assert!(audit_transcript(&clean, ProtocolId::Trit).pass);

    let mut t = clean.clone();
    let i = position(&t, Channel::AliceToBob, 5, FrameKind::Message);
    t.entries[i].1.payload = vec![3];
    assert!(flagged_rounds(&t, ProtocolId::Trit).contains(&Some(5)));

    let mut t = clean.clone();
    t.push(
        Channel::BobToAlice,
        Frame::new(2, FrameKind::Message, vec![0]),
    );
    assert!(flagged_rounds(&t, ProtocolId::Trit).contains(&Some(2)));

    let mut t = clean.clone();
    let i = position(&t, Channel::AliceToBob, 7, FrameKind::Message);
    t.entries.remove(i);
    assert!(flagged_rounds(&t, ProtocolId::Trit).contains(&Some(7)));

    let mut t = clean.clone();
    let i = position(&t, Channel::RefereeToBob, 9, FrameKind::SharedRandomness);
    t.entries[i].1.payload[3] ^= 0x40;
    assert!(flagged_rounds(&t, ProtocolId::Trit).contains(&Some(9)));

    let mut t = clean.clone();
    let i = position(&t, Channel::AliceToBob, 4, FrameKind::Message);
    let extra = t.entries[i].clone();
    t.entries.insert(i, extra);
    assert!(flagged_rounds(&t, ProtocolId::Trit).contains(&Some(4)));

    // a trit log is not a valid one-bit log
    assert!(!audit_transcript(&clean, ProtocolId::OneBit).pass);
}

#[test]
fn oversized_message_is_a_protocol_violation() {
    let mut cfg = NetworkConfig::loopback(config(ProtocolId::ImprovedOneBit, 0.9, 200, 44));
    // pick a round where Alice talks
    let records = simulate_records(&cfg.simulation).unwrap();
    let r = records.iter().position(|r| !r.message.is_silent()).unwrap() as u64;
    cfg.fault_round = Some(r);
    match run_networked(&cfg) {
        Err(Error::ProtocolViolation { round, .. }) => assert_eq!(round, r),
        other => panic!(
            "expected a violation, got {:?}",
            other.map(|o| o.records.len())
        ),
    }
}

#[test]
fn log_round_trip() {
    let t = trit_transcript();
    let mut buf = Vec::new();
    t.write_log(&mut buf).unwrap();
    assert_eq!(Transcript::read_log(&mut Cursor::new(&buf)).unwrap(), t);
    let s = t.summary(ProtocolId::Trit);
    assert_eq!(s.rounds, 30);
    assert_eq!(s.message_frames, 30);
    buf.pop();
    assert!(Transcript::read_log(&mut Cursor::new(&buf)).is_err());
}

#[test]
fn frame_reader_rejects_bad_input() {
    let mut bytes = Frame::new(1, FrameKind::Output, vec![1]).to_bytes();
    assert_eq!(bytes.len(), HEADER_LEN + 1);
    bytes[8] = 9;
    assert!(matches!(
        Frame::read_from(&mut Cursor::new(&bytes)),
        Err(Error::Malformed(_))
    ));

    let mut big = Vec::new();
    big.extend_from_slice(&0u64.to_le_bytes());
    big.push(FrameKind::Message as u8);
    big.extend_from_slice(&(MAX_PAYLOAD + 1).to_le_bytes());
    assert!(matches!(
        Frame::read_from(&mut Cursor::new(&big)),
        Err(Error::Malformed(_))
    ));

    let short = &Frame::new(0, FrameKind::Setting, vec![0; 24]).to_bytes()[..5];
    assert!(matches!(
        Frame::read_from(&mut Cursor::new(short)),
        Err(Error::Transport(_))
    ));
    assert!(Frame::read_from(&mut Cursor::new(&[][..]))
        .unwrap()
        .is_none());

    let f = Frame::new(3, FrameKind::Output, vec![1]).to_bytes();
    assert!(matches!(
        Frame::expect(&mut Cursor::new(&f), FrameKind::Message, None),
        Err(Error::ProtocolViolation { round: 3, .. })
    ));
    assert!(matches!(
        Frame::expect(&mut Cursor::new(&f), FrameKind::Output, Some(4)),
        Err(Error::ProtocolViolation { round: 4, .. })
    ));
}

#[test]
fn message_alphabets_enforced() {
    assert!(decode_message(ProtocolId::OneBit, 0, &[1]).is_ok());
    assert!(matches!(
        decode_message(ProtocolId::OneBit, 6, &[2]),
        Err(Error::ProtocolViolation { round: 6, .. })
    ));
    assert!(decode_message(ProtocolId::Trit, 0, &[2]).is_ok());
    assert!(decode_message(ProtocolId::Trit, 0, &[3]).is_err());
    assert!(decode_message(ProtocolId::ClassicalTeleportation, 0, &[3]).is_ok());
    assert!(decode_message(ProtocolId::ClassicalTeleportation, 0, &[4]).is_err());
    assert!(decode_message(ProtocolId::Trit, 0, &[0, 0]).is_err());
    assert!(decode_message(ProtocolId::LocalContent, 0, &[0; 23]).is_err());
    assert_eq!(message_width(ProtocolId::LocalContent), VECTOR_LEN);
}

proptest! {
    #[test]
    fn frames_round_trip(round in any::<u64>(), kind in 1u8..=4, payload in proptest::collection::vec(any::<u8>(), 0..=1024)) {
        let f = Frame::new(round, FrameKind::from_byte(kind).unwrap(), payload);
        let bytes = f.to_bytes();
        prop_assert_eq!(bytes.len(), HEADER_LEN + f.payload.len());
        prop_assert_eq!(Frame::read_from(&mut Cursor::new(&bytes)).unwrap(), Some(f));
    }

    #[test]
    fn vector_messages_round_trip(v in unit_vector()) {
        let m = Message::Vector(v);
        let bytes = encode_message(&m);
        prop_assert_eq!(bytes.len(), VECTOR_LEN);
        prop_assert_eq!(decode_message(ProtocolId::LocalContent, 0, &bytes).unwrap(), m);
    }
}
