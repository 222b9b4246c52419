//! Channel-tagged frame log and its audit.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::frame::{decode_message, decode_shared, Frame, FrameKind, VECTOR_LEN};
use crate::error::{Error, Result};
use crate::protocols::ProtocolId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    RefereeToAlice = 0,
    RefereeToBob = 1,
    AliceToBob = 2,
    AliceToReferee = 3,
    BobToReferee = 4,
    /// Never used by a correct run; present so the audit can name it.
    BobToAlice = 5,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::RefereeToAlice,
        Channel::RefereeToBob,
        Channel::AliceToBob,
        Channel::AliceToReferee,
        Channel::BobToReferee,
        Channel::BobToAlice,
    ];

    fn from_byte(b: u8) -> Option<Channel> {
        Channel::ALL.get(b as usize).copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub entries: Vec<(Channel, Frame)>,
}

impl Transcript {
    pub fn push(&mut self, channel: Channel, frame: Frame) {
        self.entries.push((channel, frame));
    }

    pub fn extend(&mut self, channel: Channel, frames: impl IntoIterator<Item = Frame>) {
        self.entries
            .extend(frames.into_iter().map(|f| (channel, f)));
    }

    pub fn frames(&self, channel: Channel) -> impl Iterator<Item = &Frame> {
        self.entries
            .iter()
            .filter(move |(c, _)| *c == channel)
            .map(|(_, f)| f)
    }

    /// Binary log: each entry is a channel byte followed by the frame bytes.
    pub fn write_log<W: Write>(&self, w: &mut W) -> Result<()> {
        for (c, f) in &self.entries {
            w.write_all(&[*c as u8])?;
            f.write_to(w)?;
        }
        Ok(())
    }

    pub fn read_log<R: Read>(r: &mut R) -> Result<Transcript> {
        let mut t = Transcript::default();
        let mut tag = [0u8; 1];
        loop {
            match r.read(&mut tag)? {
                0 => return Ok(t),
                _ => {
                    let c = Channel::from_byte(tag[0])
                        .ok_or_else(|| Error::Malformed(format!("channel byte {}", tag[0])))?;
                    let f = Frame::read_from(r)?
                        .ok_or_else(|| Error::Malformed("log ends after a channel byte".into()))?;
                    t.push(c, f);
                }
            }
        }
    }

    pub fn summary(&self, protocol: ProtocolId) -> TranscriptSummary {
        let mut frames = BTreeMap::new();
        let mut bytes = BTreeMap::new();
        for (c, f) in &self.entries {
            *frames.entry(*c).or_insert(0u64) += 1;
            *bytes.entry(*c).or_insert(0u64) += (super::frame::HEADER_LEN + f.payload.len()) as u64;
        }
        let rounds = self
            .frames(Channel::RefereeToAlice)
            .filter(|f| f.kind == FrameKind::Setting)
            .count() as u64;
        let messages = self
            .frames(Channel::AliceToBob)
            .filter(|f| f.kind == FrameKind::Message)
            .count() as u64;
        TranscriptSummary {
            protocol,
            rounds,
            message_frames: messages,
            message_fraction: if rounds > 0 {
                messages as f64 / rounds as f64
            } else {
                0.0
            },
            frames_per_channel: frames,
            bytes_per_channel: bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub protocol: ProtocolId,
    pub rounds: u64,
    pub message_frames: u64,
    pub message_fraction: f64,
    pub frames_per_channel: BTreeMap<Channel, u64>,
    pub bytes_per_channel: BTreeMap<Channel, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub round: Option<u64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub protocol: ProtocolId,
    pub rounds: u64,
    pub message_frames: u64,
    pub message_fraction: f64,
    pub findings: Vec<Finding>,
    pub pass: bool,
}

#[derive(Default)]
struct RoundFrames<'a> {
    by_channel: BTreeMap<Channel, Vec<&'a Frame>>,
}

impl<'a> RoundFrames<'a> {
    fn kinds(&self, c: Channel) -> Vec<FrameKind> {
        self.by_channel
            .get(&c)
            .map_or(Vec::new(), |v| v.iter().map(|f| f.kind).collect())
    }

    fn get(&self, c: Channel, kind: FrameKind) -> Option<&'a Frame> {
        self.by_channel
            .get(&c)?
            .iter()
            .copied()
            .find(|f| f.kind == kind)
    }
}

fn shared_layout_ok(protocol: ProtocolId, n: usize, flag: Option<bool>) -> bool {
    match protocol {
        ProtocolId::OneBit | ProtocolId::DegorreBit | ProtocolId::ClassicalTeleportation => {
            n == 2 && flag.is_none()
        }
        ProtocolId::Trit => n == 3 && flag.is_none(),
        ProtocolId::ImprovedOneBit => flag.is_some() && n == 1 + usize::from(flag == Some(true)),
        ProtocolId::LocalContent => n == 1 && flag.is_some(),
    }
}

/// Checks frame pattern, alphabet, one-way flow and message counts round by round.
pub fn audit_transcript(t: &Transcript, protocol: ProtocolId) -> AuditReport {
    let mut findings = Vec::new();
    let mut find = |round: Option<u64>, detail: String| findings.push(Finding { round, detail });

    let mut rounds: BTreeMap<u64, RoundFrames> = BTreeMap::new();
    for (c, f) in &t.entries {
        if *c == Channel::BobToAlice {
            find(Some(f.round), "frame on the Bob-to-Alice channel".into());
            continue;
        }
        rounds
            .entry(f.round)
            .or_default()
            .by_channel
            .entry(*c)
            .or_default()
            .push(f);
    }

    let mut messages = 0u64;
    for (expected, (&r, frames)) in rounds.iter().enumerate() {
        if r != expected as u64 {
            find(Some(r), format!("round index {r} where {expected} was due"));
        }
        use Channel::*;
        use FrameKind::*;
        let setup = [Setting, SharedRandomness];
        for (c, want) in [
            (RefereeToAlice, &setup[..]),
            (RefereeToBob, &setup[..]),
            (AliceToReferee, &[Output][..]),
            (BobToReferee, &[Output][..]),
        ] {
            let got = frames.kinds(c);
            if got != want {
                find(Some(r), format!("{c:?} carried {got:?}, expected {want:?}"));
            }
        }
        let to_bob = frames.kinds(AliceToBob);
        if to_bob.iter().any(|k| *k != Message) {
            find(
                Some(r),
                format!("non-MESSAGE frame from Alice to Bob: {to_bob:?}"),
            );
        }
        let sent: Vec<&Frame> = frames.by_channel.get(&AliceToBob).map_or(Vec::new(), |v| {
            v.iter().copied().filter(|f| f.kind == Message).collect()
        });
        messages += sent.len() as u64;

        let shared_a = frames.get(RefereeToAlice, SharedRandomness);
        let shared_b = frames.get(RefereeToBob, SharedRandomness);
        if let (Some(a), Some(b)) = (shared_a, shared_b) {
            if a.payload != b.payload {
                find(
                    Some(r),
                    "Alice and Bob received different shared randomness".into(),
                );
            }
        }
        for c in [RefereeToAlice, RefereeToBob] {
            if let Some(s) = frames.get(c, Setting) {
                if s.payload.len() != VECTOR_LEN {
                    find(
                        Some(r),
                        format!("SETTING on {c:?} is {} bytes", s.payload.len()),
                    );
                }
            }
        }
        let due = match shared_a.map(|f| decode_shared(&f.payload)) {
            Some(Ok(s)) if !shared_layout_ok(protocol, s.lambdas.len(), s.flag) => {
                find(
                    Some(r),
                    format!(
                        "{} shared vectors with flag {:?} do not fit '{protocol}'",
                        s.lambdas.len(),
                        s.flag
                    ),
                );
                None
            }
            Some(Ok(s)) => match protocol {
                ProtocolId::ImprovedOneBit | ProtocolId::LocalContent => match s.flag {
                    Some(flag) => Some(flag),
                    None => {
                        find(Some(r), "shared randomness lacks the shared bit".into());
                        None
                    }
                },
                _ => Some(true),
            },
            Some(Err(e)) => {
                find(Some(r), format!("undecodable shared randomness: {e}"));
                None
            }
            None => None,
        };
        if let Some(due) = due {
            if sent.len() != usize::from(due) {
                find(
                    Some(r),
                    format!(
                        "{} MESSAGE frames where {} were due",
                        sent.len(),
                        usize::from(due)
                    ),
                );
            }
        }
        for m in &sent {
            if let Err(e) = decode_message(protocol, r, &m.payload) {
                find(Some(r), e.to_string());
            }
        }
        // Bob's OUTPUT echoes the message he received after his outcome and λ.
        if let Some(out) = frames.get(BobToReferee, Output) {
            let on_wire = sent.first().map_or(&[][..], |m| &m.payload[..]);
            if out.payload.get(1 + VECTOR_LEN..) != Some(on_wire) {
                find(
                    Some(r),
                    "Bob's echo differs from what Alice put on the wire".into(),
                );
            }
        }
    }

    let n = rounds.len() as u64;
    AuditReport {
        protocol,
        rounds: n,
        message_frames: messages,
        message_fraction: if n > 0 {
            messages as f64 / n as f64
        } else {
            0.0
        },
        pass: findings.is_empty(),
        findings,
    }
}
