//! The protocols run as three parties connected by byte streams.
//!
//! The referee owns the settings and the shared randomness and sends each
//! party only what it may see. Alice talks to Bob over a one-way stream that
//! carries only MESSAGE frames of the protocol's fixed width. Every round is
//! completed before the next starts.
//!
//! Per round `r`:
//!
//! - referee → Alice: `SETTING(x)`, `SHARED_RANDOMNESS`
//! - referee → Bob: `SETTING(y)`, `SHARED_RANDOMNESS`
//! - Alice → Bob: zero or one `MESSAGE`
//! - Alice → referee: `OUTPUT(a)`
//! - Bob → referee: `OUTPUT(b, λ, received message)`

pub mod frame;
pub mod transcript;

pub use frame::{Frame, FrameKind};
pub use transcript::{
    audit_transcript, AuditReport, Channel, Finding, Transcript, TranscriptSummary,
};

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::thread;

use serde::{Deserialize, Serialize};

use self::frame::{
    decode_message, decode_outcome, decode_shared, decode_vector, encode_message, encode_outcome,
    encode_shared, encode_vector, VECTOR_LEN,
};
use crate::bloch::{BlochVector, StateParam};
use crate::error::{Error, Result};
use crate::protocols::{
    round_streams, Alice, Bob, Message, ProtocolId, RoundRecord, SharedSource, SimulationConfig,
};
use crate::verify::{EmpiricalTable, SettingRow};

fn vector_frame(round: u64, kind: FrameKind, v: BlochVector) -> Frame {
    let mut p = Vec::with_capacity(VECTOR_LEN);
    encode_vector(v, &mut p);
    Frame::new(round, kind, p)
}

/// What Alice's process is told at start-up: the state and her private seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AliceConfig {
    pub protocol: ProtocolId,
    pub state: StateParam,
    pub seed: u64,
    /// Test hook: send a two-byte MESSAGE in this round.
    pub fault_round: Option<u64>,
}

/// Alice's loop; returns the number of rounds played.
pub fn run_alice<R: Read, W: Write, B: Write>(
    cfg: &AliceConfig,
    from_referee: &mut R,
    to_referee: &mut W,
    to_bob: &mut B,
) -> Result<u64> {
    let mut alice: Option<Alice> = None;
    let mut played = 0;
    while let Some(setting) = Frame::read_from(from_referee)? {
        let round = setting.round;
        if setting.kind != FrameKind::Setting {
            return Err(Error::ProtocolViolation {
                round,
                detail: format!("round opened with {:?}", setting.kind),
            });
        }
        let x = decode_vector(&setting.payload)?;
        if alice.as_ref().is_none_or(|a| a.setting() != x) {
            alice = Some(Alice::new(cfg.protocol, cfg.state, x.validated()?)?);
        }
        let alice = alice.as_ref().unwrap();
        let shared = decode_shared(
            &Frame::expect(from_referee, FrameKind::SharedRandomness, Some(round))?.payload,
        )?;
        let (_, mut private) = round_streams(cfg.seed, round);
        let turn = alice.respond(round, &shared, &mut private)?;
        if !turn.message.is_silent() {
            let mut payload = encode_message(&turn.message);
            if cfg.fault_round == Some(round) {
                payload.push(0);
            }
            Frame::new(round, FrameKind::Message, payload).write_to(to_bob)?;
            to_bob.flush()?;
        }
        Frame::new(round, FrameKind::Output, vec![encode_outcome(turn.output)])
            .write_to(to_referee)?;
        to_referee.flush()?;
        played += 1;
    }
    Ok(played)
}

/// Bob's loop; returns every frame read from Alice.
pub fn run_bob<R: Read, W: Write, A: Read>(
    protocol: ProtocolId,
    from_referee: &mut R,
    to_referee: &mut W,
    from_alice: &mut A,
) -> Result<Vec<Frame>> {
    let mut received = Vec::new();
    let mut bob: Option<Bob> = None;
    while let Some(setting) = Frame::read_from(from_referee)? {
        let round = setting.round;
        if setting.kind != FrameKind::Setting {
            return Err(Error::ProtocolViolation {
                round,
                detail: format!("round opened with {:?}", setting.kind),
            });
        }
        let y = decode_vector(&setting.payload)?;
        if bob.as_ref().is_none_or(|b| b.setting() != y) {
            bob = Some(Bob::new(protocol, y)?);
        }
        let bob = bob.as_ref().unwrap();
        let shared = decode_shared(
            &Frame::expect(from_referee, FrameKind::SharedRandomness, Some(round))?.payload,
        )?;
        let message = if bob.expects_message(round, &shared)? {
            let f = Frame::expect(from_alice, FrameKind::Message, Some(round))?;
            let m = decode_message(protocol, round, &f.payload);
            received.push(f);
            m?
        } else {
            Message::Silent
        };
        let turn = bob.respond(round, &shared, &message)?;
        let mut payload = vec![encode_outcome(turn.output)];
        encode_vector(turn.chosen, &mut payload);
        payload.extend(encode_message(&message));
        Frame::new(round, FrameKind::Output, payload).write_to(to_referee)?;
        to_referee.flush()?;
    }
    // Anything Alice sent beyond the last round is a violation too.
    if let Some(extra) = Frame::read_from(from_alice)? {
        return Err(Error::ProtocolViolation {
            round: extra.round,
            detail: "MESSAGE frame in a round without communication".into(),
        });
    }
    Ok(received)
}

/// Referee's loop over all settings; returns the records and the frames it saw.
///
/// The Alice-to-Bob frames are not visible here; add them with
/// [`Transcript::extend`] from Bob's log.
pub fn run_referee<RA: Read, WA: Write, RB: Read, WB: Write>(
    config: &SimulationConfig,
    alice: (&mut RA, &mut WA),
    bob: (&mut RB, &mut WB),
) -> Result<(Vec<RoundRecord>, Transcript)> {
    let (from_alice, to_alice) = alice;
    let (from_bob, to_bob) = bob;
    let source = SharedSource::new(config.protocol, config.state)?;
    let mut transcript = Transcript::default();
    let mut records =
        Vec::with_capacity(config.settings.len() * config.rounds_per_setting as usize);
    let send = |w: &mut dyn Write, c: Channel, f: Frame, t: &mut Transcript| -> Result<()> {
        f.write_to(w)?;
        t.push(c, f);
        Ok(())
    };
    for (i, &(x, y)) in config.settings.iter().enumerate() {
        let (x, y) = (x.validated()?, y.validated()?);
        for k in 0..config.rounds_per_setting {
            let round = config.round_index(i, k);
            let (mut shared_rng, _) = round_streams(config.seed, round);
            let shared = encode_shared(&source.draw(&mut shared_rng)?);

            send(
                to_alice,
                Channel::RefereeToAlice,
                vector_frame(round, FrameKind::Setting, x),
                &mut transcript,
            )?;
            send(
                to_alice,
                Channel::RefereeToAlice,
                Frame::new(round, FrameKind::SharedRandomness, shared.clone()),
                &mut transcript,
            )?;
            to_alice.flush()?;
            send(
                to_bob,
                Channel::RefereeToBob,
                vector_frame(round, FrameKind::Setting, y),
                &mut transcript,
            )?;
            send(
                to_bob,
                Channel::RefereeToBob,
                Frame::new(round, FrameKind::SharedRandomness, shared),
                &mut transcript,
            )?;
            to_bob.flush()?;

            let fa = Frame::expect(from_alice, FrameKind::Output, Some(round))?;
            let fb = Frame::expect(from_bob, FrameKind::Output, Some(round))?;
            if fa.payload.len() != 1 || fb.payload.len() < 1 + VECTOR_LEN {
                return Err(Error::Malformed(format!("OUTPUT frames of round {round}")));
            }
            let a = decode_outcome(fa.payload[0])?;
            let b = decode_outcome(fb.payload[0])?;
            let lambda = decode_vector(&fb.payload[1..1 + VECTOR_LEN])?;
            let echo = &fb.payload[1 + VECTOR_LEN..];
            let message = if echo.is_empty() {
                Message::Silent
            } else {
                decode_message(config.protocol, round, echo)?
            };
            transcript.push(Channel::AliceToReferee, fa);
            transcript.push(Channel::BobToReferee, fb);
            records.push(RoundRecord {
                round,
                x,
                y,
                a,
                b,
                message,
                bits_sent: message.bits(config.protocol),
                lambda,
            });
        }
    }
    Ok((records, transcript))
}

/// Per-setting counts from records in global round order.
pub fn table_from_records(config: &SimulationConfig, records: &[RoundRecord]) -> EmpiricalTable {
    let m = config.rounds_per_setting.max(1);
    let mut rows: Vec<SettingRow> = config
        .settings
        .iter()
        .map(|&(x, y)| SettingRow::new(config.protocol, x, y))
        .collect();
    for r in records {
        if let Some(row) = rows.get_mut((r.round / m) as usize) {
            row.record(r.a, r.b, &r.message);
        }
    }
    EmpiricalTable { rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub simulation: SimulationConfig,
    /// Address the referee and Alice listen on; port 0 picks free ports.
    pub bind: SocketAddr,
    pub fault_round: Option<u64>,
}

impl NetworkConfig {
    pub fn loopback(simulation: SimulationConfig) -> Self {
        NetworkConfig {
            simulation,
            bind: SocketAddr::from(([127, 0, 0, 1], 0)),
            fault_round: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NetworkedRun {
    pub records: Vec<RoundRecord>,
    pub table: EmpiricalTable,
    pub transcript: Transcript,
}

fn connect(addr: SocketAddr) -> Result<TcpStream> {
    let s = TcpStream::connect(addr)?;
    s.set_nodelay(true)?;
    Ok(s)
}

fn accept(l: &TcpListener) -> Result<TcpStream> {
    let (s, _) = l.accept()?;
    s.set_nodelay(true)?;
    Ok(s)
}

/// Streams for one party: buffered reader and writer over a cloned socket.
pub fn split(s: TcpStream) -> Result<(BufReader<TcpStream>, BufWriter<TcpStream>)> {
    let w = s.try_clone()?;
    Ok((BufReader::new(s), BufWriter::new(w)))
}

/// Runs the three parties on threads connected over TCP.
///
/// A party's protocol violation takes precedence over the transport errors it
/// causes elsewhere once it hangs up.
pub fn run_networked(config: &NetworkConfig) -> Result<NetworkedRun> {
    let sim = &config.simulation;
    let referee_listener = TcpListener::bind(config.bind)?;
    let alice_listener = TcpListener::bind(config.bind)?;
    let referee_addr = referee_listener.local_addr()?;
    let alice_addr = alice_listener.local_addr()?;

    let alice_cfg = AliceConfig {
        protocol: sim.protocol,
        state: sim.state,
        seed: sim.seed,
        fault_round: config.fault_round,
    };
    let alice = thread::spawn(move || -> Result<u64> {
        let (mut from_ref, mut to_ref) = split(connect(referee_addr)?)?;
        let bob = accept(&alice_listener)?;
        bob.shutdown(Shutdown::Read)?;
        let mut to_bob = BufWriter::new(bob);
        run_alice(&alice_cfg, &mut from_ref, &mut to_ref, &mut to_bob)
    });
    let (mut from_alice, mut to_alice) = split(accept(&referee_listener)?)?;

    let protocol = sim.protocol;
    let bob = thread::spawn(move || -> Result<Vec<Frame>> {
        let alice = connect(alice_addr)?;
        alice.shutdown(Shutdown::Write)?;
        let mut from_alice = BufReader::new(alice);
        let (mut from_ref, mut to_ref) = split(connect(referee_addr)?)?;
        run_bob(protocol, &mut from_ref, &mut to_ref, &mut from_alice)
    });
    let (mut from_bob, mut to_bob) = split(accept(&referee_listener)?)?;

    let referee = run_referee(
        sim,
        (&mut from_alice, &mut to_alice),
        (&mut from_bob, &mut to_bob),
    );
    // Closing the referee streams ends both party loops.
    drop((from_alice, to_alice, from_bob, to_bob));
    let alice = alice
        .join()
        .map_err(|_| Error::Invalid("Alice thread panicked".into()))?;
    let bob = bob
        .join()
        .map_err(|_| Error::Invalid("Bob thread panicked".into()))?;

    let (records, mut transcript) = match (referee, &alice, &bob) {
        (_, Err(e @ Error::ProtocolViolation { .. }), _)
        | (_, _, Err(e @ Error::ProtocolViolation { .. })) => return Err(clone_violation(e)),
        (Ok(r), _, _) => r,
        (Err(e), _, _) => return Err(e),
    };
    alice?;
    transcript.extend(Channel::AliceToBob, bob?);
    let table = table_from_records(sim, &records);
    Ok(NetworkedRun {
        records,
        table,
        transcript,
    })
}

fn clone_violation(e: &Error) -> Error {
    match e {
        Error::ProtocolViolation { round, detail } => Error::ProtocolViolation {
            round: *round,
            detail: detail.clone(),
        },
        other => Error::Invalid(other.to_string()),
    }
}
