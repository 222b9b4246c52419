//! The classical simulation protocols behind one two-party interface.
//!
//! Every round is split into three isolated steps:
//!
//! 1. a [`SharedSource`] draws the [`SharedRandomness`] for the round; it sees
//!    neither setting,
//! 2. [`Alice`] sees her setting `x`, the shared randomness and a private
//!    stream, and emits an output and at most one [`Message`],
//! 3. [`Bob`] sees his setting `y`, the shared randomness and the message.
//!
//! Alice never holds `y` and Bob never holds `x`; the types make any other
//! data flow impossible.
//!
//! Message symbols are 0-based on the wire: symbol `k` selects the
//! protocol's vector `λ_{k+1}`.

mod simulate;

pub use simulate::{simulate, simulate_records, SimulationConfig, SimulationOutput};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use arrayvec::ArrayVec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bloch::{collapse, theta, BlochVector, CollapseData, Outcome, StateParam};
use crate::error::{Error, Result};
use crate::sampling::{
    choose_aligned, n_of_p, rho_tilde_max_at, sample_rho_tilde_counted, sample_rho_tilde_max,
    sample_theta_hemisphere, sample_uniform_sphere, RngStream, CLAMP_BAND,
};

/// Bits recorded for a vector message (three IEEE-754 doubles).
pub const VECTOR_BITS: f64 = 192.0;

/// `1/2 + √3/4`, the smallest `p` where the basic one-bit protocol is well defined.
pub fn one_bit_min_p() -> f64 {
    0.5 + 3f64.sqrt() / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolId {
    /// One bit every round, for `p ≥ 1/2 + √3/4`.
    OneBit,
    /// One trit every round, for every `p`.
    Trit,
    /// One bit for the maximally entangled state, via the choice method.
    DegorreBit,
    /// Two bits: Alice samples her output, then sends a classical description of `v_a`.
    ClassicalTeleportation,
    /// One bit in a fraction `N(p)` of the rounds, none otherwise.
    ImprovedOneBit,
    /// No communication in a fraction `2p − 1` of rounds; a full vector otherwise.
    LocalContent,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 6] = [
        ProtocolId::OneBit,
        ProtocolId::Trit,
        ProtocolId::DegorreBit,
        ProtocolId::ClassicalTeleportation,
        ProtocolId::ImprovedOneBit,
        ProtocolId::LocalContent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::OneBit => "one-bit",
            ProtocolId::Trit => "trit",
            ProtocolId::DegorreBit => "degorre",
            ProtocolId::ClassicalTeleportation => "teleport",
            ProtocolId::ImprovedOneBit => "improved",
            ProtocolId::LocalContent => "local-content",
        }
    }

    /// Size `d` of the message alphabet; `None` for the unbounded vector channel.
    pub fn alphabet(self) -> Option<u8> {
        match self {
            ProtocolId::OneBit | ProtocolId::DegorreBit | ProtocolId::ImprovedOneBit => Some(2),
            ProtocolId::Trit => Some(3),
            ProtocolId::ClassicalTeleportation => Some(4),
            ProtocolId::LocalContent => None,
        }
    }

    /// Upper bound on bits sent in any single round.
    pub fn max_bits_per_round(self) -> f64 {
        match self.alphabet() {
            Some(d) => f64::from(d).log2(),
            None => VECTOR_BITS,
        }
    }

    /// Human-readable range of `p` this protocol simulates exactly.
    pub fn range_label(self) -> String {
        match self {
            ProtocolId::OneBit => format!("[{:.3}, 1]", one_bit_min_p()),
            ProtocolId::DegorreBit => "{0.5}".into(),
            ProtocolId::ImprovedOneBit => format!(
                "[{:.3}, 1] (N(p) <= 1)",
                crate::sampling::one_bit_threshold(1e-9)
            ),
            _ => "[0.5, 1]".into(),
        }
    }

    pub fn is_applicable(self, state: StateParam) -> bool {
        let p = state.p();
        match self {
            ProtocolId::OneBit => p >= one_bit_min_p(),
            ProtocolId::DegorreBit => (p - 0.5).abs() <= 1e-12,
            ProtocolId::ImprovedOneBit => matches!(n_of_p(state), Ok(n) if n <= 1.0),
            ProtocolId::Trit | ProtocolId::ClassicalTeleportation | ProtocolId::LocalContent => {
                true
            }
        }
    }

    pub fn check_applicable(self, state: StateParam) -> Result<()> {
        if self.is_applicable(state) {
            Ok(())
        } else {
            Err(Error::Domain {
                what: format!("protocol '{}'", self.name()),
                range: self.range_label(),
                p: state.p(),
            })
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "one-bit" | "1" => ProtocolId::OneBit,
            "trit" | "2" => ProtocolId::Trit,
            "degorre" | "3" => ProtocolId::DegorreBit,
            "teleport" | "4" => ProtocolId::ClassicalTeleportation,
            "improved" | "5" => ProtocolId::ImprovedOneBit,
            "local-content" | "6" => ProtocolId::LocalContent,
            other => {
                return Err(Error::Invalid(format!(
                    "unknown protocol '{other}' (expected one of one-bit, trit, degorre, teleport, improved, local-content)"
                )))
            }
        })
    }
}

/// What Alice sends Bob in one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Message {
    Silent,
    Symbol(u8),
    Vector(BlochVector),
}

impl Message {
    pub fn bits(&self, protocol: ProtocolId) -> f64 {
        match self {
            Message::Silent => 0.0,
            Message::Symbol(_) => protocol.max_bits_per_round(),
            Message::Vector(_) => VECTOR_BITS,
        }
    }

    pub fn is_silent(&self) -> bool {
        matches!(self, Message::Silent)
    }
}

/// Per-round shared variables: up to three vectors and an optional shared bit.
///
/// Layouts, by protocol:
///
/// | protocol        | `lambdas`                         | `flag`      |
/// |-----------------|-----------------------------------|-------------|
/// | one-bit         | `[uniform, Θ(·ẑ)]`                | –           |
/// | trit            | `[uniform, uniform, Θ(·ẑ)]`       | –           |
/// | degorre, teleport | `[uniform, uniform]`            | –           |
/// | improved        | `[Θ(·ẑ)]` or `[Θ(·ẑ), ρ̃_max/N]`  | `r`         |
/// | local-content   | `[Θ(·ẑ)]`                         | `r`         |
///
/// For the two flagged protocols `r = true` marks a communicating round.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedRandomness {
    pub lambdas: ArrayVec<BlochVector, 3>,
    pub flag: Option<bool>,
}

impl SharedRandomness {
    fn lambda(&self, i: usize, round: u64) -> Result<BlochVector> {
        self.lambdas
            .get(i)
            .copied()
            .ok_or_else(|| Error::ProtocolViolation {
                round,
                detail: format!("shared randomness has no vector #{}", i + 1),
            })
    }

    fn flag(&self, round: u64) -> Result<bool> {
        self.flag.ok_or_else(|| Error::ProtocolViolation {
            round,
            detail: "shared randomness is missing its shared bit".into(),
        })
    }
}

/// Draws shared randomness; depends on the state (known to both parties) only.
#[derive(Debug, Clone, Copy)]
pub struct SharedSource {
    protocol: ProtocolId,
    state: StateParam,
    /// Probability of a communicating round for the flagged protocols.
    talk_probability: f64,
}

impl SharedSource {
    pub fn new(protocol: ProtocolId, state: StateParam) -> Result<Self> {
        protocol.check_applicable(state)?;
        let talk_probability = match protocol {
            ProtocolId::ImprovedOneBit => n_of_p(state)?,
            ProtocolId::LocalContent => 2.0 * (1.0 - state.p()),
            _ => 0.0,
        };
        Ok(SharedSource {
            protocol,
            state,
            talk_probability,
        })
    }

    pub fn protocol(&self) -> ProtocolId {
        self.protocol
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SharedRandomness> {
        let mut lambdas = ArrayVec::new();
        let mut flag = None;
        match self.protocol {
            ProtocolId::OneBit => {
                lambdas.push(sample_uniform_sphere(rng));
                lambdas.push(sample_theta_hemisphere(rng, BlochVector::Z));
            }
            ProtocolId::Trit => {
                lambdas.push(sample_uniform_sphere(rng));
                lambdas.push(sample_uniform_sphere(rng));
                lambdas.push(sample_theta_hemisphere(rng, BlochVector::Z));
            }
            ProtocolId::DegorreBit | ProtocolId::ClassicalTeleportation => {
                lambdas.push(sample_uniform_sphere(rng));
                lambdas.push(sample_uniform_sphere(rng));
            }
            ProtocolId::ImprovedOneBit => {
                let talk = rng.random::<f64>() < self.talk_probability;
                lambdas.push(sample_theta_hemisphere(rng, BlochVector::Z));
                if talk {
                    lambdas.push(sample_rho_tilde_max(rng, self.state)?);
                }
                flag = Some(talk);
            }
            ProtocolId::LocalContent => {
                let talk = rng.random::<f64>() < self.talk_probability;
                lambdas.push(sample_theta_hemisphere(rng, BlochVector::Z));
                flag = Some(talk);
            }
        }
        Ok(SharedRandomness { lambdas, flag })
    }
}

/// Probability that Alice outputs `+1` given the delivered `λ`:
/// `p₊Θ(λ·v₊)/π ÷ ρ_x(λ)`.
pub fn alice_output_weight(collapsed: &CollapseData, lambda: BlochVector) -> Result<f64> {
    let plus = collapsed.p_plus * theta(lambda.dot(collapsed.v_plus)) / PI;
    let total = collapsed.rho(lambda);
    if total <= 0.0 {
        return Err(Error::Consistency(format!(
            "rho_x vanishes at delivered lambda {lambda:?}"
        )));
    }
    Ok((plus / total).min(1.0))
}

/// `b = sgn(y·λ)` with `sgn(0) = +1`.
#[inline]
pub fn bob_output(y: BlochVector, lambda: BlochVector) -> Outcome {
    Outcome::sgn(y.dot(lambda))
}

/// Two-bit classical description of qubit `v` from two uniform vectors.
///
/// Returns the symbol `2·(c₁−1) + [c₂ = −1]` and the vector `c₂·λ_{c₁}`, which
/// is distributed as `Θ(λ·v)/π`.
pub fn teleport_encode(
    v: BlochVector,
    lambda1: BlochVector,
    lambda2: BlochVector,
) -> (u8, BlochVector) {
    let choice = choose_aligned(v, lambda1, lambda2);
    let flip = Outcome::sgn(choice.chosen.dot(v)) == Outcome::Minus;
    let symbol = if choice.first { 0 } else { 2 } + u8::from(flip);
    (symbol, if flip { -choice.chosen } else { choice.chosen })
}

fn teleport_decode(symbol: u8, lambda1: BlochVector, lambda2: BlochVector) -> BlochVector {
    let base = if symbol < 2 { lambda1 } else { lambda2 };
    if symbol & 1 == 1 {
        -base
    } else {
        base
    }
}

/// Alice's view of one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliceTurn {
    pub output: Outcome,
    pub message: Message,
    /// The vector the parties end up sharing this round.
    pub chosen: BlochVector,
}

/// Alice: holds her setting and the state, never Bob's setting.
#[derive(Debug, Clone)]
pub struct Alice {
    protocol: ProtocolId,
    state: StateParam,
    x: BlochVector,
    collapsed: CollapseData,
}

impl Alice {
    pub fn new(protocol: ProtocolId, state: StateParam, x: BlochVector) -> Result<Self> {
        protocol.check_applicable(state)?;
        let collapsed = collapse(state, x)?;
        Ok(Alice {
            protocol,
            state,
            x,
            collapsed,
        })
    }

    pub fn setting(&self) -> BlochVector {
        self.x
    }

    pub fn collapsed(&self) -> &CollapseData {
        &self.collapsed
    }

    /// Samples `a` from the framework rule once `λ` is fixed.
    fn framework_output<R: Rng + ?Sized>(
        &self,
        lambda: BlochVector,
        private: &mut R,
    ) -> Result<Outcome> {
        let w = alice_output_weight(&self.collapsed, lambda)?;
        Ok(if private.random::<f64>() < w {
            Outcome::Plus
        } else {
            Outcome::Minus
        })
    }

    /// `value / bound` as a probability; fails if it exceeds one beyond round-off.
    fn acceptance(&self, value: f64, bound: f64, what: &str) -> Result<f64> {
        if value == 0.0 {
            return Ok(0.0);
        }
        let ratio = value / bound;
        if ratio.is_nan() || ratio > 1.0 + CLAMP_BAND {
            return Err(Error::Domain {
                what: format!("{what} (acceptance {ratio:.6} > 1)"),
                range: self.protocol.range_label(),
                p: self.state.p(),
            });
        }
        Ok(ratio)
    }

    pub fn respond<R: Rng + ?Sized>(
        &self,
        round: u64,
        shared: &SharedRandomness,
        private: &mut R,
    ) -> Result<AliceTurn> {
        let c = &self.collapsed;
        let (message, chosen) = match self.protocol {
            ProtocolId::OneBit => {
                let (l1, l2) = (shared.lambda(0, round)?, shared.lambda(1, round)?);
                // 4π·ρ̃_x(λ₁) = ρ̃_x(λ₁) / (1/4π)
                let accept = self.acceptance(c.rho_tilde(l1)?, 1.0 / (4.0 * PI), "one-bit step")?;
                if private.random::<f64>() < accept {
                    (Message::Symbol(0), l1)
                } else {
                    (Message::Symbol(1), l2)
                }
            }
            ProtocolId::Trit => {
                let (l1, l2, l3) = (
                    shared.lambda(0, round)?,
                    shared.lambda(1, round)?,
                    shared.lambda(2, round)?,
                );
                let v = if c.p_plus <= 0.5 { c.v_plus } else { c.v_minus };
                let choice = choose_aligned(v, l1, l2);
                let dot = choice.chosen.dot(v).abs();
                let accept = if dot == 0.0 {
                    0.0
                } else {
                    let a = c.rho_tilde(choice.chosen)? / (dot / (2.0 * PI));
                    if a > 1.0 + CLAMP_BAND {
                        return Err(Error::Consistency(format!(
                            "trit acceptance {a} exceeds 1 at {:?}",
                            choice.chosen
                        )));
                    }
                    a
                };
                if private.random::<f64>() < accept {
                    let symbol = if choice.first { 0 } else { 1 };
                    (Message::Symbol(symbol), choice.chosen)
                } else {
                    (Message::Symbol(2), l3)
                }
            }
            ProtocolId::DegorreBit => {
                let choice =
                    choose_aligned(c.v_plus, shared.lambda(0, round)?, shared.lambda(1, round)?);
                let symbol = if choice.first { 0 } else { 1 };
                // At p = 1/2 the framework rule is deterministic: a = sgn(λ·v₊).
                return Ok(AliceTurn {
                    output: Outcome::sgn(choice.chosen.dot(c.v_plus)),
                    message: Message::Symbol(symbol),
                    chosen: choice.chosen,
                });
            }
            ProtocolId::ClassicalTeleportation => {
                let output = if private.random::<f64>() < c.p_plus {
                    Outcome::Plus
                } else {
                    Outcome::Minus
                };
                let (symbol, chosen) = teleport_encode(
                    c.post_state(output),
                    shared.lambda(0, round)?,
                    shared.lambda(1, round)?,
                );
                return Ok(AliceTurn {
                    output,
                    message: Message::Symbol(symbol),
                    chosen,
                });
            }
            ProtocolId::ImprovedOneBit => {
                let hemi = shared.lambda(0, round)?;
                if shared.flag(round)? {
                    let l1 = shared.lambda(1, round)?;
                    let accept = self.acceptance(
                        c.rho_tilde(l1)?,
                        rho_tilde_max_at(self.state, l1.z),
                        "improved one-bit step",
                    )?;
                    if private.random::<f64>() < accept {
                        (Message::Symbol(0), l1)
                    } else {
                        (Message::Symbol(1), hemi)
                    }
                } else {
                    (Message::Silent, hemi)
                }
            }
            ProtocolId::LocalContent => {
                if shared.flag(round)? {
                    let (lambda, _) = sample_rho_tilde_counted(private, self.state, c)?;
                    (Message::Vector(lambda), lambda)
                } else {
                    (Message::Silent, shared.lambda(0, round)?)
                }
            }
        };
        Ok(AliceTurn {
            output: self.framework_output(chosen, private)?,
            message,
            chosen,
        })
    }
}

/// Bob's view of one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BobTurn {
    pub output: Outcome,
    pub chosen: BlochVector,
}

/// Bob: holds his setting and the protocol, never Alice's setting.
#[derive(Debug, Clone)]
pub struct Bob {
    protocol: ProtocolId,
    y: BlochVector,
}

impl Bob {
    pub fn new(protocol: ProtocolId, y: BlochVector) -> Result<Self> {
        Ok(Bob {
            protocol,
            y: y.validated()?,
        })
    }

    pub fn setting(&self) -> BlochVector {
        self.y
    }

    /// Whether Alice speaks this round. Silent rounds are announced by the shared bit.
    pub fn expects_message(&self, round: u64, shared: &SharedRandomness) -> Result<bool> {
        match self.protocol {
            ProtocolId::ImprovedOneBit | ProtocolId::LocalContent => shared.flag(round),
            _ => Ok(true),
        }
    }

    fn violation(round: u64, detail: String) -> Error {
        Error::ProtocolViolation { round, detail }
    }

    pub fn respond(
        &self,
        round: u64,
        shared: &SharedRandomness,
        message: &Message,
    ) -> Result<BobTurn> {
        let expects = self.expects_message(round, shared)?;
        if expects == message.is_silent() {
            return Err(Self::violation(
                round,
                format!(
                    "expected {} message, got {message:?}",
                    if expects { "a" } else { "no" }
                ),
            ));
        }
        let symbol = match (message, self.protocol.alphabet()) {
            (Message::Symbol(s), Some(d)) if *s < d => Some(*s),
            (Message::Vector(_), None) | (Message::Silent, _) => None,
            _ => {
                return Err(Self::violation(
                    round,
                    format!(
                        "message {message:?} outside the alphabet of '{}'",
                        self.protocol
                    ),
                ))
            }
        };
        let chosen = match self.protocol {
            ProtocolId::OneBit | ProtocolId::Trit | ProtocolId::DegorreBit => {
                shared.lambda(usize::from(symbol.unwrap_or(0)), round)?
            }
            ProtocolId::ClassicalTeleportation => teleport_decode(
                symbol.unwrap_or(0),
                shared.lambda(0, round)?,
                shared.lambda(1, round)?,
            ),
            ProtocolId::ImprovedOneBit => match symbol {
                Some(0) => shared.lambda(1, round)?,
                _ => shared.lambda(0, round)?,
            },
            ProtocolId::LocalContent => match message {
                Message::Vector(v) => v
                    .validated()
                    .map_err(|e| Self::violation(round, e.to_string()))?,
                _ => shared.lambda(0, round)?,
            },
        };
        Ok(BobTurn {
            output: bob_output(self.y, chosen),
            chosen,
        })
    }
}

/// One simulated round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub x: BlochVector,
    pub y: BlochVector,
    pub a: Outcome,
    pub b: Outcome,
    pub message: Message,
    pub bits_sent: f64,
    pub lambda: BlochVector,
}

/// Stream ids for round `r`: `2r` for shared randomness, `2r + 1` for Alice's coins.
pub fn round_streams(seed: u64, round: u64) -> (RngStream, RngStream) {
    (
        RngStream::new(seed, 2 * round),
        RngStream::new(seed, 2 * round + 1),
    )
}

/// Plays one round with the per-round streams of `(seed, round)`.
pub fn play_round(
    source: &SharedSource,
    alice: &Alice,
    bob: &Bob,
    seed: u64,
    round: u64,
) -> Result<RoundRecord> {
    let (mut shared_rng, mut alice_rng) = round_streams(seed, round);
    play_round_with(source, alice, bob, round, &mut shared_rng, &mut alice_rng)
}

fn play_round_with<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    source: &SharedSource,
    alice: &Alice,
    bob: &Bob,
    round: u64,
    shared_rng: &mut R1,
    alice_rng: &mut R2,
) -> Result<RoundRecord> {
    let shared = source.draw(shared_rng)?;
    let turn = alice.respond(round, &shared, alice_rng)?;
    let reply = bob.respond(round, &shared, &turn.message)?;
    debug_assert_eq!(turn.chosen, reply.chosen);
    Ok(RoundRecord {
        round,
        x: alice.setting(),
        y: bob.setting(),
        a: turn.output,
        b: reply.output,
        message: turn.message,
        bits_sent: turn.message.bits(source.protocol()),
        lambda: reply.chosen,
    })
}

/// One round of `protocol` drawing every random number from `rng`.
pub fn run_round<R: Rng + ?Sized>(
    protocol: ProtocolId,
    rng: &mut R,
    state: StateParam,
    x: BlochVector,
    y: BlochVector,
) -> Result<RoundRecord> {
    let source = SharedSource::new(protocol, state)?;
    let alice = Alice::new(protocol, state, x)?;
    let bob = Bob::new(protocol, y)?;
    let shared = source.draw(rng)?;
    let turn = alice.respond(0, &shared, rng)?;
    let reply = bob.respond(0, &shared, &turn.message)?;
    Ok(RoundRecord {
        round: 0,
        x,
        y,
        a: turn.output,
        b: reply.output,
        message: turn.message,
        bits_sent: turn.message.bits(protocol),
        lambda: reply.chosen,
    })
}

pub fn run_protocol1_round<R: Rng + ?Sized>(
    rng: &mut R,
    state: StateParam,
    x: BlochVector,
    y: BlochVector,
) -> Result<RoundRecord> {
    run_round(ProtocolId::OneBit, rng, state, x, y)
}

pub fn run_protocol2_round<R: Rng + ?Sized>(
    rng: &mut R,
    state: StateParam,
    x: BlochVector,
    y: BlochVector,
) -> Result<RoundRecord> {
    run_round(ProtocolId::Trit, rng, state, x, y)
}

pub fn run_protocol3_round<R: Rng + ?Sized>(
    rng: &mut R,
    state: StateParam,
    x: BlochVector,
    y: BlochVector,
) -> Result<RoundRecord> {
    run_round(ProtocolId::DegorreBit, rng, state, x, y)
}

pub fn run_protocol5_round<R: Rng + ?Sized>(
    rng: &mut R,
    state: StateParam,
    x: BlochVector,
    y: BlochVector,
) -> Result<RoundRecord> {
    run_round(ProtocolId::ImprovedOneBit, rng, state, x, y)
}

pub fn run_protocol6_round<R: Rng + ?Sized>(
    rng: &mut R,
    state: StateParam,
    x: BlochVector,
    y: BlochVector,
) -> Result<RoundRecord> {
    run_round(ProtocolId::LocalContent, rng, state, x, y)
}

/// Outcome of the prepare-and-measure qubit simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportRound {
    pub b: Outcome,
    pub symbol: u8,
    pub bits_sent: f64,
    pub lambda: BlochVector,
}

/// Prepare-and-measure simulation of the qubit `v` measured along `y`, two bits.
pub fn run_protocol4_round<R: Rng + ?Sized>(
    rng: &mut R,
    v: BlochVector,
    y: BlochVector,
) -> Result<TeleportRound> {
    let (v, y) = (v.validated()?, y.validated()?);
    let l1 = sample_uniform_sphere(rng);
    let l2 = sample_uniform_sphere(rng);
    let (symbol, sent) = teleport_encode(v, l1, l2);
    let lambda = teleport_decode(symbol, l1, l2);
    debug_assert_eq!(sent, lambda);
    Ok(TeleportRound {
        b: bob_output(y, lambda),
        symbol,
        bits_sent: 2.0,
        lambda,
    })
}
