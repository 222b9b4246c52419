use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use clap::Args;
use entsim::protocols::{simulate_records, RoundRecord, SimulationConfig};
use entsim::verify::{verify_table, VerificationReport};
use entsim::wire::{
    audit_transcript, run_alice, run_bob, run_networked, run_referee, split, table_from_records,
    AliceConfig, AuditReport, Channel, NetworkConfig, Transcript, TranscriptSummary,
};
use serde::Serialize;

use crate::config::{parse_protocol, parse_state, RunArgs, RunConfig};
use crate::report::{emit, to_json, Envelope};
use crate::CliError;

const CONNECT_TIMEOUT: Duration = Duration::from_secs(30);
const LISTEN_PREFIX: &str = "listening ";

#[derive(Debug, Clone, Args)]
pub struct WireRunArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Address the referee and Alice listen on
    #[arg(long, default_value = "127.0.0.1:0")]
    pub bind: SocketAddr,
    /// Run the parties as threads of this process instead of child processes
    #[arg(long)]
    pub threads: bool,
    /// Also run in process and require identical records
    #[arg(long)]
    pub check: bool,
    /// Binary transcript log destination
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// JSON transcript summary destination
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Test hook: Alice sends an oversized MESSAGE in this round
    #[arg(long, hide = true)]
    pub fault_round: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    /// Binary transcript log written by wire-run
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub protocol: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AliceArgs {
    #[arg(long)]
    referee: SocketAddr,
    #[arg(long)]
    bind: SocketAddr,
    #[arg(long)]
    protocol: String,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    fault_round: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct BobArgs {
    #[arg(long)]
    referee: SocketAddr,
    #[arg(long)]
    alice: SocketAddr,
    #[arg(long)]
    protocol: String,
    /// Where to write the frames received from Alice
    #[arg(long)]
    log: PathBuf,
}

#[derive(Debug, Serialize)]
struct WireResult {
    rounds: usize,
    processes: bool,
    matches_in_process: Option<bool>,
    audit: AuditReport,
    transcript: TranscriptSummary,
    verification: VerificationReport,
}

fn connect(addr: SocketAddr) -> Result<TcpStream, CliError> {
    let s = TcpStream::connect(addr)?;
    s.set_nodelay(true)?;
    Ok(s)
}

pub fn alice(a: AliceArgs) -> Result<(), CliError> {
    let cfg = AliceConfig {
        protocol: parse_protocol(&a.protocol)?,
        state: parse_state(a.p)?,
        seed: a.seed,
        fault_round: a.fault_round,
    };
    let listener = TcpListener::bind(a.bind)?;
    println!("{LISTEN_PREFIX}{}", listener.local_addr()?);
    std::io::stdout().flush()?;
    let (mut from_ref, mut to_ref) = split(connect(a.referee)?)?;
    let (bob, _) = listener.accept()?;
    bob.set_nodelay(true)?;
    bob.shutdown(Shutdown::Read)?;
    let mut to_bob = BufWriter::new(bob);
    run_alice(&cfg, &mut from_ref, &mut to_ref, &mut to_bob)?;
    Ok(())
}

pub fn bob(a: BobArgs) -> Result<(), CliError> {
    let protocol = parse_protocol(&a.protocol)?;
    let alice = connect(a.alice)?;
    alice.shutdown(Shutdown::Write)?;
    let mut from_alice = BufReader::new(alice);
    let (mut from_ref, mut to_ref) = split(connect(a.referee)?)?;
    let frames = run_bob(protocol, &mut from_ref, &mut to_ref, &mut from_alice)?;
    let mut t = Transcript::default();
    t.extend(Channel::AliceToBob, frames);
    let mut f = BufWriter::new(std::fs::File::create(&a.log)?);
    t.write_log(&mut f)?;
    f.flush()?;
    Ok(())
}

/// Accepts one connection, giving up if `child` exits first.
fn accept_from(
    listener: &TcpListener,
    child: &mut Child,
    who: &str,
) -> Result<TcpStream, CliError> {
    listener.set_nonblocking(true)?;
    let start = Instant::now();
    let stream = loop {
        match listener.accept() {
            Ok((s, _)) => break s,
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if let Some(status) = child.try_wait()? {
                    return Err(CliError::Failed(format!(
                        "{who} exited before connecting ({status})"
                    )));
                }
                if start.elapsed() > CONNECT_TIMEOUT {
                    return Err(CliError::Failed(format!("{who} did not connect")));
                }
                std::thread::sleep(Duration::from_millis(2));
            }
            Err(e) => return Err(e.into()),
        }
    };
    listener.set_nonblocking(false)?;
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    Ok(stream)
}

fn stderr_of(child: &mut Child) -> String {
    let mut s = String::new();
    if let Some(e) = child.stderr.as_mut() {
        let _ = e.read_to_string(&mut s);
    }
    s.trim().to_string()
}

struct Children(Vec<Child>);

impl Drop for Children {
    fn drop(&mut self) {
        for c in &mut self.0 {
            if c.try_wait().ok().flatten().is_none() {
                let _ = c.kill();
                let _ = c.wait();
            }
        }
    }
}

/// Referee in this process, Alice and Bob as child processes of the same binary.
fn run_processes(
    sim: &SimulationConfig,
    bind: SocketAddr,
    fault_round: Option<u64>,
) -> Result<(Vec<RoundRecord>, Transcript), CliError> {
    let exe = std::env::current_exe()?;
    let listener = TcpListener::bind(bind)?;
    let referee = listener.local_addr()?;
    let mut alice_cmd = Command::new(&exe);
    alice_cmd
        .arg("wire-alice")
        .args(["--referee", &referee.to_string()])
        .args(["--bind", &SocketAddr::new(bind.ip(), 0).to_string()])
        .args(["--protocol", sim.protocol.name()])
        .args(["--p", &sim.state.p().to_string()])
        .args(["--seed", &sim.seed.to_string()]);
    if let Some(r) = fault_round {
        alice_cmd.args(["--fault-round", &r.to_string()]);
    }
    let mut children = Children(vec![alice_cmd
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?]);

    let mut line = String::new();
    BufReader::new(children.0[0].stdout.take().expect("piped")).read_line(&mut line)?;
    let alice_addr: SocketAddr = line
        .trim()
        .strip_prefix(LISTEN_PREFIX)
        .and_then(|a| a.parse().ok())
        .ok_or_else(|| {
            CliError::Failed(format!(
                "Alice did not report a listening address: {}",
                stderr_of(&mut children.0[0])
            ))
        })?;
    let alice_stream = accept_from(&listener, &mut children.0[0], "Alice")?;

    let log = std::env::temp_dir().join(format!(
        "entsim-bob-{}-{}.log",
        std::process::id(),
        sim.seed
    ));
    children.0.push(
        Command::new(&exe)
            .arg("wire-bob")
            .args(["--referee", &referee.to_string()])
            .args(["--alice", &alice_addr.to_string()])
            .args(["--protocol", sim.protocol.name()])
            .arg("--log")
            .arg(&log)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()?,
    );
    let bob_stream = accept_from(&listener, &mut children.0[1], "Bob")?;

    let (mut from_alice, mut to_alice) = split(alice_stream)?;
    let (mut from_bob, mut to_bob) = split(bob_stream)?;
    let referee_result = run_referee(
        sim,
        (&mut from_alice, &mut to_alice),
        (&mut from_bob, &mut to_bob),
    );
    drop((from_alice, to_alice, from_bob, to_bob));

    let mut failures = Vec::new();
    for (who, child) in ["Alice", "Bob"].iter().zip(children.0.iter_mut()) {
        let status = child.wait()?;
        if !status.success() {
            failures.push(format!("{who} aborted: {}", stderr_of(child)));
        }
    }
    if !failures.is_empty() {
        let _ = std::fs::remove_file(&log);
        return Err(CliError::Failed(failures.join("; ")));
    }
    let (records, mut transcript) = referee_result?;
    let bob_log = Transcript::read_log(&mut BufReader::new(std::fs::File::open(&log)?))?;
    let _ = std::fs::remove_file(&log);
    transcript.entries.extend(bob_log.entries);
    Ok((records, transcript))
}

pub fn run(args: WireRunArgs) -> Result<(), CliError> {
    let config = RunConfig::resolve(args.run.clone())?;
    let sim = config.simulation();
    let (records, transcript) = if args.threads {
        let run = run_networked(&NetworkConfig {
            simulation: sim.clone(),
            bind: args.bind,
            fault_round: args.fault_round,
        })
        .map_err(|e| CliError::Failed(e.to_string()))?;
        (run.records, run.transcript)
    } else {
        run_processes(&sim, args.bind, args.fault_round)?
    };

    if let Some(path) = &args.log {
        let mut f = BufWriter::new(
            std::fs::File::create(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        );
        transcript.write_log(&mut f)?;
        f.flush()?;
    }
    let summary = transcript.summary(config.protocol);
    if let Some(path) = &args.summary {
        emit(Some(path), &to_json(&summary))?;
    }
    let audit = audit_transcript(&transcript, config.protocol);
    let matches = if args.check {
        Some(simulate_records(&sim)? == records)
    } else {
        None
    };
    let table = table_from_records(&sim, &records);
    let verification = verify_table(config.protocol, config.state(), &table, config.tolerance)?;
    let result = WireResult {
        rounds: records.len(),
        processes: !args.threads,
        matches_in_process: matches,
        audit,
        transcript: summary,
        verification,
    };
    emit(
        config.out_json.as_deref(),
        &to_json(&Envelope::new(config.seed, &config, &result)),
    )?;
    eprintln!(
        "{} rounds, {} MESSAGE frames ({:.6} per round), audit {}",
        result.rounds,
        result.audit.message_frames,
        result.audit.message_fraction,
        if result.audit.pass { "pass" } else { "FAIL" }
    );
    if !result.audit.pass {
        return Err(CliError::Failed(format!(
            "{} audit findings",
            result.audit.findings.len()
        )));
    }
    if matches == Some(false) {
        return Err(CliError::Failed(
            "networked records differ from the in-process run".into(),
        ));
    }
    Ok(())
}

pub fn audit(a: AuditArgs) -> Result<(), CliError> {
    let protocol = parse_protocol(&a.protocol)?;
    let t = read_transcript(&a.log)?;
    let report = audit_transcript(&t, protocol);
    emit(a.out.as_deref(), &to_json(&report))?;
    if report.pass {
        Ok(())
    } else {
        let first = &report.findings[0];
        Err(CliError::Failed(format!(
            "{} findings, first in round {:?}: {}",
            report.findings.len(),
            first.round,
            first.detail
        )))
    }
}

fn read_transcript(path: &Path) -> Result<Transcript, CliError> {
    let f = std::fs::File::open(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(Transcript::read_log(&mut BufReader::new(f))?)
}
