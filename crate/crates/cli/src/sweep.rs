use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use entsim::protocols::{simulate, SimulationConfig};
use entsim::sampling::n_of_p;
use entsim::verify::setting_grid;
use entsim::{ProtocolId, StateParam};
use serde::{Deserialize, Serialize};

use crate::config::{default_seed, load_file, parse_state};
use crate::report::emit;
use crate::CliError;

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// [default: 0.5]
    #[arg(long)]
    pub p_min: Option<f64>,
    /// [default: 1.0]
    #[arg(long)]
    pub p_max: Option<f64>,
    /// [default: 0.01]
    #[arg(long)]
    pub step: Option<f64>,
    /// Rounds per point, spread over the setting grid [default: 1000000]
    #[arg(long)]
    pub rounds: Option<u64>,
    /// [default: 20]
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// CSV destination [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SweepConfig {
    p_values: Vec<f64>,
    rounds: u64,
    grid: usize,
    seed: u64,
}

/// The cheapest protocol for `state`: one bit on average where `N(p) ≤ 1`, else a trit.
pub fn select_protocol(state: StateParam) -> ProtocolId {
    if ProtocolId::ImprovedOneBit.is_applicable(state) {
        ProtocolId::ImprovedOneBit
    } else {
        ProtocolId::Trit
    }
}

/// `p_min, p_min + step, …` up to `p_max`, snapped to 1e-9 to avoid drift.
pub fn p_values(p_min: f64, p_max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    parse_state(p_min)?;
    parse_state(p_max)?;
    if step.is_nan() || step <= 0.0 || p_max < p_min {
        return Err(CliError::Usage("need step > 0 and p_min <= p_max".into()));
    }
    let n = ((p_max - p_min) / step + 1e-9).floor() as u64;
    Ok((0..=n)
        .map(|i| ((p_min + i as f64 * step) * 1e9).round() / 1e9)
        .map(|p| p.min(p_max))
        .collect())
}

pub fn run(flags: SweepArgs) -> Result<(), CliError> {
    let file: SweepArgs = load_file(flags.config.as_deref())?;
    let ps = p_values(
        flags.p_min.or(file.p_min).unwrap_or(0.5),
        flags.p_max.or(file.p_max).unwrap_or(1.0),
        flags.step.or(file.step).unwrap_or(0.01),
    )?;
    let grid = flags.grid.or(file.grid).unwrap_or(20);
    let rounds = flags.rounds.or(file.rounds).unwrap_or(1_000_000);
    if grid == 0 || rounds < grid as u64 {
        return Err(CliError::Usage("need grid >= 1 and rounds >= grid".into()));
    }
    let seed = match flags.seed.or(file.seed) {
        Some(s) => s,
        None => default_seed()?,
    };
    let config = SweepConfig {
        p_values: ps,
        rounds,
        grid,
        seed,
    };
    eprintln!("sweep config hash {}", crate::config::config_hash(&config));

    let mut csv = String::from("p,protocol,d,mean_bits,stderr,N_of_p\n");
    for &p in &config.p_values {
        let state = parse_state(p)?;
        let protocol = select_protocol(state);
        let out = simulate(&SimulationConfig {
            protocol,
            state,
            settings: setting_grid(grid),
            rounds_per_setting: rounds / grid as u64,
            seed,
            workers: flags.workers.or(file.workers),
        })?;
        // N has a removable singularity at p = 1/2 where its limit is 2.
        let n = n_of_p(state).unwrap_or(2.0);
        let _ = writeln!(
            csv,
            "{p},{protocol},{},{:.6},{:.6},{n:.6}",
            protocol.alphabet().unwrap_or(0),
            out.comm.mean_bits,
            out.comm.stderr_bits
        );
    }
    emit(flags.out.or(file.out).as_deref(), &csv)
}
