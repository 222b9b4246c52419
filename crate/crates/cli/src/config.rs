use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use entsim::bloch::ChshSettings;
use entsim::protocols::SimulationConfig;
use entsim::verify::{best_chsh_settings, setting_grid};
use entsim::{BlochVector, ProtocolId, StateParam};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SEED_ENV: &str = "ENTSIM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    InProcess,
    Networked,
}

/// Run options. Every flag may also come from a JSON file under the same
/// name with `-` replaced by `_`; flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// JSON file with default values for any of these flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// one-bit | trit | degorre | teleport | improved | local-content (or 1-6)
    #[arg(long)]
    pub protocol: Option<String>,

    /// Schmidt parameter p in [1/2, 1]
    #[arg(long)]
    pub p: Option<f64>,

    /// Rounds per setting pair
    #[arg(long)]
    pub rounds: Option<u64>,

    /// Master seed [default: $ENTSIM_SEED, else 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Size of the deterministic setting grid
    #[arg(long)]
    pub grid: Option<usize>,

    /// Explicit setting pair "x1,x2,x3:y1,y2,y3"; repeatable, replaces the grid
    #[arg(long = "setting")]
    pub settings: Option<Vec<String>>,

    /// Use CHSH settings (Tsirelson at p = 1/2, otherwise a coarse search) and report S
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub chsh: Option<bool>,

    /// Pass threshold on per-setting TVD [default: max(0.005, 5/sqrt(M))]
    #[arg(long)]
    pub tolerance: Option<f64>,

    /// Worker threads [default: available cores]
    #[arg(long)]
    pub workers: Option<usize>,

    #[arg(long, value_enum)]
    pub mode: Option<Mode>,

    /// Write the verification report here instead of stdout
    #[arg(long)]
    pub out_json: Option<PathBuf>,

    /// Write per-setting rows as CSV here
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

/// Reads a flat JSON object of defaults.
pub fn load_file<T: for<'de> Deserialize<'de> + Default>(
    path: Option<&Path>,
) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn default_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={s} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

pub fn parse_protocol(s: &str) -> Result<ProtocolId, CliError> {
    s.parse()
        .map_err(|e: entsim::Error| CliError::Usage(e.to_string()))
}

pub fn parse_state(p: f64) -> Result<StateParam, CliError> {
    StateParam::new(p).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_vector(s: &str) -> Result<BlochVector, CliError> {
    let c: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("'{s}' is not three comma-separated numbers")))?;
    match c[..] {
        [x, y, z] => BlochVector::unit(x, y, z).map_err(|e| CliError::Usage(e.to_string())),
        _ => Err(CliError::Usage(format!(
            "'{s}' needs exactly three components"
        ))),
    }
}

pub fn parse_setting(s: &str) -> Result<(BlochVector, BlochVector), CliError> {
    let (x, y) = s.split_once(':').ok_or_else(|| {
        CliError::Usage(format!("setting '{s}' must look like x1,x2,x3:y1,y2,y3"))
    })?;
    Ok((parse_vector(x)?, parse_vector(y)?))
}

/// Fully resolved simulation request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub protocol: ProtocolId,
    pub p: f64,
    pub rounds: u64,
    pub seed: u64,
    pub settings: Vec<(BlochVector, BlochVector)>,
    pub chsh: Option<ChshSettings>,
    pub tolerance: f64,
    pub mode: Mode,
    #[serde(skip)]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub out_json: Option<PathBuf>,
    #[serde(skip)]
    pub out_csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(flags: RunArgs) -> Result<Self, CliError> {
        let file: RunArgs = load_file(flags.config.as_deref())?;
        let protocol = parse_protocol(
            &flags
                .protocol
                .or(file.protocol)
                .ok_or_else(|| CliError::Usage("--protocol is required".into()))?,
        )?;
        let p = flags
            .p
            .or(file.p)
            .ok_or_else(|| CliError::Usage("--p is required".into()))?;
        let state = parse_state(p)?;
        protocol
            .check_applicable(state)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let rounds = flags.rounds.or(file.rounds).unwrap_or(100_000);
        if rounds == 0 {
            return Err(CliError::Usage("--rounds must be positive".into()));
        }
        let seed = match flags.seed.or(file.seed) {
            Some(s) => s,
            None => default_seed()?,
        };
        let chsh_flag = flags.chsh.or(file.chsh).unwrap_or(false);
        let explicit = flags.settings.or(file.settings);
        let (settings, chsh) = if chsh_flag {
            let s = if state.p() == 0.5 {
                ChshSettings::tsirelson()
            } else {
                best_chsh_settings(state, 16).map_err(|e| CliError::Usage(e.to_string()))?
            };
            (s.pairs().to_vec(), Some(s))
        } else if let Some(list) = explicit {
            (
                list.iter()
                    .map(|s| parse_setting(s))
                    .collect::<Result<_, _>>()?,
                None,
            )
        } else {
            let n = flags.grid.or(file.grid).unwrap_or(20);
            if n == 0 {
                return Err(CliError::Usage("--grid must be positive".into()));
            }
            (setting_grid(n), None)
        };
        Ok(RunConfig {
            protocol,
            p,
            rounds,
            seed,
            settings,
            chsh,
            tolerance: flags
                .tolerance
                .or(file.tolerance)
                .unwrap_or_else(|| entsim::verify::default_tolerance(rounds)),
            mode: flags.mode.or(file.mode).unwrap_or(Mode::InProcess),
            workers: flags.workers.or(file.workers),
            out_json: flags.out_json.or(file.out_json),
            out_csv: flags.out_csv.or(file.out_csv),
        })
    }

    pub fn state(&self) -> StateParam {
        StateParam::new(self.p).expect("validated in resolve")
    }

    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            protocol: self.protocol,
            state: self.state(),
            settings: self.settings.clone(),
            rounds_per_setting: self.rounds,
            seed: self.seed,
            workers: self.workers,
        }
    }
}

/// Hex SHA-256 of the canonical JSON of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    let digest = Sha256::digest(&json);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}
