use std::path::PathBuf;

use clap::Args;
use entsim::sampling::{sample_uniform_sphere, RngStream};
use entsim::verify::{lemma1_check, lemma2_suite_with, Lemma1Report, Lemma2Config, Lemma2Report};
use entsim::BlochVector;
use serde::{Deserialize, Serialize};

use crate::config::{default_seed, load_file, parse_state};
use crate::report::{emit, to_json, Envelope};
use crate::CliError;

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropsArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Comma-separated p values [default: 0.5,0.7,0.835,0.933,0.99,1]
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Random (x, λ) points per p [default: 100000]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Monte Carlo points per area estimate [default: 4000000]
    #[arg(long)]
    pub area_samples: Option<usize>,
    /// Random (v, y) pairs for the hemisphere check [default: 20]
    #[arg(long)]
    pub lemma1_pairs: Option<usize>,
    /// Rounds per (v, y) pair [default: 100000]
    #[arg(long)]
    pub lemma1_rounds: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report destination [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Evaluate a deliberately broken density, to see the suite fail
    #[arg(long, hide = true)]
    #[serde(skip)]
    pub corrupt_rho_tilde: bool,
}

#[derive(Debug, Serialize)]
struct PropsConfig {
    lemma2: Lemma2Config,
    lemma1_pairs: usize,
    lemma1_rounds: u64,
    corrupted: bool,
}

#[derive(Debug, Serialize)]
struct PropsResult {
    lemma1: Vec<Lemma1Report>,
    lemma2: Lemma2Report,
    pass: bool,
}

/// The aligned and anti-aligned pairs, then random ones.
fn lemma1_pairs(n: usize, seed: u64) -> Vec<(BlochVector, BlochVector)> {
    let mut rng = RngStream::new(seed, u64::MAX);
    let mut out = vec![
        (BlochVector::Z, BlochVector::Z),
        (BlochVector::Z, -BlochVector::Z),
    ];
    while out.len() < n.max(2) {
        out.push((
            sample_uniform_sphere(&mut rng),
            sample_uniform_sphere(&mut rng),
        ));
    }
    out.truncate(n);
    out
}

pub fn run(flags: PropsArgs) -> Result<(), CliError> {
    let file: PropsArgs = load_file(flags.config.as_deref())?;
    let p_values = flags
        .p
        .or(file.p)
        .unwrap_or_else(|| vec![0.5, 0.7, 0.835, 0.933, 0.99, 1.0]);
    for &p in &p_values {
        parse_state(p)?;
    }
    let seed = match flags.seed.or(file.seed) {
        Some(s) => s,
        None => default_seed()?,
    };
    let defaults = Lemma2Config::default();
    let config = PropsConfig {
        lemma2: Lemma2Config {
            p_values,
            trials: flags.trials.or(file.trials).unwrap_or(defaults.trials),
            area_samples: flags
                .area_samples
                .or(file.area_samples)
                .unwrap_or(defaults.area_samples),
            seed,
            ..defaults
        },
        lemma1_pairs: flags.lemma1_pairs.or(file.lemma1_pairs).unwrap_or(20),
        lemma1_rounds: flags
            .lemma1_rounds
            .or(file.lemma1_rounds)
            .unwrap_or(100_000),
        corrupted: flags.corrupt_rho_tilde,
    };
    if config.lemma2.trials == 0 || config.lemma1_rounds == 0 {
        return Err(CliError::Usage("trials and rounds must be positive".into()));
    }

    let lemma1 = lemma1_pairs(config.lemma1_pairs, seed)
        .into_iter()
        .enumerate()
        .map(|(i, (v, y))| lemma1_check(v, y, config.lemma1_rounds, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let lemma2 = if config.corrupted {
        lemma2_suite_with(&config.lemma2, |c, l| c.rho_tilde_raw(l) - 1e-3)?
    } else {
        lemma2_suite_with(&config.lemma2, |c, l| c.rho_tilde_raw(l))?
    };

    let mut failures = lemma2.failures();
    for r in lemma1.iter().filter(|r| !r.pass) {
        failures.push(format!(
            "hemisphere encoding at v={:?}, y={:?}: p_hat {} vs {}",
            r.v, r.y, r.p_hat, r.expected
        ));
    }
    let result = PropsResult {
        pass: failures.is_empty(),
        lemma1,
        lemma2,
    };
    emit(
        flags.out.or(file.out).as_deref(),
        &to_json(&Envelope::new(seed, &config, &result)),
    )?;
    for a in &result.lemma2.areas {
        eprintln!(
            "p={}: area {:.6} (monte carlo {:.6}, quadrature {:.9}), max rho_tilde {:.6} <= {:.6}",
            a.p, a.expected, a.monte_carlo, a.quadrature, a.max_observed, a.bound
        );
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(failures.join("\n")))
    }
}
