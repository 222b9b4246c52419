use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{play_round, Alice, Bob, ProtocolId, RoundRecord, SharedSource};
use crate::bloch::{BlochVector, StateParam};
use crate::error::{Error, Result};
use crate::verify::{CommStats, EmpiricalTable, SettingRow};

/// Rounds handled by one parallel task.
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub protocol: ProtocolId,
    pub state: StateParam,
    pub settings: Vec<(BlochVector, BlochVector)>,
    pub rounds_per_setting: u64,
    pub seed: u64,
    /// Thread count; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SimulationConfig {
    /// Global index of round `k` of setting `i`; fixes the random streams it uses.
    pub fn round_index(&self, setting: usize, k: u64) -> u64 {
        setting as u64 * self.rounds_per_setting + k
    }

    fn parties(&self) -> Result<(SharedSource, Vec<(Alice, Bob)>)> {
        let source = SharedSource::new(self.protocol, self.state)?;
        let parties = self
            .settings
            .iter()
            .map(|&(x, y)| {
                Ok((
                    Alice::new(self.protocol, self.state, x.validated()?)?,
                    Bob::new(self.protocol, y.validated()?)?,
                ))
            })
            .collect::<Result<_>>()?;
        Ok((source, parties))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub table: EmpiricalTable,
    pub comm: CommStats,
}

/// Runs every setting for `rounds_per_setting` rounds in parallel.
///
/// The result depends only on the config, never on the thread count.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationOutput> {
    let run = || simulate_inner(config);
    match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn simulate_inner(config: &SimulationConfig) -> Result<SimulationOutput> {
    let (source, parties) = config.parties()?;
    let m = config.rounds_per_setting;
    let jobs: Vec<(usize, u64)> = (0..parties.len())
        .flat_map(|i| (0..m.div_ceil(CHUNK)).map(move |c| (i, c * CHUNK)))
        .collect();
    let partial: Vec<(usize, SettingRow)> = jobs
        .into_par_iter()
        .map(|(i, start)| {
            let (alice, bob) = &parties[i];
            let mut row = SettingRow::new(config.protocol, alice.setting(), bob.setting());
            for k in start..(start + CHUNK).min(m) {
                let r = play_round(&source, alice, bob, config.seed, config.round_index(i, k))?;
                row.record(r.a, r.b, &r.message);
            }
            Ok((i, row))
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<SettingRow> = parties
        .iter()
        .map(|(a, b)| SettingRow::new(config.protocol, a.setting(), b.setting()))
        .collect();
    for (i, row) in &partial {
        rows[*i].merge(row);
    }
    let table = EmpiricalTable { rows };
    let comm = table.comm().stats();
    Ok(SimulationOutput { table, comm })
}

/// Serial run returning every round in global round order.
pub fn simulate_records(config: &SimulationConfig) -> Result<Vec<RoundRecord>> {
    let (source, parties) = config.parties()?;
    let mut out = Vec::with_capacity(parties.len() * config.rounds_per_setting as usize);
    for (i, (alice, bob)) in parties.iter().enumerate() {
        for k in 0..config.rounds_per_setting {
            out.push(play_round(
                &source,
                alice,
                bob,
                config.seed,
                config.round_index(i, k),
            )?);
        }
    }
    Ok(out)
}
