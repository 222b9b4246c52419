//! Statistical certification of simulated statistics against the Born oracle.

mod lemmas;
pub mod quadrature;

pub use lemmas::{
    lemma1_check, lemma2_suite, lemma2_suite_with, AreaCheck, Lemma1Report, Lemma2Config,
    Lemma2Report, PropertyResult, Witness,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bloch::{born_joint, BlochVector, ChshSettings, JointDistribution, Outcome, StateParam};
use crate::error::{Error, Result};
use crate::protocols::{simulate, Message, ProtocolId, RoundRecord, SimulationConfig, VECTOR_BITS};

/// Default acceptance tolerance on the per-setting TVD for `m` rounds.
pub fn default_tolerance(m: u64) -> f64 {
    (5.0 / (m as f64).sqrt()).max(0.005)
}

/// Communication counters for a batch of rounds; adding two tallies is exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CommTally {
    pub rounds: u64,
    pub silent: u64,
    pub symbols: u64,
    pub vectors: u64,
    /// Bits carried by one symbol, `log₂ d`.
    pub bits_per_symbol: f64,
}

impl CommTally {
    pub fn new(protocol: ProtocolId) -> Self {
        CommTally {
            bits_per_symbol: protocol.alphabet().map_or(0.0, |d| f64::from(d).log2()),
            ..Default::default()
        }
    }

    #[inline]
    pub fn push(&mut self, message: &Message) {
        self.rounds += 1;
        match message {
            Message::Silent => self.silent += 1,
            Message::Symbol(_) => self.symbols += 1,
            Message::Vector(_) => self.vectors += 1,
        }
    }

    pub fn merge(&mut self, other: &CommTally) {
        self.rounds += other.rounds;
        self.silent += other.silent;
        self.symbols += other.symbols;
        self.vectors += other.vectors;
        if self.bits_per_symbol == 0.0 {
            self.bits_per_symbol = other.bits_per_symbol;
        }
    }

    pub fn stats(&self) -> CommStats {
        let n = self.rounds as f64;
        let (b1, b2) = (self.bits_per_symbol, VECTOR_BITS);
        let sum = self.symbols as f64 * b1 + self.vectors as f64 * b2;
        let sum_sq = self.symbols as f64 * b1 * b1 + self.vectors as f64 * b2 * b2;
        let mean = if self.rounds > 0 { sum / n } else { 0.0 };
        let stderr = if self.rounds > 1 {
            let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        let worst = if self.vectors > 0 {
            b2
        } else if self.symbols > 0 {
            b1
        } else {
            0.0
        };
        CommStats {
            rounds: self.rounds,
            mean_bits: mean,
            stderr_bits: stderr,
            worst_bits: worst,
            silent_fraction: if self.rounds > 0 {
                self.silent as f64 / n
            } else {
                0.0
            },
            messages_sent: self.symbols + self.vectors,
        }
    }
}

/// Sample statistics of the communication cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommStats {
    pub rounds: u64,
    pub mean_bits: f64,
    /// Sample standard deviation of bits per round over `√rounds`.
    pub stderr_bits: f64,
    pub worst_bits: f64,
    pub silent_fraction: f64,
    pub messages_sent: u64,
}

/// Communication statistics of a non-empty list of records.
pub fn comm_stats(protocol: ProtocolId, records: &[RoundRecord]) -> Result<CommStats> {
    if records.is_empty() {
        return Err(Error::Invalid("no records".into()));
    }
    let mut t = CommTally::new(protocol);
    for r in records {
        t.push(&r.message);
    }
    Ok(t.stats())
}

/// Outcome counts for one `(x, y)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingRow {
    pub x: BlochVector,
    pub y: BlochVector,
    pub counts: [[u64; 2]; 2],
    pub comm: CommTally,
}

impl SettingRow {
    pub fn new(protocol: ProtocolId, x: BlochVector, y: BlochVector) -> Self {
        SettingRow {
            x,
            y,
            counts: [[0; 2]; 2],
            comm: CommTally::new(protocol),
        }
    }

    #[inline]
    pub fn record(&mut self, a: Outcome, b: Outcome, message: &Message) {
        self.counts[a.index()][b.index()] += 1;
        self.comm.push(message);
    }

    pub fn merge(&mut self, other: &SettingRow) {
        for i in 0..2 {
            for j in 0..2 {
                self.counts[i][j] += other.counts[i][j];
            }
        }
        self.comm.merge(&other.comm);
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Empirical `E = ⟨ab⟩`.
    pub fn correlation(&self) -> f64 {
        let c = &self.counts;
        (c[0][0] + c[1][1]) as f64 / self.total() as f64
            - (c[0][1] + c[1][0]) as f64 / self.total() as f64
    }

    pub fn alice_plus_fraction(&self) -> f64 {
        (self.counts[0][0] + self.counts[0][1]) as f64 / self.total() as f64
    }
}

/// Per-setting outcome counts for a whole run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTable {
    pub rows: Vec<SettingRow>,
}

impl EmpiricalTable {
    pub fn total_rounds(&self) -> u64 {
        self.rows.iter().map(SettingRow::total).sum()
    }

    pub fn comm(&self) -> CommTally {
        let mut t = CommTally::default();
        for r in &self.rows {
            t.merge(&r.comm);
        }
        t
    }
}

/// `½ Σ |n(a,b)/M − p(a,b)|`.
pub fn tvd(counts: &[[u64; 2]; 2], oracle: &JointDistribution) -> Result<f64> {
    let m: u64 = counts.iter().flatten().sum();
    if m == 0 {
        return Err(Error::Invalid("TVD of an empty table row".into()));
    }
    let m = m as f64;
    let mut d = 0.0;
    for (row, probs) in counts.iter().zip(&oracle.probs) {
        for (&n, &q) in row.iter().zip(probs) {
            d += (n as f64 / m - q).abs();
        }
    }
    Ok(0.5 * d)
}

/// Pearson goodness-of-fit statistic with its upper-tail p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// χ² of observed counts against expected probabilities (cells with zero
/// expectation must be empty; they contribute no degree of freedom).
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() {
        return Err(Error::Invalid("chi-square: length mismatch".into()));
    }
    let m: u64 = observed.iter().sum();
    if m == 0 {
        return Err(Error::Invalid("chi-square of an empty sample".into()));
    }
    let m = m as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(expected) {
        let e = m * p;
        if e <= 1e-300 {
            if o > 0 {
                stat = f64::INFINITY;
            }
            continue;
        }
        cells += 1;
        stat += (o as f64 - e).powi(2) / e;
    }
    let dof = cells.saturating_sub(1);
    let p_value = if dof == 0 {
        if stat == 0.0 {
            1.0
        } else {
            0.0
        }
    } else if stat.is_infinite() {
        0.0
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| Error::Invalid(e.to_string()))?
            .sf(stat)
    };
    Ok(ChiSquare {
        statistic: stat,
        dof,
        p_value,
    })
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let f = cdf(s);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// `n` points spread evenly over the sphere (golden-angle spiral), rotated by `twist`.
pub fn fibonacci_sphere(n: usize, twist: f64) -> Vec<BlochVector> {
    let golden = PI_F * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64 + twist;
            let v = BlochVector::new(r * phi.cos(), r * phi.sin(), z);
            // normalize away round-off
            v * (1.0 / v.norm())
        })
        .collect()
}

const PI_F: f64 = std::f64::consts::PI;

/// Deterministic grid of `n` setting pairs: Alice walks a Fibonacci sphere,
/// Bob a twisted and mirrored one, paired with stride 7.
pub fn setting_grid(n: usize) -> Vec<(BlochVector, BlochVector)> {
    let xs = fibonacci_sphere(n, 0.0);
    let ys: Vec<BlochVector> = fibonacci_sphere(n, 1.0)
        .into_iter()
        .map(|v| BlochVector::new(v.y, v.z, v.x))
        .collect();
    (0..n).map(|i| (xs[i], ys[(7 * i + 3) % n])).collect()
}

pub fn default_setting_grid() -> Vec<(BlochVector, BlochVector)> {
    setting_grid(20)
}

/// Verification of one setting pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingReport {
    pub x: BlochVector,
    pub y: BlochVector,
    pub rounds: u64,
    pub counts: [[u64; 2]; 2],
    pub oracle: [f64; 4],
    pub tvd: f64,
    pub chi2: f64,
    pub chi2_p_value: f64,
    pub bits_mean: f64,
    pub pass: bool,
}

/// CHSH estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub s: f64,
    pub stderr: f64,
    pub correlations: [f64; 4],
    pub oracle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub protocol: ProtocolId,
    pub p: f64,
    pub tolerance: f64,
    pub settings: Vec<SettingReport>,
    pub max_tvd: f64,
    pub all_pass: bool,
    pub comm: CommStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chsh: Option<ChshEstimate>,
}

impl VerificationReport {
    /// Per-setting rows: `p,protocol,x_xyz,y_xyz,M,tvd,chi2,bits_mean,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,protocol,x_xyz,y_xyz,M,tvd,chi2,bits_mean,pass\n");
        let xyz = |v: BlochVector| format!("{:.12} {:.12} {:.12}", v.x, v.y, v.z);
        for s in &self.settings {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.9},{:.6},{:.9},{}",
                self.p,
                self.protocol,
                xyz(s.x),
                xyz(s.y),
                s.rounds,
                s.tvd,
                s.chi2,
                s.bits_mean,
                s.pass
            );
        }
        out
    }
}

/// Compares every row of `table` with the Born oracle at `tolerance`.
pub fn verify_table(
    protocol: ProtocolId,
    state: StateParam,
    table: &EmpiricalTable,
    tolerance: f64,
) -> Result<VerificationReport> {
    let mut settings = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let oracle = born_joint(state, row.x, row.y)?;
        let d = tvd(&row.counts, &oracle)?;
        let flat = [
            row.counts[0][0],
            row.counts[0][1],
            row.counts[1][0],
            row.counts[1][1],
        ];
        let chi = chi_square(&flat, &oracle.flat())?;
        settings.push(SettingReport {
            x: row.x,
            y: row.y,
            rounds: row.total(),
            counts: row.counts,
            oracle: oracle.flat(),
            tvd: d,
            chi2: chi.statistic,
            chi2_p_value: chi.p_value,
            bits_mean: row.comm.stats().mean_bits,
            pass: d <= tolerance,
        });
    }
    let max_tvd = settings.iter().map(|s| s.tvd).fold(0.0, f64::max);
    Ok(VerificationReport {
        protocol,
        p: state.p(),
        tolerance,
        all_pass: settings.iter().all(|s| s.pass),
        max_tvd,
        settings,
        comm: table.comm().stats(),
        chsh: None,
    })
}

/// Runs `protocol` on the four CHSH pairs with `m` rounds each.
pub fn chsh_estimate(
    protocol: ProtocolId,
    state: StateParam,
    settings: &ChshSettings,
    m: u64,
    seed: u64,
) -> Result<ChshEstimate> {
    let out = simulate(&SimulationConfig {
        protocol,
        state,
        settings: settings.pairs().to_vec(),
        rounds_per_setting: m,
        seed,
        workers: None,
    })?;
    chsh_from_table(state, settings, &out.table)
}

/// CHSH value of a four-row table in [`ChshSettings::pairs`] order.
pub fn chsh_from_table(
    state: StateParam,
    settings: &ChshSettings,
    table: &EmpiricalTable,
) -> Result<ChshEstimate> {
    if table.rows.len() != 4 || table.rows.iter().any(|r| r.total() == 0) {
        return Err(Error::Invalid(
            "CHSH needs four non-empty setting rows".into(),
        ));
    }
    let mut correlations = [0.0; 4];
    let mut var = 0.0;
    for (i, row) in table.rows.iter().enumerate() {
        let e = row.correlation();
        correlations[i] = e;
        // ab = ±1, so Var(ab) = 1 − E².
        var += (1.0 - e * e).max(0.0) / row.total() as f64;
    }
    Ok(ChshEstimate {
        s: correlations[0] + correlations[1] + correlations[2] - correlations[3],
        stderr: var.sqrt(),
        correlations,
        oracle: crate::bloch::chsh_value(state, settings)?,
    })
}

/// Coarse search over x–z-plane CHSH settings maximizing the oracle value.
pub fn best_chsh_settings(state: StateParam, steps: usize) -> Result<ChshSettings> {
    let angle = |k: usize| 2.0 * PI_F * k as f64 / steps as f64;
    let mut best = (f64::NEG_INFINITY, ChshSettings::tsirelson());
    // Alice's first setting fixed at ẑ; the others range over [0, 2π).
    for i in 0..steps {
        for j in 0..steps {
            for k in 0..steps {
                let s = ChshSettings::in_xz_plane(0.0, angle(i), angle(j), angle(k));
                let v = crate::bloch::chsh_value(state, &s)?;
                if v > best.0 {
                    best = (v, s);
                }
            }
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tvd_trivial_cases() {
        let uniform = JointDistribution {
            probs: [[0.25; 2]; 2],
        };
        assert_abs_diff_eq!(tvd(&[[250, 250], [250, 250]], &uniform).unwrap(), 0.0);
        assert_abs_diff_eq!(
            tvd(&[[1000, 0], [0, 0]], &uniform).unwrap(),
            0.75,
            epsilon = 1e-15
        );
        assert!(tvd(&[[0, 0], [0, 0]], &uniform).is_err());
    }

    #[test]
    fn chi_square_handles_zero_cells() {
        let c = chi_square(&[50, 50, 0, 0], &[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(c.dof, 1);
        assert_eq!(c.statistic, 0.0);
        assert_abs_diff_eq!(c.p_value, 1.0);
        let c = chi_square(&[50, 49, 1, 0], &[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(c.p_value, 0.0);
    }

    #[test]
    fn comm_tally_mean_and_stderr() {
        let mut t = CommTally::new(ProtocolId::ImprovedOneBit);
        for i in 0..10 {
            t.push(if i < 3 {
                &Message::Symbol(0)
            } else {
                &Message::Silent
            });
        }
        let s = t.stats();
        assert_abs_diff_eq!(s.mean_bits, 0.3, epsilon = 1e-15);
        assert_eq!(s.worst_bits, 1.0);
        assert_abs_diff_eq!(s.silent_fraction, 0.7);
        // sample sd of seven 0s and three 1s
        let sd = ((3.0 * 0.49 + 7.0 * 0.09) / 9.0f64).sqrt();
        assert_abs_diff_eq!(s.stderr_bits, sd / 10f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn grid_is_deterministic_and_unit() {
        let g = default_setting_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g, default_setting_grid());
        for (x, y) in g {
            assert!(x.validated().is_ok() && y.validated().is_ok());
        }
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let mut s: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_distance(&mut s, |t| t) <= 0.0005 + 1e-12);
    }

    #[test]
    fn tolerance_floor() {
        assert_eq!(default_tolerance(1_000_000), 0.005);
        assert_abs_diff_eq!(default_tolerance(10_000), 0.05);
    }
}
