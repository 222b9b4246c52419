use entsim::protocols::simulate;
use entsim::verify::{chsh_from_table, verify_table, EmpiricalTable, VerificationReport};
use entsim::wire::{run_networked, NetworkConfig};

use crate::config::{Mode, RunArgs, RunConfig};
use crate::report::{emit, to_json, Envelope};
use crate::CliError;

pub fn verify_run(config: &RunConfig) -> Result<VerificationReport, CliError> {
    let sim = config.simulation();
    let table: EmpiricalTable = match config.mode {
        Mode::InProcess => simulate(&sim)?.table,
        Mode::Networked => run_networked(&NetworkConfig::loopback(sim))?.table,
    };
    let mut report = verify_table(config.protocol, config.state(), &table, config.tolerance)?;
    if let Some(s) = &config.chsh {
        report.chsh = Some(chsh_from_table(config.state(), s, &table)?);
    }
    Ok(report)
}

pub fn run(args: RunArgs) -> Result<(), CliError> {
    let config = RunConfig::resolve(args)?;
    let report = verify_run(&config)?;
    if let Some(path) = &config.out_csv {
        emit(Some(path), &report.to_csv())?;
    }
    emit(
        config.out_json.as_deref(),
        &to_json(&Envelope::new(config.seed, &config, &report)),
    )?;

    eprintln!(
        "{} p={} settings={} M={} max_tvd={:.6} tolerance={:.6} mean_bits={:.6}",
        config.protocol,
        config.p,
        report.settings.len(),
        config.rounds,
        report.max_tvd,
        report.tolerance,
        report.comm.mean_bits
    );
    if let Some(c) = &report.chsh {
        eprintln!(
            "CHSH S = {:.6} +/- {:.6} (oracle {:.6})",
            c.s, c.stderr, c.oracle
        );
    }
    if report.all_pass {
        Ok(())
    } else {
        let failed = report.settings.iter().filter(|s| !s.pass).count();
        Err(CliError::Failed(format!(
            "{failed} of {} settings exceed TVD tolerance {}",
            report.settings.len(),
            report.tolerance
        )))
    }
}
