//! Subcommand execution: run a pipeline and write its files.

use std::path::{Path, PathBuf};

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{self, write};
use crate::presets::preset;
use crate::run;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Sweep,
    Tune,
    Spectrum,
}

/// Loads a scenario file, or a shipped one given as `preset:<name>`.
pub fn load_config(spec: &str) -> Result<ScenarioConfig, CliError> {
    match spec.strip_prefix("preset:") {
        Some(name) => {
            let text = preset(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?;
            ScenarioConfig::from_toml(text)
        }
        None => ScenarioConfig::load(Path::new(spec)),
    }
}

/// Output directory: `--out`, else the config's `[output] dir`, else `out`.
pub fn output_dir(cfg: &ScenarioConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs `cmd` and writes its files into `dir`; returns the names written.
pub fn execute(cmd: Command, cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<&'static str>, CliError> {
    let mut written = Vec::new();
    let mut put = |name: &'static str, text: &str| -> Result<(), CliError> {
        write(dir, name, text)?;
        written.push(name);
        Ok(())
    };
    match cmd {
        Command::Simulate => {
            let sim = run::simulate(cfg)?;
            put("trajectory.csv", &output::trajectory_csv(&sim.trajectory))?;
            if let Some(a) = &sim.analysis {
                put("measures.csv", &output::measures_csv(&sim.trajectory, a))?;
                put("aggregate.csv", &output::aggregate_csv(&sim.trajectory, a))?;
            }
            put("summary.txt", &run::simulation_summary(cfg, &sim))?;
        }
        Command::Sweep => {
            let points = run::sweep(cfg)?;
            put("sweep_map.csv", &output::sweep_map_csv(&points))?;
            put("sweep_failures.csv", &output::sweep_failures_csv(&points))?;
        }
        Command::Tune => {
            let t = run::tune(cfg)?;
            put("scan.csv", &output::scan_csv(&t.scan))?;
            put("tune_summary.txt", &run::tuning_summary(cfg, &t))?;
        }
        Command::Spectrum => {
            let (built, d) = run::spectrum(cfg)?;
            put("modes.csv", &output::modes_csv(&d))?;
            put("transform.csv", &output::transform_csv(&d))?;
            put("summary.txt", &run::spectrum_summary(cfg.name.as_deref().unwrap_or("unnamed"), &built, &d))?;
        }
    }
    Ok(written)
}
