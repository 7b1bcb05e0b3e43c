//! Library side of the `septrap-sim` command-line tool: config schema,
//! presets and scenario runners.

pub mod config;
pub mod presets;
pub mod scenario;

use std::path::{Path, PathBuf};

pub use config::{scale_parameters, ConfigError, Mode, Scenario, ScenarioConfig};
pub use scenario::{run_scenario, Artifacts, RunError};

/// Paths of the files written for one config.
#[derive(Clone, Debug)]
pub struct Written {
    pub csv: PathBuf,
    pub report: PathBuf,
}

/// Writes `<name>.csv` and `<name>_report.txt` into `dir`.
pub fn write_artifacts(dir: &Path, name: &str, artifacts: &Artifacts) -> std::io::Result<Written> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{name}.csv"));
    let report = dir.join(format!("{name}_report.txt"));
    std::fs::write(&csv, &artifacts.csv)?;
    std::fs::write(&report, &artifacts.report)?;
    Ok(Written { csv, report })
}

/// A failed config: process exit code and one-line diagnostic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

/// Exit code for output files that could not be written.
pub const IO_EXIT: i32 = 1;

/// Runs every config on its own thread and writes its outputs. Results are
/// returned in input order.
pub fn run_batch(configs: &[ScenarioConfig], out: &Path, mode: Option<Mode>) -> Vec<Result<Written, Failure>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|config| {
                scope.spawn(move || match run_scenario(config, mode) {
                    Ok(a) => write_artifacts(out, &config.name, &a)
                        .map_err(|e| Failure { code: IO_EXIT, message: format!("{}: {e}", config.name) }),
                    Err(e) => {
                        if let RunError::Physics { partial: Some(a), .. } = &e {
                            let _ = write_artifacts(out, &config.name, a);
                        }
                        Err(Failure { code: e.exit_code(), message: format!("{}: {e}", config.name) })
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    })
}
