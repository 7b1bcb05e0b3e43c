use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use septrap_sim::{presets, run_batch, scale_parameters, ConfigError, Mode, ScenarioConfig};

#[derive(Parser)]
#[command(name = "septrap-sim", version, about = "Simulate ion qubits in separated, Coulomb-coupled traps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario configs (concurrently when several).
    Run {
        #[arg(long, num_args = 1.., required = true)]
        config: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Scale laser power by this factor (Rabi frequency by its root).
        #[arg(long, requires = "distance")]
        power_factor: Option<f64>,
        /// Replace the trap separation, m.
        #[arg(long, requires = "power_factor", allow_negative_numbers = true)]
        distance: Option<f64>,
    },
    /// Run a named preset.
    Preset {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Print the preset's config instead of running it.
        #[arg(long)]
        show: bool,
    },
    /// List the bundled presets.
    ListPresets,
}

fn config_failure(e: ConfigError) -> ExitCode {
    eprintln!("config error: {e}");
    ExitCode::from(2)
}

fn execute(configs: &[ScenarioConfig], out: &Path, mode: Option<Mode>) -> ExitCode {
    let mut code = 0;
    for result in run_batch(configs, out, mode) {
        match result {
            Ok(w) => println!("wrote {} and {}", w.csv.display(), w.report.display()),
            Err(f) => {
                eprintln!("{}", f.message);
                code = code.max(f.code);
            }
        }
    }
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, mode, power_factor, distance } => {
            let mut configs = Vec::new();
            for path in &config {
                let loaded = ScenarioConfig::load(path).and_then(|c| match (power_factor, distance) {
                    (Some(p), Some(d)) => scale_parameters(&c, p, d),
                    _ => Ok(c),
                });
                match loaded {
                    Ok(c) => configs.push(c),
                    Err(e) => {
                        eprintln!("config error in {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
            }
            execute(&configs, &out, mode)
        }
        Command::Preset { name, out, mode, show } => match presets::preset(&name) {
            Ok(_) if show => {
                print!("{}", presets::source(&name).unwrap_or_default());
                ExitCode::SUCCESS
            }
            Ok(c) => execute(&[c], &out, mode),
            Err(e) => config_failure(e),
        },
        Command::ListPresets => {
            for name in presets::names() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
