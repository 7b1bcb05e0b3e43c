//! Scenario execution and artifact rendering.
//!
//! CSV columns per scenario:
//!
//! - `pulse`: `time_s, p_excited, mean_n`
//! - `exchange`: `time_s, mean_n1, mean_n2`
//! - `sweep`: `time_s, nu1_over_2pi_hz, gamma_20, gamma_31`
//! - `cnot`: `output, input, re, im, abs` (truth table, basis order gg, ge, eg, ee)
//! - `chain`: `time_s, mean_n1, ..., mean_nN` after each hop
//!
//! Floats are written in scientific notation with 12 significant digits.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::{self, Write as _};

use septrap_core::constants::cyclic;
use septrap_core::coulomb::{
    coupling_g, exchange_evolve, frequency_shift, full_coupling_propagate, renormalized_frequency, FullCouplingOptions,
};
use septrap_core::fockspace::{FockBasis, HybridState, Level, PropagateOptions};
use septrap_core::laser_ion::{
    full_interaction_propagate, rabi_mk, sideband_evolve, solve_cnot_duration, FullModelOptions, LaserPulse,
};
use septrap_core::protocol::{
    build_schedule, chain_cnot_duration, chain_cnot_steps, chain_state, chain_transfer, exchange_hold, run_protocol,
    sideband_pi_half, ProtocolInput, ProtocolReport, ScheduleOptions, TrapChain,
};
use septrap_core::sweep::{gamma_nm, ramp_exchange_angle, sweep_propagate, DetuningProfile};
use septrap_core::Error;

use crate::config::{ConfigError, Mode, Scenario, ScenarioConfig};

/// Longest carrier pulse the duration solver may return, s.
const T3_MAX: f64 = 100e-6;

/// Output of one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifacts {
    pub csv: String,
    pub report: String,
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Physics { step: &'static str, error: Error, partial: Option<Box<Artifacts>> },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Physics { .. } => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Physics { step, error, .. } => write!(f, "physics error in {step}: {error}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

fn physics(step: &'static str) -> impl Fn(Error) -> RunError {
    move |error| match error {
        Error::InvalidParameter { name, reason } => RunError::Config(ConfigError { field: name.to_string(), reason }),
        error => RunError::Physics { step, error, partial: None },
    }
}

fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

fn mean_n(state: &HybridState, mode: usize) -> Result<f64, Error> {
    let pops = state.populations(state.mode_factor(mode)?)?;
    Ok(pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum())
}

fn sample_times(duration: f64, samples: usize) -> impl Iterator<Item = f64> {
    (0..samples).map(move |i| duration * i as f64 / (samples - 1) as f64)
}

struct Report(String);

impl Report {
    fn new(config: &ScenarioConfig) -> Self {
        let mut r = Report(String::new());
        r.line("name", &config.name);
        r.line("scenario", format!("{:?}", config.scenario).to_lowercase());
        r.line(
            "mode",
            match config.mode {
                Mode::ClosedForm => "closed-form",
                Mode::FullNumeric => "full-numeric",
            },
        );
        r
    }

    fn line(&mut self, key: &str, value: impl fmt::Display) {
        writeln!(self.0, "{key} = {value}").unwrap();
    }

    fn num(&mut self, key: &str, value: f64) {
        self.line(key, sci(value));
    }

    fn us(&mut self, key: &str, seconds: f64) {
        self.line(key, format!("{:.4} us", seconds * 1e6));
    }

    fn hz(&mut self, key: &str, omega: f64) {
        self.line(key, format!("2pi x {:.2} Hz", cyclic(omega)));
    }
}

/// Runs `config` and renders its CSV and report. `mode` overrides the
/// config's own mode.
pub fn run_scenario(config: &ScenarioConfig, mode: Option<Mode>) -> Result<Artifacts, RunError> {
    let mut config = config.clone();
    if let Some(m) = mode {
        config.mode = m;
    }
    config.validate()?;
    match config.scenario {
        Scenario::Pulse => run_pulse(&config),
        Scenario::Exchange => run_exchange(&config),
        Scenario::Sweep => run_sweep(&config),
        Scenario::Cnot => run_cnot(&config),
        Scenario::Chain => run_chain(&config),
    }
}

fn run_pulse(config: &ScenarioConfig) -> Result<Artifacts, RunError> {
    let p = config.resolve()?;
    let basis = FockBasis::new(config.n_max).map_err(physics("basis"))?;
    let start = HybridState::ion(p.initial_level, config.initial_n, basis).map_err(physics("initial state"))?;
    let k = config.sideband;
    let mut report = Report::new(config);

    let duration = match (config.duration, k) {
        (Some(t), _) => t,
        (None, 0) => {
            let cnot = solve_cnot_duration(p.laser.rabi, p.laser.eta, config.cnot_tol, T3_MAX)
                .map_err(physics("carrier duration"))?;
            report.line("carrier_turns", cnot.carrier_turns);
            report.line("flip_turns", cnot.flip_turns);
            report.num("carrier_error", cnot.error);
            cnot.duration
        }
        (None, _) => {
            let m = match p.initial_level {
                Level::Excited => config.initial_n,
                Level::Ground => config.initial_n.saturating_sub(k),
            };
            FRAC_PI_2 / rabi_mk(p.laser.rabi, p.laser.eta, m, k)
        }
    };
    let pulse = LaserPulse::new(p.laser.rabi, p.laser.eta, k, p.phases.first, duration).map_err(physics("pulse"))?;
    report.line("sideband", k);
    report.hz("rabi", p.laser.rabi);
    report.num("eta", p.laser.eta);
    for m in 0..2 {
        report.hz(&format!("rabi_{m}_{k}"), rabi_mk(p.laser.rabi, p.laser.eta, m, k));
    }
    report.us("duration", duration);

    let mut csv = String::from("time_s,p_excited,mean_n\n");
    let mut last = start.clone();
    for t in sample_times(duration, config.samples) {
        let s = sideband_evolve(&start, &LaserPulse { duration: t, ..pulse }).map_err(physics("pulse"))?;
        let q = s.qubit_factor(0).map_err(physics("pulse"))?;
        let pe = s.populations(q).map_err(physics("pulse"))?[Level::Excited.index()];
        writeln!(csv, "{},{},{}", sci(t), sci(pe), sci(mean_n(&s, 0).map_err(physics("pulse"))?)).unwrap();
        last = s;
    }
    report.num("final_p_excited", last.populations(0).map_err(physics("pulse"))?[1]);

    if config.mode == Mode::FullNumeric {
        let opts = FullModelOptions { propagation: PropagateOptions::with_tol(1e-8), ..Default::default() };
        let full = full_interaction_propagate(&start, &pulse, p.pair.nu[0], &opts).map_err(physics("full pulse"))?;
        let infidelity = 1.0 - full.overlap(&last).map_err(physics("full pulse"))?;
        report.num("rabi_over_nu", p.laser.rabi / p.pair.nu[0]);
        report.num("rwa_infidelity", infidelity);
    }
    report.line("reference_t1", "3.2 us (sideband pi/2 of |0,e>, rabi 2pi x 500 kHz, eta 0.33)");
    report.line("reference_t3", "29.6 us (carrier CNOT, rabi 2pi x 500 kHz, eta 0.33)");
    Ok(Artifacts { csv, report: report.0 })
}

fn run_exchange(config: &ScenarioConfig) -> Result<Artifacts, RunError> {
    let p = config.resolve()?;
    let g = p.coupling.unwrap_or_else(|| coupling_g(&p.pair));
    let duration = config.duration.unwrap_or_else(|| exchange_hold(g));
    let basis = FockBasis::new(config.n_max).map_err(physics("basis"))?;
    let start = HybridState::modes(&[config.initial_n, 0], basis).map_err(physics("initial state"))?;

    let mut report = Report::new(config);
    report.num("d", config.d);
    report.hz("coupling_g", g);
    report.hz("computed_g", coupling_g(&p.pair));
    for j in 0..2 {
        report.hz(&format!("frequency_shift_{}", j + 1), frequency_shift(&p.pair, j).map_err(physics("shift"))?);
        report.hz(&format!("renormalized_nu{}", j + 1), renormalized_frequency(&p.pair, j).map_err(physics("shift"))?);
    }
    report.line("expansion_valid", p.pair.expansion_valid());
    report.us("duration", duration);

    let mut csv = String::from("time_s,mean_n1,mean_n2\n");
    let mut last = start.clone();
    for t in sample_times(duration, config.samples) {
        let s = exchange_evolve(&start, g, t).map_err(physics("exchange"))?;
        let n1 = mean_n(&s, 0).map_err(physics("exchange"))?;
        let n2 = mean_n(&s, 1).map_err(physics("exchange"))?;
        writeln!(csv, "{},{},{}", sci(t), sci(n1), sci(n2)).unwrap();
        last = s;
    }
    report.num("final_mean_n2", mean_n(&last, 1).map_err(physics("exchange"))?);

    if config.mode == Mode::FullNumeric {
        let opts = FullCouplingOptions { propagation: PropagateOptions::with_tol(1e-5), ..Default::default() };
        let (full, _) = full_coupling_propagate(&start, &p.pair, duration, &opts).map_err(physics("full exchange"))?;
        report.num("rwa_infidelity", 1.0 - full.overlap(&last).map_err(physics("full exchange"))?);
    }
    report.line("reference_g", "2pi x 1.5 kHz at d = 40 um, 2pi x 12 kHz at d = 20 um (9Be+, nu = 2pi x 4.04 MHz)");
    report.line("reference_frequency_shift", "2pi x 1.5 kHz at d = 40 um");
    Ok(Artifacts { csv, report: report.0 })
}

fn run_sweep(config: &ScenarioConfig) -> Result<Artifacts, RunError> {
    let p = config.resolve()?;
    let at = p.pair.nu[0];
    let gamma = |n, m, nu| gamma_nm(&p.pair, &p.ramp, n, m, nu).map_err(physics("gamma"));
    let mut report = Report::new(config);
    report.hz("delta", p.ramp.delta_initial);
    report.us("tau", p.ramp.tau);
    report.num("beta", p.ramp.beta);
    let g20 = gamma(2, 0, at)?;
    let g31 = gamma(3, 1, at)?;
    report.num("gamma_20", g20);
    report.num("gamma_31", g31);
    report.line("gamma_20_within_bound", g20 <= 3.1e-6);
    report.line("gamma_31_within_bound", g31 <= 5.3e-6);
    let g = p.coupling.unwrap_or_else(|| coupling_g(&p.pair));
    report.num("ramp_exchange_angle", ramp_exchange_angle(g, &p.ramp));
    report.num("exchange_amplitude_sin_pi_2_plus_2g_tau", (FRAC_PI_2 + 2.0 * g * p.ramp.tau).sin());

    let profile = DetuningProfile::ramp(&p.ramp);
    let mut csv = String::from("time_s,nu1_over_2pi_hz,gamma_20,gamma_31\n");
    for t in sample_times(profile.duration(), config.samples) {
        let nu = at + profile.at(t);
        writeln!(csv, "{},{},{},{}", sci(t), sci(cyclic(nu)), sci(gamma(2, 0, nu)?), sci(gamma(3, 1, nu)?)).unwrap();
    }

    if config.mode == Mode::FullNumeric {
        let basis = FockBasis::new(config.n_max).map_err(physics("basis"))?;
        let start = HybridState::modes(&[config.initial_n, 0], basis).map_err(physics("initial state"))?;
        let out = sweep_propagate(&start, &p.pair, &p.ramp, true).map_err(physics("sweep"))?;
        report.num("leakage", out.leakage);
    }
    report.line("reference_gamma_bounds", "gamma_n0 < 3.1e-6, gamma_n1 < 5.3e-6 (delta 1e5 rad/s, tau 9 us)");
    report.line("reference_exchange_amplitude", "0.99");
    Ok(Artifacts { csv, report: report.0 })
}

fn run_cnot(config: &ScenarioConfig) -> Result<Artifacts, RunError> {
    let p = config.resolve()?;
    let opts = ScheduleOptions {
        mode: config.mode.into(),
        cnot_tol: config.cnot_tol,
        t3_max: T3_MAX,
        coupling: p.coupling,
        n_max: config.n_max,
        ..Default::default()
    };
    let schedule = build_schedule(&p.pair, p.laser, p.ramp, p.phases, opts).map_err(physics("schedule"))?;
    let mut report = Report::new(config);
    report.hz("coupling_g", schedule.coupling);
    for (step, t) in schedule.steps.iter().zip(schedule.durations()) {
        report.us(&format!("step_{}", step.label()), t);
    }
    report.us("t1", schedule.durations()[0]);
    report.us("t2", exchange_hold(schedule.coupling));
    report.us("t3", schedule.cnot.duration);
    report.us("total_duration", schedule.total_duration());
    report.line("phase_condition_met", p.phases.gives_cnot(1e-9));

    let (result, failure) = match run_protocol(&schedule, &ProtocolInput::Basis(0)) {
        Ok(r) => (r, None),
        Err(Error::VibrationNotReturned { report }) => {
            let err = Error::VibrationNotReturned { report: report.clone() };
            (*report, Some(err))
        }
        Err(e) => return Err(physics("protocol")(e)),
    };
    write_protocol(&mut report, &result);
    report.line(
        "reference_total_duration",
        "405.4 us (rabi 2pi x 500 kHz, g 2pi x 1.5 kHz), 88.9 us (rabi 2pi x 1.6 MHz, g 2pi x 12 kHz)",
    );

    let mut csv = String::from("output,input,re,im,abs\n");
    for out in 0..4 {
        for inp in 0..4 {
            let z = result.truth_table[[out, inp]];
            writeln!(csv, "{out},{inp},{},{},{}", sci(z.re), sci(z.im), sci(z.norm())).unwrap();
        }
    }
    let artifacts = Artifacts { csv, report: report.0 };
    match failure {
        None => Ok(artifacts),
        Some(error) => Err(RunError::Physics { step: "protocol", error, partial: Some(Box::new(artifacts)) }),
    }
}

fn write_protocol(report: &mut Report, result: &ProtocolReport) {
    report.num("fidelity", result.fidelity);
    report.num("vibration_return_error", result.vibration_return_error);
    for (i, leak) in result.exchange_leakage.iter().enumerate() {
        report.num(&format!("exchange_leakage_{}", i + 1), *leak);
    }
}

fn run_chain(config: &ScenarioConfig) -> Result<Artifacts, RunError> {
    let p = config.resolve()?;
    let ion = p.pair.ions[0];
    let mut chain = TrapChain::new(ion, p.pair.nu[0], config.d, config.n_ions, p.ramp).map_err(physics("chain"))?;
    chain.coupling = p.coupling;
    let cnot =
        solve_cnot_duration(p.laser.rabi, p.laser.eta, config.cnot_tol, T3_MAX).map_err(physics("carrier duration"))?;
    let t1 = sideband_pi_half(&p.laser);
    let t2 = exchange_hold(chain.coupling_g());
    let total = chain_cnot_duration(config.n_ions, t1, t2, cnot.duration, p.ramp.tau);

    let mut report = Report::new(config);
    report.line("n_ions", config.n_ions);
    report.hz("coupling_g", chain.coupling_g());
    report.us("t1", t1);
    report.us("t2", t2);
    report.us("t3", cnot.duration);
    report.us("hop_duration", chain.hop_duration());
    report.us("total_duration", total);
    report.us("executed_step_sum", chain_cnot_steps(&chain, &p.laser, &cnot).iter().sum());

    let levels = vec![Level::Ground; config.n_ions];
    let mut state = chain_state(&levels, Some(0)).map_err(physics("chain"))?;
    let mut header = String::from("time_s");
    for k in 1..=config.n_ions {
        write!(header, ",mean_n{k}").unwrap();
    }
    let mut csv = header + "\n";
    let mut time = 0.0;
    let mut phase = 0.0;
    for hop in 0..config.n_ions {
        if hop > 0 {
            let moved = chain_transfer(&chain, &state, hop - 1, hop).map_err(physics("chain transfer"))?;
            time += moved.duration;
            phase += moved.phase;
            state = moved.state;
        }
        write!(csv, "{}", sci(time)).unwrap();
        for k in 0..config.n_ions {
            write!(csv, ",{}", sci(mean_n(&state, k).map_err(physics("chain"))?)).unwrap();
        }
        csv.push('\n');
    }
    report.num("transfer_phase_over_pi", (phase / PI).rem_euclid(2.0));
    report.line("reference_total_duration", "709.7 us (N = 10, rabi 2pi x 1.6 MHz, d = 20 um, tau = 9 us)");
    Ok(Artifacts { csv, report: report.0 })
}
