//! The five-step CNOT between ions in separate traps, and single-quantum
//! transport along a chain of traps.
//!
//! Step pattern: red-sideband pulse on ion 1 (I), quarter exchange of the
//! vibrational quantum to trap 2 (II), single carrier pulse on ion 2 whose
//! duration flips the qubit only when one phonon is present (III), exchange
//! back (IV), and a second red-sideband pulse on ion 1 (V).

use std::f64::consts::{FRAC_PI_2, TAU};

use ndarray::{Array1, Array2};

use crate::coulomb::{coupling_g, exchange_evolve_modes, renormalized_frequency, IonSpecies, TrapPair};
use crate::fockspace::{Factor, FockBasis, HybridState, Level, PropagateOptions, C64};
use crate::laser_ion::{
    full_interaction_propagate_ion, rabi_mk, sideband_evolve_ion, sideband_unitary_with_angles, solve_cnot_duration,
    CnotDuration, FullModelOptions, LaserPulse,
};
use crate::sweep::{compensated_hold, exchange_step, SweepOptions, SweepSpec};
use crate::{Error, Result};

/// Largest vibrational-return error accepted before a run is reported as a failure.
pub const VIBRATION_RETURN_LIMIT: f64 = 1e-2;

/// Laser phases of pulses I, III and V, radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Phases {
    pub first: f64,
    pub carrier: f64,
    pub last: f64,
}

impl Default for Phases {
    fn default() -> Self {
        Phases { first: 0.0, carrier: 0.0, last: 3.0 * FRAC_PI_2 }
    }
}

impl Phases {
    pub fn new(first: f64, carrier: f64, last: f64) -> Self {
        Phases { first, carrier, last }
    }

    /// Phase acquired by `|e g> -> |e e>`: `first - carrier - last + 3pi/2`.
    pub fn flip_phase(&self) -> f64 {
        self.first - self.carrier - self.last + 3.0 * FRAC_PI_2
    }

    /// Phase acquired by `|e e> -> |e g>`: `first + carrier - last + 3pi/2`.
    pub fn unflip_phase(&self) -> f64 {
        self.first + self.carrier - self.last + 3.0 * FRAC_PI_2
    }

    /// Both flip phases vanish modulo `2 pi` within `tol`.
    pub fn gives_cnot(&self, tol: f64) -> bool {
        let off = |x: f64| {
            let r = x.rem_euclid(TAU);
            r.min(TAU - r)
        };
        off(self.flip_phase()) <= tol && off(self.unflip_phase()) <= tol
    }
}

/// Drive strength shared by all pulses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaserParams {
    /// rad/s
    pub rabi: f64,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ProtocolMode {
    /// Rotating-wave maps and the ideal beam splitter, ramps treated as
    /// instantaneous switches.
    #[default]
    ClosedForm,
    /// Every step integrated with its full time-dependent Hamiltonian.
    FullNumeric,
}

#[derive(Clone, Copy, Debug)]
pub struct ScheduleOptions {
    pub mode: ProtocolMode,
    /// Tolerance passed to the carrier-duration solver.
    pub cnot_tol: f64,
    /// Longest carrier pulse considered, s.
    pub t3_max: f64,
    /// Exchange coupling to use instead of the pair's computed `g`, rad/s.
    pub coupling: Option<f64>,
    /// Shorten each hold by the exchange angle the ramps accrue.
    pub compensate_hold: bool,
    /// Fock cutoff of each vibrational mode.
    pub n_max: usize,
    /// Step-halving tolerance of full-numeric propagation.
    pub propagation_tol: f64,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions {
            mode: ProtocolMode::ClosedForm,
            cnot_tol: 1e-2,
            t3_max: 100e-6,
            coupling: None,
            compensate_hold: false,
            n_max: 10,
            propagation_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    /// Laser pulse on ion `ion` (0-based).
    Pulse { ion: usize, pulse: LaserPulse },
    /// Ramp on, hold on resonance, ramp off.
    Exchange { ramp: SweepSpec, hold: f64 },
}

impl Step {
    pub fn duration(&self) -> f64 {
        match self {
            Step::Pulse { pulse, .. } => pulse.duration,
            Step::Exchange { ramp, hold } => hold + 2.0 * ramp.tau,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Step::Pulse { pulse, .. } if pulse.sideband == 0 => "carrier",
            Step::Pulse { .. } => "sideband",
            Step::Exchange { .. } => "exchange",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolSchedule {
    pub steps: Vec<Step>,
    pub phases: Phases,
    pub mode: ProtocolMode,
    pub pair: TrapPair,
    /// Exchange coupling, rad/s.
    pub coupling: f64,
    pub cnot: CnotDuration,
    /// Exchange angle accrued by a single ramp, rad.
    pub ramp_angle: f64,
    pub options: ScheduleOptions,
}

impl ProtocolSchedule {
    pub fn durations(&self) -> Vec<f64> {
        self.steps.iter().map(Step::duration).collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.durations().iter().sum()
    }

    /// Transfer amplitude of one exchange step including both ramps,
    /// `sin(pi/2 + 2 theta_ramp)` for the uncompensated hold.
    pub fn predicted_exchange_amplitude(&self) -> f64 {
        match self.steps.get(1) {
            Some(Step::Exchange { hold, .. }) => (self.coupling * hold + 2.0 * self.ramp_angle).sin(),
            _ => f64::NAN,
        }
    }
}

/// Quarter-exchange hold time `pi / (2 g)`.
pub fn exchange_hold(g: f64) -> f64 {
    FRAC_PI_2 / g
}

/// Duration `pi / (2 Omega_{0,1})` of the sideband pulses I and V.
pub fn sideband_pi_half(laser: &LaserParams) -> f64 {
    FRAC_PI_2 / rabi_mk(laser.rabi, laser.eta, 0, 1)
}

/// Assembles the five steps. `pair` holds both traps at the resonant
/// frequency; `sweep` is the ramp-on that brings trap 1 from its parking
/// detuning into resonance.
pub fn build_schedule(
    pair: &TrapPair,
    laser: LaserParams,
    sweep: SweepSpec,
    phases: Phases,
    options: ScheduleOptions,
) -> Result<ProtocolSchedule> {
    sweep.validate()?;
    if options.n_max < 2 {
        return Err(Error::invalid("n_max", "the protocol needs at least two Fock levels above vacuum"));
    }
    let coupling = options.coupling.unwrap_or_else(|| coupling_g(pair));
    if !(coupling.is_finite() && coupling > 0.0) {
        return Err(Error::invalid("coupling", "must be positive"));
    }
    let cnot = solve_cnot_duration(laser.rabi, laser.eta, options.cnot_tol, options.t3_max)?;
    let t1 = sideband_pi_half(&laser);
    let ramp_angle = crate::sweep::ramp_exchange_angle(coupling, &sweep);
    let hold = if options.compensate_hold { compensated_hold(coupling, &sweep) } else { exchange_hold(coupling) };

    let sideband = |phase| LaserPulse::new(laser.rabi, laser.eta, 1, phase, t1);
    let exchange = Step::Exchange { ramp: sweep, hold };
    let steps = vec![
        Step::Pulse { ion: 0, pulse: sideband(phases.first)? },
        exchange.clone(),
        Step::Pulse { ion: 1, pulse: LaserPulse::new(laser.rabi, laser.eta, 0, phases.carrier, cnot.duration)? },
        exchange,
        Step::Pulse { ion: 0, pulse: sideband(phases.last)? },
    ];
    Ok(ProtocolSchedule { steps, phases, mode: options.mode, pair: *pair, coupling, cnot, ramp_angle, options })
}

/// Ideal CNOT with ion 1 as control on `{|gg>, |ge>, |eg>, |ee>}`.
pub fn ideal_cnot() -> Array2<C64> {
    let mut u = Array2::zeros((4, 4));
    for (i, j) in [(0, 0), (1, 1), (3, 2), (2, 3)] {
        u[[i, j]] = C64::new(1.0, 0.0);
    }
    u
}

/// Truth table predicted for the given phases: the two control-on inputs
/// swap with phases [`Phases::flip_phase`] and [`Phases::unflip_phase`].
pub fn expected_truth_table(phases: &Phases) -> Array2<C64> {
    let mut u = ideal_cnot();
    u[[3, 2]] = C64::from_polar(1.0, phases.flip_phase());
    u[[2, 3]] = C64::from_polar(1.0, phases.unflip_phase());
    u
}

/// Qubit input of [`run_protocol`].
#[derive(Clone, Debug, PartialEq)]
pub enum ProtocolInput {
    /// Computational basis index into `{gg, ge, eg, ee}`.
    Basis(usize),
    /// Normalized amplitudes on `{gg, ge, eg, ee}`.
    State([C64; 4]),
}

impl ProtocolInput {
    fn amplitudes(&self) -> Result<Array1<C64>> {
        match self {
            ProtocolInput::Basis(i) if *i < 4 => {
                let mut v = Array1::zeros(4);
                v[*i] = C64::new(1.0, 0.0);
                Ok(v)
            }
            ProtocolInput::Basis(i) => Err(Error::IndexOutOfRange { what: "basis input", index: *i, len: 4 }),
            ProtocolInput::State(a) => {
                let v = Array1::from(a.to_vec());
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(Error::invalid("input", "qubit amplitudes must be normalized"));
                }
                Ok(v)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolReport {
    /// `<out, vib 00| U |in, vib 00>` with rows indexed by output.
    pub truth_table: Array2<C64>,
    /// `|tr(U_cnot^dag T)|^2 / 16`.
    pub fidelity: f64,
    /// Largest population any basis input leaves outside vibrational vacuum.
    pub vibration_return_error: f64,
    pub per_step_durations: Vec<f64>,
    pub total_duration: f64,
    /// Output qubit amplitudes (projected on vibrational vacuum) for the
    /// requested input.
    pub output: Array1<C64>,
    /// Adiabatic leakage of each exchange step (full-numeric only).
    pub exchange_leakage: Vec<f64>,
    pub mode: ProtocolMode,
}

/// Runs the schedule on all four basis inputs at once and reports the
/// resulting truth table, plus the image of `input`.
///
/// A two-qubit reference register is appended and maximally entangled with
/// the ion qubits, so a single evolution yields every column of the gate.
pub fn run_protocol(schedule: &ProtocolSchedule, input: &ProtocolInput) -> Result<ProtocolReport> {
    let n_max = schedule.options.n_max;
    let basis = FockBasis::new(n_max)?;
    let factors =
        vec![Factor::Qubit, Factor::Mode(basis), Factor::Qubit, Factor::Mode(basis), Factor::Qubit, Factor::Qubit];
    let mut amplitudes = Array1::zeros(factors.iter().map(Factor::dim).product::<usize>());
    let mut state = HybridState::basis_state(factors.clone(), &[0; 6])?;
    for a in 0..2 {
        for b in 0..2 {
            amplitudes[state.index_of(&[a, 0, b, 0, a, b])?] = C64::new(0.5, 0.0);
        }
    }
    state = HybridState::from_amplitudes(factors, amplitudes)?;

    let mut exchange_leakage = Vec::new();
    for step in &schedule.steps {
        state = match schedule.mode {
            ProtocolMode::ClosedForm => closed_form_step(schedule, step, &state)?,
            ProtocolMode::FullNumeric => {
                let (next, leakage) = full_numeric_step(schedule, step, &state)?;
                exchange_leakage.extend(leakage);
                next
            }
        };
    }

    let mut table = Array2::zeros((4, 4));
    for out in 0..4 {
        for inp in 0..4 {
            table[[out, inp]] = state.amplitude(&[out / 2, 0, out % 2, 0, inp / 2, inp % 2])? * 2.0;
        }
    }
    let ideal = ideal_cnot();
    let trace: C64 = ideal.iter().zip(table.iter()).map(|(a, b)| a.conj() * b).sum();
    let vibration_return_error = (0..4)
        .map(|inp| 1.0 - table.column(inp).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(0.0);
    let report = ProtocolReport {
        output: table.dot(&input.amplitudes()?),
        fidelity: (trace.norm_sqr() / 16.0).min(1.0),
        truth_table: table,
        vibration_return_error,
        per_step_durations: schedule.durations(),
        total_duration: schedule.total_duration(),
        exchange_leakage,
        mode: schedule.mode,
    };
    if report.vibration_return_error > VIBRATION_RETURN_LIMIT {
        return Err(Error::VibrationNotReturned { report: Box::new(report) });
    }
    Ok(report)
}

const MODES: [usize; 2] = [1, 3];

fn closed_form_step(schedule: &ProtocolSchedule, step: &Step, state: &HybridState) -> Result<HybridState> {
    match step {
        Step::Pulse { ion, pulse } if pulse.sideband == 0 => {
            // carrier areas of |0> and |1> are the exact multiples the solver aimed for
            let cnot = schedule.cnot;
            let angle = |m: usize| match m {
                0 => TAU * cnot.carrier_turns as f64,
                1 => FRAC_PI_2 + TAU * cnot.flip_turns as f64,
                _ => pulse.rabi_for(m) * pulse.duration,
            };
            let [q, mode] = state.ion_factors(*ion)?;
            let u = sideband_unitary_with_angles(state.fock_basis(mode)?, 0, pulse.phase, angle);
            state.apply_local(&u, &[q, mode])
        }
        Step::Pulse { ion, pulse } => sideband_evolve_ion(state, *ion, pulse),
        Step::Exchange { .. } => exchange_evolve_modes(state, MODES, 1.0, FRAC_PI_2),
    }
}

fn full_numeric_step(
    schedule: &ProtocolSchedule,
    step: &Step,
    state: &HybridState,
) -> Result<(HybridState, Option<f64>)> {
    let propagation = PropagateOptions::with_tol(schedule.options.propagation_tol);
    let omega_ref = renormalized_frequency(&schedule.pair, 1)?;
    match step {
        Step::Pulse { ion, pulse } => {
            let nu = if *ion == 0 {
                let Step::Exchange { ramp, .. } = &schedule.steps[1] else { unreachable!("fixed step pattern") };
                omega_ref + ramp.delta_initial
            } else {
                omega_ref
            };
            let opts = FullModelOptions { propagation, ..FullModelOptions::default() };
            Ok((full_interaction_propagate_ion(state, *ion, pulse, nu, &opts)?, None))
        }
        Step::Exchange { ramp, hold } => {
            let opts = SweepOptions { include_coupling: true, coupling: Some(schedule.coupling), propagation };
            let out = exchange_step(state, MODES, &schedule.pair, ramp.delta_initial, ramp.tau, *hold, &opts)?;
            Ok((out.state, Some(out.leakage)))
        }
    }
}

/// A row of identical traps with uniform spacing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapChain {
    pub ion: IonSpecies,
    /// Resonant trap frequency, rad/s.
    pub nu: f64,
    /// Spacing between neighbours, m.
    pub distance: f64,
    pub len: usize,
    /// Exchange coupling to use instead of the computed one, rad/s.
    pub coupling: Option<f64>,
    /// Ramp used to switch each link on and off.
    pub ramp: SweepSpec,
}

impl TrapChain {
    pub fn new(ion: IonSpecies, nu: f64, distance: f64, len: usize, ramp: SweepSpec) -> Result<Self> {
        if len < 2 {
            return Err(Error::invalid("n_ions", "a chain needs at least two traps"));
        }
        TrapPair::symmetric(ion, nu, distance)?;
        ramp.validate()?;
        Ok(TrapChain { ion, nu, distance, len, coupling: None, ramp })
    }

    pub fn link(&self) -> TrapPair {
        TrapPair { ions: [self.ion; 2], nu: [self.nu; 2], distance: self.distance }
    }

    pub fn coupling_g(&self) -> f64 {
        self.coupling.unwrap_or_else(|| coupling_g(&self.link()))
    }

    /// Duration of one nearest-neighbour quarter exchange with its ramps.
    pub fn hop_duration(&self) -> f64 {
        exchange_hold(self.coupling_g()) + 2.0 * self.ramp.tau
    }
}

#[derive(Clone, Debug)]
pub struct ChainTransfer {
    pub state: HybridState,
    /// Phase picked up by a single quantum moved from `from` to `to`, rad.
    pub phase: f64,
    pub duration: f64,
    pub hops: usize,
}

/// Moves the vibrational quantum of trap `from` to trap `to` by successive
/// nearest-neighbour quarter exchanges.
pub fn chain_transfer(chain: &TrapChain, state: &HybridState, from: usize, to: usize) -> Result<ChainTransfer> {
    let n_modes = state.factors().iter().filter(|f| matches!(f, Factor::Mode(_))).count();
    if n_modes != chain.len {
        return Err(Error::DimensionMismatch { expected: chain.len, found: n_modes });
    }
    for (name, idx) in [("from", from), ("to", to)] {
        if idx >= chain.len {
            return Err(Error::IndexOutOfRange { what: name, index: idx, len: chain.len });
        }
    }
    for k in (0..chain.len).filter(|&k| k != from) {
        let pops = state.populations(state.mode_factor(k)?)?;
        let occupied = 1.0 - pops[0];
        if occupied > 1e-12 {
            return Err(Error::ModeOccupied { mode: k, population: occupied });
        }
    }
    let path: Vec<usize> = if to >= from { (from..=to).collect() } else { (to..=from).rev().collect() };
    let mut out = state.clone();
    let mut duration = 0.0;
    for w in path.windows(2) {
        let modes = [out.mode_factor(w[0])?, out.mode_factor(w[1])?];
        out = exchange_evolve_modes(&out, modes, 1.0, FRAC_PI_2)?;
        duration += chain.hop_duration();
    }
    let hops = path.len() - 1;
    Ok(ChainTransfer { state: out, phase: transfer_phase(chain.len, &path)?, duration, hops })
}

/// Phase of a lone quantum carried along `path`, by composing the same hops
/// on a probe register.
fn transfer_phase(len: usize, path: &[usize]) -> Result<f64> {
    let basis = FockBasis::new(1)?;
    let mut occupations = vec![0; len];
    occupations[path[0]] = 1;
    let mut probe = HybridState::modes(&occupations, basis)?;
    for w in path.windows(2) {
        probe = exchange_evolve_modes(&probe, [w[0], w[1]], 1.0, FRAC_PI_2)?;
    }
    let mut target = vec![0; len];
    target[*path.last().unwrap()] = 1;
    Ok(probe.amplitude(&target)?.arg())
}

/// Closed-form total duration of a CNOT between the ends of an `n`-trap
/// chain: `2 [t_1 + (n-1) t_2] + t_3 + 4 (n-1) tau`.
pub fn chain_cnot_duration(n: usize, t1: f64, t2: f64, t3: f64, tau: f64) -> f64 {
    let hops = n.saturating_sub(1) as f64;
    2.0 * (t1 + hops * t2) + t3 + 4.0 * hops * tau
}

/// Step durations of a chain CNOT as executed: sideband, `n-1` hops out,
/// carrier, `n-1` hops back, sideband.
pub fn chain_cnot_steps(chain: &TrapChain, laser: &LaserParams, cnot: &CnotDuration) -> Vec<f64> {
    let t1 = sideband_pi_half(laser);
    let hop = chain.hop_duration();
    let mut steps = vec![t1];
    steps.extend(std::iter::repeat_n(hop, chain.len - 1));
    steps.push(cnot.duration);
    steps.extend(std::iter::repeat_n(hop, chain.len - 1));
    steps.push(t1);
    steps
}

/// Product register of `levels` on a chain with every mode in vacuum except
/// one phonon in `loaded`.
pub fn chain_state(levels: &[Level], loaded: Option<usize>) -> Result<HybridState> {
    let ions: Vec<(Level, usize)> =
        levels.iter().enumerate().map(|(i, &l)| (l, usize::from(Some(i) == loaded))).collect();
    HybridState::ions(&ions, FockBasis::new(1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::angular;
    use crate::sweep::RampDirection;

    fn schedule(phases: Phases) -> ProtocolSchedule {
        let pair = TrapPair::symmetric(IonSpecies::beryllium9(), angular(4.04e6), 40e-6).unwrap();
        let laser = LaserParams { rabi: angular(500e3), eta: 0.33 };
        let sweep = SweepSpec::new(1e5, 9e-6, RampDirection::On).unwrap();
        let opts = ScheduleOptions { coupling: Some(angular(1.5e3)), n_max: 4, ..Default::default() };
        build_schedule(&pair, laser, sweep, phases, opts).unwrap()
    }

    #[test]
    fn design_timing_budget() {
        let s = schedule(Phases::default());
        let total = s.total_duration();
        assert!((total - 405.4e-6).abs() / 405.4e-6 < 0.01, "{total:e}");
        assert_eq!(s.steps.len(), 5);
        assert_eq!(
            s.steps.iter().map(Step::label).collect::<Vec<_>>(),
            ["sideband", "exchange", "carrier", "exchange", "sideband"]
        );
    }

    #[test]
    fn default_phases_give_cnot() {
        assert!(Phases::default().gives_cnot(1e-12));
        assert!(!Phases::new(0.0, 0.0, FRAC_PI_2).gives_cnot(1e-6));
        let report = run_protocol(&schedule(Phases::default()), &ProtocolInput::Basis(2)).unwrap();
        assert!((report.fidelity - 1.0).abs() < 1e-12);
        assert!(report.vibration_return_error < 1e-10);
        assert!((report.output[3] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn control_off_rows_unchanged() {
        let report = run_protocol(&schedule(Phases::new(0.3, 1.1, -0.4)), &ProtocolInput::Basis(0)).unwrap();
        assert!((report.truth_table[[0, 0]] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((report.truth_table[[1, 1]] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn truth_table_matches_prediction() {
        let phases = Phases::new(0.0, 0.0, FRAC_PI_2);
        let report = run_protocol(&schedule(phases), &ProtocolInput::Basis(2)).unwrap();
        let want = expected_truth_table(&phases);
        assert!((report.truth_table[[3, 2]] - C64::new(-1.0, 0.0)).norm() < 1e-12);
        for (a, b) in report.truth_table.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn chain_single_hop_phase_is_i() {
        let ramp = SweepSpec::new(1e5, 9e-6, RampDirection::On).unwrap();
        let chain = TrapChain::new(IonSpecies::beryllium9(), angular(4.04e6), 20e-6, 3, ramp).unwrap();
        let s = chain_state(&[Level::Ground; 3], Some(0)).unwrap();
        let out = chain_transfer(&chain, &s, 0, 1).unwrap();
        assert!((out.phase - FRAC_PI_2).abs() < 1e-12);
        let two = chain_transfer(&chain, &s, 0, 2).unwrap();
        assert!((two.phase.rem_euclid(TAU) - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(two.hops, 2);
        let occupied = chain_state(&[Level::Ground; 3], Some(1)).unwrap();
        assert!(matches!(chain_transfer(&chain, &occupied, 0, 2), Err(Error::ModeOccupied { .. })));
    }
}
