//! Linear ramps of trap 1's frequency that switch the inter-trap exchange on
//! and off.
//!
//! Both modes are integrated in the interaction picture of the reference
//! frequency `omega_ref` (mode 2's renormalized frequency). Writing mode 1's
//! potential at frequency `omega_1(t)` in reference-frame operators gives
//!
//! ```text
//! H_1(t) = c(t) [ a_1^2 e^{-2 i w_ref t} + h.c. + 2 a_1^dag a_1 ],
//! c(t)   = (omega_1(t)^2 - omega_ref^2) / (4 omega_ref),
//! ```
//!
//! and, when coupling is on, `-g (a_1 + a_1^dag)(a_2 + a_2^dag)` with its
//! reference-frame phases. States enter and leave in the instantaneous Fock
//! basis of mode 1, with each mode's free phase `int omega_j dt` removed.

use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;

use crate::coulomb::{coupling_g, renormalized_frequency, TrapPair};
use crate::fockspace::linalg::{self, kron};
use crate::fockspace::{
    build_mode_operator, propagate_on, squeeze_operator, Coefficient, FockBasis, HybridState, OperatorKind,
    PropagateOptions, PropagationStats, TermHamiltonian, C64,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RampDirection {
    /// Detuning falls from `delta_initial` to zero.
    On,
    /// Detuning rises from zero to `delta_initial`.
    Off,
}

/// Linear ramp of mode 1's frequency relative to mode 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSpec {
    /// Ramp rate, rad/s^2.
    pub beta: f64,
    /// Ramp duration, s.
    pub tau: f64,
    /// Detuning at the detuned end of the ramp, rad/s.
    pub delta_initial: f64,
    pub direction: RampDirection,
}

impl SweepSpec {
    pub fn new(delta_initial: f64, tau: f64, direction: RampDirection) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid("tau", "ramp duration must be positive"));
        }
        if !delta_initial.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        Ok(SweepSpec { beta: delta_initial / tau, tau, delta_initial, direction })
    }

    /// Checks `beta tau = delta_initial` for a hand-assembled spec.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = SweepSpec::new(self.delta_initial, self.tau, self.direction)?;
        if (rebuilt.beta - self.beta).abs() > 1e-9 * self.beta.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::invalid("beta", "beta * tau must equal the initial detuning"));
        }
        Ok(())
    }

    pub fn reversed(&self) -> Self {
        let direction = match self.direction {
            RampDirection::On => RampDirection::Off,
            RampDirection::Off => RampDirection::On,
        };
        SweepSpec { direction, ..*self }
    }

    fn segment(&self) -> Segment {
        match self.direction {
            RampDirection::On => Segment { duration: self.tau, start: self.delta_initial, end: 0.0 },
            RampDirection::Off => Segment { duration: self.tau, start: 0.0, end: self.delta_initial },
        }
    }
}

/// Adiabaticity parameter `|<n| dH/dt |m>| / (nu_1^2 (n - m)^2)` of a ramp,
/// evaluated in the harmonic basis at mode-1 frequency `at_nu1`.
///
/// `dH/dt = M nu_1 beta z_1^2` couples only `|n - m| = 2`, where it equals
/// `beta sqrt((n+1)(n+2)) / (8 nu_1^2)` for the pair `(n+2, n)`.
pub fn gamma_nm(pair: &TrapPair, sweep: &SweepSpec, n: usize, m: usize, at_nu1: f64) -> Result<f64> {
    if n == m {
        return Err(Error::invalid("m", "gamma is defined for n != m only"));
    }
    if !(at_nu1.is_finite() && at_nu1 > 0.0) {
        return Err(Error::invalid("at_nu1", "must be positive"));
    }
    sweep.validate()?;
    let ion = pair.ions[0];
    let xi = ion.oscillator_length(at_nu1);
    let (lo, hi) = (n.min(m), n.max(m));
    // <hi| (a + a^dag)^2 |lo>
    let element = if hi - lo == 2 { (((lo + 1) * (lo + 2)) as f64).sqrt() } else { 0.0 };
    let derivative = ion.mass * at_nu1 * sweep.beta.abs() * xi * xi * element;
    let gap = (hi - lo) as f64;
    Ok(derivative / (crate::constants::HBAR * at_nu1 * at_nu1 * gap * gap))
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Segment {
    duration: f64,
    start: f64,
    end: f64,
}

/// Piecewise-linear detuning `omega_1(t) - omega_ref` of mode 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DetuningProfile {
    segments: Vec<Segment>,
}

impl DetuningProfile {
    pub fn ramp(sweep: &SweepSpec) -> Self {
        DetuningProfile { segments: vec![sweep.segment()] }
    }

    /// Ramp on from `delta`, hold on resonance for `hold`, ramp off to `delta`.
    pub fn exchange(delta: f64, tau: f64, hold: f64) -> Result<Self> {
        let on = SweepSpec::new(delta, tau, RampDirection::On)?;
        if !(hold.is_finite() && hold >= 0.0) {
            return Err(Error::invalid("hold", "must be non-negative"));
        }
        let mut segments = vec![on.segment()];
        if hold > 0.0 {
            segments.push(Segment { duration: hold, start: 0.0, end: 0.0 });
        }
        segments.push(on.reversed().segment());
        Ok(DetuningProfile { segments })
    }

    /// Constant detuning for `duration`.
    pub fn constant(detuning: f64, duration: f64) -> Self {
        DetuningProfile { segments: vec![Segment { duration, start: detuning, end: detuning }] }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn at(&self, t: f64) -> f64 {
        let mut t0 = 0.0;
        for s in &self.segments {
            if t <= t0 + s.duration || std::ptr::eq(s, self.segments.last().unwrap()) {
                let x = if s.duration > 0.0 { ((t - t0) / s.duration).clamp(0.0, 1.0) } else { 1.0 };
                return s.start + (s.end - s.start) * x;
            }
            t0 += s.duration;
        }
        0.0
    }

    /// `int_0^t detuning dt'`.
    pub fn phase(&self, t: f64) -> f64 {
        let mut t0 = 0.0;
        let mut acc = 0.0;
        for s in &self.segments {
            let dt = (t - t0).clamp(0.0, s.duration);
            if s.duration > 0.0 {
                let slope = (s.end - s.start) / s.duration;
                acc += s.start * dt + 0.5 * slope * dt * dt;
            }
            t0 += s.duration;
        }
        acc
    }

    /// `|int g e^{i phase(t)} dt|`, the exchange angle a weak coupling `g`
    /// accumulates across the whole profile.
    pub fn exchange_angle(&self, g: f64) -> f64 {
        let mut t0 = 0.0;
        let mut sum = C64::new(0.0, 0.0);
        for s in &self.segments {
            let panels = 4096;
            let h = s.duration / panels as f64;
            // composite Simpson
            for i in 0..=panels {
                let w = if i == 0 || i == panels {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                sum += C64::from_polar(w * h / 3.0, self.phase(t0 + i as f64 * h));
            }
            t0 += s.duration;
        }
        g * sum.norm()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub include_coupling: bool,
    /// Exchange coupling to use instead of the pair's computed `g`, rad/s.
    pub coupling: Option<f64>,
    pub propagation: PropagateOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { include_coupling: true, coupling: None, propagation: PropagateOptions::with_tol(1e-8) }
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    /// Final state in mode 1's instantaneous basis with free phases removed.
    pub state: HybridState,
    /// Total-variation distance between the initial and final occupation
    /// distributions: of `(n_1, n_2)` without coupling, of `n_1 + n_2` with
    /// coupling (which legitimately moves quanta between the modes).
    pub leakage: f64,
    /// [`DetuningProfile::exchange_angle`] of the coupling, zero when off.
    pub exchange_angle: f64,
    pub duration: f64,
    pub stats: PropagationStats,
}

/// Integrates one linear ramp on the first two mode factors of `state`.
pub fn sweep_propagate(
    state: &HybridState,
    pair: &TrapPair,
    sweep: &SweepSpec,
    include_coupling: bool,
) -> Result<SweepOutcome> {
    sweep.validate()?;
    let opts = SweepOptions { include_coupling, ..SweepOptions::default() };
    let modes = [state.mode_factor(0)?, state.mode_factor(1)?];
    profile_propagate(state, modes, pair, &DetuningProfile::ramp(sweep), &opts)
}

/// Ramp-on, resonant hold and ramp-off as one continuous integration.
pub fn exchange_step(
    state: &HybridState,
    modes: [usize; 2],
    pair: &TrapPair,
    delta: f64,
    tau: f64,
    hold: f64,
    opts: &SweepOptions,
) -> Result<SweepOutcome> {
    profile_propagate(state, modes, pair, &DetuningProfile::exchange(delta, tau, hold)?, opts)
}

/// Angle `|int g e^{i phase}|` accrued during a single ramp.
pub fn ramp_exchange_angle(g: f64, sweep: &SweepSpec) -> f64 {
    DetuningProfile::ramp(sweep).exchange_angle(g)
}

/// Hold time that completes a quarter exchange given the ramps' contribution,
/// `(pi/2 - 2 theta_ramp) / g`.
pub fn compensated_hold(g: f64, sweep: &SweepSpec) -> f64 {
    ((FRAC_PI_2 - 2.0 * ramp_exchange_angle(g, sweep)) / g).max(0.0)
}

/// Integrates the two-mode system along an arbitrary detuning profile.
pub fn profile_propagate(
    state: &HybridState,
    modes: [usize; 2],
    pair: &TrapPair,
    profile: &DetuningProfile,
    opts: &SweepOptions,
) -> Result<SweepOutcome> {
    let bases = [state.fock_basis(modes[0])?, state.fock_basis(modes[1])?];
    let omega_ref = renormalized_frequency(pair, 1)?;
    let g = if opts.include_coupling { opts.coupling.unwrap_or_else(|| coupling_g(pair)) } else { 0.0 };
    let duration = profile.duration();
    let r_start = squeeze_parameter(omega_ref + profile.at(0.0), omega_ref)?;
    let r_end = squeeze_parameter(omega_ref + profile.at(duration), omega_ref)?;

    let h = sweep_hamiltonian(bases, omega_ref, g, profile)?;
    let enter = kron(squeeze_operator(bases[0], r_start)?.matrix(), &linalg::identity(bases[1].dim()));
    let start = apply_renormalized(state, &modes, &enter)?;
    let (evolved, stats) = propagate_on(&start, &modes, &h, (0.0, duration), &opts.propagation)?;

    // lab frame, instantaneous basis, then co-moving phases
    let d1 = bases[0].dim();
    let free =
        |phase: f64| Array2::from_diag(&ndarray::Array1::from_shape_fn(d1, |n| C64::from_polar(1.0, phase * n as f64)));
    let leave1 = free(omega_ref * duration + profile.phase(duration))
        .dot(&linalg::adjoint(squeeze_operator(bases[0], r_end)?.matrix()))
        .dot(&free(-omega_ref * duration));
    let leave = kron(&leave1, &linalg::identity(bases[1].dim()));
    let out = apply_renormalized(&evolved, &modes, &leave)?;

    let leakage = occupation_distance(state, &out, modes, opts.include_coupling)?;
    let exchange_angle = if opts.include_coupling { profile.exchange_angle(g) } else { 0.0 };
    Ok(SweepOutcome { state: out, leakage, exchange_angle, duration, stats })
}

/// `r` with `S(r) |n>_ref = |n>_{omega}`.
fn squeeze_parameter(omega: f64, omega_ref: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::invalid("delta", "detuning drives the trap frequency non-positive"));
    }
    Ok(0.5 * (omega / omega_ref).ln())
}

fn sweep_hamiltonian(
    bases: [FockBasis; 2],
    omega_ref: f64,
    g: f64,
    profile: &DetuningProfile,
) -> Result<TermHamiltonian> {
    let a = |b: FockBasis| build_mode_operator(b, OperatorKind::Annihilation, None).map(|m| m.into_matrix());
    let a1 = kron(&a(bases[0])?, &linalg::identity(bases[1].dim()));
    let a2 = kron(&linalg::identity(bases[0].dim()), &a(bases[1])?);
    let mut h = TermHamiltonian::new(a1.nrows());

    let p = std::sync::Arc::new(profile.clone());
    let c = move |t: f64| {
        let w = omega_ref + p.at(t);
        C64::new((w * w - omega_ref * omega_ref) / (4.0 * omega_ref), 0.0)
    };
    let c2 = c.clone();
    h.add_with_adjoint(
        &a1.dot(&a1),
        Coefficient::Modulated { envelope: std::sync::Arc::new(c), frequency: -2.0 * omega_ref },
    )?;
    h.add(
        &linalg::adjoint(&a1).dot(&a1),
        Coefficient::Modulated { envelope: std::sync::Arc::new(move |t| 2.0 * c2(t)), frequency: 0.0 },
    )?;
    if g != 0.0 {
        let minus_g = C64::new(-g, 0.0);
        h.add_with_adjoint(&a1.dot(&linalg::adjoint(&a2)), Coefficient::Constant(minus_g))?;
        h.add_with_adjoint(&a1.dot(&a2), Coefficient::Oscillating { amplitude: minus_g, frequency: -2.0 * omega_ref })?;
    }
    Ok(h)
}

fn apply_renormalized(state: &HybridState, targets: &[usize], op: &Array2<C64>) -> Result<HybridState> {
    let out = op.dot(&state.gather(targets)?);
    let norm = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    state.scatter(targets, &out.mapv(|z| z / norm))
}

fn occupation_distance(before: &HybridState, after: &HybridState, modes: [usize; 2], total_only: bool) -> Result<f64> {
    let histogram = |s: &HybridState| -> Result<Vec<f64>> {
        let d2 = s.fock_basis(modes[1])?.dim();
        let block = s.gather(&modes)?;
        let len = if total_only { s.fock_basis(modes[0])?.dim() + d2 } else { block.nrows() };
        let mut h = vec![0.0; len];
        for (i, row) in block.outer_iter().enumerate() {
            let slot = if total_only { i / d2 + i % d2 } else { i };
            h[slot] += row.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        Ok(h)
    };
    let (p, q) = (histogram(before)?, histogram(after)?);
    Ok(0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::angular;
    use crate::coulomb::IonSpecies;

    fn pair() -> TrapPair {
        TrapPair::symmetric(IonSpecies::beryllium9(), angular(4.04e6), 40e-6).unwrap()
    }

    #[test]
    fn design_gamma_bounds() {
        let sweep = SweepSpec::new(1e5, 9e-6, RampDirection::On).unwrap();
        let nu1 = angular(4.04e6);
        let g20 = gamma_nm(&pair(), &sweep, 2, 0, nu1).unwrap();
        let g31 = gamma_nm(&pair(), &sweep, 3, 1, nu1).unwrap();
        assert!(g20 < 3.1e-6 && (g20 - 3.05e-6).abs() / 3.05e-6 < 0.01, "{g20:e}");
        assert!(g31 < 5.3e-6 && (g31 - 5.28e-6).abs() / 5.28e-6 < 0.01, "{g31:e}");
        assert_eq!(gamma_nm(&pair(), &sweep, 1, 0, nu1).unwrap(), 0.0);
        assert!(gamma_nm(&pair(), &sweep, 2, 2, nu1).is_err());
    }

    #[test]
    fn profile_phase_integrates_detuning() {
        let p = DetuningProfile::exchange(2.0, 1.0, 3.0).unwrap();
        assert!((p.duration() - 5.0).abs() < 1e-15);
        assert!((p.at(0.0) - 2.0).abs() < 1e-15);
        assert!((p.at(2.0)).abs() < 1e-15);
        assert!((p.at(4.5) - 1.0).abs() < 1e-12);
        assert!((p.phase(5.0) - 2.0).abs() < 1e-12);
        let flat = DetuningProfile::constant(0.0, 2.0);
        assert!((flat.exchange_angle(0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn static_trap_does_not_leak() {
        let sweep = SweepSpec::new(0.0, 2e-6, RampDirection::On).unwrap();
        let s = HybridState::modes(&[1, 0], FockBasis::new(4).unwrap()).unwrap();
        let out = sweep_propagate(&s, &pair(), &sweep, false).unwrap();
        assert!(out.leakage < 1e-12);
        assert!(out.state.overlap(&s).unwrap() > 1.0 - 1e-12);
    }
}
