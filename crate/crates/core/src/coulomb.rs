//! Coulomb coupling between ions held in two separate harmonic wells.
//!
//! Expanding the inter-ion potential to second order in the displacements
//! `z_j = xi_j (a_j + a_j^dag)` gives, per mode, a frequency shift, a
//! squeezing term and a force, plus the bilinear coupling
//! `-g (a_1 + a_1^dag)(a_2 + a_2^dag)`. Near resonance only the
//! excitation-exchanging part survives and the modes evolve under the beam
//! splitter [`exchange_evolve`].

use std::f64::consts::PI;

use ndarray::Array2;

use crate::constants::{ATOMIC_MASS_UNIT, BE9_MASS_U, ELEMENTARY_CHARGE, HBAR, VACUUM_PERMITTIVITY};
use crate::fockspace::linalg::{self, kron};
use crate::fockspace::{
    build_mode_operator, displacement_operator, propagate_on, Coefficient, FockBasis, HybridState, OperatorKind,
    PropagateOptions, PropagationStats, TermHamiltonian, C64,
};
use crate::{Error, Result};

/// Population allowed above the two-mode cutoff before an exchange refuses to act.
pub const TRUNCATION_THRESHOLD: f64 = 1e-8;

/// Largest `xi_j / d` for which the quadratic expansion is considered valid.
pub const EXPANSION_LIMIT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IonSpecies {
    /// kg
    pub mass: f64,
    /// C
    pub charge: f64,
}

impl IonSpecies {
    pub fn new(mass: f64, charge: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid("mass", "must be positive"));
        }
        if !(charge.is_finite() && charge != 0.0) {
            return Err(Error::invalid("charge", "must be non-zero"));
        }
        Ok(IonSpecies { mass, charge })
    }

    /// Singly charged beryllium-9.
    pub fn beryllium9() -> Self {
        IonSpecies { mass: BE9_MASS_U * ATOMIC_MASS_UNIT, charge: ELEMENTARY_CHARGE }
    }

    /// Ground-state extent `sqrt(hbar / (2 M nu))` in a trap of angular frequency `nu`.
    pub fn oscillator_length(&self, nu: f64) -> f64 {
        (HBAR / (2.0 * self.mass * nu)).sqrt()
    }
}

/// Two ions in separate axial wells a distance `distance` apart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapPair {
    pub ions: [IonSpecies; 2],
    /// Bare trap frequencies, rad/s.
    pub nu: [f64; 2],
    /// Metres.
    pub distance: f64,
}

impl TrapPair {
    pub fn new(ions: [IonSpecies; 2], nu: [f64; 2], distance: f64) -> Result<Self> {
        for ion in &ions {
            IonSpecies::new(ion.mass, ion.charge)?;
        }
        if !nu.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::invalid("nu", "trap frequencies must be positive"));
        }
        if !(distance.is_finite() && distance > 0.0) {
            return Err(Error::invalid("d", "distance must be positive"));
        }
        Ok(TrapPair { ions, nu, distance })
    }

    /// Identical species in two traps of equal frequency.
    pub fn symmetric(ion: IonSpecies, nu: f64, distance: f64) -> Result<Self> {
        TrapPair::new([ion, ion], [nu, nu], distance)
    }

    pub fn swapped(&self) -> Self {
        TrapPair { ions: [self.ions[1], self.ions[0]], nu: [self.nu[1], self.nu[0]], distance: self.distance }
    }

    pub fn with_nu(&self, which: usize, nu: f64) -> Result<Self> {
        let mut out = *self;
        *out.nu.get_mut(which).ok_or(Error::IndexOutOfRange { what: "ion", index: which, len: 2 })? = nu;
        TrapPair::new(out.ions, out.nu, out.distance)
    }

    /// Oscillator lengths `xi_j`, metres.
    pub fn xi(&self) -> [f64; 2] {
        [self.ions[0].oscillator_length(self.nu[0]), self.ions[1].oscillator_length(self.nu[1])]
    }

    /// Coulomb energy scale `q_1 q_2 / (4 pi eps_0 d)`, joules.
    pub fn coulomb_energy(&self) -> f64 {
        self.ions[0].charge * self.ions[1].charge / (4.0 * PI * VACUUM_PERMITTIVITY * self.distance)
    }

    /// True when both `xi_j / d` are below [`EXPANSION_LIMIT`].
    pub fn expansion_valid(&self) -> bool {
        self.xi().iter().all(|x| x / self.distance < EXPANSION_LIMIT)
    }
}

/// Exchange coupling `g = 2 K xi_1 xi_2 / (hbar d^2)`, rad/s.
pub fn coupling_g(pair: &TrapPair) -> f64 {
    let [x1, x2] = pair.xi();
    2.0 * pair.coulomb_energy() * x1 * x2 / (HBAR * pair.distance * pair.distance)
}

/// Coulomb shift `2 K xi_j^2 / (hbar d^2)` of mode `which`, rad/s.
pub fn frequency_shift(pair: &TrapPair, which: usize) -> Result<f64> {
    let xi = *pair.xi().get(which).ok_or(Error::IndexOutOfRange { what: "ion", index: which, len: 2 })?;
    Ok(2.0 * pair.coulomb_energy() * xi * xi / (HBAR * pair.distance * pair.distance))
}

/// Renormalized frequency `nu_j + 2 K xi_j^2 / (hbar d^2)`, rad/s.
pub fn renormalized_frequency(pair: &TrapPair, which: usize) -> Result<f64> {
    Ok(pair.nu[which.min(1)] + frequency_shift(pair, which)?)
}

/// Force term `(-1)^j K xi_j / (hbar d)` of mode `j` (1-based sign), rad/s.
fn force(pair: &TrapPair, which: usize) -> f64 {
    let sign = if which == 0 { -1.0 } else { 1.0 };
    sign * pair.coulomb_energy() * pair.xi()[which] / (HBAR * pair.distance)
}

/// Resonant exchange `exp(i g t (a_1 a_2^dag + a_1^dag a_2))` on the first
/// two mode factors of `state`.
pub fn exchange_evolve(state: &HybridState, g: f64, t: f64) -> Result<HybridState> {
    let modes = [state.mode_factor(0)?, state.mode_factor(1)?];
    exchange_evolve_modes(state, modes, g, t)
}

/// As [`exchange_evolve`] on an explicit pair of mode factors.
pub fn exchange_evolve_modes(state: &HybridState, modes: [usize; 2], g: f64, t: f64) -> Result<HybridState> {
    if !(g.is_finite() && t.is_finite()) {
        return Err(Error::invalid("g t", "must be finite"));
    }
    let b1 = state.fock_basis(modes[0])?;
    let b2 = state.fock_basis(modes[1])?;
    let cutoff = b1.n_max().min(b2.n_max());
    let block = state.gather(&modes)?;
    let population: f64 = block
        .outer_iter()
        .enumerate()
        .filter(|(i, _)| i / b2.dim() + i % b2.dim() > cutoff)
        .map(|(_, row)| row.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum();
    if population > TRUNCATION_THRESHOLD {
        return Err(Error::TruncationLeak { mode: modes[0], levels: cutoff + 1, population });
    }
    let u = exchange_unitary(b1, b2, g * t)?;
    state.scatter(&modes, &u.dot(&block))
}

/// `exp(i theta (a_1 a_2^dag + a_1^dag a_2))` on `b1 (x) b2`. Exact on every
/// block of total excitation up to the smaller cutoff.
pub fn exchange_unitary(b1: FockBasis, b2: FockBasis, theta: f64) -> Result<Array2<C64>> {
    let (d1, d2) = (b1.dim(), b2.dim());
    let mut u = Array2::zeros((d1 * d2, d1 * d2));
    // the hop conserves n_1 + n_2, so exponentiate each excitation block
    for total in 0..d1 + d2 - 1 {
        let first: Vec<usize> = (total.saturating_sub(d2 - 1)..=total.min(d1 - 1)).collect();
        let index = |n1: usize| n1 * d2 + (total - n1);
        let mut generator = Array2::zeros((first.len(), first.len()));
        for (i, &n1) in first.iter().enumerate().skip(1) {
            let amp = C64::new(0.0, theta * ((n1 * (total - n1 + 1)) as f64).sqrt());
            generator[[i - 1, i]] = amp;
            generator[[i, i - 1]] = amp;
        }
        let block = linalg::expm(&generator);
        for (i, &r) in first.iter().enumerate() {
            for (j, &c) in first.iter().enumerate() {
                u[[index(r), index(c)]] = block[[i, j]];
            }
        }
    }
    Ok(u)
}

fn ladder(b: FockBasis) -> Result<Array2<C64>> {
    Ok(build_mode_operator(b, OperatorKind::Annihilation, None)?.into_matrix())
}

/// Frame in which [`full_coupling_propagate`] prepares and reads out states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CouplingFrame {
    /// States are displaced about the static equilibrium of the coupled
    /// potential, so a Fock state means excitation above the shifted minimum.
    #[default]
    Equilibrium,
    /// States are taken literally about each trap's own minimum.
    TrapMinimum,
}

#[derive(Clone, Copy, Debug)]
pub struct FullCouplingOptions {
    pub frame: CouplingFrame,
    pub propagation: PropagateOptions,
}

impl Default for FullCouplingOptions {
    fn default() -> Self {
        FullCouplingOptions { frame: CouplingFrame::Equilibrium, propagation: PropagateOptions::with_tol(1e-8) }
    }
}

/// Interaction-picture Hamiltonian of the full quadratic expansion (rad/s),
/// relative to `omega_j a_j^dag a_j` with the renormalized `omega_j`:
///
/// ```text
/// sum_j [ F_j a_j e^{-i w_j t} + (shift_j / 2) a_j^2 e^{-2 i w_j t} ]
///   - g [ a_1 a_2 e^{-i(w_1 + w_2) t} + a_1 a_2^dag e^{-i(w_1 - w_2) t} ] + h.c.
/// ```
pub fn full_coupling_hamiltonian(pair: &TrapPair, b1: FockBasis, b2: FockBasis) -> Result<TermHamiltonian> {
    let omega = [renormalized_frequency(pair, 0)?, renormalized_frequency(pair, 1)?];
    let g = coupling_g(pair);
    let a = [kron(&ladder(b1)?, &linalg::identity(b2.dim())), kron(&linalg::identity(b1.dim()), &ladder(b2)?)];
    let mut h = TermHamiltonian::new(b1.dim() * b2.dim());
    for j in 0..2 {
        let f = force(pair, j);
        let s = 0.5 * frequency_shift(pair, j)?;
        h.add_with_adjoint(&a[j], Coefficient::Oscillating { amplitude: C64::new(f, 0.0), frequency: -omega[j] })?;
        h.add_with_adjoint(
            &a[j].dot(&a[j]),
            Coefficient::Oscillating { amplitude: C64::new(s, 0.0), frequency: -2.0 * omega[j] },
        )?;
    }
    let minus_g = C64::new(-g, 0.0);
    h.add_with_adjoint(
        &a[0].dot(&a[1]),
        Coefficient::Oscillating { amplitude: minus_g, frequency: -(omega[0] + omega[1]) },
    )?;
    h.add_with_adjoint(
        &a[0].dot(&linalg::adjoint(&a[1])),
        Coefficient::Oscillating { amplitude: minus_g, frequency: omega[1] - omega[0] },
    )?;
    Ok(h)
}

/// Static displacements `alpha_j` (units of `xi_j`) of the two modes at the
/// minimum of the coupled quadratic potential.
pub fn equilibrium_displacement(pair: &TrapPair) -> Result<[f64; 2]> {
    let omega = [renormalized_frequency(pair, 0)?, renormalized_frequency(pair, 1)?];
    let shift = [frequency_shift(pair, 0)?, frequency_shift(pair, 1)?];
    let g = coupling_g(pair);
    let m11 = 2.0 * omega[0] + 2.0 * shift[0];
    let m22 = 2.0 * omega[1] + 2.0 * shift[1];
    let m12 = -4.0 * g;
    let rhs = [-2.0 * force(pair, 0), -2.0 * force(pair, 1)];
    let det = m11 * m22 - m12 * m12;
    if det.abs() <= f64::EPSILON * m11 * m22 {
        return Err(Error::invalid("d", "coupled potential has no stable minimum"));
    }
    Ok([(rhs[0] * m22 - m12 * rhs[1]) / det, (m11 * rhs[1] - m12 * rhs[0]) / det])
}

/// Integrates [`full_coupling_hamiltonian`] for `t` seconds on the first two
/// mode factors of `state`. The result is in the interaction picture of the
/// renormalized frequencies, directly comparable with [`exchange_evolve`].
pub fn full_coupling_propagate(
    state: &HybridState,
    pair: &TrapPair,
    t: f64,
    opts: &FullCouplingOptions,
) -> Result<(HybridState, PropagationStats)> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", "must be non-negative"));
    }
    let modes = [state.mode_factor(0)?, state.mode_factor(1)?];
    let bases = [state.fock_basis(modes[0])?, state.fock_basis(modes[1])?];
    let h = full_coupling_hamiltonian(pair, bases[0], bases[1])?;
    let omega = [renormalized_frequency(pair, 0)?, renormalized_frequency(pair, 1)?];
    let alpha = match opts.frame {
        CouplingFrame::Equilibrium => equilibrium_displacement(pair)?,
        CouplingFrame::TrapMinimum => [0.0, 0.0],
    };
    let dress = |phase: [f64; 2]| -> Result<Array2<C64>> {
        let d1 = displacement_operator(bases[0], C64::from_polar(alpha[0], phase[0]))?;
        let d2 = displacement_operator(bases[1], C64::from_polar(alpha[1], phase[1]))?;
        Ok(kron(d1.matrix(), d2.matrix()))
    };
    let start = apply_renormalized(state, &modes, &dress([0.0, 0.0])?)?;
    let (evolved, stats) = propagate_on(&start, &modes, &h, (0.0, t), &opts.propagation)?;
    let undress = linalg::adjoint(&dress([omega[0] * t, omega[1] * t])?);
    Ok((apply_renormalized(&evolved, &modes, &undress)?, stats))
}

/// Applies a map that is unitary only up to a truncation tail.
fn apply_renormalized(state: &HybridState, targets: &[usize], op: &Array2<C64>) -> Result<HybridState> {
    let out = op.dot(&state.gather(targets)?);
    let norm = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    state.scatter(targets, &out.mapv(|z| z / norm))
}
