//! Laser coupling of one ion's internal qubit to its axial vibration,
//! evaluated without the Lamb-Dicke expansion.
//!
//! For a laser tuned to the k-th red sideband (`omega_l = omega_a - k nu`)
//! the rotating-wave Hamiltonian couples `|m+k, g>` to `|m, e>` only, with
//! matrix element `exp(-i phase) i^k Omega_{m,k}`. Each such pair therefore
//! undergoes an independent Rabi rotation, which [`sideband_evolve`] applies
//! in closed form.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use ndarray::Array2;

use crate::fockspace::linalg::{self, kron};
use crate::fockspace::{
    build_mode_operator, propagate_on, qubit_operator, Coefficient, Factor, FockBasis, HybridState, OperatorKind,
    PropagateOptions, QubitOperator, TermHamiltonian, C64,
};
use crate::{Error, Result};

/// Population threshold in the top `k` Fock levels above which a sideband
/// map refuses to act.
pub const TRUNCATION_THRESHOLD: f64 = 1e-8;

/// A square laser pulse resonant with the `sideband`-th red sideband
/// (0 = carrier).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaserPulse {
    /// Rabi frequency Omega, rad/s.
    pub rabi: f64,
    /// Lamb-Dicke parameter.
    pub eta: f64,
    pub sideband: usize,
    /// Laser phase, rad.
    pub phase: f64,
    /// Seconds.
    pub duration: f64,
}

impl LaserPulse {
    pub fn new(rabi: f64, eta: f64, sideband: usize, phase: f64, duration: f64) -> Result<Self> {
        if !(rabi.is_finite() && rabi >= 0.0) {
            return Err(Error::invalid("rabi", "must be a non-negative angular frequency"));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::invalid("eta", "must be non-negative"));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("phase", "must be finite"));
        }
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::invalid("duration", "must be non-negative"));
        }
        Ok(LaserPulse { rabi, eta, sideband, phase, duration })
    }

    /// Rabi frequency of the `|m+k, g> <-> |m, e>` transition driven by this pulse.
    pub fn rabi_for(&self, m: usize) -> f64 {
        rabi_mk(self.rabi, self.eta, m, self.sideband)
    }
}

/// Internal transition of the ion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InternalLevels {
    /// `(E_e - E_g) / hbar`, rad/s.
    pub omega_a: f64,
}

impl InternalLevels {
    pub fn new(omega_a: f64) -> Result<Self> {
        if !(omega_a.is_finite() && omega_a > 0.0) {
            return Err(Error::invalid("omega_a", "must be positive"));
        }
        Ok(InternalLevels { omega_a })
    }
}

/// Beyond-Lamb-Dicke Rabi frequency
///
/// ```text
/// Omega_{m,k} = (Omega/2) eta^k e^{-eta^2/2} sqrt((m+k)!/m!)
///               * sum_{j=0}^{m} (-eta^2)^j m! / ((j+k)! j! (m-j)!)
/// ```
///
/// The sum is a generalised Laguerre polynomial and may be negative. All
/// factorials enter through running ratios so large `m + k` cannot overflow.
pub fn rabi_mk(rabi: f64, eta: f64, m: usize, k: usize) -> f64 {
    let x = eta * eta;
    // sum_j C(m, j) (-x)^j k!/(j+k)!, first term 1
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 0..m {
        term *= -x * (m - j) as f64 / ((j + 1) as f64 * (j + k + 1) as f64);
        sum += term;
    }
    // eta^k sqrt((m+k)!/m!) / k!
    let mut prefactor = 1.0;
    for i in 1..=k {
        prefactor *= eta * ((m + i) as f64).sqrt() / i as f64;
    }
    0.5 * rabi * (-0.5 * x).exp() * prefactor * sum
}

/// Closed-form sideband map on a single-ion `(qubit, mode)` block.
///
/// Columns follow the ion layout `qubit * dim + n`. Pairs whose excited
/// partner would lie above the cutoff (`|m, e>` with `m > n_max - k`) are
/// left untouched; callers check they are empty.
pub fn sideband_unitary(basis: FockBasis, pulse: &LaserPulse) -> Array2<C64> {
    sideband_unitary_with_angles(basis, pulse.sideband, pulse.phase, |m| pulse.rabi_for(m) * pulse.duration)
}

/// As [`sideband_unitary`] with an explicit rotation angle for every pair
/// `(|m+k, g>, |m, e>)`.
pub fn sideband_unitary_with_angles(
    basis: FockBasis,
    k: usize,
    phase: f64,
    angle: impl Fn(usize) -> f64,
) -> Array2<C64> {
    let dim = basis.dim();
    let g = |n: usize| n;
    let e = |n: usize| dim + n;
    let i = C64::new(0.0, 1.0);
    // i^{k-1} e^{-i phase} and -(-i)^{k-1} e^{i phase}
    let up = i.powi(k as i32 - 1) * C64::from_polar(1.0, -phase);
    let down = -(-i).powi(k as i32 - 1) * C64::from_polar(1.0, phase);

    let mut u = Array2::<C64>::zeros((2 * dim, 2 * dim));
    for n in 0..k.min(dim) {
        u[[g(n), g(n)]] = C64::new(1.0, 0.0);
    }
    for m in 0..dim {
        if m + k >= dim {
            u[[e(m), e(m)]] = C64::new(1.0, 0.0);
            continue;
        }
        let theta = angle(m);
        let (s, c) = theta.sin_cos();
        // |m+k, g> -> cos |m+k, g> + i^{k-1} e^{-i phase} sin |m, e>
        u[[g(m + k), g(m + k)]] = C64::new(c, 0.0);
        u[[e(m), g(m + k)]] = up * s;
        // |m, e> -> cos |m, e> - (-i)^{k-1} e^{i phase} sin |m+k, g>
        u[[e(m), e(m)]] = C64::new(c, 0.0);
        u[[g(m + k), e(m)]] = down * s;
    }
    u
}

/// Applies the closed-form sideband evolution to a single-ion state.
pub fn sideband_evolve(state: &HybridState, pulse: &LaserPulse) -> Result<HybridState> {
    single_ion(state)?;
    sideband_evolve_ion(state, 0, pulse)
}

/// Applies the closed-form sideband evolution to ion `ion` of a multi-ion state.
pub fn sideband_evolve_ion(state: &HybridState, ion: usize, pulse: &LaserPulse) -> Result<HybridState> {
    let [q, mode] = state.ion_factors(ion)?;
    state.check_truncation(mode, pulse.sideband, TRUNCATION_THRESHOLD)?;
    let basis = state.fock_basis(mode)?;
    state.apply_local(&sideband_unitary(basis, pulse), &[q, mode])
}

/// The rotating-wave sideband Hamiltonian (rad/s) on a `(qubit, mode)` block,
/// assembled from ladder-operator powers:
///
/// ```text
/// H = (Omega/2) e^{-eta^2/2 - i phase} (i eta)^k sigma_+
///     sum_j (i eta)^{2j} (a^dag)^j a^{j+k} / (j! (j+k)!)  + h.c.
/// ```
pub fn rwa_hamiltonian(basis: FockBasis, pulse: &LaserPulse) -> Result<TermHamiltonian> {
    let dim = basis.dim();
    let k = pulse.sideband;
    let a = build_mode_operator(basis, OperatorKind::Annihilation, None)?.into_matrix();
    let ad = linalg::adjoint(&a);
    let pow = |m: &Array2<C64>, p: usize| (0..p).fold(linalg::identity(dim), |acc, _| acc.dot(m));

    let ieta = C64::new(0.0, pulse.eta);
    let mut series = Array2::<C64>::zeros((dim, dim));
    let mut fact_j = 1.0;
    let mut fact_jk: f64 = (1..=k).map(|i| i as f64).product();
    for j in 0..dim {
        if j > 0 {
            fact_j *= j as f64;
            fact_jk *= (j + k) as f64;
        }
        let c = ieta.powi(2 * j as i32) / (fact_j * fact_jk);
        series = series + pow(&ad, j).dot(&pow(&a, j + k)).mapv(|z| z * c);
    }
    let sigma_plus = qubit_operator(QubitOperator::Raising).into_matrix();
    let op = kron(&sigma_plus, &series);
    let amp = 0.5
        * pulse.rabi
        * (-0.5 * pulse.eta * pulse.eta).exp()
        * C64::from_polar(1.0, -pulse.phase)
        * ieta.powi(k as i32);
    let mut h = TermHamiltonian::new(2 * dim);
    h.add_with_adjoint(&op, Coefficient::Constant(amp))?;
    Ok(h)
}

/// Result of [`solve_cnot_duration`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CnotDuration {
    /// Pulse length, seconds.
    pub duration: f64,
    /// `max(1 - cos(Omega_00 t), 1 - sin(Omega_10 t))` at `duration`.
    pub error: f64,
    /// Full carrier turns of `|0>`: `Omega_00 t ~ 2 pi p`.
    pub carrier_turns: u32,
    /// `Omega_10 t ~ pi/2 + 2 pi r`.
    pub flip_turns: i64,
}

/// Finds the shortest single carrier pulse that leaves `|0, g>` alone and
/// flips the qubit of `|1, g>`, i.e. `cos(Omega_00 t) = sin(Omega_10 t) = 1`.
///
/// Both conditions cannot hold exactly in general. For every carrier turn
/// count `p` the nearest flip count `r` is taken and `t` is moved to the point
/// where the two deviations are equal, which minimises their maximum. The
/// first `(p, r)` whose error is within `tol` is returned.
pub fn solve_cnot_duration(rabi: f64, eta: f64, tol: f64, t_max: f64) -> Result<CnotDuration> {
    if !(tol > 0.0) {
        return Err(Error::invalid("infidelity_tol", "must be positive"));
    }
    if !(t_max > 0.0) {
        return Err(Error::invalid("t_max", "must be positive"));
    }
    let a = rabi_mk(rabi, eta, 0, 0);
    let b = rabi_mk(rabi, eta, 1, 0);
    if !(a > 0.0) || (a - b).abs() <= 1e-12 * a {
        return Err(Error::DegenerateCarrier);
    }
    let objective = |t: f64| (1.0 - (a * t).cos()).max(1.0 - (b * t).sin());

    let mut best = f64::INFINITY;
    let p_max = (a * t_max / TAU).ceil() as u32 + 1;
    for p in 1..=p_max {
        let t_a = TAU * p as f64 / a;
        let r = ((b * t_a - FRAC_PI_2) / TAU).round() as i64;
        let t_b = (FRAC_PI_2 + TAU * r as f64) / b;
        if !(t_b > 0.0) || (t_b - t_a).abs() > PI / a.max(b.abs()) {
            best = best.min(objective(t_a));
            continue;
        }
        // the cos deviation grows away from t_a, the sin deviation shrinks
        // towards t_b: bisect on their difference
        let (mut lo, mut hi) = (t_a, t_b);
        let diff = |t: f64| (1.0 - (a * t).cos()) - (1.0 - (b * t).sin());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if diff(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let err = objective(t);
        best = best.min(err);
        if t > t_max {
            break;
        }
        if err <= tol {
            return Ok(CnotDuration { duration: t, error: err, carrier_turns: p, flip_turns: r });
        }
    }
    Err(Error::NoCnotDuration { t_max, tol, best_error: best })
}

#[derive(Clone, Copy, Debug)]
pub struct FullModelOptions {
    /// Keep terms with `n + m <= order_cutoff` in the normal-ordered
    /// expansion of `exp(i eta (a + a^dag))`. `None` keeps every term that
    /// acts within the truncated basis.
    pub order_cutoff: Option<usize>,
    /// Retain the sum-frequency (`omega_a + omega_l`) terms of a transition
    /// at these levels. Only sensible with a scaled-down `omega_a`.
    pub sum_frequency: Option<InternalLevels>,
    pub propagation: PropagateOptions,
}

impl Default for FullModelOptions {
    fn default() -> Self {
        FullModelOptions { order_cutoff: None, sum_frequency: None, propagation: PropagateOptions::with_tol(1e-8) }
    }
}

/// Interaction-picture laser-ion Hamiltonian without the rotating-wave
/// approximation on the vibrational sidebands:
///
/// ```text
/// H(t) = (Omega/2) sigma_+ [ e^{i(k nu t - phase)} D_eta(t)
///                          + e^{i((2 omega_a - k nu) t + phase)} D_{-eta}(t) ] + h.c.
/// ```
///
/// with `D_eta(t)_{nm} = <n| exp(i eta (a + a^dag)) |m> e^{i (n - m) nu t}`.
/// The second (sum-frequency) bracket is only included when
/// [`FullModelOptions::sum_frequency`] is set.
pub fn interaction_hamiltonian(
    basis: FockBasis,
    pulse: &LaserPulse,
    trap_nu: f64,
    opts: &FullModelOptions,
) -> Result<TermHamiltonian> {
    if !(trap_nu.is_finite() && trap_nu > 0.0) {
        return Err(Error::invalid("trap_nu", "must be positive"));
    }
    let dim = basis.dim();
    let cutoff = opts.order_cutoff.unwrap_or(2 * basis.n_max());
    if cutoff < 1 {
        return Err(Error::invalid("order_cutoff", "must be at least 1"));
    }
    let sigma_plus = qubit_operator(QubitOperator::Raising).into_matrix();
    let k = pulse.sideband as f64;
    let half = 0.5 * pulse.rabi;
    let mut h = TermHamiltonian::new(2 * dim);

    let mut brackets = vec![(pulse.eta, C64::from_polar(half, -pulse.phase), k * trap_nu)];
    if let Some(levels) = opts.sum_frequency {
        brackets.push((-pulse.eta, C64::from_polar(half, pulse.phase), 2.0 * levels.omega_a - k * trap_nu));
    }
    for (eta, amplitude, base_freq) in brackets {
        let d = normal_ordered_displacement(basis, eta, cutoff)?;
        for shift in -(basis.n_max() as i64)..=(basis.n_max() as i64) {
            let mut band = Array2::<C64>::zeros((dim, dim));
            for n in 0..dim {
                let m = n as i64 - shift;
                if (0..dim as i64).contains(&m) {
                    band[[n, m as usize]] = d[[n, m as usize]];
                }
            }
            let op = kron(&sigma_plus, &band);
            h.add_with_adjoint(
                &op,
                Coefficient::Oscillating { amplitude, frequency: base_freq + shift as f64 * trap_nu },
            )?;
        }
    }
    Ok(h)
}

/// `e^{-eta^2/2} sum_{n+m<=cutoff} (i eta)^{n+m} (a^dag)^n a^m / (n! m!)`.
fn normal_ordered_displacement(basis: FockBasis, eta: f64, cutoff: usize) -> Result<Array2<C64>> {
    let dim = basis.dim();
    let a = build_mode_operator(basis, OperatorKind::Annihilation, None)?.into_matrix();
    let ad = linalg::adjoint(&a);
    let mut ad_pows = vec![linalg::identity(dim)];
    let mut a_pows = vec![linalg::identity(dim)];
    for p in 1..dim {
        ad_pows.push(ad_pows[p - 1].dot(&ad).mapv(|z| z / p as f64));
        a_pows.push(a_pows[p - 1].dot(&a).mapv(|z| z / p as f64));
    }
    let ieta = C64::new(0.0, eta);
    let mut d = Array2::<C64>::zeros((dim, dim));
    for n in 0..dim {
        for m in 0..dim {
            if n + m > cutoff {
                continue;
            }
            let c = ieta.powi((n + m) as i32);
            d = d + ad_pows[n].dot(&a_pows[m]).mapv(|z| z * c);
        }
    }
    Ok(d.mapv(|z| z * (-0.5 * eta * eta).exp()))
}

/// Numerically integrates a pulse under [`interaction_hamiltonian`]. Used to
/// validate the rotating-wave closed form.
pub fn full_interaction_propagate(
    state: &HybridState,
    pulse: &LaserPulse,
    trap_nu: f64,
    opts: &FullModelOptions,
) -> Result<HybridState> {
    single_ion(state)?;
    full_interaction_propagate_ion(state, 0, pulse, trap_nu, opts)
}

pub fn full_interaction_propagate_ion(
    state: &HybridState,
    ion: usize,
    pulse: &LaserPulse,
    trap_nu: f64,
    opts: &FullModelOptions,
) -> Result<HybridState> {
    let [q, mode] = state.ion_factors(ion)?;
    let basis = state.fock_basis(mode)?;
    let h = interaction_hamiltonian(basis, pulse, trap_nu, opts)?;
    propagate_on(state, &[q, mode], &h, (0.0, pulse.duration), &opts.propagation).map(|(s, _)| s)
}

fn single_ion(state: &HybridState) -> Result<()> {
    match state.factors() {
        [Factor::Qubit, Factor::Mode(_)] => Ok(()),
        _ => Err(Error::Layout("expected a single-ion (qubit, mode) state".into())),
    }
}
