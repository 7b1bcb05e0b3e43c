//! Time-ordered propagation `i d psi/dt = H(t) psi` (hbar = 1, H in rad/s).
//!
//! Steps use the fourth-order commutator-free Magnus scheme with two Gauss
//! nodes; each exponential is applied to the state through its Taylor series,
//! so only Hamiltonian-vector products are needed. Accuracy is controlled
//! globally: the step count is doubled until halving the step changes no
//! final amplitude by more than `tol`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use ndarray::Array2;

use super::linalg::{self, SparseMatrix, SparsePattern};
use super::{HybridState, C64};
use crate::{Error, Result};

pub trait Hamiltonian: Sync {
    fn dim(&self) -> usize;

    /// `sum_i w_i H(t_i)` for `samples = [(t_i, w_i)]`.
    fn combine(&self, samples: &[(f64, f64)]) -> SparseMatrix;

    /// Upper estimate of `|H(t)|` on `[t0, t1]`, rad/s.
    fn norm_bound(&self, t0: f64, t1: f64) -> f64;

    /// Fastest explicit oscillation in the coefficients, rad/s.
    fn max_frequency(&self) -> f64 {
        0.0
    }

    fn matrix(&self, t: f64) -> Array2<C64> {
        self.combine(&[(t, 1.0)]).to_dense()
    }
}

/// Time dependence of one Hamiltonian term.
#[derive(Clone)]
pub enum Coefficient {
    Constant(C64),
    /// `amplitude * exp(i frequency t)`
    Oscillating {
        amplitude: C64,
        frequency: f64,
    },
    /// `envelope(t) * exp(i frequency t)` with a slowly varying envelope.
    Modulated {
        envelope: Arc<dyn Fn(f64) -> C64 + Send + Sync>,
        frequency: f64,
    },
}

impl Coefficient {
    pub fn at(&self, t: f64) -> C64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Oscillating { amplitude, frequency } => amplitude * C64::from_polar(1.0, frequency * t),
            Coefficient::Modulated { envelope, frequency } => envelope(t) * C64::from_polar(1.0, frequency * t),
        }
    }

    pub fn conj(&self) -> Coefficient {
        match self {
            Coefficient::Constant(c) => Coefficient::Constant(c.conj()),
            Coefficient::Oscillating { amplitude, frequency } => {
                Coefficient::Oscillating { amplitude: amplitude.conj(), frequency: -frequency }
            }
            Coefficient::Modulated { envelope, frequency } => {
                let env = Arc::clone(envelope);
                Coefficient::Modulated { envelope: Arc::new(move |t| env(t).conj()), frequency: -frequency }
            }
        }
    }

    fn frequency(&self) -> f64 {
        match self {
            Coefficient::Constant(_) => 0.0,
            Coefficient::Oscillating { frequency, .. } | Coefficient::Modulated { frequency, .. } => frequency.abs(),
        }
    }

    fn magnitude_bound(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => c.norm(),
            Coefficient::Oscillating { amplitude, .. } => amplitude.norm(),
            Coefficient::Modulated { envelope, .. } => {
                (0..=64).map(|i| envelope(t0 + (t1 - t0) * i as f64 / 64.0).norm()).fold(0.0, f64::max)
            }
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Oscillating { amplitude, frequency } => write!(f, "Oscillating({amplitude}, {frequency})"),
            Coefficient::Modulated { frequency, .. } => write!(f, "Modulated(.., {frequency})"),
        }
    }
}

/// `H(t) = sum_j c_j(t) M_j` with sparse constant matrices.
#[derive(Clone, Debug)]
pub struct TermHamiltonian {
    dim: usize,
    terms: Vec<(SparseMatrix, Coefficient)>,
    pattern: OnceLock<SparsePattern>,
}

impl TermHamiltonian {
    pub fn new(dim: usize) -> Self {
        TermHamiltonian { dim, terms: Vec::new(), pattern: OnceLock::new() }
    }

    /// Adds `c(t) M`. The caller is responsible for hermiticity.
    pub fn add(&mut self, op: &Array2<C64>, coefficient: Coefficient) -> Result<()> {
        if op.nrows() != self.dim || op.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: op.nrows() });
        }
        let m = SparseMatrix::from_dense(op);
        if m.nnz() > 0 {
            self.terms.push((m, coefficient));
            self.pattern = OnceLock::new();
        }
        Ok(())
    }

    /// Adds `c(t) M + conj(c(t)) M^dag`.
    pub fn add_with_adjoint(&mut self, op: &Array2<C64>, coefficient: Coefficient) -> Result<()> {
        self.add(&linalg::adjoint(op), coefficient.conj())?;
        self.add(op, coefficient)
    }

    pub fn terms(&self) -> usize {
        self.terms.len()
    }
}

impl Hamiltonian for TermHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn combine(&self, samples: &[(f64, f64)]) -> SparseMatrix {
        let parts: Vec<&SparseMatrix> = self.terms.iter().map(|(m, _)| m).collect();
        let pattern = self.pattern.get_or_init(|| SparsePattern::new(self.dim, &parts));
        let coefs: Vec<C64> = self.terms.iter().map(|(_, c)| samples.iter().map(|&(t, w)| c.at(t) * w).sum()).collect();
        pattern.combine(&parts, &coefs)
    }

    fn norm_bound(&self, t0: f64, t1: f64) -> f64 {
        self.terms.iter().map(|(m, c)| m.norm_bound() * c.magnitude_bound(t0, t1)).sum()
    }

    fn max_frequency(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.frequency()).fold(0.0, f64::max)
    }
}

/// Hamiltonian given as a closure returning a dense matrix.
pub struct DenseHamiltonian<F> {
    dim: usize,
    f: F,
}

impl<F> DenseHamiltonian<F>
where
    F: Fn(f64) -> Array2<C64> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        DenseHamiltonian { dim, f }
    }
}

impl<F> Hamiltonian for DenseHamiltonian<F>
where
    F: Fn(f64) -> Array2<C64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn combine(&self, samples: &[(f64, f64)]) -> SparseMatrix {
        let mut sum = Array2::zeros((self.dim, self.dim));
        for &(t, w) in samples {
            sum += &(self.f)(t).mapv(|z| z * w);
        }
        SparseMatrix::from_dense(&sum)
    }

    fn norm_bound(&self, t0: f64, t1: f64) -> f64 {
        (0..=16).map(|i| linalg::one_norm(&(self.f)(t0 + (t1 - t0) * i as f64 / 16.0))).fold(0.0, f64::max)
    }

    fn matrix(&self, t: f64) -> Array2<C64> {
        (self.f)(t)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PropagateOptions {
    /// Largest accepted change of any final amplitude when the step is halved.
    pub tol: f64,
    pub max_steps: usize,
    pub min_steps: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions { tol: 1e-9, max_steps: 1 << 22, min_steps: 8 }
    }
}

impl PropagateOptions {
    pub fn with_tol(tol: f64) -> Self {
        PropagateOptions { tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PropagationStats {
    pub steps: usize,
    /// Change of the final amplitudes between the last two step counts.
    pub residual: f64,
}

const HERMITIAN_TOL: f64 = 1e-12;
const HERMITIAN_CHECK_MAX_DIM: usize = 1024;

/// Propagates a whole state.
pub fn propagate(
    state: &HybridState,
    hamiltonian: &dyn Hamiltonian,
    t_span: (f64, f64),
    opts: &PropagateOptions,
) -> Result<HybridState> {
    let all: Vec<usize> = (0..state.factors().len()).collect();
    propagate_on(state, &all, hamiltonian, t_span, opts).map(|(s, _)| s)
}

/// Propagates under a Hamiltonian acting on the listed factors only.
pub fn propagate_on(
    state: &HybridState,
    factors: &[usize],
    hamiltonian: &dyn Hamiltonian,
    t_span: (f64, f64),
    opts: &PropagateOptions,
) -> Result<(HybridState, PropagationStats)> {
    let mut stats = PropagationStats::default();
    let out = state.map_block(factors, |block| {
        let (b, s) = propagate_block(&block, hamiltonian, t_span, opts)?;
        stats = s;
        Ok(b)
    })?;
    Ok((out, stats))
}

/// Propagates each column of `block`.
pub fn propagate_block(
    block: &Array2<C64>,
    hamiltonian: &dyn Hamiltonian,
    (t0, t1): (f64, f64),
    opts: &PropagateOptions,
) -> Result<(Array2<C64>, PropagationStats)> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    if block.nrows() != hamiltonian.dim() {
        return Err(Error::DimensionMismatch { expected: hamiltonian.dim(), found: block.nrows() });
    }
    check_hermitian(hamiltonian, t0, t1)?;
    if t1 == t0 {
        return Ok((block.clone(), PropagationStats::default()));
    }

    let span = (t1 - t0).abs();
    let norm = hamiltonian.norm_bound(t0.min(t1), t0.max(t1));
    let rate = norm + hamiltonian.max_frequency();
    let mut steps = ((span * rate).ceil() as usize).max(opts.min_steps).max(1);

    let mut coarse = evolve_fixed(block, hamiltonian, t0, t1, steps);
    loop {
        if 2 * steps > opts.max_steps {
            let fine = evolve_fixed(block, hamiltonian, t0, t1, opts.max_steps);
            let residual = linalg::max_abs_diff(coarse.view(), fine.view());
            return Err(Error::PropagationBudget { tol: opts.tol, max_steps: opts.max_steps, residual });
        }
        steps *= 2;
        let fine = evolve_fixed(block, hamiltonian, t0, t1, steps);
        let residual = linalg::max_abs_diff(coarse.view(), fine.view());
        if residual < opts.tol {
            let drift = column_norm_drift(block, &fine);
            if drift > opts.tol.max(1e-10) {
                return Err(Error::NormDrift { drift });
            }
            return Ok((fine, PropagationStats { steps, residual }));
        }
        coarse = fine;
    }
}

fn check_hermitian(h: &dyn Hamiltonian, t0: f64, t1: f64) -> Result<()> {
    if h.dim() > HERMITIAN_CHECK_MAX_DIM {
        return Ok(());
    }
    for t in [t0, 0.5 * (t0 + t1), t1] {
        let m = h.matrix(t);
        let scale = linalg::max_abs(&m);
        let deviation = linalg::hermitian_deviation(&m);
        if deviation > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) && deviation > 0.0 {
            return Err(Error::NonHermitian { time: t, deviation });
        }
    }
    Ok(())
}

fn column_norm_drift(before: &Array2<C64>, after: &Array2<C64>) -> f64 {
    before
        .columns()
        .into_iter()
        .zip(after.columns())
        .map(|(a, b)| {
            let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (na - nb).abs()
        })
        .fold(0.0, f64::max)
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn evolve_fixed(block: &Array2<C64>, h: &dyn Hamiltonian, t0: f64, t1: f64, steps: usize) -> Array2<C64> {
    let dt = (t1 - t0) / steps as f64;
    let (c1, c2) = (0.5 - SQRT3 / 6.0, 0.5 + SQRT3 / 6.0);
    let (a1, a2) = (0.25 - SQRT3 / 6.0, 0.25 + SQRT3 / 6.0);
    let mut psi = block.clone();
    let mut scratch = Array2::zeros(block.dim());
    for i in 0..steps {
        let t = t0 + dt * i as f64;
        let (ta, tb) = (t + c1 * dt, t + c2 * dt);
        psi = exp_action(h, &[(ta, a2), (tb, a1)], dt, psi, &mut scratch);
        psi = exp_action(h, &[(ta, a1), (tb, a2)], dt, psi, &mut scratch);
    }
    psi
}

/// `exp(-i dt sum_i w_i H(t_i)) psi` by Taylor series, sub-stepped so each
/// series argument has norm below one.
fn exp_action(
    h: &dyn Hamiltonian,
    samples: &[(f64, f64)],
    dt: f64,
    psi: Array2<C64>,
    scratch: &mut Array2<C64>,
) -> Array2<C64> {
    let m = h.combine(samples);
    let arg = dt.abs() * m.norm_bound();
    let substeps = (arg.ceil() as usize).max(1);
    let scale = C64::new(0.0, -dt / substeps as f64);

    let mut v = psi;
    for _ in 0..substeps {
        let mut term = v.clone();
        let mut sum = v;
        for k in 1..=60 {
            scratch.fill(C64::new(0.0, 0.0));
            m.mul_add(scale / k as f64, term.view(), scratch);
            std::mem::swap(&mut term, scratch);
            sum += &term;
            if linalg::max_norm_sqr(&term) <= 1e-33 * linalg::max_norm_sqr(&sum) {
                break;
            }
        }
        v = sum;
    }
    v
}
