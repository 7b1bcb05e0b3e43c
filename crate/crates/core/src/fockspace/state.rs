use ndarray::{Array1, Array2};

use super::{Factor, FockBasis, Tensor, C64};
use crate::{Error, Result};

/// Internal level of an ion qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Ground,
    Excited,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::Ground => 0,
            Level::Excited => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Level> {
        match i {
            0 => Some(Level::Ground),
            1 => Some(Level::Excited),
            _ => None,
        }
    }
}

const NORM_TOL: f64 = 1e-10;

/// Normalised pure state over an ordered list of qubit and mode factors.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    factors: Vec<Factor>,
    amplitudes: Array1<C64>,
}

/// Index bookkeeping for viewing a state as `(acted-on factors) x (rest)`.
struct Split {
    sub_dim: usize,
    batch_dim: usize,
    // (sub index, batch index) for every flat index
    map: Vec<(usize, usize)>,
}

impl HybridState {
    pub fn from_amplitudes(factors: Vec<Factor>, amplitudes: Array1<C64>) -> Result<Self> {
        let dim: usize = factors.iter().map(Factor::dim).product();
        if factors.is_empty() {
            return Err(Error::Layout("a state needs at least one factor".into()));
        }
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: amplitudes.len() });
        }
        let s = HybridState { factors, amplitudes };
        let drift = (s.norm() - 1.0).abs();
        if drift > NORM_TOL {
            return Err(Error::NormDrift { drift });
        }
        Ok(s)
    }

    /// Like [`from_amplitudes`](Self::from_amplitudes) but rescales to unit norm.
    pub fn normalized(factors: Vec<Factor>, mut amplitudes: Array1<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("amplitudes", "cannot normalise a zero vector"));
        }
        amplitudes.mapv_inplace(|z| z / norm);
        Self::from_amplitudes(factors, amplitudes)
    }

    pub fn basis_state(factors: Vec<Factor>, indices: &[usize]) -> Result<Self> {
        let dim: usize = factors.iter().map(Factor::dim).product();
        let idx = flat_index(&factors, indices)?;
        let mut amplitudes = Array1::zeros(dim);
        amplitudes[idx] = C64::new(1.0, 0.0);
        Self::from_amplitudes(factors, amplitudes)
    }

    /// Single ion `|n, level>`.
    pub fn ion(level: Level, n: usize, basis: FockBasis) -> Result<Self> {
        Self::ions(&[(level, n)], basis)
    }

    /// Product of ions, each `|n_j, level_j>` with the same Fock truncation.
    pub fn ions(levels: &[(Level, usize)], basis: FockBasis) -> Result<Self> {
        let mut factors = Vec::with_capacity(2 * levels.len());
        let mut idx = Vec::with_capacity(2 * levels.len());
        for &(level, n) in levels {
            factors.push(Factor::Qubit);
            factors.push(Factor::Mode(basis));
            idx.push(level.index());
            idx.push(n);
        }
        Self::basis_state(factors, &idx)
    }

    /// Product of Fock states of bare modes, `|n_1>|n_2>...`.
    pub fn modes(occupations: &[usize], basis: FockBasis) -> Result<Self> {
        Self::basis_state(vec![Factor::Mode(basis); occupations.len()], occupations)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Factor::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn index_of(&self, indices: &[usize]) -> Result<usize> {
        flat_index(&self.factors, indices)
    }

    pub fn amplitude(&self, indices: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.index_of(indices)?])
    }

    pub fn probability(&self, indices: &[usize]) -> Result<f64> {
        Ok(self.amplitude(indices)?.norm_sqr())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &HybridState) -> Result<C64> {
        if self.factors != other.factors {
            return Err(Error::Layout("inner product of states with different factor layouts".into()));
        }
        Ok(self.amplitudes.iter().zip(other.amplitudes.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &HybridState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Largest amplitude difference to another state with the same layout.
    pub fn max_abs_diff(&self, other: &HybridState) -> Result<f64> {
        if self.factors != other.factors {
            return Err(Error::Layout("states have different factor layouts".into()));
        }
        Ok(self.amplitudes.iter().zip(other.amplitudes.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Position in the factor list of the `which`-th mode (0-based).
    pub fn mode_factor(&self, which: usize) -> Result<usize> {
        nth_matching(&self.factors, which, |f| matches!(f, Factor::Mode(_)), "mode")
    }

    /// Position in the factor list of the `which`-th qubit (0-based).
    pub fn qubit_factor(&self, which: usize) -> Result<usize> {
        nth_matching(&self.factors, which, |f| matches!(f, Factor::Qubit), "qubit")
    }

    /// `(qubit, mode)` factor positions of ion `ion` in an ion layout.
    pub fn ion_factors(&self, ion: usize) -> Result<[usize; 2]> {
        let q = self.qubit_factor(ion)?;
        match self.factors.get(q + 1) {
            Some(Factor::Mode(_)) => Ok([q, q + 1]),
            _ => Err(Error::Layout(format!("qubit {ion} is not followed by its vibrational mode"))),
        }
    }

    pub fn fock_basis(&self, factor: usize) -> Result<FockBasis> {
        match self.factors.get(factor) {
            Some(Factor::Mode(b)) => Ok(*b),
            Some(Factor::Qubit) => Err(Error::Layout(format!("factor {factor} is a qubit"))),
            None => Err(Error::IndexOutOfRange { what: "factor", index: factor, len: self.factors.len() }),
        }
    }

    /// Reduced level populations of one factor.
    pub fn populations(&self, factor: usize) -> Result<Vec<f64>> {
        let split = self.split(&[factor])?;
        let mut pops = vec![0.0; split.sub_dim];
        for (i, &(s, _)) in split.map.iter().enumerate() {
            pops[s] += self.amplitudes[i].norm_sqr();
        }
        Ok(pops)
    }

    /// Population in the `levels` highest Fock levels of a mode factor.
    pub fn top_population(&self, factor: usize, levels: usize) -> Result<f64> {
        let basis = self.fock_basis(factor)?;
        let pops = self.populations(factor)?;
        let start = basis.dim().saturating_sub(levels);
        Ok(pops[start..].iter().sum())
    }

    /// Errors when more than `threshold` population sits in the top `levels`
    /// Fock levels of a mode factor.
    pub fn check_truncation(&self, factor: usize, levels: usize, threshold: f64) -> Result<()> {
        if levels == 0 {
            return Ok(());
        }
        let population = self.top_population(factor, levels)?;
        if population > threshold {
            return Err(Error::TruncationLeak { mode: factor, levels, population });
        }
        Ok(())
    }

    /// Gathers the amplitudes as a `(dim of targets) x (dim of the rest)`
    /// block: column `b` is the sub-state for the `b`-th configuration of the
    /// untouched factors.
    pub fn gather(&self, targets: &[usize]) -> Result<Array2<C64>> {
        let split = self.split(targets)?;
        let mut block = Array2::zeros((split.sub_dim, split.batch_dim));
        for (i, &(s, b)) in split.map.iter().enumerate() {
            block[[s, b]] = self.amplitudes[i];
        }
        Ok(block)
    }

    /// Inverse of [`gather`](Self::gather); the result is re-checked for norm.
    pub fn scatter(&self, targets: &[usize], block: &Array2<C64>) -> Result<HybridState> {
        let split = self.split(targets)?;
        if block.dim() != (split.sub_dim, split.batch_dim) {
            return Err(Error::DimensionMismatch { expected: split.sub_dim * split.batch_dim, found: block.len() });
        }
        let mut amplitudes = Array1::zeros(self.dim());
        for (i, &(s, b)) in split.map.iter().enumerate() {
            amplitudes[i] = block[[s, b]];
        }
        HybridState::from_amplitudes(self.factors.clone(), amplitudes)
    }

    /// Applies a block map on the listed factors.
    pub fn map_block<F>(&self, targets: &[usize], f: F) -> Result<HybridState>
    where
        F: FnOnce(Array2<C64>) -> Result<Array2<C64>>,
    {
        let block = self.gather(targets)?;
        let out = f(block)?;
        self.scatter(targets, &out)
    }

    /// Applies an operator acting on the listed factors (in that order).
    pub fn apply_local(&self, op: &Array2<C64>, targets: &[usize]) -> Result<HybridState> {
        self.map_block(targets, |block| {
            if op.nrows() != block.nrows() || op.ncols() != block.nrows() {
                return Err(Error::DimensionMismatch { expected: block.nrows(), found: op.nrows() });
            }
            Ok(op.dot(&block))
        })
    }

    fn split(&self, targets: &[usize]) -> Result<Split> {
        let n = self.factors.len();
        let mut seen = vec![false; n];
        for &t in targets {
            if t >= n {
                return Err(Error::IndexOutOfRange { what: "factor", index: t, len: n });
            }
            if seen[t] {
                return Err(Error::Layout(format!("factor {t} listed twice")));
            }
            seen[t] = true;
        }
        let dims = self.dims();
        let rest: Vec<usize> = (0..n).filter(|i| !seen[*i]).collect();
        let sub_dim: usize = targets.iter().map(|&t| dims[t]).product();
        let batch_dim: usize = rest.iter().map(|&t| dims[t]).product();

        let mut map = Vec::with_capacity(self.dim());
        let mut digits = vec![0usize; n];
        for _ in 0..self.dim() {
            let s = targets.iter().fold(0, |acc, &t| acc * dims[t] + digits[t]);
            let b = rest.iter().fold(0, |acc, &t| acc * dims[t] + digits[t]);
            map.push((s, b));
            // increment the row-major multi-index
            for k in (0..n).rev() {
                digits[k] += 1;
                if digits[k] < dims[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
        Ok(Split { sub_dim, batch_dim, map })
    }
}

impl Tensor for HybridState {
    fn tensor_pair(&self, other: &Self) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        let mut amplitudes = Array1::zeros(self.dim() * other.dim());
        for (i, a) in self.amplitudes.iter().enumerate() {
            for (j, b) in other.amplitudes.iter().enumerate() {
                amplitudes[i * other.dim() + j] = a * b;
            }
        }
        HybridState::from_amplitudes(factors, amplitudes)
    }
}

fn flat_index(factors: &[Factor], indices: &[usize]) -> Result<usize> {
    if indices.len() != factors.len() {
        return Err(Error::DimensionMismatch { expected: factors.len(), found: indices.len() });
    }
    let mut idx = 0;
    for (f, &i) in factors.iter().zip(indices) {
        if i >= f.dim() {
            return Err(Error::IndexOutOfRange { what: "level", index: i, len: f.dim() });
        }
        idx = idx * f.dim() + i;
    }
    Ok(idx)
}

fn nth_matching(factors: &[Factor], which: usize, pred: impl Fn(&Factor) -> bool, what: &'static str) -> Result<usize> {
    let positions: Vec<usize> = factors.iter().enumerate().filter(|(_, f)| pred(f)).map(|(i, _)| i).collect();
    positions.get(which).copied().ok_or(Error::IndexOutOfRange { what, index: which, len: positions.len() })
}
