//! Dense and sparse helpers on complex matrices.

use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64 as C64;

pub fn identity(dim: usize) -> Array2<C64> {
    Array2::from_diag_elem(dim, C64::new(1.0, 0.0))
}

pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    ndarray::linalg::kron(a, b)
}

/// Largest absolute column sum.
pub fn one_norm(m: &Array2<C64>) -> f64 {
    m.axis_iter(Axis(1)).map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn max_norm_sqr(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max)
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: ArrayView2<C64>, b: ArrayView2<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Deviation from hermiticity, `max |H - H^dag|`.
pub fn hermitian_deviation(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

/// Matrix exponential by scaling and squaring of a Taylor series.
///
/// The argument is scaled so that its one-norm is at most 1/4 before the
/// series is summed to machine precision.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let scaled = a.mapv(|z| z * 0.5_f64.powi(squarings));

    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..64 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result += &term;
        if max_abs(&term) < 1e-18 * max_abs(&result).max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Compressed-row complex matrix, used for the terms of time-dependent
/// Hamiltonians.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    pub fn from_dense(m: &Array2<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "sparse matrices are square");
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = m[[i, j]];
                if v != C64::new(0.0, 0.0) {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for i in 0..self.dim {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[[i, self.cols[idx]]] += self.vals[idx];
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        SparseMatrix::from_dense(&adjoint(&self.to_dense()))
    }

    /// Upper bound on the spectral norm, `sqrt(|M|_1 |M|_inf)`.
    pub fn norm_bound(&self) -> f64 {
        let mut row_max = 0.0_f64;
        let mut col_sums = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut row = 0.0;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.vals[idx].norm();
                row += a;
                col_sums[self.cols[idx]] += a;
            }
            row_max = row_max.max(row);
        }
        let col_max = col_sums.into_iter().fold(0.0, f64::max);
        (row_max * col_max).sqrt()
    }

    /// `out += coef * M * psi` for a block of column vectors.
    pub fn mul_add(&self, coef: C64, psi: ArrayView2<C64>, out: &mut Array2<C64>) {
        if coef == C64::new(0.0, 0.0) {
            return;
        }
        let batch = psi.ncols();
        if let (Some(src), Some(dst)) = (psi.as_slice(), out.as_slice_mut()) {
            if batch == 1 {
                for (i, o) in dst.iter_mut().enumerate() {
                    let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
                    let acc: C64 = self.vals[lo..hi].iter().zip(&self.cols[lo..hi]).map(|(v, &c)| v * src[c]).sum();
                    *o += coef * acc;
                }
                return;
            }
            for i in 0..self.dim {
                let row = &mut dst[i * batch..(i + 1) * batch];
                for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let v = coef * self.vals[idx];
                    let c = self.cols[idx];
                    for (o, x) in row.iter_mut().zip(&src[c * batch..(c + 1) * batch]) {
                        *o += v * x;
                    }
                }
            }
            return;
        }
        for i in 0..self.dim {
            let mut row = out.row_mut(i);
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = coef * self.vals[idx];
                let src = psi.row(self.cols[idx]);
                for b in 0..batch {
                    row[b] += v * src[b];
                }
            }
        }
    }
}

/// Union sparsity pattern of several matrices, for forming weighted sums
/// without re-deriving structure.
#[derive(Clone, Debug)]
pub(crate) struct SparsePattern {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// For every input matrix, the union slot of each of its entries.
    slots: Vec<Vec<usize>>,
}

impl SparsePattern {
    pub(crate) fn new(dim: usize, parts: &[&SparseMatrix]) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for m in parts {
            for i in 0..dim {
                rows[i].extend_from_slice(&m.cols[m.row_ptr[i]..m.row_ptr[i + 1]]);
            }
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        let slots = parts
            .iter()
            .map(|m| {
                let mut out = Vec::with_capacity(m.nnz());
                for i in 0..dim {
                    let row = &cols[row_ptr[i]..row_ptr[i + 1]];
                    for &c in &m.cols[m.row_ptr[i]..m.row_ptr[i + 1]] {
                        out.push(row_ptr[i] + row.binary_search(&c).expect("column in union"));
                    }
                }
                out
            })
            .collect();
        SparsePattern { dim, row_ptr, cols, slots }
    }

    /// `sum_k coefs[k] parts[k]` on the union pattern.
    pub(crate) fn combine(&self, parts: &[&SparseMatrix], coefs: &[C64]) -> SparseMatrix {
        let mut vals = vec![C64::new(0.0, 0.0); self.cols.len()];
        for ((m, slots), &c) in parts.iter().zip(&self.slots).zip(coefs) {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for (&slot, &v) in slots.iter().zip(&m.vals) {
                vals[slot] += c * v;
            }
        }
        SparseMatrix { dim: self.dim, row_ptr: self.row_ptr.clone(), cols: self.cols.clone(), vals }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn expm_of_pauli_rotation() {
        // exp(-i theta sigma_x) = cos theta I - i sin theta sigma_x
        let theta: f64 = 1.3;
        let a = array![[C64::new(0.0, 0.0), C64::new(0.0, -theta)], [C64::new(0.0, -theta), C64::new(0.0, 0.0)]];
        let u = expm(&a);
        assert!((u[[0, 0]] - C64::new(theta.cos(), 0.0)).norm() < 1e-14);
        assert!((u[[0, 1]] - C64::new(0.0, -theta.sin())).norm() < 1e-14);
    }

    #[test]
    fn expm_large_norm_stays_unitary() {
        let n = 12;
        let mut h = Array2::<C64>::zeros((n, n));
        for i in 0..n - 1 {
            h[[i, i + 1]] = C64::new(((i + 1) as f64).sqrt() * 7.0, 0.0);
            h[[i + 1, i]] = h[[i, i + 1]];
        }
        let u = expm(&h.mapv(|z| z * C64::new(0.0, -1.0)));
        let prod = adjoint(&u).dot(&u);
        assert!(max_abs_diff(prod.view(), identity(n).view()) < 1e-12);
    }

    #[test]
    fn sparse_matches_dense() {
        let m = array![
            [C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(3.0, -1.0)],
            [C64::new(-1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.5, 0.0)]
        ];
        let s = SparseMatrix::from_dense(&m);
        assert_eq!(s.nnz(), 5);
        let psi = array![[C64::new(1.0, 0.0)], [C64::new(0.0, 1.0)], [C64::new(2.0, 0.0)]];
        let mut out = Array2::zeros((3, 1));
        s.mul_add(C64::new(0.0, 1.0), psi.view(), &mut out);
        let expect = m.dot(&psi).mapv(|z| z * C64::new(0.0, 1.0));
        assert!(max_abs_diff(out.view(), expect.view()) < 1e-15);
        assert!(max_abs_diff(s.adjoint().to_dense().view(), adjoint(&m).view()) < 1e-15);
    }
}
