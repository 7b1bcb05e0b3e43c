use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use ndarray::{Array1, Array2};

use super::linalg;
use super::{FockBasis, Tensor, C64};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Annihilation,
    Creation,
    Number,
    Position,
    Identity,
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "annihilation" | "a" => Ok(OperatorKind::Annihilation),
            "creation" | "a_dag" => Ok(OperatorKind::Creation),
            "number" | "n" => Ok(OperatorKind::Number),
            "position" | "z" => Ok(OperatorKind::Position),
            "identity" | "id" => Ok(OperatorKind::Identity),
            other => Err(Error::UnknownOperatorKind(other.to_string())),
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperatorKind::Annihilation => "annihilation",
            OperatorKind::Creation => "creation",
            OperatorKind::Number => "number",
            OperatorKind::Position => "position",
            OperatorKind::Identity => "identity",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitOperator {
    /// |e><g|
    Raising,
    /// |g><e|
    Lowering,
    /// |e><e| - |g><g|
    PauliZ,
    PauliX,
    Identity,
}

/// A square complex matrix on a mode, a qubit or a product space.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeOperator {
    matrix: Array2<C64>,
    label: String,
}

impl ModeOperator {
    pub fn new(matrix: Array2<C64>, label: impl Into<String>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        Ok(ModeOperator { matrix, label: label.into() })
    }

    pub fn identity(dim: usize) -> Self {
        ModeOperator { matrix: linalg::identity(dim), label: "identity".into() }
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dagger(&self) -> Self {
        ModeOperator { matrix: linalg::adjoint(&self.matrix), label: format!("({})^dag", self.label) }
    }

    pub fn scale(&self, c: C64) -> Self {
        ModeOperator { matrix: self.matrix.mapv(|z| z * c), label: self.label.clone() }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermitian_deviation(&self.matrix) <= tol
    }

    pub fn apply(&self, v: &Array1<C64>) -> Result<Array1<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(self.matrix.dot(v))
    }

    pub fn checked_mul(&self, rhs: &ModeOperator) -> Result<ModeOperator> {
        if rhs.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rhs.dim() });
        }
        Ok(ModeOperator { matrix: self.matrix.dot(&rhs.matrix), label: format!("{} {}", self.label, rhs.label) })
    }

    /// `exp(self)`.
    pub fn exp(&self) -> ModeOperator {
        ModeOperator { matrix: linalg::expm(&self.matrix), label: format!("exp({})", self.label) }
    }
}

impl Tensor for ModeOperator {
    fn tensor_pair(&self, other: &Self) -> Result<Self> {
        Ok(ModeOperator {
            matrix: linalg::kron(&self.matrix, &other.matrix),
            label: format!("{} (x) {}", self.label, other.label),
        })
    }
}

impl Mul for &ModeOperator {
    type Output = ModeOperator;

    /// Panics on dimension mismatch; use [`ModeOperator::checked_mul`] otherwise.
    fn mul(self, rhs: &ModeOperator) -> ModeOperator {
        self.checked_mul(rhs).expect("operator dimensions differ")
    }
}

impl Add for &ModeOperator {
    type Output = ModeOperator;

    fn add(self, rhs: &ModeOperator) -> ModeOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        ModeOperator { matrix: &self.matrix + &rhs.matrix, label: format!("{} + {}", self.label, rhs.label) }
    }
}

impl Sub for &ModeOperator {
    type Output = ModeOperator;

    fn sub(self, rhs: &ModeOperator) -> ModeOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        ModeOperator { matrix: &self.matrix - &rhs.matrix, label: format!("{} - {}", self.label, rhs.label) }
    }
}

/// Builds a ladder, number, position or identity operator on a truncated
/// basis. Position is `xi (a + a^dag)` and needs the oscillator length `xi`
/// (metres).
pub fn build_mode_operator(basis: FockBasis, kind: OperatorKind, xi: Option<f64>) -> Result<ModeOperator> {
    let dim = basis.dim();
    let mut m = Array2::<C64>::zeros((dim, dim));
    match kind {
        OperatorKind::Annihilation => {
            for n in 1..dim {
                m[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
            }
        }
        OperatorKind::Creation => {
            for n in 1..dim {
                m[[n, n - 1]] = C64::new((n as f64).sqrt(), 0.0);
            }
        }
        OperatorKind::Number => {
            for n in 0..dim {
                m[[n, n]] = C64::new(n as f64, 0.0);
            }
        }
        OperatorKind::Identity => m = linalg::identity(dim),
        OperatorKind::Position => {
            let xi = xi.ok_or(Error::MissingLengthScale)?;
            if !(xi.is_finite() && xi > 0.0) {
                return Err(Error::invalid("xi", "must be positive"));
            }
            for n in 1..dim {
                let v = C64::new(xi * (n as f64).sqrt(), 0.0);
                m[[n - 1, n]] = v;
                m[[n, n - 1]] = v;
            }
        }
    }
    Ok(ModeOperator { matrix: m, label: kind.to_string() })
}

pub fn qubit_operator(kind: QubitOperator) -> ModeOperator {
    let (z, o) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let (matrix, label) = match kind {
        QubitOperator::Raising => (ndarray::array![[z, z], [o, z]], "sigma+"),
        QubitOperator::Lowering => (ndarray::array![[z, o], [z, z]], "sigma-"),
        QubitOperator::PauliZ => (ndarray::array![[-o, z], [z, o]], "sigma_z"),
        QubitOperator::PauliX => (ndarray::array![[z, o], [o, z]], "sigma_x"),
        QubitOperator::Identity => (linalg::identity(2), "identity"),
    };
    ModeOperator { matrix, label: label.into() }
}

/// Extra levels used when exponentiating displacement and squeeze generators
/// before truncating back to the requested basis.
const PADDING: usize = 40;

/// Displacement `exp(alpha a^dag - alpha^* a)` restricted to `basis`.
pub fn displacement_operator(basis: FockBasis, alpha: C64) -> Result<ModeOperator> {
    let big = FockBasis::new(basis.n_max() + PADDING)?;
    let a = build_mode_operator(big, OperatorKind::Annihilation, None)?.into_matrix();
    let generator = linalg::adjoint(&a).mapv(|z| z * alpha) - a.mapv(|z| z * alpha.conj());
    Ok(ModeOperator { matrix: truncate(&linalg::expm(&generator), basis.dim()), label: "displacement".into() })
}

/// Squeeze `exp(r/2 (a^2 - a^dag^2))` restricted to `basis`. Maps the Fock
/// states of an oscillator of frequency `nu` onto those of frequency
/// `nu e^{2r}` (same mass), so `r = ln(nu'/nu)/2`.
pub fn squeeze_operator(basis: FockBasis, r: f64) -> Result<ModeOperator> {
    let big = FockBasis::new(basis.n_max() + PADDING)?;
    let a = build_mode_operator(big, OperatorKind::Annihilation, None)?.into_matrix();
    let a2 = a.dot(&a);
    let generator = (&a2 - &linalg::adjoint(&a2)).mapv(|z| z * (0.5 * r));
    Ok(ModeOperator { matrix: truncate(&linalg::expm(&generator), basis.dim()), label: "squeeze".into() })
}

fn truncate(m: &Array2<C64>, dim: usize) -> Array2<C64> {
    m.slice(ndarray::s![..dim, ..dim]).to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::tensor;

    fn basis(n: usize) -> FockBasis {
        FockBasis::new(n).unwrap()
    }

    #[test]
    fn squeeze_narrows_ground_state() {
        let b = basis(20);
        let r = 0.2;
        let s = squeeze_operator(b, r).unwrap();
        let x = build_mode_operator(b, OperatorKind::Position, Some(1.0)).unwrap();
        let mut vac = Array1::zeros(b.dim());
        vac[0] = C64::new(1.0, 0.0);
        let psi = s.apply(&vac).unwrap();
        let xx = x.matrix().dot(&x.matrix().dot(&psi));
        let var: C64 = psi.iter().zip(xx.iter()).map(|(a, b)| a.conj() * b).sum();
        assert!((var.re - (-2.0 * r).exp()).abs() < 1e-12);
    }

    #[test]
    fn displacement_makes_coherent_state() {
        let b = basis(25);
        let alpha = C64::new(0.6, -0.3);
        let d = displacement_operator(b, alpha).unwrap();
        let norm = (-0.5 * alpha.norm_sqr()).exp();
        let mut coef = C64::new(norm, 0.0);
        for n in 0..b.dim() {
            if n > 0 {
                coef = coef * alpha / (n as f64).sqrt();
            }
            assert!((d.matrix()[[n, 0]] - coef).norm() < 1e-13);
        }
    }

    #[test]
    fn annihilation_entries() {
        let a = build_mode_operator(basis(2), OperatorKind::Annihilation, None).unwrap();
        let m = a.matrix();
        assert_eq!(m[[0, 1]], C64::new(1.0, 0.0));
        assert!((m[[1, 2]].re - 2f64.sqrt()).abs() < 1e-15);
        let nonzero = m.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn creation_is_adjoint_of_annihilation() {
        let a = build_mode_operator(basis(5), OperatorKind::Annihilation, None).unwrap();
        let ad = build_mode_operator(basis(5), OperatorKind::Creation, None).unwrap();
        assert_eq!(a.dagger().matrix(), ad.matrix());
    }

    #[test]
    fn number_is_diagonal() {
        let n = build_mode_operator(basis(2), OperatorKind::Number, None).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { i as f64 } else { 0.0 };
                assert_eq!(n.matrix()[[i, j]], C64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn position_matches_ladder_sum() {
        let b = basis(10);
        let xi = 1.2e-8;
        let z = build_mode_operator(b, OperatorKind::Position, Some(xi)).unwrap();
        let a = build_mode_operator(b, OperatorKind::Annihilation, None).unwrap();
        let ad = build_mode_operator(b, OperatorKind::Creation, None).unwrap();
        let sum = (&a + &ad).scale(C64::new(xi, 0.0));
        assert_eq!(z.matrix(), sum.matrix());
    }

    #[test]
    fn position_without_xi_is_an_error() {
        let err = build_mode_operator(basis(3), OperatorKind::Position, None).unwrap_err();
        assert!(matches!(err, Error::MissingLengthScale));
    }

    #[test]
    fn unknown_kind_is_an_error() {
        assert!(matches!("momentum".parse::<OperatorKind>(), Err(Error::UnknownOperatorKind(_))));
        assert_eq!("number".parse::<OperatorKind>().unwrap(), OperatorKind::Number);
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = ModeOperator::identity(2);
        let i3 = ModeOperator::identity(3);
        let i6 = tensor(&[i2, i3]).unwrap();
        assert_eq!(i6.matrix(), ModeOperator::identity(6).matrix());
    }

    #[test]
    fn tensor_is_associative() {
        let a = build_mode_operator(basis(2), OperatorKind::Annihilation, None).unwrap();
        let s = qubit_operator(QubitOperator::Raising);
        let n = build_mode_operator(basis(1), OperatorKind::Number, None).unwrap();
        let left = tensor(&[tensor(&[a.clone(), s.clone()]).unwrap(), n.clone()]).unwrap();
        let right = tensor(&[a, tensor(&[s, n]).unwrap()]).unwrap();
        assert_eq!(left.matrix(), right.matrix());
    }
}
