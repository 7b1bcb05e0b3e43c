//! Truncated Fock-space linear algebra shared by every physics module.
//!
//! A [`HybridState`] is a pure state on an ordered list of [`Factor`]s, each a
//! qubit (dimension 2) or a truncated oscillator mode. Amplitudes are stored
//! row-major over the factor list: the first factor is the slowest index. For
//! ions the layout is `(qubit_1, fock_1, qubit_2, fock_2, ...)`, and within a
//! qubit factor index 0 is |g> and index 1 is |e>.

pub(crate) mod linalg;
mod operator;
mod propagate;
mod state;

pub use linalg::{expm, SparseMatrix};
pub use operator::{
    build_mode_operator, displacement_operator, qubit_operator, squeeze_operator, ModeOperator, OperatorKind,
    QubitOperator,
};
pub use propagate::{
    propagate, propagate_block, propagate_on, Coefficient, DenseHamiltonian, Hamiltonian, PropagateOptions,
    PropagationStats, TermHamiltonian,
};
pub use state::{HybridState, Level};

use crate::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Truncated oscillator basis `|0>, ..., |n_max>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockBasis {
    n_max: usize,
}

impl FockBasis {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::invalid("n_max", "must be at least 1"));
        }
        Ok(FockBasis { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

/// One tensor factor of a [`HybridState`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    Qubit,
    Mode(FockBasis),
}

impl Factor {
    pub fn dim(&self) -> usize {
        match self {
            Factor::Qubit => 2,
            Factor::Mode(b) => b.dim(),
        }
    }
}

/// Kronecker product over an ordered list, in the documented index order.
pub trait Tensor: Sized {
    fn tensor_pair(&self, other: &Self) -> Result<Self>;
}

pub fn tensor<T: Tensor + Clone>(items: &[T]) -> Result<T> {
    let (first, rest) =
        items.split_first().ok_or_else(|| Error::invalid("operands", "tensor product of an empty list"))?;
    rest.iter().try_fold(first.clone(), |acc, x| acc.tensor_pair(x))
}
