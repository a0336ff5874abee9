//! Matrix multiplication carried out by a Cholesky factorization.
//!
//! For real `A`, `B` the `3n x 3n` matrix
//!
//! ```text
//!     [  I    A^T  -B ]
//! T = [  A    C     0 ]
//!     [ -B^T  0     C ]
//! ```
//!
//! where `C` has `1*` on its diagonal and `0*` elsewhere, has the factor
//!
//! ```text
//!     [  I     0   0  ]
//! L = [  A     C'  0  ]
//!     [ -B^T   X   C' ]
//! ```
//!
//! with `C'` the unit lower star pattern and `X^T = A*B`. The starred values
//! absorb every term that would otherwise pollute the diagonal blocks, while
//! the `X` block is computed with ordinary real arithmetic.

use serde::{Deserialize, Serialize};

use crate::chol::{factor, CholVariant, CostReport, RunConfig};
use crate::error::{Error, Result};
use crate::kernels::{rmatmul, Mask, Update};
use crate::layout::LayoutKind;
use crate::matrix::{reference_cholesky, Matrix};
use crate::memsim::MemModel;
use crate::scalar::{FlopCounter, Scalar};
use crate::storage::StoredMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionInstance {
    pub a: Matrix,
    pub b: Matrix,
    pub tprime: Matrix,
}

/// `1*` on the diagonal, `0*` elsewhere.
pub fn star_identity(n: usize) -> Matrix {
    Matrix::from_fn(n, |i, j| if i == j { Scalar::StarOne } else { Scalar::StarZero })
}

/// `1*` on the diagonal, `0*` strictly below, real zero above.
pub fn star_factor(n: usize) -> Matrix {
    Matrix::from_fn(n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => Scalar::StarOne,
        std::cmp::Ordering::Greater => Scalar::StarZero,
        std::cmp::Ordering::Less => Scalar::ZERO,
    })
}

pub fn build_tprime(a: &Matrix, b: &Matrix) -> Result<ReductionInstance> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(format!("A is {0}x{0}, B is {1}x{1}", a.n(), b.n())));
    }
    if !a.is_all_real() || !b.is_all_real() {
        return Err(Error::InvalidInput("A and B must be real".into()));
    }
    let n = a.n();
    let tprime = Matrix::from_fn(3 * n, |i, j| {
        let (bi, bj, r, c) = (i / n, j / n, i % n, j % n);
        match (bi, bj) {
            (0, 0) => {
                if r == c {
                    Scalar::ONE
                } else {
                    Scalar::ZERO
                }
            }
            (1, 0) => a.get(r, c),
            (0, 1) => a.get(c, r),
            (2, 0) => b.get(c, r).neg(),
            (0, 2) => b.get(r, c).neg(),
            (1, 1) | (2, 2) => {
                if r == c {
                    Scalar::StarOne
                } else {
                    Scalar::StarZero
                }
            }
            _ => Scalar::ZERO,
        }
    });
    Ok(ReductionInstance {
        a: a.clone(),
        b: b.clone(),
        tprime,
    })
}

/// The factor of [`star_identity`], computed by the reference factorization
/// and checked against both the expected pattern and `C' * C'^T = C`.
pub fn cholesky_of_c(n: usize) -> Result<Matrix> {
    let c = star_identity(n);
    let l = reference_cholesky(&c, &mut FlopCounter::new())?;
    if l != star_factor(n) {
        return Err(Error::InvalidInput("factor of C does not have the star pattern".into()));
    }
    if l.matmul(&l.transpose()) != c {
        return Err(Error::InvalidInput("C' * C'^T differs from C".into()));
    }
    Ok(l)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionCosts {
    /// The factorization of `T`.
    pub factor: CostReport,
    /// A recursive multiply of two `n x n` matrices at the same fast-memory size.
    pub matmul_words: u64,
}

impl ReductionCosts {
    /// Factoring `T` must move at least as many words as the multiply it
    /// performs, up to the `18n^2 + n^2` words of setup and extraction.
    pub fn sandwich_holds(&self) -> bool {
        let n = self.factor.n as u64 / 3;
        self.factor.words + 19 * n * n >= self.matmul_words
    }
}

#[derive(Debug, Clone)]
pub struct ReductionOutcome {
    pub product: Matrix,
    pub l: Matrix,
    pub costs: ReductionCosts,
}

impl ReductionOutcome {
    /// Whether the factor has the block pattern described in the module docs.
    pub fn blocks_match(&self, a: &Matrix, b: &Matrix) -> bool {
        let n = a.n();
        let l = &self.l;
        let cp = star_factor(n);
        (0..n).all(|i| {
            (0..n).all(|j| {
                let eye = if i == j { Scalar::ONE } else { Scalar::ZERO };
                l.get(i, j) == eye
                    && l.get(n + i, j) == a.get(i, j)
                    && l.get(2 * n + i, j) == b.get(j, i).neg()
                    && l.get(n + i, n + j) == cp.get(i, j)
                    && l.get(2 * n + i, 2 * n + j) == cp.get(i, j)
                    && l.get(i, n + j) == Scalar::ZERO
                    && l.get(i, 2 * n + j) == Scalar::ZERO
                    && l.get(n + i, 2 * n + j) == Scalar::ZERO
            })
        })
    }

    /// Whether the `X` block holds only real values.
    pub fn product_block_is_real(&self) -> bool {
        self.product.is_all_real()
    }
}

/// Words moved by a recursive `n x n` multiply with `capacity` words of fast
/// memory.
pub fn rmatmul_words(n: usize, capacity: usize) -> Result<u64> {
    let mut mem = MemModel::new(capacity)?;
    let a = StoredMatrix::allocate(&mut mem, LayoutKind::ColumnMajor, n)?;
    let b = StoredMatrix::allocate(&mut mem, LayoutKind::ColumnMajor, n)?;
    let c = StoredMatrix::allocate(&mut mem, LayoutKind::ColumnMajor, n)?;
    rmatmul(c.full(), a.full().v(), b.full().v(), Update::Overwrite, Mask::Full, &mut mem, &mut FlopCounter::new())?;
    Ok(mem.counters().words())
}

/// Computes `A*B` by factoring `T` with `variant` and reading off `X^T`.
pub fn mm_via_cholesky(
    a: &Matrix,
    b: &Matrix,
    variant: CholVariant,
    layout: LayoutKind,
    capacity: usize,
) -> Result<ReductionOutcome> {
    let inst = build_tprime(a, b)?;
    let n = a.n();
    let f = factor(&inst.tprime, &RunConfig::new(variant, layout, capacity))?;
    let product = Matrix::from_fn(n, |i, j| f.l.get(2 * n + j, n + i));
    let matmul_words = rmatmul_words(n, capacity)?;
    Ok(ReductionOutcome {
        product,
        l: f.l,
        costs: ReductionCosts {
            factor: f.report,
            matmul_words,
        },
    })
}
