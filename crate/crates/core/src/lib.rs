//! Communication cost simulation for dense Cholesky factorization.
//!
//! Algorithms run against [`memsim::MemModel`], a two-level memory with an
//! explicitly managed fast scratchpad that counts every word and message
//! moved. The arithmetic is over [`Scalar`], reals extended with the starred
//! sentinels used to embed matrix multiplication into a factorization
//! ([`reduction`]).

pub mod chol;
pub mod error;
pub mod kernels;
pub mod layout;
pub mod matrix;
pub mod memsim;
pub mod parsim;
pub mod reduction;
pub mod report;
pub mod scalar;
pub mod storage;

pub use chol::{factor, CholVariant, CostReport, Factorization, RunConfig};
pub use error::{Error, Result};
pub use layout::{Layout, LayoutKind, Run};
pub use matrix::{expected_flops, reference_cholesky, Matrix};
pub use memsim::{CostParams, Counters, HierSpec, MemModel};
pub use parsim::{pxpotrf, ParCostReport, ProcGrid};
pub use reduction::{build_tprime, cholesky_of_c, mm_via_cholesky};
pub use report::{fit_exponent, lb_messages, lb_words, ExperimentConfig, Table1Row};
pub use scalar::{FlopCounter, Scalar};
pub use storage::{convert_layout, Region, StoredMatrix, Tile, View};
