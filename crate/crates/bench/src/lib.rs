//! Fixtures shared by the criterion benches.

use cholcomm::storage::StoredMatrix;
use cholcomm::{LayoutKind, Matrix, MemModel};

/// Fast memory with three `n x n` operands placed in slow memory.
pub fn matmul_fixture(n: usize, capacity: usize, layout: LayoutKind) -> (MemModel, [StoredMatrix; 3]) {
    let mut mem = MemModel::new(capacity).expect("capacity > 0");
    let a = StoredMatrix::store(&mut mem, &Matrix::random(n, 1), layout).expect("valid layout");
    let b = StoredMatrix::store(&mut mem, &Matrix::random(n, 2), layout).expect("valid layout");
    let c = StoredMatrix::allocate(&mut mem, layout, n).expect("valid layout");
    (mem, [a, b, c])
}
