//! Communication-counted matrix multiply and triangular solve.

use crate::error::{Error, Result};
use crate::memsim::MemModel;
use crate::scalar::{FlopCounter, Scalar};
use crate::storage::{Region, Tile, View};

/// How the product is combined with the existing contents of `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Update {
    /// `C = A*B`; `C` is produced in fast memory and never read.
    Overwrite,
    /// `C = C + A*B`.
    Add,
    /// `C = C - A*B`.
    Subtract,
}

impl Update {
    /// The mode for a second partial product over a split inner dimension.
    fn then(self) -> Update {
        match self {
            Update::Overwrite => Update::Add,
            u => u,
        }
    }

    fn reads_c(self) -> bool {
        !matches!(self, Update::Overwrite)
    }
}

/// Which entries of `C` are computed. `Lower` skips the arithmetic for
/// entries strictly above the global diagonal; all transfers still happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mask {
    Full,
    Lower,
}

/// `(ceil(d/2), floor(d/2))`.
pub fn halves(d: usize) -> (usize, usize) {
    (d.div_ceil(2), d / 2)
}

/// Whether an `n x m` by `m x r` product fits in `cap` words at once.
pub fn matmul_fits(n: usize, m: usize, r: usize, cap: usize) -> bool {
    n * m + m * r + n * r <= cap
}

/// Whether an `m x n` solve against an `n x n` factor fits in `cap` words.
/// The input and solution are counted separately, as the solve is staged
/// through both.
pub fn trsm_fits(m: usize, n: usize, cap: usize) -> bool {
    2 * m * n + n * n <= cap
}

fn check_dims(c: &Region, a: &View, b: &View) -> Result<()> {
    if a.rows() != c.rows() || b.cols() != c.cols() || a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "C {}x{} = A {}x{} * B {}x{}",
            c.rows(),
            c.cols(),
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Accumulates `at * bt` into `ct` according to `update`.
#[allow(clippy::too_many_arguments)]
fn block_product(
    ct: &mut Tile,
    at: &Tile,
    a_t: bool,
    bt: &Tile,
    b_t: bool,
    update: Update,
    mask: Mask,
    fc: &mut FlopCounter,
) {
    let (n, r) = (ct.rows(), ct.cols());
    let m = if a_t { at.rows() } else { at.cols() };
    let (gr, gc) = (ct.region().row0(), ct.region().col0());
    for j in 0..r {
        for i in 0..n {
            if mask == Mask::Lower && gr + i < gc + j {
                continue;
            }
            let acc = match update {
                Update::Overwrite => {
                    let mut acc = fc.mul(at.at(i, 0, a_t), bt.at(0, j, b_t));
                    for k in 1..m {
                        let p = fc.mul(at.at(i, k, a_t), bt.at(k, j, b_t));
                        acc = fc.add(acc, p);
                    }
                    acc
                }
                Update::Add => {
                    let mut acc = ct.get(i, j);
                    for k in 0..m {
                        let p = fc.mul(at.at(i, k, a_t), bt.at(k, j, b_t));
                        acc = fc.add(acc, p);
                    }
                    acc
                }
                Update::Subtract => {
                    let mut acc = ct.get(i, j);
                    for k in 0..m {
                        acc = fc.sub_mul(acc, at.at(i, k, a_t), bt.at(k, j, b_t));
                    }
                    acc
                }
            };
            ct.set(i, j, acc);
        }
    }
}

fn matmul_base(
    c: Region,
    a: View,
    b: View,
    update: Update,
    mask: Mask,
    mem: &mut MemModel,
    fc: &mut FlopCounter,
) -> Result<()> {
    let at = Tile::load(mem, a.region)?;
    let bt = Tile::load(mem, b.region)?;
    let mut ct = if update.reads_c() {
        Tile::load(mem, c)?
    } else {
        Tile::scratch(mem, c)?
    };
    block_product(&mut ct, &at, a.transposed, &bt, b.transposed, update, mask, fc);
    ct.store(mem)?;
    ct.release(mem)?;
    bt.release(mem)?;
    at.release(mem)
}

/// Recursive multiply `C (op)= A*B`. While the three operands do not fit in
/// the available fast memory, the largest of the three dimensions is halved
/// (ties prefer rows of `C`, then the inner dimension, then columns of `C`).
pub fn rmatmul(
    c: Region,
    a: View,
    b: View,
    update: Update,
    mask: Mask,
    mem: &mut MemModel,
    fc: &mut FlopCounter,
) -> Result<()> {
    check_dims(&c, &a, &b)?;
    rmatmul_rec(c, a, b, update, mask, mem, fc)
}

fn rmatmul_rec(
    c: Region,
    a: View,
    b: View,
    update: Update,
    mask: Mask,
    mem: &mut MemModel,
    fc: &mut FlopCounter,
) -> Result<()> {
    let (n, m, r) = (c.rows(), a.cols(), c.cols());
    if n == 0 || m == 0 || r == 0 {
        return Ok(());
    }
    if matmul_fits(n, m, r, mem.available()) {
        return matmul_base(c, a, b, update, mask, mem, fc);
    }
    let largest = n.max(m).max(r);
    if largest == 1 {
        return Err(Error::CapacityExceeded {
            requested: 3,
            available: mem.available(),
        });
    }
    if n == largest {
        let (n1, n2) = halves(n);
        rmatmul_rec(c.sub(0, 0, n1, r), a.sub(0, 0, n1, m), b, update, mask, mem, fc)?;
        rmatmul_rec(c.sub(n1, 0, n2, r), a.sub(n1, 0, n2, m), b, update, mask, mem, fc)
    } else if m == largest {
        let (m1, m2) = halves(m);
        rmatmul_rec(c, a.sub(0, 0, n, m1), b.sub(0, 0, m1, r), update, mask, mem, fc)?;
        rmatmul_rec(c, a.sub(0, m1, n, m2), b.sub(m1, 0, m2, r), update.then(), mask, mem, fc)
    } else {
        let (r1, r2) = halves(r);
        rmatmul_rec(c.sub(0, 0, n, r1), a, b.sub(0, 0, m, r1), update, mask, mem, fc)?;
        rmatmul_rec(c.sub(0, r1, n, r2), a, b.sub(0, r1, m, r2), update, mask, mem, fc)
    }
}

/// Multiply over `tile x tile` blocks with the `C` block kept resident across
/// the inner loop. Every block touched is aligned to the tile grid of the
/// whole matrix when the operands are, so a blocked layout with the same block
/// size moves each block as one message.
#[allow(clippy::too_many_arguments)]
pub fn tiled_matmul(
    c: Region,
    a: View,
    b: View,
    tile: usize,
    update: Update,
    mask: Mask,
    mem: &mut MemModel,
    fc: &mut FlopCounter,
) -> Result<()> {
    check_dims(&c, &a, &b)?;
    if tile == 0 {
        return Err(Error::InvalidBlockSize { block: 0, capacity: mem.capacity() });
    }
    let (n, m, r) = (c.rows(), a.cols(), c.cols());
    if m == 0 {
        return Ok(());
    }
    for i0 in (0..n).step_by(tile) {
        let h = tile.min(n - i0);
        for j0 in (0..r).step_by(tile) {
            let w = tile.min(r - j0);
            let cr = c.sub(i0, j0, h, w);
            if mask == Mask::Lower && cr.row0() + h <= cr.col0() {
                continue;
            }
            let mut ct = if update.reads_c() {
                Tile::load(mem, cr)?
            } else {
                Tile::scratch(mem, cr)?
            };
            let mut mode = update;
            for k0 in (0..m).step_by(tile) {
                let d = tile.min(m - k0);
                let av = a.sub(i0, k0, h, d);
                let bv = b.sub(k0, j0, d, w);
                let at = Tile::load(mem, av.region)?;
                let bt = Tile::load(mem, bv.region)?;
                block_product(&mut ct, &at, av.transposed, &bt, bv.transposed, mode, mask, fc);
                bt.release(mem)?;
                at.release(mem)?;
                mode = mode.then();
            }
            if mask == Mask::Lower {
                ct.store_lower(mem)?;
            } else {
                ct.store(mem)?;
            }
            ct.release(mem)?;
        }
    }
    Ok(())
}

/// Solves `X * U = A` for upper-triangular `u` (given as a view), with the
/// right-hand side `A` held in `x` and overwritten by the solution.
pub(crate) fn solve_upper_right(x: &mut Tile, ut: &Tile, u_t: bool, fc: &mut FlopCounter) -> Result<()> {
    let n = x.cols();
    let diag0 = if u_t { ut.region().row0() } else { ut.region().col0() };
    for j in 0..n {
        let d = ut.at(j, j, u_t);
        if d == Scalar::ZERO {
            return Err(Error::ZeroDiagonal(diag0 + j));
        }
    }
    for i in 0..x.rows() {
        for j in 0..n {
            let mut s = x.get(i, j);
            for k in 0..j {
                s = fc.sub_mul(s, x.get(i, k), ut.at(k, j, u_t));
            }
            let v = fc.div(s, ut.at(j, j, u_t))?;
            x.set(i, j, v);
        }
    }
    Ok(())
}

fn trsm_base(x: Region, u: View, mem: &mut MemModel, fc: &mut FlopCounter) -> Result<()> {
    let mut xt = Tile::load(mem, x)?;
    let ut = Tile::load(mem, u.region)?;
    let solved = solve_upper_right(&mut xt, &ut, u.transposed, fc);
    let stored = solved.and_then(|_| xt.store(mem));
    ut.release(mem)?;
    xt.release(mem)?;
    stored
}

/// Recursive triangular solve `X * U = A` in place: `x` holds `A` (m x n)
/// on entry and `X` on exit, `u` is an upper-triangular n x n view.
pub fn rtrsm(x: Region, u: View, mem: &mut MemModel, fc: &mut FlopCounter) -> Result<()> {
    if u.rows() != u.cols() || u.rows() != x.cols() {
        return Err(Error::DimensionMismatch(format!(
            "X {}x{} against U {}x{}",
            x.rows(),
            x.cols(),
            u.rows(),
            u.cols()
        )));
    }
    rtrsm_rec(x, u, mem, fc)
}

fn rtrsm_rec(x: Region, u: View, mem: &mut MemModel, fc: &mut FlopCounter) -> Result<()> {
    let (m, n) = (x.rows(), x.cols());
    if m == 0 || n == 0 {
        return Ok(());
    }
    if trsm_fits(m, n, mem.available()) {
        return trsm_base(x, u, mem, fc);
    }
    if m == 1 && n == 1 {
        return Err(Error::CapacityExceeded {
            requested: 3,
            available: mem.available(),
        });
    }
    let split = |d: usize| {
        let (a, b) = halves(d);
        if b == 0 {
            vec![(0, a)]
        } else {
            vec![(0, a), (a, b)]
        }
    };
    let col_parts = split(n);
    for (r0, rl) in split(m) {
        for (idx, &(c0, cl)) in col_parts.iter().enumerate() {
            if idx == 1 {
                let k = col_parts[0].1;
                rmatmul(
                    x.sub(r0, c0, rl, cl),
                    x.sub(r0, 0, rl, k).v(),
                    u.sub(0, c0, k, cl),
                    Update::Subtract,
                    Mask::Full,
                    mem,
                    fc,
                )?;
            }
            rtrsm_rec(x.sub(r0, c0, rl, cl), u.sub(c0, c0, cl, cl), mem, fc)?;
        }
    }
    Ok(())
}
