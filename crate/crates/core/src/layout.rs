//! Address maps from matrix coordinates to linear slow-memory offsets.
//!
//! Three layouts are supported:
//!
//! * column-major, `addr(i, j) = j*n + i`;
//! * blocked, where each `b x b` block occupies one contiguous run (blocks
//!   ordered row-major over the block grid, column-major inside a block);
//! * block-recursive (Morton / Z-order), where every aligned power-of-two
//!   quadrant is contiguous. Quadrants are visited top-left, top-right,
//!   bottom-left, bottom-right.
//!
//! Blocked and block-recursive layouts pad `n` (to a multiple of `b` and to
//! the next power of two respectively); padded cells are never addressed.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayoutKind {
    ColumnMajor,
    Blocked { block: usize },
    BlockRecursive,
}

impl LayoutKind {
    pub fn name(&self) -> &'static str {
        match self {
            LayoutKind::ColumnMajor => "column-major",
            LayoutKind::Blocked { .. } => "blocked",
            LayoutKind::BlockRecursive => "block-recursive",
        }
    }

    pub fn is_block_contiguous(&self) -> bool {
        !matches!(self, LayoutKind::ColumnMajor)
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayoutKind::Blocked { block } => write!(f, "blocked({block})"),
            k => f.write_str(k.name()),
        }
    }
}

impl FromStr for LayoutKind {
    type Err = Error;

    /// Accepts `column-major`, `block-recursive`, `blocked(B)` and `blocked:B`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "column-major" | "colmajor" | "cm" => return Ok(LayoutKind::ColumnMajor),
            "block-recursive" | "morton" | "br" => return Ok(LayoutKind::BlockRecursive),
            _ => {}
        }
        let inner = s
            .strip_prefix("blocked(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("blocked:"));
        match inner.map(str::parse::<usize>) {
            Some(Ok(block)) if block > 0 => Ok(LayoutKind::Blocked { block }),
            _ => Err(Error::Parse(format!("unknown layout {s:?}"))),
        }
    }
}

/// Maximal contiguous address range `[addr, addr + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub addr: usize,
    pub len: usize,
}

impl Run {
    pub fn new(addr: usize, len: usize) -> Self {
        Self { addr, len }
    }
}

/// Appends a run, coalescing it with the previous one when adjacent.
pub(crate) fn push_run(runs: &mut Vec<Run>, r: Run) {
    if r.len == 0 {
        return;
    }
    if let Some(last) = runs.last_mut() {
        if last.addr + last.len == r.addr {
            last.len += r.len;
            return;
        }
    }
    runs.push(r);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    kind: LayoutKind,
    n: usize,
    n_pad: usize,
}

impl Layout {
    pub fn new(kind: LayoutKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch("layout dimension must be >= 1".into()));
        }
        let n_pad = match kind {
            LayoutKind::ColumnMajor => n,
            LayoutKind::Blocked { block } => {
                if block == 0 {
                    return Err(Error::InvalidBlockSize { block, capacity: 0 });
                }
                n.div_ceil(block) * block
            }
            LayoutKind::BlockRecursive => n.next_power_of_two(),
        };
        Ok(Self { kind, n, n_pad })
    }

    pub fn column_major(n: usize) -> Self {
        Self::new(LayoutKind::ColumnMajor, n).expect("n >= 1")
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn padded_n(&self) -> usize {
        self.n_pad
    }

    /// Words of slow memory reserved for one matrix, padding included.
    pub fn footprint(&self) -> usize {
        self.n_pad * self.n_pad
    }

    pub fn address(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.n || j >= self.n {
            return Err(Error::OutOfRange { row: i, col: j, n: self.n });
        }
        Ok(self.address_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn address_unchecked(&self, i: usize, j: usize) -> usize {
        match self.kind {
            LayoutKind::ColumnMajor => j * self.n + i,
            LayoutKind::Blocked { block } => {
                let per_row = self.n_pad / block;
                let blk = (i / block) * per_row + j / block;
                blk * block * block + (j % block) * block + i % block
            }
            LayoutKind::BlockRecursive => interleave(i as u64, j as u64) as usize,
        }
    }

    /// Maximal contiguous runs covering exactly the cells `rows x cols`,
    /// in ascending address order.
    pub fn address_set(&self, rows: Range<usize>, cols: Range<usize>) -> Result<Vec<Run>> {
        if rows.end > self.n || cols.end > self.n || rows.start > rows.end || cols.start > cols.end {
            return Err(Error::OutOfRange {
                row: rows.end.saturating_sub(1),
                col: cols.end.saturating_sub(1),
                n: self.n,
            });
        }
        let mut runs = Vec::new();
        if rows.is_empty() || cols.is_empty() {
            return Ok(runs);
        }
        match self.kind {
            LayoutKind::ColumnMajor => {
                for j in cols {
                    push_run(&mut runs, Run::new(j * self.n + rows.start, rows.len()));
                }
            }
            LayoutKind::Blocked { block } => {
                let per_row = self.n_pad / block;
                for bi in rows.start / block..rows.end.div_ceil(block) {
                    let r_lo = rows.start.max(bi * block);
                    let r_hi = rows.end.min((bi + 1) * block);
                    for bj in cols.start / block..cols.end.div_ceil(block) {
                        let base = (bi * per_row + bj) * block * block;
                        let c_lo = cols.start.max(bj * block);
                        let c_hi = cols.end.min((bj + 1) * block);
                        for j in c_lo..c_hi {
                            let a = base + (j % block) * block + r_lo % block;
                            push_run(&mut runs, Run::new(a, r_hi - r_lo));
                        }
                    }
                }
            }
            LayoutKind::BlockRecursive => {
                quadrant_runs(&rows, &cols, 0, 0, self.n_pad, 0, &mut runs);
            }
        }
        Ok(runs)
    }
}

fn quadrant_runs(
    rows: &Range<usize>,
    cols: &Range<usize>,
    r0: usize,
    c0: usize,
    size: usize,
    base: usize,
    out: &mut Vec<Run>,
) {
    let r_lo = rows.start.max(r0);
    let r_hi = rows.end.min(r0 + size);
    let c_lo = cols.start.max(c0);
    let c_hi = cols.end.min(c0 + size);
    if r_lo >= r_hi || c_lo >= c_hi {
        return;
    }
    if r_lo == r0 && r_hi == r0 + size && c_lo == c0 && c_hi == c0 + size {
        push_run(out, Run::new(base, size * size));
        return;
    }
    let h = size / 2;
    let q = h * h;
    quadrant_runs(rows, cols, r0, c0, h, base, out);
    quadrant_runs(rows, cols, r0, c0 + h, h, base + q, out);
    quadrant_runs(rows, cols, r0 + h, c0, h, base + 2 * q, out);
    quadrant_runs(rows, cols, r0 + h, c0 + h, h, base + 3 * q, out);
}

/// Spreads the low 32 bits of `x` onto the even bit positions.
#[inline]
fn spread(mut x: u64) -> u64 {
    x &= 0xffff_ffff;
    x = (x | (x << 16)) & 0x0000_ffff_0000_ffff;
    x = (x | (x << 8)) & 0x00ff_00ff_00ff_00ff;
    x = (x | (x << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

/// Morton code with the row bit above the column bit at every level.
#[inline]
fn interleave(row: u64, col: u64) -> u64 {
    (spread(row) << 1) | spread(col)
}
