//! Sequential Cholesky variants run against the two-level memory model.
//!
//! Every variant overwrites the lower triangle of a [`StoredMatrix`] with
//! its factor. Each entry of the factor is produced by the same sequence of
//! arithmetic operations as [`crate::matrix::reference_cholesky`], so all
//! variants agree to the last bit on real inputs and perform exactly
//! [`crate::matrix::expected_flops`] operations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{halves, rmatmul, rtrsm, solve_upper_right, tiled_matmul, Mask, Update};
use crate::layout::LayoutKind;
use crate::matrix::Matrix;
use crate::memsim::{CostParams, Counters, HierSpec, MemModel, TraceRecord};
use crate::report::{lb_messages, lb_words};
use crate::scalar::{FlopCounter, Scalar};
use crate::storage::{Region, StoredMatrix, Tile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CholVariant {
    NaiveLeft,
    NaiveRight,
    BlockedPotrf { block: usize },
    RectangularRecursive,
    SquareRecursive,
}

impl CholVariant {
    pub fn name(&self) -> &'static str {
        match self {
            CholVariant::NaiveLeft => "naive-left",
            CholVariant::NaiveRight => "naive-right",
            CholVariant::BlockedPotrf { .. } => "potrf",
            CholVariant::RectangularRecursive => "rectangular-recursive",
            CholVariant::SquareRecursive => "square-recursive",
        }
    }

    /// Whether the schedule is independent of the fast-memory size.
    pub fn is_cache_oblivious(&self) -> bool {
        matches!(
            self,
            CholVariant::RectangularRecursive | CholVariant::SquareRecursive
        )
    }

    pub fn block(&self) -> Option<usize> {
        match self {
            CholVariant::BlockedPotrf { block } => Some(*block),
            _ => None,
        }
    }

    /// Largest block size with three blocks fitting in `capacity` words.
    pub fn default_block(capacity: usize) -> usize {
        ((capacity / 3) as f64).sqrt().floor().max(1.0) as usize
    }
}

impl fmt::Display for CholVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CholVariant::BlockedPotrf { block } => write!(f, "potrf({block})"),
            v => f.write_str(v.name()),
        }
    }
}

impl FromStr for CholVariant {
    type Err = Error;

    /// Accepts the names from [`CholVariant::name`] plus short aliases.
    /// `potrf` without a block size parses with block 0, to be filled in
    /// with [`CholVariant::with_capacity`].
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "naive-left" | "left" | "naive-left-looking" => CholVariant::NaiveLeft,
            "naive-right" | "right" | "naive-right-looking" => CholVariant::NaiveRight,
            "rectangular-recursive" | "rect" | "toledo" => CholVariant::RectangularRecursive,
            "square-recursive" | "square" | "ahmed-pingali" => CholVariant::SquareRecursive,
            "potrf" | "lapack" => CholVariant::BlockedPotrf { block: 0 },
            other => {
                let inner = other
                    .strip_prefix("potrf(")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| other.strip_prefix("potrf:"));
                match inner.map(str::parse::<usize>) {
                    Some(Ok(block)) => CholVariant::BlockedPotrf { block },
                    _ => return Err(Error::Parse(format!("unknown algorithm {other:?}"))),
                }
            }
        })
    }
}

impl CholVariant {
    /// Replaces an unset POTRF block size with [`CholVariant::default_block`].
    pub fn with_capacity(self, capacity: usize) -> Self {
        match self {
            CholVariant::BlockedPotrf { block: 0 } => CholVariant::BlockedPotrf {
                block: Self::default_block(capacity),
            },
            v => v,
        }
    }
}

/// Factors `a` in place with the chosen variant.
pub fn factor_in_place(
    variant: CholVariant,
    a: StoredMatrix,
    mem: &mut MemModel,
    fc: &mut FlopCounter,
) -> Result<()> {
    match variant {
        CholVariant::NaiveLeft => naive_left(a, mem, fc),
        CholVariant::NaiveRight => naive_right(a, mem, fc),
        CholVariant::BlockedPotrf { block } => blocked_potrf(a, block, mem, fc),
        CholVariant::RectangularRecursive => rectangular_recursive(a.full(), mem, fc),
        CholVariant::SquareRecursive => square_recursive(a.full(), mem, fc),
    }
}

/// In-tile left-looking factorization of a panel whose top square is a
/// diagonal block. The strict upper part of the top square is left as is.
fn factor_panel(t: &mut Tile, fc: &mut FlopCounter) -> Result<()> {
    let (m, n) = (t.rows(), t.cols());
    let col0 = t.region().col0();
    for j in 0..n {
        let mut d = t.get(j, j);
        for k in 0..j {
            d = fc.sub_mul(d, t.get(j, k), t.get(j, k));
        }
        let piv = fc.pivot_sqrt(d, col0 + j)?;
        t.set(j, j, piv);
        for i in j + 1..m {
            let mut s = t.get(i, j);
            for k in 0..j {
                s = fc.sub_mul(s, t.get(i, k), t.get(j, k));
            }
            let v = fc.div(s, piv)?;
            t.set(i, j, v);
        }
    }
    Ok(())
}

fn need(cap: usize, words: usize) -> Result<()> {
    if cap < words {
        return Err(Error::CapacityExceeded {
            requested: words,
            available: cap,
        });
    }
    Ok(())
}

/// Left-looking, one column at a time. Column `j` is read, updated with each
/// earlier column `k` (read in turn), scaled and written. When a column and
/// its update partner do not both fit, rows are handled in segments of
/// `(M-1)/2`; later segments re-read `L(j,k)` and the finished pivot.
pub fn naive_left(a: StoredMatrix, mem: &mut MemModel, fc: &mut FlopCounter) -> Result<()> {
    let n = a.n();
    let cap = mem.available();
    need(cap, 3)?;
    for j in 0..n {
        let len = n - j;
        let seg = if 2 * len <= cap { len } else { (cap - 1) / 2 };
        let mut start = 0;
        while start < len {
            let sl = seg.min(len - start);
            let r0 = j + start;
            let mut col = Tile::load(mem, a.region(r0, j, sl, 1))?;
            if start == 0 {
                for k in 0..j {
                    let ck = Tile::load(mem, a.region(j, k, sl, 1))?;
                    let ljk = ck.get(0, 0);
                    for i in 0..sl {
                        let v = fc.sub_mul(col.get(i, 0), ck.get(i, 0), ljk);
                        col.set(i, 0, v);
                    }
                    ck.release(mem)?;
                }
                let piv = fc.pivot_sqrt(col.get(0, 0), j)?;
                col.set(0, 0, piv);
                for i in 1..sl {
                    let v = fc.div(col.get(i, 0), piv)?;
                    col.set(i, 0, v);
                }
            } else {
                for k in 0..j {
                    let lk = Tile::load(mem, a.region(j, k, 1, 1))?;
                    let ck = Tile::load(mem, a.region(r0, k, sl, 1))?;
                    let ljk = lk.get(0, 0);
                    for i in 0..sl {
                        let v = fc.sub_mul(col.get(i, 0), ck.get(i, 0), ljk);
                        col.set(i, 0, v);
                    }
                    ck.release(mem)?;
                    lk.release(mem)?;
                }
                let pt = Tile::load(mem, a.region(j, j, 1, 1))?;
                let piv = pt.get(0, 0);
                for i in 0..sl {
                    let v = fc.div(col.get(i, 0), piv)?;
                    col.set(i, 0, v);
                }
                pt.release(mem)?;
            }
            col.store(mem)?;
            col.release(mem)?;
            start += sl;
        }
    }
    Ok(())
}

/// Right-looking, one column at a time. Column `j` is scaled, then every
/// later column `k` is read, updated with column `j` and written back.
pub fn naive_right(a: StoredMatrix, mem: &mut MemModel, fc: &mut FlopCounter) -> Result<()> {
    let n = a.n();
    let cap = mem.available();
    need(cap, 3)?;
    for j in 0..n {
        let len = n - j;
        if 2 * len <= cap {
            let mut col = Tile::load(mem, a.region(j, j, len, 1))?;
            let piv = fc.pivot_sqrt(col.get(0, 0), j)?;
            col.set(0, 0, piv);
            for i in 1..len {
                let v = fc.div(col.get(i, 0), piv)?;
                col.set(i, 0, v);
            }
            for k in j + 1..n {
                let mut ck = Tile::load(mem, a.region(k, k, n - k, 1))?;
                let lkj = col.get(k - j, 0);
                for i in 0..n - k {
                    let v = fc.sub_mul(ck.get(i, 0), col.get(k - j + i, 0), lkj);
                    ck.set(i, 0, v);
                }
                ck.store(mem)?;
                ck.release(mem)?;
            }
            col.store(mem)?;
            col.release(mem)?;
        } else {
            // scale the column in chunks with the pivot held resident
            let first = cap.min(len);
            let mut t = Tile::load(mem, a.region(j, j, first, 1))?;
            let piv = fc.pivot_sqrt(t.get(0, 0), j)?;
            t.set(0, 0, piv);
            for i in 1..first {
                let v = fc.div(t.get(i, 0), piv)?;
                t.set(i, 0, v);
            }
            t.store(mem)?;
            let held = t.retain(mem, 1)?;
            let mut s = first;
            while s < len {
                let sl = (cap - 1).min(len - s);
                let mut t = Tile::load(mem, a.region(j + s, j, sl, 1))?;
                for i in 0..sl {
                    let v = fc.div(t.get(i, 0), piv)?;
                    t.set(i, 0, v);
                }
                t.store(mem)?;
                t.release(mem)?;
                s += sl;
            }
            mem.release(held)?;

            let half = (cap - 1) / 2;
            for k in j + 1..n {
                let lt = Tile::load(mem, a.region(k, j, 1, 1))?;
                let lkj = lt.get(0, 0);
                let mut s = k;
                while s < n {
                    let sl = half.min(n - s);
                    let mut ck = Tile::load(mem, a.region(s, k, sl, 1))?;
                    let cj = Tile::load(mem, a.region(s, j, sl, 1))?;
                    for i in 0..sl {
                        let v = fc.sub_mul(ck.get(i, 0), cj.get(i, 0), lkj);
                        ck.set(i, 0, v);
                    }
                    ck.store(mem)?;
                    cj.release(mem)?;
                    ck.release(mem)?;
                    s += sl;
                }
                lt.release(mem)?;
            }
        }
    }
    Ok(())
}

/// Blocked right-looking factorization with block size `b`. Each block
/// column applies the symmetric and general updates from all earlier block
/// columns, factors its diagonal block, and keeps that factor resident while
/// solving the blocks below it. The last block may be smaller than `b`.
pub fn blocked_potrf(a: StoredMatrix, b: usize, mem: &mut MemModel, fc: &mut FlopCounter) -> Result<()> {
    let cap = mem.available();
    if b == 0 || 3 * b * b > cap {
        return Err(Error::InvalidBlockSize { block: b, capacity: cap });
    }
    let n = a.n();
    for c0 in (0..n).step_by(b) {
        let w = b.min(n - c0);
        let below = n - c0 - w;
        if c0 > 0 {
            let left = a.region(c0, 0, w, c0);
            tiled_matmul(a.region(c0, c0, w, w), left.v(), left.t(), b, Update::Subtract, Mask::Lower, mem, fc)?;
            if below > 0 {
                tiled_matmul(
                    a.region(c0 + w, c0, below, w),
                    a.region(c0 + w, 0, below, c0).v(),
                    left.t(),
                    b,
                    Update::Subtract,
                    Mask::Lower,
                    mem,
                    fc,
                )?;
            }
        }
        let mut diag = Tile::load(mem, a.region(c0, c0, w, w))?;
        factor_panel(&mut diag, fc)?;
        diag.store_lower(mem)?;
        for r0 in (c0 + w..n).step_by(b) {
            let h = b.min(n - r0);
            let mut t = Tile::load(mem, a.region(r0, c0, h, w))?;
            solve_upper_right(&mut t, &diag, true, fc)?;
            t.store(mem)?;
            t.release(mem)?;
        }
        diag.release(mem)?;
    }
    Ok(())
}

/// Recursive factorization of an `m x n` panel (`m >= n`) whose top square
/// sits on the diagonal: factor the left half, update the right half with a
/// recursive multiply, factor the right half.
pub fn rectangular_recursive(p: Region, mem: &mut MemModel, fc: &mut FlopCounter) -> Result<()> {
    let (m, n) = (p.rows(), p.cols());
    if m * n <= mem.available() {
        let mut t = Tile::load(mem, p)?;
        factor_panel(&mut t, fc)?;
        t.zero_upper();
        t.store(mem)?;
        return t.release(mem);
    }
    if n == 1 {
        return stream_column(p, mem, fc);
    }
    let (n1, n2) = halves(n);
    rectangular_recursive(p.sub(0, 0, m, n1), mem, fc)?;
    rmatmul(
        p.sub(n1, n1, m - n1, n2),
        p.sub(n1, 0, m - n1, n1).v(),
        p.sub(n1, 0, n2, n1).t(),
        Update::Subtract,
        Mask::Lower,
        mem,
        fc,
    )?;
    rectangular_recursive(p.sub(n1, n1, m - n1, n2), mem, fc)
}

/// Factors a single already-updated column too tall for fast memory.
fn stream_column(p: Region, mem: &mut MemModel, fc: &mut FlopCounter) -> Result<()> {
    let cap = mem.available();
    need(cap, 2)?;
    let m = p.rows();
    let first = cap.min(m);
    let mut t = Tile::load(mem, p.sub(0, 0, first, 1))?;
    let piv = fc.pivot_sqrt(t.get(0, 0), p.col0())?;
    t.set(0, 0, piv);
    for i in 1..first {
        let v = fc.div(t.get(i, 0), piv)?;
        t.set(i, 0, v);
    }
    t.store(mem)?;
    let held = t.retain(mem, 1)?;
    let mut s = first;
    while s < m {
        let sl = (cap - 1).min(m - s);
        let mut t = Tile::load(mem, p.sub(s, 0, sl, 1))?;
        for i in 0..sl {
            let v = fc.div(t.get(i, 0), piv)?;
            t.set(i, 0, v);
        }
        t.store(mem)?;
        t.release(mem)?;
        s += sl;
    }
    mem.release(held)
}

/// Recursive factorization of a diagonal square block: factor the top-left
/// quarter, solve for the block below it, update the bottom-right quarter,
/// factor it.
pub fn square_recursive(d: Region, mem: &mut MemModel, fc: &mut FlopCounter) -> Result<()> {
    let n = d.rows();
    if 3 * n * n <= mem.available() {
        let mut t = Tile::load(mem, d)?;
        factor_panel(&mut t, fc)?;
        t.zero_upper();
        t.store(mem)?;
        return t.release(mem);
    }
    if n == 1 {
        return Err(Error::CapacityExceeded {
            requested: 3,
            available: mem.available(),
        });
    }
    let (n1, n2) = halves(n);
    square_recursive(d.sub(0, 0, n1, n1), mem, fc)?;
    rtrsm(d.sub(n1, 0, n2, n1), d.sub(0, 0, n1, n1).t(), mem, fc)?;
    let l21 = d.sub(n1, 0, n2, n1);
    rmatmul(d.sub(n1, n1, n2, n2), l21.v(), l21.t(), Update::Subtract, Mask::Lower, mem, fc)?;
    square_recursive(d.sub(n1, n1, n2, n2), mem, fc)
}

/// Costs of one factorization, with the sequential lower bounds and the
/// measured-to-bound ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub variant: String,
    pub layout: String,
    pub n: usize,
    pub m_fast: usize,
    pub block: Option<usize>,
    pub words: u64,
    pub messages: u64,
    pub flops: u64,
    pub modeled_time: f64,
    pub lb_words: f64,
    pub lb_messages: f64,
    pub ratio_words: Option<f64>,
    pub ratio_messages: Option<f64>,
    pub cache_oblivious: bool,
    pub peak_occupancy: usize,
}

impl CostReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        variant: CholVariant,
        layout: LayoutKind,
        n: usize,
        capacity: usize,
        counters: Counters,
        flops: u64,
        peak_occupancy: usize,
        params: &CostParams,
    ) -> Self {
        let words = counters.words();
        let messages = counters.messages();
        let lbw = lb_words(n, capacity, 1);
        let lbm = lb_messages(n, capacity, 1);
        let ratio = |x: u64, lb: f64| (lb > 0.0).then(|| x as f64 / lb);
        Self {
            variant: variant.name().to_string(),
            layout: layout.to_string(),
            n,
            m_fast: capacity,
            block: variant.block(),
            words,
            messages,
            flops,
            modeled_time: params.time(messages, words, flops),
            lb_words: lbw,
            lb_messages: lbm,
            ratio_words: ratio(words, lbw),
            ratio_messages: ratio(messages, lbm),
            cache_oblivious: variant.is_cache_oblivious(),
            peak_occupancy,
        }
    }
}

/// What to run: algorithm, layout, fast-memory size, cost parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub variant: CholVariant,
    pub layout: LayoutKind,
    pub capacity: usize,
    pub params: CostParams,
    pub trace: bool,
}

impl RunConfig {
    pub fn new(variant: CholVariant, layout: LayoutKind, capacity: usize) -> Self {
        Self {
            variant: variant.with_capacity(capacity),
            layout,
            capacity,
            params: CostParams::default(),
            trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Factorization {
    pub l: Matrix,
    pub report: CostReport,
    pub counters: Counters,
    pub flop_detail: FlopCounter,
    pub trace: Option<Vec<TraceRecord>>,
}

/// Places `a` in slow memory, factors it, and reads the factor back.
pub fn factor(a: &Matrix, cfg: &RunConfig) -> Result<Factorization> {
    let variant = cfg.variant.with_capacity(cfg.capacity);
    let mut mem = MemModel::new(cfg.capacity)?;
    if cfg.trace {
        mem = mem.with_trace();
    }
    let stored = StoredMatrix::store(&mut mem, a, cfg.layout)?;
    let mut fc = FlopCounter::new();
    factor_in_place(variant, stored, &mut mem, &mut fc)?;
    debug_assert_eq!(mem.occupancy(), 0, "fast memory leaked");
    let counters = mem.counters();
    let l = stored.fetch(&mem).lower();
    let report = CostReport::new(
        variant,
        cfg.layout,
        a.n(),
        cfg.capacity,
        counters,
        fc.total(),
        mem.peak_occupancy(),
        &cfg.params,
    );
    let trace = mem.trace().map(<[TraceRecord]>::to_vec);
    Ok(Factorization {
        l,
        report,
        counters,
        flop_detail: fc,
        trace,
    })
}

/// Per-level costs on a multi-level machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierReport {
    pub levels: Vec<CostReport>,
    pub modeled_time: f64,
}

/// Runs the factorization once per fast level, each time as a two-level
/// machine with that level as fast memory, and sums the per-level
/// communication times.
pub fn hierarchical_report(a: &Matrix, variant: CholVariant, layout: LayoutKind, spec: &HierSpec) -> Result<HierReport> {
    let mut levels = Vec::new();
    let mut time = 0.0;
    for lvl in spec.levels() {
        let mut cfg = RunConfig::new(variant, layout, lvl.capacity);
        cfg.params = lvl.params;
        let f = factor(a, &cfg)?;
        time += lvl.params.alpha * f.report.messages as f64 + lvl.params.beta * f.report.words as f64;
        levels.push(f.report);
    }
    Ok(HierReport {
        levels,
        modeled_time: time,
    })
}

/// Writes `v` to every cell of the region; used by tests to poison the
/// upper triangle.
#[doc(hidden)]
pub fn fill_region(mem: &mut MemModel, r: Region, v: Scalar) {
    for i in 0..r.rows() {
        for j in 0..r.cols() {
            mem.slow_set(r.matrix().addr(r.row0() + i, r.col0() + j), v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{expected_flops, reference_cholesky};

    const ALL: [CholVariant; 5] = [
        CholVariant::NaiveLeft,
        CholVariant::NaiveRight,
        CholVariant::BlockedPotrf { block: 0 },
        CholVariant::RectangularRecursive,
        CholVariant::SquareRecursive,
    ];

    fn layouts() -> [LayoutKind; 3] {
        [
            LayoutKind::ColumnMajor,
            LayoutKind::Blocked { block: 3 },
            LayoutKind::BlockRecursive,
        ]
    }

    #[test]
    fn all_variants_match_reference_bitwise() {
        for n in [1, 2, 5, 13, 20] {
            let a = Matrix::random_spd(n, n as u64);
            let want = reference_cholesky(&a, &mut FlopCounter::new()).unwrap();
            for v in ALL {
                for layout in layouts() {
                    for cap in [12, 27, 50, 2000] {
                        let f = factor(&a, &RunConfig::new(v, layout, cap)).unwrap();
                        assert_eq!(f.l, want, "{v} {layout} n={n} M={cap}");
                        assert_eq!(f.report.flops, expected_flops(n));
                        assert!(f.report.peak_occupancy <= cap);
                    }
                }
            }
        }
    }

    #[test]
    fn naive_small_example_counts() {
        let a = Matrix::random_spd(4, 7);
        let left = factor(&a, &RunConfig::new(CholVariant::NaiveLeft, LayoutKind::ColumnMajor, 32)).unwrap();
        assert_eq!((left.report.words, left.report.messages), (30, 14));
        let right = factor(&a, &RunConfig::new(CholVariant::NaiveRight, LayoutKind::ColumnMajor, 32)).unwrap();
        assert_eq!((right.report.words, right.report.messages), (40, 20));
    }

    #[test]
    fn tight_memory_still_factors() {
        let a = Matrix::random_spd(9, 2);
        let want = reference_cholesky(&a, &mut FlopCounter::new()).unwrap();
        for v in [
            CholVariant::NaiveLeft,
            CholVariant::NaiveRight,
            CholVariant::RectangularRecursive,
            CholVariant::SquareRecursive,
        ] {
            for cap in [3, 4, 5] {
                let f = factor(&a, &RunConfig::new(v, LayoutKind::ColumnMajor, cap)).unwrap();
                assert_eq!(f.l, want, "{v} M={cap}");
            }
        }
    }

    #[test]
    fn too_little_memory_is_reported() {
        let a = Matrix::random_spd(4, 2);
        for v in [CholVariant::NaiveLeft, CholVariant::SquareRecursive] {
            let err = factor(&a, &RunConfig::new(v, LayoutKind::ColumnMajor, 2)).unwrap_err();
            assert!(matches!(err, Error::CapacityExceeded { .. }), "{v}");
        }
        let err = factor(
            &a,
            &RunConfig::new(CholVariant::BlockedPotrf { block: 3 }, LayoutKind::ColumnMajor, 20),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidBlockSize { block: 3, .. }));
    }

    #[test]
    fn indefinite_reports_pivot_column() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0, 0.0], vec![2.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        for v in ALL {
            let err = factor(&a, &RunConfig::new(v, LayoutKind::ColumnMajor, 27)).unwrap_err();
            assert!(matches!(err, Error::NonPositivePivot { column: 1, .. }), "{v}");
        }
    }

    #[test]
    fn upper_triangle_is_never_read() {
        let n = 10;
        let a = Matrix::random_spd(n, 4);
        let want = reference_cholesky(&a, &mut FlopCounter::new()).unwrap();
        for v in ALL {
            let v = v.with_capacity(30);
            let mut mem = MemModel::new(30).unwrap();
            let s = StoredMatrix::store(&mut mem, &a, LayoutKind::ColumnMajor).unwrap();
            for j in 1..n {
                fill_region(&mut mem, s.region(0, j, j, 1), Scalar::Real(f64::NAN));
            }
            factor_in_place(v, s, &mut mem, &mut FlopCounter::new()).unwrap();
            assert_eq!(s.fetch(&mem).lower(), want, "{v}");
        }
    }

    #[test]
    fn variant_names_parse() {
        for v in ALL {
            assert_eq!(v.name().parse::<CholVariant>().unwrap(), v);
        }
        assert_eq!(
            "potrf(4)".parse::<CholVariant>().unwrap(),
            CholVariant::BlockedPotrf { block: 4 }
        );
        assert_eq!(CholVariant::default_block(192), 8);
        assert!("cholesky".parse::<CholVariant>().is_err());
    }

    #[test]
    fn hierarchy_reports_each_level() {
        let a = Matrix::random_spd(16, 1);
        let spec = HierSpec::uniform(&[12, 48, 192], CostParams::default()).unwrap();
        let r = hierarchical_report(&a, CholVariant::SquareRecursive, LayoutKind::BlockRecursive, &spec).unwrap();
        assert_eq!(r.levels.len(), 3);
        assert!(r.levels[0].words >= r.levels[1].words);
        assert!(r.levels[1].words >= r.levels[2].words);
        assert!(r.modeled_time > 0.0);
    }
}
