//! Matrices placed in simulated slow memory, rectangular regions of them,
//! and tiles: resident fast-memory copies of a region.

use crate::error::{Error, Result};
use crate::layout::{push_run, Layout, LayoutKind, Run};
use crate::matrix::Matrix;
use crate::memsim::{Handle, MemModel};
use crate::scalar::Scalar;

/// A square matrix living in slow memory under some layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoredMatrix {
    layout: Layout,
    base: usize,
}

impl StoredMatrix {
    /// Reserves slow memory for an `n x n` matrix of zeros.
    pub fn allocate(mem: &mut MemModel, kind: LayoutKind, n: usize) -> Result<Self> {
        let layout = Layout::new(kind, n)?;
        let base = mem.alloc_slow(layout.footprint());
        Ok(Self { layout, base })
    }

    /// Places `m` in slow memory. Initial placement is not a transfer and is
    /// not counted.
    pub fn store(mem: &mut MemModel, m: &Matrix, kind: LayoutKind) -> Result<Self> {
        let s = Self::allocate(mem, kind, m.n())?;
        for i in 0..m.n() {
            for j in 0..m.n() {
                mem.slow_set(s.addr(i, j), m.get(i, j));
            }
        }
        Ok(s)
    }

    /// Uncounted read-back of the whole matrix.
    pub fn fetch(&self, mem: &MemModel) -> Matrix {
        Matrix::from_fn(self.n(), |i, j| mem.slow_get(self.addr(i, j)))
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn base(&self) -> usize {
        self.base
    }

    #[inline]
    pub fn addr(&self, i: usize, j: usize) -> usize {
        self.base + self.layout.address_unchecked(i, j)
    }

    pub fn full(&self) -> Region {
        self.region(0, 0, self.n(), self.n())
    }

    pub fn region(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Region {
        assert!(
            row0 + rows <= self.n() && col0 + cols <= self.n(),
            "region outside matrix"
        );
        Region {
            mat: *self,
            row0,
            col0,
            rows,
            cols,
        }
    }

    fn runs(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Vec<Run> {
        let mut runs = self
            .layout
            .address_set(rows, cols)
            .expect("region checked on construction");
        for r in &mut runs {
            r.addr += self.base;
        }
        runs
    }
}

/// Sorts runs by address and merges adjacent ones.
pub fn normalize_runs(mut runs: Vec<Run>) -> Vec<Run> {
    runs.sort_by_key(|r| r.addr);
    let mut out = Vec::with_capacity(runs.len());
    for r in runs {
        push_run(&mut out, r);
    }
    out
}

/// Rectangular window `rows x cols` of a stored matrix at `(row0, col0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    mat: StoredMatrix,
    row0: usize,
    col0: usize,
    rows: usize,
    cols: usize,
}

impl Region {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row0(&self) -> usize {
        self.row0
    }

    pub fn col0(&self) -> usize {
        self.col0
    }

    pub fn words(&self) -> usize {
        self.rows * self.cols
    }

    pub fn matrix(&self) -> StoredMatrix {
        self.mat
    }

    /// Sub-window with coordinates relative to this region.
    pub fn sub(&self, r: usize, c: usize, rows: usize, cols: usize) -> Region {
        assert!(r + rows <= self.rows && c + cols <= self.cols, "sub-region out of bounds");
        Region {
            mat: self.mat,
            row0: self.row0 + r,
            col0: self.col0 + c,
            rows,
            cols,
        }
    }

    /// Absolute slow-memory runs covering the region.
    pub fn runs(&self) -> Vec<Run> {
        self.mat
            .runs(self.row0..self.row0 + self.rows, self.col0..self.col0 + self.cols)
    }

    /// Runs covering only cells on or below the global diagonal.
    pub fn lower_runs(&self) -> Vec<Run> {
        let mut runs = Vec::new();
        for j in self.col0..self.col0 + self.cols {
            let lo = self.row0.max(j);
            let hi = self.row0 + self.rows;
            if lo < hi {
                runs.extend(self.mat.runs(lo..hi, j..j + 1));
            }
        }
        normalize_runs(runs)
    }

    pub fn v(self) -> View {
        View { region: self, transposed: false }
    }

    pub fn t(self) -> View {
        View { region: self, transposed: true }
    }
}

/// A region used as an operand, possibly transposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct View {
    pub region: Region,
    pub transposed: bool,
}

impl View {
    pub fn rows(&self) -> usize {
        if self.transposed {
            self.region.cols
        } else {
            self.region.rows
        }
    }

    pub fn cols(&self) -> usize {
        if self.transposed {
            self.region.rows
        } else {
            self.region.cols
        }
    }

    /// Sub-view in the operand's own (possibly transposed) coordinates.
    pub fn sub(&self, r: usize, c: usize, rows: usize, cols: usize) -> View {
        let region = if self.transposed {
            self.region.sub(c, r, cols, rows)
        } else {
            self.region.sub(r, c, rows, cols)
        };
        View { region, transposed: self.transposed }
    }
}

/// Fast-memory copy of a region, stored column-major.
#[derive(Debug)]
pub struct Tile {
    handle: Handle,
    region: Region,
    data: Vec<Scalar>,
}

impl Tile {
    /// Reads the region into fast memory.
    pub fn load(mem: &mut MemModel, region: Region) -> Result<Tile> {
        let handle = mem.read(&region.runs())?;
        let mut data = Vec::with_capacity(region.words());
        for j in 0..region.cols {
            for i in 0..region.rows {
                data.push(mem.slow_get(region.mat.addr(region.row0 + i, region.col0 + j)));
            }
        }
        Ok(Tile { handle, region, data })
    }

    /// Reserves fast memory for the region without reading it; contents start
    /// as real zeros.
    pub fn scratch(mem: &mut MemModel, region: Region) -> Result<Tile> {
        let handle = mem.allocate(region.words())?;
        Ok(Tile {
            handle,
            region,
            data: vec![Scalar::ZERO; region.words()],
        })
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn handle(&self) -> Handle {
        self.handle
    }

    pub fn rows(&self) -> usize {
        self.region.rows
    }

    pub fn cols(&self) -> usize {
        self.region.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Scalar {
        self.data[j * self.region.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[j * self.region.rows + i] = v;
    }

    /// Element `(i, j)` of the operand seen as transposed or not.
    #[inline]
    pub fn at(&self, i: usize, j: usize, transposed: bool) -> Scalar {
        if transposed {
            self.get(j, i)
        } else {
            self.get(i, j)
        }
    }

    /// Sets every cell above the global diagonal to real zero.
    pub fn zero_upper(&mut self) {
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                if self.region.row0 + i < self.region.col0 + j {
                    self.set(i, j, Scalar::ZERO);
                }
            }
        }
    }

    fn copy_out(&self, mem: &mut MemModel, lower_only: bool) {
        let r = self.region;
        for j in 0..r.cols {
            for i in 0..r.rows {
                if lower_only && r.row0 + i < r.col0 + j {
                    continue;
                }
                mem.slow_set(r.mat.addr(r.row0 + i, r.col0 + j), self.get(i, j));
            }
        }
    }

    /// Writes the whole tile back to its region.
    pub fn store(&self, mem: &mut MemModel) -> Result<()> {
        mem.write(self.handle, &self.region.runs())?;
        self.copy_out(mem, false);
        Ok(())
    }

    /// Writes back only the cells on or below the global diagonal.
    pub fn store_lower(&self, mem: &mut MemModel) -> Result<()> {
        mem.write(self.handle, &self.region.lower_runs())?;
        self.copy_out(mem, true);
        Ok(())
    }

    /// Keeps `words` of the reservation resident and hands back the handle;
    /// the caller is responsible for releasing it.
    pub fn retain(self, mem: &mut MemModel, words: usize) -> Result<Handle> {
        mem.shrink(self.handle, words)?;
        Ok(self.handle)
    }

    pub fn release(self, mem: &mut MemModel) -> Result<()> {
        mem.release(self.handle)
    }
}

/// Copies `src` into a fresh matrix with layout `kind`, moving at most
/// `capacity` words through fast memory at a time.
pub fn convert_layout(mem: &mut MemModel, src: StoredMatrix, kind: LayoutKind) -> Result<StoredMatrix> {
    let cap = mem.available();
    if cap < 2 {
        return Err(Error::CapacityExceeded { requested: 2, available: cap });
    }
    let n = src.n();
    let dst = StoredMatrix::allocate(mem, kind, n)?;
    let total = n * n;
    let mut pos = 0;
    while pos < total {
        let len = cap.min(total - pos);
        let mut src_runs = Vec::new();
        let mut dst_runs = Vec::new();
        let mut k = pos;
        while k < pos + len {
            let (j, i) = (k / n, k % n);
            let seg = (n - i).min(pos + len - k);
            src_runs.extend(src.runs(i..i + seg, j..j + 1));
            dst_runs.extend(dst.runs(i..i + seg, j..j + 1));
            k += seg;
        }
        let h = mem.read(&normalize_runs(src_runs))?;
        mem.write(h, &normalize_runs(dst_runs))?;
        for k in pos..pos + len {
            let (j, i) = (k / n, k % n);
            let v = mem.slow_get(src.addr(i, j));
            mem.slow_set(dst.addr(i, j), v);
        }
        mem.release(h)?;
        pos += len;
    }
    Ok(dst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_fetch_round_trip() {
        let m = Matrix::random(5, 3);
        for kind in [
            LayoutKind::ColumnMajor,
            LayoutKind::Blocked { block: 2 },
            LayoutKind::BlockRecursive,
        ] {
            let mut mem = MemModel::new(16).unwrap();
            let s = StoredMatrix::store(&mut mem, &m, kind).unwrap();
            assert_eq!(s.fetch(&mem), m);
            assert_eq!(mem.counters().words(), 0);
        }
    }

    #[test]
    fn tile_load_store_counts() {
        let m = Matrix::random(8, 1);
        let mut mem = MemModel::new(64).unwrap();
        let s = StoredMatrix::store(&mut mem, &m, LayoutKind::ColumnMajor).unwrap();
        let mut t = Tile::load(&mut mem, s.region(2, 1, 3, 2)).unwrap();
        assert_eq!(t.get(1, 1), m.get(3, 2));
        assert_eq!(mem.counters().words_read, 6);
        assert_eq!(mem.counters().messages_read, 2);
        t.set(0, 0, Scalar::Real(42.0));
        t.store(&mut mem).unwrap();
        t.release(&mut mem).unwrap();
        assert_eq!(mem.occupancy(), 0);
        assert_eq!(s.fetch(&mem).get(2, 1), Scalar::Real(42.0));
    }

    #[test]
    fn lower_runs_cover_triangle() {
        let mut mem = MemModel::new(64).unwrap();
        let s = StoredMatrix::allocate(&mut mem, LayoutKind::ColumnMajor, 4).unwrap();
        let words: usize = s.full().lower_runs().iter().map(|r| r.len).sum();
        assert_eq!(words, 10);
        let off: usize = s.region(2, 0, 2, 2).lower_runs().iter().map(|r| r.len).sum();
        assert_eq!(off, 4);
    }

    #[test]
    fn transposed_view_coordinates() {
        let mut mem = MemModel::new(64).unwrap();
        let s = StoredMatrix::allocate(&mut mem, LayoutKind::ColumnMajor, 6).unwrap();
        let v = s.region(1, 2, 4, 3).t();
        assert_eq!((v.rows(), v.cols()), (3, 4));
        let sub = v.sub(1, 2, 2, 2);
        assert_eq!((sub.region.row0(), sub.region.col0()), (3, 3));
    }

    #[test]
    fn conversion_preserves_values() {
        let m = Matrix::random(6, 9);
        let mut mem = MemModel::new(5).unwrap();
        let s = StoredMatrix::store(&mut mem, &m, LayoutKind::ColumnMajor).unwrap();
        let d = convert_layout(&mut mem, s, LayoutKind::BlockRecursive).unwrap();
        assert_eq!(d.fetch(&mem), m);
        assert_eq!(mem.counters().words_read, 36);
        assert_eq!(mem.counters().words_written, 36);
        assert!(mem.peak_occupancy() <= 5);
        let mut tiny = MemModel::new(1).unwrap();
        let s = StoredMatrix::store(&mut tiny, &m, LayoutKind::ColumnMajor).unwrap();
        assert!(convert_layout(&mut tiny, s, LayoutKind::BlockRecursive).is_err());
    }
}
