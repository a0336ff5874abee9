//! Dense square matrices over [`Scalar`], the in-memory reference
//! factorization, and the exact flop count it performs.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{FlopCounter, Scalar};

/// Square `n x n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be at least 1");
        Self {
            n,
            data: vec![Scalar::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Scalar::ONE);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("rows must form a square".into()));
        }
        Ok(Self::from_fn(n, |i, j| Scalar::Real(rows[i][j])))
    }

    /// Random symmetric positive definite matrix `G*G^T + n*I` with entries
    /// of `G` uniform in `[-1, 1)`.
    pub fn random_spd(n: usize, seed: u64) -> Self {
        let g = Self::random(n, seed);
        let mut a = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..n {
                    s += g.real(i, k) * g.real(j, k);
                }
                if i == j {
                    s += n as f64;
                }
                a.set(i, j, Scalar::Real(s));
                a.set(j, i, Scalar::Real(s));
            }
        }
        a
    }

    /// Random real matrix with entries uniform in `[-1, 1)`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_fn(n, |_, _| Scalar::Real(rng.gen_range(-1.0..1.0)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Scalar {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.n + j] = v;
    }

    /// Real value at `(i, j)`; starred entries read as NaN.
    pub fn real(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).as_real().unwrap_or(f64::NAN)
    }

    pub fn is_all_real(&self) -> bool {
        self.data.iter().all(|s| !s.is_starred())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// Lower triangle with the strict upper triangle set to real zero.
    pub fn lower(&self) -> Self {
        Self::from_fn(self.n, |i, j| if i >= j { self.get(i, j) } else { Scalar::ZERO })
    }

    /// Square sub-block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, size: usize) -> Self {
        Self::from_fn(size, |i, j| self.get(r0 + i, c0 + j))
    }

    /// Classical product, each entry summed left to right by ascending `k`
    /// with the starred rules.
    pub fn matmul(&self, rhs: &Matrix) -> Self {
        assert_eq!(self.n, rhs.n);
        Self::from_fn(self.n, |i, j| {
            let mut acc = self.get(i, 0).mul(rhs.get(0, j));
            for k in 1..self.n {
                acc = acc.add(self.get(i, k).mul(rhs.get(k, j)));
            }
            acc
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .filter_map(|s| s.as_real())
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Max-norm distance over real entries; a starred/real mismatch is infinite.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| match (a, b) {
                (Scalar::Real(x), Scalar::Real(y)) => (x - y).abs(),
                (x, y) if x == y => 0.0,
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    /// `max|L*L^T - self| / max|self|` for a candidate factor `l`.
    pub fn factor_residual(&self, l: &Matrix) -> f64 {
        let llt = l.matmul(&l.transpose());
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.max_abs_diff(&llt) / scale
    }

    /// Text format: first line `n`, then `n` rows of `n` whitespace-separated
    /// tokens, where `1*` and `0*` denote the starred values.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let n: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad dimension: {e}")))?;
        if n == 0 {
            return Err(Error::Parse("dimension must be positive".into()));
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let tok = tokens
                    .next()
                    .ok_or_else(|| Error::Parse(format!("missing entry ({i}, {j})")))?;
                m.set(i, j, tok.parse()?);
            }
        }
        if tokens.next().is_some() {
            return Err(Error::Parse("trailing tokens after matrix".into()));
        }
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// `sum_{i=1..n} sum_{j=1..i} (2j - 1) = sum_{i=1..n} i^2`.
pub fn expected_flops(n: usize) -> u64 {
    let n = n as u64;
    n * (n + 1) * (2 * n + 1) / 6
}

/// Left-looking column-by-column factorization entirely in memory.
///
/// Only the lower triangle of `a` is read. Each entry is computed as
/// `(a(i,j) - l(i,0)l(j,0) - l(i,1)l(j,1) - ...) / l(j,j)`, subtracting in
/// ascending order, so the flop counter advances by exactly
/// [`expected_flops`] on success.
pub fn reference_cholesky(a: &Matrix, fc: &mut FlopCounter) -> Result<Matrix> {
    let n = a.n();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d = fc.sub_mul(d, l.get(j, k), l.get(j, k));
        }
        let piv = fc.pivot_sqrt(d, j)?;
        l.set(j, j, piv);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s = fc.sub_mul(s, l.get(i, k), l.get(j, k));
            }
            l.set(i, j, fc.div(s, piv)?);
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factors_to_identity() {
        let mut fc = FlopCounter::new();
        let l = reference_cholesky(&Matrix::identity(3), &mut fc).unwrap();
        assert_eq!(l, Matrix::identity(3));
    }

    #[test]
    fn two_by_two_example() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]).unwrap();
        let mut fc = FlopCounter::new();
        let l = reference_cholesky(&a, &mut fc).unwrap();
        let want = Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(l, want);
        assert_eq!(l.matmul(&l.transpose()), a);
    }

    #[test]
    fn flop_count_n3_is_14() {
        let a = Matrix::random_spd(3, 1);
        let mut fc = FlopCounter::new();
        reference_cholesky(&a, &mut fc).unwrap();
        assert_eq!(fc.total(), 14);
    }

    #[test]
    fn expected_flops_matches_double_sum() {
        for n in 1..=40usize {
            let brute: u64 = (1..=n as u64)
                .map(|i| (1..=i).map(|j| 2 * j - 1).sum::<u64>())
                .sum();
            assert_eq!(expected_flops(n), brute);
        }
        assert_eq!(expected_flops(1), 1);
        assert_eq!(expected_flops(3), 14);
        assert_eq!(expected_flops(10), 385);
    }

    #[test]
    fn indefinite_input_is_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let err = reference_cholesky(&a, &mut FlopCounter::new()).unwrap_err();
        assert!(matches!(err, Error::NonPositivePivot { column: 1, .. }));
    }

    #[test]
    fn text_round_trip_with_stars() {
        let mut m = Matrix::identity(3);
        m.set(1, 1, Scalar::StarOne);
        m.set(2, 1, Scalar::StarZero);
        m.set(0, 2, Scalar::Real(-3.25));
        assert_eq!(Matrix::parse(&m.to_text()).unwrap(), m);
        assert!(Matrix::parse("2\n1 2\n3").is_err());
        assert!(Matrix::parse("1\n1 2").is_err());
    }
}
