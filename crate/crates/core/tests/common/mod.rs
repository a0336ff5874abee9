//! Independent cost evaluator for the recursive kernels and factorizations.
//!
//! Walks the same recursion trees over region geometry only. Word counts
//! come from closed forms per base case. Message counts are obtained by
//! enumerating the addresses of every cell with a local address formula,
//! sorting them, and charging `ceil(len / M)` per maximal run. Nothing here
//! touches the simulator, its layouts, or its run computations.

#![allow(dead_code)]

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lay {
    ColMajor,
    Blocked(usize),
    Morton,
}

#[derive(Clone, Copy, Debug)]
pub struct Mat {
    pub lay: Lay,
    pub n: usize,
}

impl Mat {
    fn addr(&self, i: usize, j: usize) -> usize {
        match self.lay {
            Lay::ColMajor => j * self.n + i,
            Lay::Blocked(b) => {
                let per_row = self.n.div_ceil(b);
                ((i / b) * per_row + j / b) * b * b + (j % b) * b + i % b
            }
            Lay::Morton => {
                let mut code = 0usize;
                for bit in 0..32 {
                    code |= ((j >> bit) & 1) << (2 * bit);
                    code |= ((i >> bit) & 1) << (2 * bit + 1);
                }
                code
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Reg {
    pub mat: Mat,
    pub r0: usize,
    pub c0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Reg {
    pub fn whole(mat: Mat) -> Self {
        Reg { mat, r0: 0, c0: 0, rows: mat.n, cols: mat.n }
    }

    pub fn sub(&self, r: usize, c: usize, rows: usize, cols: usize) -> Reg {
        assert!(r + rows <= self.rows && c + cols <= self.cols);
        Reg { mat: self.mat, r0: self.r0 + r, c0: self.c0 + c, rows, cols }
    }

    fn words(&self) -> u64 {
        (self.rows * self.cols) as u64
    }

    /// Messages to move the region with `cap` words per message at most.
    fn msgs(&self, cap: usize) -> u64 {
        let mut addrs = Vec::with_capacity(self.rows * self.cols);
        for j in self.c0..self.c0 + self.cols {
            for i in self.r0..self.r0 + self.rows {
                addrs.push(self.mat.addr(i, j));
            }
        }
        addrs.sort_unstable();
        let mut total = 0u64;
        let mut run = 0usize;
        for (k, &a) in addrs.iter().enumerate() {
            if k > 0 && a == addrs[k - 1] + 1 {
                run += 1;
            } else {
                total += run.div_ceil(cap) as u64;
                run = 1;
            }
        }
        total + run.div_ceil(cap) as u64
    }
}

/// Operand view: rows/cols swap when transposed.
#[derive(Clone, Copy, Debug)]
pub struct Op {
    pub reg: Reg,
    pub t: bool,
}

impl Op {
    pub fn rows(&self) -> usize {
        if self.t { self.reg.cols } else { self.reg.rows }
    }

    pub fn cols(&self) -> usize {
        if self.t { self.reg.rows } else { self.reg.cols }
    }

    pub fn sub(&self, r: usize, c: usize, rows: usize, cols: usize) -> Op {
        let reg = if self.t { self.reg.sub(c, r, cols, rows) } else { self.reg.sub(r, c, rows, cols) };
        Op { reg, t: self.t }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Cost {
    pub words: u64,
    pub msgs: u64,
}

impl std::ops::Add for Cost {
    type Output = Cost;
    fn add(self, o: Cost) -> Cost {
        Cost { words: self.words + o.words, msgs: self.msgs + o.msgs }
    }
}

fn up(d: usize) -> usize {
    d - d / 2
}

/// Multiply `C (op)= A*B`; `reads_c` is false only for a pure overwrite.
pub fn mm(c: Reg, a: Op, b: Op, reads_c: bool, cap: usize) -> Cost {
    let (n, m, r) = (c.rows, a.cols(), c.cols);
    if n == 0 || m == 0 || r == 0 {
        return Cost::default();
    }
    if n * m + m * r + n * r <= cap {
        let c_times = if reads_c { 2 } else { 1 };
        return Cost {
            words: a.reg.words() + b.reg.words() + c_times * c.words(),
            msgs: a.reg.msgs(cap) + b.reg.msgs(cap) + c_times * c.msgs(cap),
        };
    }
    let big = n.max(m).max(r);
    if n == big {
        let h = up(n);
        mm(c.sub(0, 0, h, r), a.sub(0, 0, h, m), b, reads_c, cap)
            + mm(c.sub(h, 0, n - h, r), a.sub(h, 0, n - h, m), b, reads_c, cap)
    } else if m == big {
        let h = up(m);
        mm(c, a.sub(0, 0, n, h), b.sub(0, 0, h, r), reads_c, cap)
            + mm(c, a.sub(0, h, n, m - h), b.sub(h, 0, m - h, r), true, cap)
    } else {
        let h = up(r);
        mm(c.sub(0, 0, n, h), a, b.sub(0, 0, m, h), reads_c, cap)
            + mm(c.sub(0, h, n, r - h), a, b.sub(0, h, m, r - h), reads_c, cap)
    }
}

/// In-place solve `X * U = A` with `x` m x n and `u` n x n.
pub fn trsm(x: Reg, u: Op, cap: usize) -> Cost {
    let (m, n) = (x.rows, x.cols);
    if m == 0 || n == 0 {
        return Cost::default();
    }
    if 2 * m * n + n * n <= cap {
        return Cost {
            words: 2 * x.words() + u.reg.words(),
            msgs: 2 * x.msgs(cap) + u.reg.msgs(cap),
        };
    }
    let rows: Vec<(usize, usize)> = if m > 1 { vec![(0, up(m)), (up(m), m / 2)] } else { vec![(0, 1)] };
    let cols: Vec<(usize, usize)> = if n > 1 { vec![(0, up(n)), (up(n), n / 2)] } else { vec![(0, 1)] };
    let mut total = Cost::default();
    for &(r0, rl) in &rows {
        for (idx, &(c0, cl)) in cols.iter().enumerate() {
            if idx == 1 {
                let k = cols[0].1;
                total = total
                    + mm(
                        x.sub(r0, c0, rl, cl),
                        Op { reg: x.sub(r0, 0, rl, k), t: false },
                        u.sub(0, c0, k, cl),
                        true,
                        cap,
                    );
            }
            total = total + trsm(x.sub(r0, c0, rl, cl), u.sub(c0, c0, cl, cl), cap);
        }
    }
    total
}

/// Rectangular recursive factorization of an m x n panel.
pub fn rect(p: Reg, cap: usize) -> Cost {
    let (m, n) = (p.rows, p.cols);
    if m * n <= cap {
        return Cost { words: 2 * p.words(), msgs: 2 * p.msgs(cap) };
    }
    if n == 1 {
        let mut total = Cost::default();
        let mut s = 0;
        let mut chunk = cap;
        while s < m {
            let l = chunk.min(m - s);
            let r = p.sub(s, 0, l, 1);
            total = total + Cost { words: 2 * r.words(), msgs: 2 * r.msgs(cap) };
            s += l;
            chunk = cap - 1;
        }
        return total;
    }
    let n1 = up(n);
    let n2 = n - n1;
    rect(p.sub(0, 0, m, n1), cap)
        + mm(
            p.sub(n1, n1, m - n1, n2),
            Op { reg: p.sub(n1, 0, m - n1, n1), t: false },
            Op { reg: p.sub(n1, 0, n2, n1), t: true },
            true,
            cap,
        )
        + rect(p.sub(n1, n1, m - n1, n2), cap)
}

/// Square recursive factorization of a diagonal block.
pub fn square(d: Reg, cap: usize) -> Cost {
    let n = d.rows;
    if 3 * n * n <= cap {
        return Cost { words: 2 * d.words(), msgs: 2 * d.msgs(cap) };
    }
    let n1 = up(n);
    let n2 = n - n1;
    let l21 = d.sub(n1, 0, n2, n1);
    square(d.sub(0, 0, n1, n1), cap)
        + trsm(l21, Op { reg: d.sub(0, 0, n1, n1), t: true }, cap)
        + mm(d.sub(n1, n1, n2, n2), Op { reg: l21, t: false }, Op { reg: l21, t: true }, true, cap)
        + square(d.sub(n1, n1, n2, n2), cap)
}
