//! Simulated distributed blocked Cholesky on a square process grid.
//!
//! Blocks are dealt out block-cyclically: block `(I, J)` lives on process
//! `(I mod p, J mod p)` of the `p x p` grid. Each block step runs six phases
//! separated by barriers:
//!
//! 1. the owner of the diagonal block factors it;
//! 2. the factor is broadcast down its process column;
//! 3. owners of panel blocks solve against it;
//! 4. each process row broadcasts its panel blocks along the row;
//! 5. each diagonal process `(q, q)` re-broadcasts the panel blocks of block
//!    rows `= q mod p` down process column `q`;
//! 6. owners of trailing blocks apply the rank-`b` update.
//!
//! Broadcasts use a binary tree over the participating ranks. The critical
//! path of a phase is the maximum over its concurrent operations; the
//! critical path of the run is the sum over phases.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::memsim::CostParams;
use crate::scalar::FlopCounter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcGrid {
    procs: usize,
    side: usize,
    block: usize,
    n: usize,
}

impl ProcGrid {
    pub fn new(procs: usize, block: usize, n: usize) -> Result<Self> {
        let side = (procs as f64).sqrt().round() as usize;
        if procs == 0 || side * side != procs {
            return Err(Error::GridMismatch(format!("{procs} processes do not form a square grid")));
        }
        if block == 0 || !n.is_multiple_of(block) {
            return Err(Error::GridMismatch(format!("block size {block} does not divide n = {n}")));
        }
        if !n.is_multiple_of(side) {
            return Err(Error::GridMismatch(format!("grid side {side} does not divide n = {n}")));
        }
        Ok(Self { procs, side, block, n })
    }

    pub fn procs(&self) -> usize {
        self.procs
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks_per_side(&self) -> usize {
        self.n / self.block
    }

    /// Rank of process `(row, col)`, numbered row-major.
    pub fn rank(&self, row: usize, col: usize) -> usize {
        row * self.side + col
    }

    pub fn owner(&self, bi: usize, bj: usize) -> usize {
        self.rank(bi % self.side, bj % self.side)
    }
}

/// Words, messages and flops along a path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathCost {
    pub words: u64,
    pub messages: u64,
    pub flops: u64,
}

impl PathCost {
    fn max(self, o: PathCost) -> PathCost {
        PathCost {
            words: self.words.max(o.words),
            messages: self.messages.max(o.messages),
            flops: self.flops.max(o.flops),
        }
    }
}

impl std::ops::AddAssign for PathCost {
    fn add_assign(&mut self, o: PathCost) {
        self.words += o.words;
        self.messages += o.messages;
        self.flops += o.flops;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankCost {
    pub words_sent: u64,
    pub words_recv: u64,
    pub messages_sent: u64,
    pub messages_recv: u64,
    pub flops: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    DiagonalFactor,
    ColumnBroadcast,
    PanelSolve,
    RowBroadcast,
    ColumnRebroadcast,
    TrailingUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCost {
    pub step: usize,
    pub phase: Phase,
    pub cost: PathCost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParCostReport {
    pub n: usize,
    pub procs: usize,
    pub block: usize,
    pub per_rank: Vec<RankCost>,
    pub critical: PathCost,
    /// The share of `critical` spent in column re-broadcasts.
    pub rebroadcast: PathCost,
    pub phases: Vec<PhaseCost>,
    pub modeled_time: f64,
}

impl ParCostReport {
    pub fn total_flops(&self) -> u64 {
        self.per_rank.iter().map(|r| r.flops).sum()
    }

    pub fn total_sent(&self) -> u64 {
        self.per_rank.iter().map(|r| r.words_sent).sum()
    }

    pub fn total_received(&self) -> u64 {
        self.per_rank.iter().map(|r| r.words_recv).sum()
    }
}

#[derive(Debug, Clone)]
pub struct ParFactorization {
    pub l: Matrix,
    pub report: ParCostReport,
}

fn ceil_log2(k: usize) -> u64 {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as u64
    }
}

/// Critical-path cost of broadcasting `words` to `k` ranks (root included).
pub fn broadcast(k: usize, words: u64) -> PathCost {
    let depth = ceil_log2(k);
    PathCost {
        words: depth * words,
        messages: depth,
        flops: 0,
    }
}

/// Heap-ordered binary tree rooted at `root`: position `i` forwards to
/// positions `2i+1` and `2i+2`.
fn tree_broadcast(root: usize, members: &BTreeSet<usize>, words: u64, ranks: &mut [RankCost]) -> PathCost {
    let order: Vec<usize> = std::iter::once(root)
        .chain(members.iter().copied().filter(|&r| r != root))
        .collect();
    for (i, &dst) in order.iter().enumerate().skip(1) {
        let src = order[(i - 1) / 2];
        ranks[src].words_sent += words;
        ranks[src].messages_sent += 1;
        ranks[dst].words_recv += words;
        ranks[dst].messages_recv += 1;
    }
    broadcast(order.len(), words)
}

struct Sim<'a> {
    grid: &'a ProcGrid,
    a: Matrix,
    ranks: Vec<RankCost>,
    phases: Vec<PhaseCost>,
}

impl Sim<'_> {
    /// Runs `work` and records the phase, taking the busiest rank's flops.
    fn phase(&mut self, step: usize, phase: Phase, comm: PathCost, flops_by_rank: Vec<u64>) {
        let mut cost = comm;
        cost.flops = flops_by_rank.iter().copied().max().unwrap_or(0);
        for (r, f) in flops_by_rank.into_iter().enumerate() {
            self.ranks[r].flops += f;
        }
        self.phases.push(PhaseCost { step, phase, cost });
    }

    fn factor_diag(&mut self, k: usize, fc: &mut FlopCounter) -> Result<()> {
        let b = self.grid.block;
        let o = k * b;
        for j in 0..b {
            let mut d = self.a.get(o + j, o + j);
            for t in 0..j {
                d = fc.sub_mul(d, self.a.get(o + j, o + t), self.a.get(o + j, o + t));
            }
            let piv = fc.pivot_sqrt(d, o + j)?;
            self.a.set(o + j, o + j, piv);
            for i in j + 1..b {
                let mut s = self.a.get(o + i, o + j);
                for t in 0..j {
                    s = fc.sub_mul(s, self.a.get(o + i, o + t), self.a.get(o + j, o + t));
                }
                let v = fc.div(s, piv)?;
                self.a.set(o + i, o + j, v);
            }
        }
        Ok(())
    }

    fn solve_panel(&mut self, bi: usize, k: usize, fc: &mut FlopCounter) -> Result<()> {
        let b = self.grid.block;
        let (r0, c0) = (bi * b, k * b);
        for i in 0..b {
            for j in 0..b {
                let mut s = self.a.get(r0 + i, c0 + j);
                for t in 0..j {
                    s = fc.sub_mul(s, self.a.get(r0 + i, c0 + t), self.a.get(c0 + j, c0 + t));
                }
                let v = fc.div(s, self.a.get(c0 + j, c0 + j))?;
                self.a.set(r0 + i, c0 + j, v);
            }
        }
        Ok(())
    }

    fn update(&mut self, bi: usize, bj: usize, k: usize, fc: &mut FlopCounter) {
        let b = self.grid.block;
        let (r0, c0, k0) = (bi * b, bj * b, k * b);
        for i in 0..b {
            for j in 0..b {
                if r0 + i < c0 + j {
                    continue;
                }
                let mut s = self.a.get(r0 + i, c0 + j);
                for t in 0..b {
                    s = fc.sub_mul(s, self.a.get(r0 + i, k0 + t), self.a.get(c0 + j, k0 + t));
                }
                self.a.set(r0 + i, c0 + j, s);
            }
        }
    }
}

/// Factors `a` on the simulated grid and reports per-rank and critical-path
/// costs.
pub fn pxpotrf(a: &Matrix, grid: &ProcGrid, params: CostParams) -> Result<ParFactorization> {
    if a.n() != grid.n {
        return Err(Error::GridMismatch(format!("grid built for n = {}, matrix is {}", grid.n, a.n())));
    }
    let p = grid.side;
    let nb = grid.blocks_per_side();
    let b = grid.block as u64;
    let mut sim = Sim {
        grid,
        a: a.clone(),
        ranks: vec![RankCost::default(); grid.procs],
        phases: Vec::new(),
    };

    for k in 0..nb {
        let ck = k % p;
        let diag = grid.owner(k, k);

        let mut fc = FlopCounter::new();
        sim.factor_diag(k, &mut fc)?;
        let mut flops = vec![0; grid.procs];
        flops[diag] = fc.total();
        sim.phase(k, Phase::DiagonalFactor, PathCost::default(), flops);

        let members: BTreeSet<usize> = (k + 1..nb).map(|i| grid.owner(i, k)).collect();
        let comm = tree_broadcast(diag, &members, b * (b + 1) / 2, &mut sim.ranks);
        sim.phase(k, Phase::ColumnBroadcast, comm, vec![0; grid.procs]);

        let mut flops = vec![0; grid.procs];
        for i in k + 1..nb {
            let mut fc = FlopCounter::new();
            sim.solve_panel(i, k, &mut fc)?;
            flops[grid.owner(i, k)] += fc.total();
        }
        sim.phase(k, Phase::PanelSolve, PathCost::default(), flops);

        // panel blocks held by process row r, and the ranks needing them
        let mut comm = PathCost::default();
        for r in 0..p {
            let held = (k + 1..nb).filter(|i| i % p == r).count() as u64;
            if held == 0 {
                continue;
            }
            let members: BTreeSet<usize> = (k + 1..nb)
                .filter(|i| i % p == r)
                .flat_map(|i| (k + 1..=i).map(move |j| (i, j)))
                .map(|(i, j)| grid.owner(i, j))
                .collect();
            comm = comm.max(tree_broadcast(grid.rank(r, ck), &members, held * b * b, &mut sim.ranks));
        }
        sim.phase(k, Phase::RowBroadcast, comm, vec![0; grid.procs]);

        let mut comm = PathCost::default();
        for q in 0..p {
            let held = (k + 1..nb).filter(|j| j % p == q).count() as u64;
            if held == 0 {
                continue;
            }
            let members: BTreeSet<usize> = (k + 1..nb)
                .filter(|j| j % p == q)
                .flat_map(|j| (j..nb).map(move |i| (i, j)))
                .map(|(i, j)| grid.owner(i, j))
                .collect();
            comm = comm.max(tree_broadcast(grid.rank(q, q), &members, held * b * b, &mut sim.ranks));
        }
        sim.phase(k, Phase::ColumnRebroadcast, comm, vec![0; grid.procs]);

        let mut flops = vec![0; grid.procs];
        for i in k + 1..nb {
            for j in k + 1..=i {
                let mut fc = FlopCounter::new();
                sim.update(i, j, k, &mut fc);
                flops[grid.owner(i, j)] += fc.total();
            }
        }
        sim.phase(k, Phase::TrailingUpdate, PathCost::default(), flops);
    }

    let mut critical = PathCost::default();
    let mut rebroadcast = PathCost::default();
    for ph in &sim.phases {
        critical += ph.cost;
        if ph.phase == Phase::ColumnRebroadcast {
            rebroadcast += ph.cost;
        }
    }
    let report = ParCostReport {
        n: grid.n,
        procs: grid.procs,
        block: grid.block,
        per_rank: sim.ranks,
        critical,
        rebroadcast,
        phases: sim.phases,
        modeled_time: params.time(critical.messages, critical.words, critical.flops),
    };
    Ok(ParFactorization {
        l: sim.a.lower(),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{expected_flops, reference_cholesky};

    #[test]
    fn broadcast_examples() {
        assert_eq!(broadcast(1, 10), PathCost::default());
        assert_eq!(broadcast(8, 10), PathCost { words: 30, messages: 3, flops: 0 });
        assert_eq!(broadcast(6, 5).messages, 3);
        assert_eq!(broadcast(2, 5).messages, 1);
    }

    #[test]
    fn grid_validation() {
        assert!(ProcGrid::new(4, 8, 16).is_ok());
        assert!(matches!(ProcGrid::new(3, 4, 16), Err(Error::GridMismatch(_))));
        assert!(matches!(ProcGrid::new(4, 3, 16), Err(Error::GridMismatch(_))));
        assert!(matches!(ProcGrid::new(16, 3, 18), Err(Error::GridMismatch(_))));
        let g = ProcGrid::new(4, 2, 8).unwrap();
        assert_eq!(g.owner(3, 2), g.rank(1, 0));
    }

    #[test]
    fn single_rank_has_no_communication() {
        let a = Matrix::random_spd(8, 3);
        let r = pxpotrf(&a, &ProcGrid::new(1, 2, 8).unwrap(), CostParams::default()).unwrap();
        assert_eq!(r.report.critical.words, 0);
        assert_eq!(r.report.critical.messages, 0);
        assert_eq!(r.report.critical.flops, expected_flops(8));
        assert_eq!(r.l, reference_cholesky(&a, &mut FlopCounter::new()).unwrap());
    }

    #[test]
    fn matches_sequential_and_conserves_words() {
        for (n, p, b) in [(8, 4, 2), (16, 4, 4), (16, 16, 2), (32, 16, 4)] {
            let a = Matrix::random_spd(n, n as u64);
            let r = pxpotrf(&a, &ProcGrid::new(p, b, n).unwrap(), CostParams::default()).unwrap();
            let want = reference_cholesky(&a, &mut FlopCounter::new()).unwrap();
            assert_eq!(r.l, want);
            let rep = &r.report;
            assert_eq!(rep.total_sent(), rep.total_received());
            assert_eq!(rep.total_flops(), expected_flops(n));
            assert!(rep.critical.flops * p as u64 >= rep.total_flops());
            assert!(rep.rebroadcast.words <= rep.critical.words);
        }
    }

    #[test]
    fn doubling_block_halves_messages() {
        let a = Matrix::random_spd(64, 1);
        let m = |b| {
            pxpotrf(&a, &ProcGrid::new(16, b, 64).unwrap(), CostParams::default())
                .unwrap()
                .report
                .critical
                .messages as f64
        };
        let (m4, m8) = (m(4), m(8));
        assert!(m8 < m4 && m8 >= 0.4 * m4, "{m4} {m8}");
    }
}
