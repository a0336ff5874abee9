//! Two-level memory with an explicitly managed fast scratchpad.
//!
//! Slow memory is an addressed word store. Fast memory holds at most
//! `capacity` words, reserved through [`Handle`]s. Every read or write moves
//! a set of address runs; each maximal contiguous run of length `l` costs `l`
//! words and `ceil(l / capacity)` messages.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Run;
use crate::scalar::Scalar;

/// Reservation of fast-memory words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Handle(u64);

impl Handle {
    pub fn id(&self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub words_read: u64,
    pub words_written: u64,
    pub messages_read: u64,
    pub messages_written: u64,
}

impl Counters {
    pub fn words(&self) -> u64 {
        self.words_read + self.words_written
    }

    pub fn messages(&self) -> u64 {
        self.messages_read + self.messages_written
    }
}

impl std::ops::Sub for Counters {
    type Output = Counters;

    fn sub(self, o: Counters) -> Counters {
        Counters {
            words_read: self.words_read - o.words_read,
            words_written: self.words_written - o.words_written,
            messages_read: self.messages_read - o.messages_read,
            messages_written: self.messages_written - o.messages_written,
        }
    }
}

/// Latency, inverse bandwidth and per-flop time used for modeled run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            alpha: 1e-5,
            beta: 1e-8,
            gamma: 1e-9,
        }
    }
}

impl CostParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if alpha < 0.0 || beta < 0.0 || gamma < 0.0 {
            return Err(Error::InvalidInput("cost parameters must be >= 0".into()));
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn time(&self, messages: u64, words: u64, flops: u64) -> f64 {
        self.alpha * messages as f64 + self.beta * words as f64 + self.gamma * flops as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceOp {
    Read,
    Write,
    Allocate,
    Shrink,
    Release,
}

/// One transfer or residency event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub op: TraceOp,
    pub runs: Vec<Run>,
    pub words: u64,
    pub messages: u64,
    pub occupancy_after: usize,
}

/// Messages needed to move `runs` when no message exceeds `capacity` words.
pub fn message_count(runs: &[Run], capacity: usize) -> u64 {
    runs.iter().map(|r| r.len.div_ceil(capacity) as u64).sum()
}

#[derive(Debug, Clone)]
pub struct MemModel {
    capacity: usize,
    slow: Vec<Scalar>,
    occupancy: usize,
    peak: usize,
    counters: Counters,
    resident: HashMap<u64, usize>,
    next_handle: u64,
    trace: Option<Vec<TraceRecord>>,
}

impl MemModel {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::CapacityExceeded { requested: 1, available: 0 });
        }
        Ok(Self {
            capacity,
            slow: Vec::new(),
            occupancy: 0,
            peak: 0,
            counters: Counters::default(),
            resident: HashMap::new(),
            next_handle: 0,
            trace: None,
        })
    }

    /// Records every event from now on.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn occupancy(&self) -> usize {
        self.occupancy
    }

    pub fn available(&self) -> usize {
        self.capacity - self.occupancy
    }

    pub fn peak_occupancy(&self) -> usize {
        self.peak
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    /// The trace as JSON lines, one record per line.
    pub fn trace_json_lines(&self) -> String {
        let mut out = String::new();
        for rec in self.trace.iter().flatten() {
            out.push_str(&serde_json::to_string(rec).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }

    /// Reserves `words` of slow memory and returns the base address.
    pub fn alloc_slow(&mut self, words: usize) -> usize {
        let base = self.slow.len();
        self.slow.resize(base + words, Scalar::ZERO);
        base
    }

    pub fn slow_len(&self) -> usize {
        self.slow.len()
    }

    /// Uncounted access, for initial placement and final inspection only.
    pub fn slow_get(&self, addr: usize) -> Scalar {
        self.slow[addr]
    }

    /// Uncounted store, for initial placement only.
    pub fn slow_set(&mut self, addr: usize, v: Scalar) {
        self.slow[addr] = v;
    }

    pub fn is_resident(&self, h: Handle) -> bool {
        self.resident.contains_key(&h.0)
    }

    pub fn handle_words(&self, h: Handle) -> Option<usize> {
        self.resident.get(&h.0).copied()
    }

    fn reserve(&mut self, words: usize) -> Result<Handle> {
        if words > self.available() {
            return Err(Error::CapacityExceeded {
                requested: words,
                available: self.available(),
            });
        }
        self.occupancy += words;
        self.peak = self.peak.max(self.occupancy);
        let h = Handle(self.next_handle);
        self.next_handle += 1;
        self.resident.insert(h.0, words);
        Ok(h)
    }

    fn log(&mut self, op: TraceOp, runs: &[Run], words: u64, messages: u64) {
        let occupancy_after = self.occupancy;
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceRecord {
                op,
                runs: runs.to_vec(),
                words,
                messages,
                occupancy_after,
            });
        }
    }

    /// Moves `runs` from slow to fast memory; the words stay resident until
    /// the returned handle is released.
    pub fn read(&mut self, runs: &[Run]) -> Result<Handle> {
        let words: usize = runs.iter().map(|r| r.len).sum();
        let h = self.reserve(words)?;
        let messages = message_count(runs, self.capacity);
        self.counters.words_read += words as u64;
        self.counters.messages_read += messages;
        self.log(TraceOp::Read, runs, words as u64, messages);
        Ok(h)
    }

    /// Reserves fast-memory words without transferring anything, for outputs
    /// that are produced in fast memory.
    pub fn allocate(&mut self, words: usize) -> Result<Handle> {
        let h = self.reserve(words)?;
        self.log(TraceOp::Allocate, &[], 0, 0);
        Ok(h)
    }

    /// Moves `runs` from the resident data behind `h` to slow memory.
    pub fn write(&mut self, h: Handle, runs: &[Run]) -> Result<()> {
        let resident = self.handle_words(h).ok_or(Error::NotResident(h.0))?;
        let words: usize = runs.iter().map(|r| r.len).sum();
        if words > resident {
            return Err(Error::WriteExceedsHandle { words, resident });
        }
        let messages = message_count(runs, self.capacity);
        self.counters.words_written += words as u64;
        self.counters.messages_written += messages;
        self.log(TraceOp::Write, runs, words as u64, messages);
        Ok(())
    }

    /// Keeps only `words` of a reservation resident.
    pub fn shrink(&mut self, h: Handle, words: usize) -> Result<()> {
        let held = self.resident.get_mut(&h.0).ok_or(Error::NotResident(h.0))?;
        if words > *held {
            return Err(Error::CapacityExceeded { requested: words, available: *held });
        }
        self.occupancy -= *held - words;
        *held = words;
        self.log(TraceOp::Shrink, &[], 0, 0);
        Ok(())
    }

    pub fn release(&mut self, h: Handle) -> Result<()> {
        let words = self.resident.remove(&h.0).ok_or(Error::NotResident(h.0))?;
        self.occupancy -= words;
        self.log(TraceOp::Release, &[], 0, 0);
        Ok(())
    }
}

/// One level of a memory hierarchy, seen as the fast side of a two-level
/// pair with everything slower behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub capacity: usize,
    pub params: CostParams,
}

/// Capacities `M_1 < M_2 < ...` of the fast levels. The outermost memory,
/// holding the whole problem, is implicit, so `k` levels describe a
/// `k + 1`-level machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierSpec {
    levels: Vec<LevelSpec>,
}

impl HierSpec {
    pub fn new(levels: Vec<LevelSpec>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidInput("hierarchy needs at least one fast level".into()));
        }
        for w in levels.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            if lo.capacity >= hi.capacity {
                return Err(Error::InvalidInput("level capacities must strictly increase".into()));
            }
            if lo.params.alpha > hi.params.alpha || lo.params.beta > hi.params.beta {
                return Err(Error::InvalidInput(
                    "latency and inverse bandwidth must not decrease outward".into(),
                ));
            }
        }
        Ok(Self { levels })
    }

    /// Levels sharing one set of cost parameters.
    pub fn uniform(capacities: &[usize], params: CostParams) -> Result<Self> {
        Self::new(
            capacities
                .iter()
                .map(|&capacity| LevelSpec { capacity, params })
                .collect(),
        )
    }

    pub fn levels(&self) -> &[LevelSpec] {
        &self.levels
    }

    /// Number of memory levels including the implicit outermost one.
    pub fn depth(&self) -> usize {
        self.levels.len() + 1
    }
}
