//! Multi-step gossip: `T` synchronous rounds `X ← W^k X` with the global
//! round index `k` advancing across calls.

use std::borrow::Cow;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graphs::GraphSequence;
use crate::mixing::{metropolis_weights, MixingMatrix};
use crate::state::DistributedState;

pub use crate::state::consensus_error;

/// Metropolis matrices of a graph sequence by global round index. Periodic
/// sequences are precomputed once.
#[derive(Debug, Clone)]
pub struct MixingSchedule<'a> {
    seq: &'a GraphSequence,
    cached: Vec<MixingMatrix>,
}

impl<'a> MixingSchedule<'a> {
    pub fn new(seq: &'a GraphSequence) -> Self {
        let cached = match seq.period() {
            Some(p) => (0..p).map(|k| metropolis_weights(&seq.edge_set_at(k))).collect(),
            None => Vec::new(),
        };
        Self { seq, cached }
    }

    pub fn n(&self) -> usize {
        self.seq.n()
    }

    pub fn sequence(&self) -> &GraphSequence {
        self.seq
    }

    pub fn matrix_at(&self, k: usize) -> Cow<'_, MixingMatrix> {
        if self.cached.is_empty() {
            Cow::Owned(metropolis_weights(&self.seq.edge_set_at(k)))
        } else {
            Cow::Borrowed(&self.cached[k % self.cached.len()])
        }
    }
}

/// Communication accounting; one round is one multiplication by `W^k`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConsensusCounter {
    rounds_total: u64,
    per_call: Vec<usize>,
}

impl ConsensusCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rounds_total(&self) -> u64 {
        self.rounds_total
    }

    pub fn per_call(&self) -> &[usize] {
        &self.per_call
    }

    fn record(&mut self, rounds: usize) {
        self.rounds_total += rounds as u64;
        self.per_call.push(rounds);
    }
}

/// `W^{start+T-1} ⋯ W^{start} X`.
pub fn consensus(
    x: &DistributedState,
    rounds: usize,
    schedule: &MixingSchedule<'_>,
    start: usize,
    counter: &mut ConsensusCounter,
) -> Result<DistributedState> {
    let out = consensus_matrix(x.matrix(), rounds, schedule, start)?;
    counter.record(rounds);
    Ok(DistributedState::new(out))
}

pub(crate) fn consensus_matrix(
    x: &DMatrix<f64>,
    rounds: usize,
    schedule: &MixingSchedule<'_>,
    start: usize,
) -> Result<DMatrix<f64>> {
    if x.nrows() != schedule.n() {
        return Err(Error::DimensionMismatch {
            expected: schedule.n(),
            actual: x.nrows(),
        });
    }
    let mut cur = x.clone();
    let mut next = DMatrix::zeros(x.nrows(), x.ncols());
    for k in start..start + rounds {
        schedule.matrix_at(k).weights().mul_to(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Stateful gossip channel owning the global round clock.
#[derive(Debug, Clone)]
pub struct Gossip<'a> {
    schedule: MixingSchedule<'a>,
    clock: usize,
    counter: ConsensusCounter,
}

impl<'a> Gossip<'a> {
    pub fn new(seq: &'a GraphSequence) -> Self {
        Self {
            schedule: MixingSchedule::new(seq),
            clock: 0,
            counter: ConsensusCounter::new(),
        }
    }

    pub fn clock(&self) -> usize {
        self.clock
    }

    pub fn counter(&self) -> &ConsensusCounter {
        &self.counter
    }

    pub fn run(&mut self, x: &DistributedState, rounds: usize) -> Result<DistributedState> {
        let out = consensus(x, rounds, &self.schedule, self.clock, &mut self.counter)?;
        self.clock += rounds;
        Ok(out)
    }

    pub(crate) fn run_matrix(&mut self, x: &DMatrix<f64>, rounds: usize) -> Result<DMatrix<f64>> {
        let out = consensus_matrix(x, rounds, &self.schedule, self.clock)?;
        self.counter.record(rounds);
        self.clock += rounds;
        Ok(out)
    }
}
