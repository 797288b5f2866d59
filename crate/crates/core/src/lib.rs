//! Decentralized accelerated gradient descent over time-varying networks.
//!
//! Agents hold rows of an `n × d` state matrix, evaluate local gradients and
//! approximate the network average with several gossip rounds per step.
//!
//! ```
//! use daccgd::optimizer::{run_daccgd, RunOptions};
//! use daccgd::{estimate_contraction, minimizer_oracle, GraphSequence, SyntheticQuadratic, TheoryParameters};
//! use nalgebra::DVector;
//!
//! # fn main() -> daccgd::Result<()> {
//! let p = SyntheticQuadratic::new(20, 10, 100.0, 1).generate()?;
//! let seq = GraphSequence::random_geometric(20, 0.5, 1)?;
//! let contraction = estimate_contraction(&seq, 1, 200)?;
//! let sol = minimizer_oracle(&p, 1e-12)?;
//! let x0 = DVector::zeros(10);
//! let theory = TheoryParameters::from_solution(&p, &sol, &x0, 1e-6, contraction)?;
//! let trace = run_daccgd(&p, &seq, &theory.algo_params(), &x0, &sol, RunOptions::new(theory.outer_iterations))?;
//! assert!(trace.last().f_gap <= 1e-6);
//! # Ok(())
//! # }
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consensus;
pub mod error;
pub mod graphs;
pub mod mixing;
pub mod objectives;
pub mod optimizer;
pub mod spectral;
pub mod state;
pub mod theory;

pub use consensus::{consensus, ConsensusCounter, Gossip, MixingSchedule};
pub use error::{Error, Result};
pub use graphs::{EdgeSet, GraphSequence, SequenceKind, Topology};
pub use mixing::{estimate_contraction, metropolis_weights, verify_mixing, ContractionEstimate, MixingMatrix};
pub use objectives::{
    minimizer_oracle, Constants, LocalFunction, ProblemInstance, Solution, SyntheticQuadratic,
};
pub use optimizer::{
    run_daccgd, run_inexact_gd, AlgoParams, GdParams, IterRecord, RunOptions, RunTrace, StopReason,
    TheoryParameters,
};
pub use state::{consensus_error, DistributedState};
pub use theory::{CheckEntry, CheckReport};
