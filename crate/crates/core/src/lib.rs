//! Distributed Newton-type optimization on a simulated driver/worker cluster.
//!
//! The main entry point is [`giant::run_giant`]; every solver also sits behind
//! the [`solver::Solver`] trait and can be looked up by name in a
//! [`solver::SolverRegistry`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod comms;
pub mod data;
pub mod error;
pub mod giant;
pub mod linalg;
pub mod linesearch;
pub mod objective;
pub mod rng;
pub mod sketch;
pub mod solver;
pub mod synthetic;
pub mod theory;
pub mod trace;
pub mod worker;

pub use comms::{ExecutionMode, Fabric, NetworkStats};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, Vector};
pub use objective::{LabeledDataset, LossKind, ObjectiveSpec, Regularizer};
pub use solver::{Problem, RunOptions, RunOutcome, Solver, SolverRegistry, Termination};
pub use trace::IterationTrace;
pub use worker::{CgSettings, WorkerShard};
