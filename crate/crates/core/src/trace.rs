//! Per-iteration records shared by every solver, and their CSV form.

use std::io::{self, Write};
use std::time::Instant;

use crate::comms::NetworkStats;
use crate::error::Result;
use crate::linalg::Vector;
use crate::objective::{self, LabeledDataset, ObjectiveSpec};
use crate::solver::{Problem, RunOptions};
use crate::worker::WorkerShard;

pub const CSV_HEADER: &str =
    "iteration,objective,grad_norm,error_norm,step_size,rounds,d2w_words,w2d_words,wall_seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    /// `f(w_t)`
    pub objective: f64,
    /// `||∇f(w_t)||₂`
    pub grad_norm: f64,
    /// `||w_t - w*||₂` when a reference solution was supplied.
    pub error_norm: Option<f64>,
    /// Step that produced `w_t` (zero for the starting point).
    pub step_size: f64,
    /// Cumulative fabric counters at the moment `w_t` is available.
    pub stats: NetworkStats,
    pub wall_seconds: f64,
    /// False when the line search fell back to a non-Armijo step.
    pub armijo_satisfied: bool,
}

impl IterationTrace {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.objective,
            self.grad_norm,
            self.error_norm.map(|e| e.to_string()).unwrap_or_default(),
            self.step_size,
            self.stats.rounds,
            self.stats.driver_to_worker_words,
            self.stats.worker_to_driver_words,
            self.wall_seconds
        )
    }
}

pub fn write_csv<W: Write>(mut out: W, trace: &[IterationTrace]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in trace {
        writeln!(out, "{}", row.csv_row())?;
    }
    Ok(())
}

/// Diagnostics recorded outside the fabric, so they never show up in the
/// communication counters. The objective is summed from worker shares in
/// worker order, bit-identical to what the line search sees.
#[derive(Debug)]
pub struct Monitor<'a> {
    spec: &'a ObjectiveSpec,
    data: &'a LabeledDataset,
    shards: &'a [WorkerShard],
    options: RunOptions<'a>,
    started: Instant,
    pub trace: Vec<IterationTrace>,
    pub iterates: Vec<Vector>,
}

impl<'a> Monitor<'a> {
    pub fn new(problem: &Problem<'a>, options: RunOptions<'a>) -> Self {
        Monitor {
            spec: problem.spec,
            data: problem.data,
            shards: problem.shards,
            options,
            started: Instant::now(),
            trace: Vec::new(),
            iterates: Vec::new(),
        }
    }

    /// Appends a row for `w` and returns it.
    pub fn push(&mut self, w: &Vector, step_size: f64, stats: NetworkStats, armijo_satisfied: bool) -> Result<&IterationTrace> {
        let row = self.record(self.trace.len(), w, step_size, stats, armijo_satisfied)?;
        self.trace.push(row);
        if self.options.record_iterates {
            self.iterates.push(w.clone());
        }
        Ok(self.trace.last().expect("row just pushed"))
    }

    /// The last row met the configured error target.
    pub fn target_reached(&self) -> bool {
        match (self.options.error_target, self.trace.last().and_then(|t| t.error_norm)) {
            (Some(target), Some(e)) => e <= target,
            _ => false,
        }
    }

    pub fn record(&self, iteration: usize, w: &Vector, step_size: f64, stats: NetworkStats, armijo_satisfied: bool) -> Result<IterationTrace> {
        let (n, m) = (self.data.len(), self.shards.len());
        let mut objective = 0.0;
        for shard in self.shards {
            objective += shard.objective_share(self.spec, w, n, m)?;
        }
        let grad_norm = objective::gradient(self.spec, self.data, w)?.norm();
        Ok(IterationTrace {
            iteration,
            objective,
            grad_norm,
            error_norm: self.options.reference.map(|r| w.sub(r).norm()),
            step_size,
            stats,
            wall_seconds: if self.options.wall_clock {
                self.started.elapsed().as_secs_f64()
            } else {
                0.0
            },
            armijo_satisfied,
        })
    }
}
