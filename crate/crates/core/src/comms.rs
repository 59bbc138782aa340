//! Simulated synchronous driver/worker fabric.
//!
//! The fabric carries payloads between the driver and `m` workers through
//! two collectives, Broadcast (one-to-all) and Reduce (all-to-one), and counts
//! rounds and words with flat-topology accounting: every collective costs one
//! round and `payload_len * m` words in its direction.
//!
//! Worker computations run between collectives through [`Fabric::execute`],
//! either round-robin on the caller's thread or one scoped thread per worker.
//! Reductions always sum in ascending worker order, so both modes produce
//! bitwise-identical results.

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub rounds: u64,
    pub driver_to_worker_words: u64,
    pub worker_to_driver_words: u64,
}

impl NetworkStats {
    pub fn total_words(&self) -> u64 {
        self.driver_to_worker_words + self.worker_to_driver_words
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutionMode {
    /// Workers run one after another on the driver thread.
    #[default]
    Sequential,
    /// One scoped OS thread per worker between collectives.
    Threaded,
}

#[derive(Debug)]
pub struct Fabric {
    workers: usize,
    mode: ExecutionMode,
    stats: NetworkStats,
    poisoned: Option<usize>,
}

impl Fabric {
    pub fn new(workers: usize) -> Result<Self> {
        Self::with_mode(workers, ExecutionMode::Sequential)
    }

    pub fn with_mode(workers: usize, mode: ExecutionMode) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Config("fabric needs at least one worker".into()));
        }
        Ok(Fabric {
            workers,
            mode,
            stats: NetworkStats::default(),
            poisoned: None,
        })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn mode(&self) -> ExecutionMode {
        self.mode
    }

    pub fn stats(&self) -> NetworkStats {
        self.stats
    }

    fn ensure_alive(&self) -> Result<()> {
        match self.poisoned {
            Some(worker) => Err(Error::FabricPoisoned { worker }),
            None => Ok(()),
        }
    }

    /// Delivers one shared immutable copy of `payload` to every worker.
    pub fn broadcast(&mut self, payload: &Vector) -> Result<Arc<Vector>> {
        self.ensure_alive()?;
        self.stats.rounds += 1;
        self.stats.driver_to_worker_words += (payload.len() * self.workers) as u64;
        Ok(Arc::new(payload.clone()))
    }

    /// Element-wise sum of one payload per worker, in worker order.
    pub fn reduce_sum(&mut self, payloads: &[Vector]) -> Result<Vector> {
        let len = self.check_reduce(payloads.iter().map(|p| p.len()))?;
        let mut acc = Vector::zeros(len);
        for p in payloads {
            acc.axpy(1.0, p);
        }
        Ok(acc)
    }

    /// Reduce over per-worker scalar lists (e.g. line-search objective values).
    pub fn reduce_concat_scalars(&mut self, payloads: &[Vec<f64>]) -> Result<Vec<f64>> {
        let len = self.check_reduce(payloads.iter().map(Vec::len))?;
        let mut acc = vec![0.0; len];
        for p in payloads {
            for (a, v) in acc.iter_mut().zip(p) {
                *a += v;
            }
        }
        Ok(acc)
    }

    fn check_reduce(&mut self, mut lens: impl ExactSizeIterator<Item = usize>) -> Result<usize> {
        self.ensure_alive()?;
        if lens.len() != self.workers {
            return Err(Error::Protocol(format!(
                "reduce expects {} payloads, got {}",
                self.workers,
                lens.len()
            )));
        }
        let first = lens.next().unwrap_or(0);
        if let Some(other) = lens.find(|l| *l != first) {
            return Err(Error::Protocol(format!(
                "reduce payload length mismatch: {first} vs {other}"
            )));
        }
        self.stats.rounds += 1;
        self.stats.worker_to_driver_words += (first * self.workers) as u64;
        Ok(first)
    }

    /// Runs `task` once per worker state and returns the results in worker
    /// order. A panicking worker poisons the fabric.
    pub fn execute<S, T, F>(&mut self, states: &[S], task: F) -> Result<Vec<T>>
    where
        S: Sync,
        T: Send,
        F: Fn(usize, &S) -> Result<T> + Sync,
    {
        self.ensure_alive()?;
        if states.len() != self.workers {
            return Err(Error::Protocol(format!(
                "fabric has {} workers, got {} worker states",
                self.workers,
                states.len()
            )));
        }
        let outcomes: Vec<std::thread::Result<Result<T>>> = match self.mode {
            ExecutionMode::Sequential => states
                .iter()
                .enumerate()
                .map(|(i, s)| panic::catch_unwind(AssertUnwindSafe(|| task(i, s))))
                .collect(),
            ExecutionMode::Threaded => thread::scope(|scope| {
                let task = &task;
                let handles: Vec<_> = states
                    .iter()
                    .enumerate()
                    .map(|(i, s)| scope.spawn(move || task(i, s)))
                    .collect();
                handles.into_iter().map(|h| h.join()).collect()
            }),
        };
        let mut results = Vec::with_capacity(outcomes.len());
        for (worker, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(Ok(v)) => results.push(v),
                Ok(Err(e)) => {
                    return Err(Error::Worker {
                        worker,
                        source: Box::new(e),
                    })
                }
                Err(_) => {
                    self.poisoned = Some(worker);
                    return Err(Error::FabricPoisoned { worker });
                }
            }
        }
        Ok(results)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_accounting() {
        let mut f = Fabric::new(4).unwrap();
        let payload = Vector::from(vec![1.5, -2.0, 3.25]);
        let got = f.broadcast(&payload).unwrap();
        assert_eq!(*got, payload);
        assert_eq!(f.stats().rounds, 1);
        assert_eq!(f.stats().driver_to_worker_words, 12);
        f.broadcast(&payload).unwrap();
        assert_eq!(f.stats().rounds, 2);
    }

    #[test]
    fn reduce_sum_of_unit_vectors() {
        let mut f = Fabric::new(3).unwrap();
        let e = |i: usize| -> Vector { (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect() };
        let s = f.reduce_sum(&[e(0), e(1), e(2)]).unwrap();
        assert_eq!(s.as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(f.stats().worker_to_driver_words, 9);
        let z = f.reduce_sum(&[Vector::zeros(2), Vector::zeros(2), Vector::zeros(2)]).unwrap();
        assert_eq!(z.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn reduce_rejects_length_mismatch() {
        let mut f = Fabric::new(2).unwrap();
        let err = f.reduce_sum(&[Vector::zeros(2), Vector::zeros(3)]).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
        let err = f.reduce_sum(&[Vector::zeros(2)]).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
        assert_eq!(f.stats().rounds, 0);
    }

    #[test]
    fn scalar_reduce() {
        let mut f = Fabric::new(2).unwrap();
        let s = f.reduce_concat_scalars(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(s, vec![4.0, 6.0]);
        let mut f = Fabric::new(3).unwrap();
        let z = f.reduce_concat_scalars(&vec![vec![0.0; 10]; 3]).unwrap();
        assert_eq!(z, vec![0.0; 10]);
        assert_eq!(f.stats().worker_to_driver_words, 30);
    }

    #[test]
    fn threaded_matches_sequential() {
        let states: Vec<Vec<f64>> = (0..5).map(|i| (0..100).map(|j| ((i * 100 + j) as f64).sin()).collect()).collect();
        let task = |_: usize, s: &Vec<f64>| -> Result<Vector> { Ok(s.iter().map(|v| v.exp() / 3.0).collect()) };
        let mut seq = Fabric::with_mode(5, ExecutionMode::Sequential).unwrap();
        let mut thr = Fabric::with_mode(5, ExecutionMode::Threaded).unwrap();
        let a = seq.execute(&states, task).unwrap();
        let b = thr.execute(&states, task).unwrap();
        let ra = seq.reduce_sum(&a).unwrap();
        let rb = thr.reduce_sum(&b).unwrap();
        assert_eq!(ra.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), rb.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn panicking_worker_poisons_fabric() {
        for mode in [ExecutionMode::Sequential, ExecutionMode::Threaded] {
            let mut f = Fabric::with_mode(3, mode).unwrap();
            let err = f
                .execute(&[0, 1, 2], |_, s: &i32| -> Result<i32> {
                    if *s == 1 {
                        panic!("worker down");
                    }
                    Ok(*s)
                })
                .unwrap_err();
            assert!(matches!(err, Error::FabricPoisoned { worker: 1 }));
            assert!(matches!(f.broadcast(&Vector::zeros(1)), Err(Error::FabricPoisoned { .. })));
        }
    }

    #[test]
    fn worker_errors_are_tagged() {
        let mut f = Fabric::new(2).unwrap();
        let err = f
            .execute(&[(), ()], |i, _| -> Result<()> {
                if i == 1 {
                    Err(Error::NumericBreakdown("cg".into()))
                } else {
                    Ok(())
                }
            })
            .unwrap_err();
        assert!(matches!(err, Error::Worker { worker: 1, .. }));
    }
}
