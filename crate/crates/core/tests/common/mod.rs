#![allow(dead_code)]

use giant_core::data;
use giant_core::rng;
use giant_core::synthetic::{generate_synthetic, GeneratorSpec};
use giant_core::{CgSettings, DenseMatrix, LabeledDataset, LossKind, ObjectiveSpec, WorkerShard};
use nalgebra::DMatrix;

pub fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j))
}

pub fn random_spd(d: usize, seed: u64) -> DenseMatrix {
    let mut r = rng::rng(seed);
    let b = rng::gaussian_matrix(&mut r, d, d);
    let mut h = b.gram();
    h.add_diagonal(&vec![0.5; d]);
    h
}

pub struct Instance {
    pub spec: ObjectiveSpec,
    pub data: LabeledDataset,
    pub shards: Vec<WorkerShard>,
}

pub fn ridge(n: usize, d: usize, m: usize, kappa: f64, seed: u64) -> Instance {
    instance(n, d, m, kappa, LossKind::Quadratic, seed)
}

pub fn logistic(n: usize, d: usize, m: usize, kappa: f64, seed: u64) -> Instance {
    instance(n, d, m, kappa, LossKind::Logistic, seed)
}

fn instance(n: usize, d: usize, m: usize, kappa: f64, loss: LossKind, seed: u64) -> Instance {
    let gen = GeneratorSpec {
        n,
        d,
        kappa,
        loss,
        gamma: 1e-3,
        noise: 0.1,
        flip_prob: 0.05,
    };
    let s = generate_synthetic(&gen, seed).unwrap();
    let shards = data::partition_shards(&s.data, m, seed + 1, CgSettings::default()).unwrap();
    Instance {
        spec: gen.objective(),
        data: s.data,
        shards,
    }
}
