use std::io::{BufReader, Write};

use flate2::write::GzEncoder;
use flate2::Compression;
use giant_core::data::{self, RffConfig};
use giant_core::{rng, DenseMatrix, LabeledDataset, Vector};

fn seeded_dataset(n: usize, d: usize, seed: u64) -> LabeledDataset {
    let mut r = rng::rng(seed);
    let mut x = rng::gaussian_matrix(&mut r, n, d);
    // sparsify so the writer has gaps to skip
    for i in 0..n {
        for (j, v) in x.row_mut(i).iter_mut().enumerate() {
            if (i + j) % 3 == 0 {
                *v = 0.0;
            }
        }
    }
    // keep the last column present so the parsed dimension is d
    x.set(0, d - 1, 1.5);
    let labels: Vector = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    LabeledDataset::new(x, labels).unwrap()
}

#[test]
fn libsvm_round_trip() {
    let original = seeded_dataset(100, 7, 1);
    let mut buf = Vec::new();
    data::write_libsvm(&mut buf, &original).unwrap();
    let parsed = data::parse_libsvm(BufReader::new(buf.as_slice())).unwrap();
    assert_eq!(parsed, original);
}

#[test]
fn gzip_files_are_detected() {
    let original = seeded_dataset(30, 4, 2);
    let mut text = Vec::new();
    data::write_libsvm(&mut text, &original).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("a.svm");
    std::fs::write(&plain, &text).unwrap();
    let packed = dir.path().join("a.svm.gz");
    let mut enc = GzEncoder::new(std::fs::File::create(&packed).unwrap(), Compression::default());
    enc.write_all(&text).unwrap();
    enc.finish().unwrap();
    assert_eq!(data::read_libsvm_file(&plain).unwrap(), original);
    assert_eq!(data::read_libsvm_file(&packed).unwrap(), original);
}

#[test]
fn split_is_disjoint_exhaustive_and_seeded() {
    let (train, test) = data::split_indices(10, 0.8, 5).unwrap();
    assert_eq!((train.len(), test.len()), (8, 2));
    let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
    all.sort();
    assert_eq!(all, (0..10).collect::<Vec<_>>());
    assert_eq!(data::split_indices(10, 0.8, 5).unwrap(), (train, test));
    assert!(data::split_indices(10, 1.0, 5).is_err());
}

#[test]
fn partition_over_many_seeds() {
    for seed in 0..100 {
        let n = 50 + seed as usize;
        let m = 1 + seed as usize % 7;
        let parts = data::partition_indices(n, m, seed).unwrap();
        assert_eq!(parts.len(), m);
        let mut seen = vec![0u8; n];
        for p in &parts {
            for &j in p {
                seen[j] += 1;
            }
        }
        assert!(seen.iter().all(|c| *c == 1));
        let base = n / m;
        for (k, p) in parts.iter().enumerate() {
            let expected = if k + 1 == m { n - base * (m - 1) } else { base };
            assert_eq!(p.len(), expected);
        }
    }
    assert!(data::partition_indices(3, 4, 0).is_err());
}

fn rbf(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * sigma)).exp()
}

#[test]
fn rff_self_inner_product_near_one() {
    let x = rng::gaussian_matrix(&mut rng::rng(3), 5, 6);
    let z = data::rff_map(&x, &RffConfig { target_dim: 4096, sigma: 2.0, seed: 4 }).unwrap();
    assert_eq!((z.rows(), z.cols()), (5, 4096));
    for i in 0..5 {
        let k: f64 = z.row(i).iter().map(|v| v * v).sum();
        assert!((0.8..=1.2).contains(&k), "{k}");
    }
}

#[test]
fn rff_far_points_decorrelate() {
    let x = DenseMatrix::from_rows(&[vec![0.0; 4], vec![100.0; 4]]).unwrap();
    let z = data::rff_map(&x, &RffConfig { target_dim: 4096, sigma: 1.0, seed: 5 }).unwrap();
    let k: f64 = z.row(0).iter().zip(z.row(1)).map(|(a, b)| a * b).sum();
    assert!(k.abs() <= 0.05);
}

#[test]
fn rff_approximates_the_rbf_kernel() {
    let big_d = 2048;
    let sigma = 3.0;
    let mut r = rng::rng(6);
    let x = rng::gaussian_matrix(&mut r, 2000, 3);
    let z = data::rff_map(&x, &RffConfig { target_dim: big_d, sigma, seed: 7 }).unwrap();
    let mut total = 0.0;
    for p in 0..1000 {
        let (i, j) = (2 * p, 2 * p + 1);
        let approx: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum();
        total += (approx - rbf(x.row(i), x.row(j), sigma)).abs();
    }
    assert!(total / 1000.0 <= 3.0 / (big_d as f64).sqrt());
}

#[test]
fn rff_is_deterministic() {
    let x = rng::gaussian_matrix(&mut rng::rng(8), 10, 3);
    let c = RffConfig { target_dim: 64, sigma: 1.0, seed: 9 };
    assert_eq!(data::rff_map(&x, &c).unwrap(), data::rff_map(&x, &c).unwrap());
    assert!(data::rff_map(&x, &RffConfig { sigma: 0.0, ..c }).is_err());
}

#[test]
fn sigma_estimate_matches_exhaustive_mean() {
    let x = rng::gaussian_matrix(&mut rng::rng(10), 100, 5);
    let mut total = 0.0;
    let mut pairs = 0;
    for i in 0..100 {
        for j in 0..100 {
            if i != j {
                total += x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                pairs += 1;
            }
        }
    }
    let exhaustive = total / pairs as f64;
    let estimate = data::estimate_sigma(&x, 10_000, 11).unwrap();
    assert!((estimate / exhaustive - 1.0).abs() <= 0.05);
    let same = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
    assert!(data::estimate_sigma(&same, 100, 0).is_err());
}

#[test]
fn augmentation_noise_has_requested_spread() {
    let base = LabeledDataset::new(DenseMatrix::zeros(2000, 10), Vector::filled(2000, 1.0)).unwrap();
    let aug = data::augment_replicate(&base, 5, data::DEFAULT_AUGMENT_NOISE, 12).unwrap();
    assert_eq!(aug.len(), 10_000);
    let n = (aug.len() * aug.dim()) as f64;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for i in 0..aug.len() {
        for v in aug.features.row(i) {
            sum += v;
            sq += v * v;
        }
    }
    let mean = sum / n;
    let sd = (sq / n - mean * mean).sqrt();
    assert!((sd / 0.02 - 1.0).abs() <= 0.05, "{sd}");
    assert!(aug.labels.iter().all(|y| *y == 1.0));
}
