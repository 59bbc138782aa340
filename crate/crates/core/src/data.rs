//! Dataset ingestion, splitting, sharding and feature maps.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};
use crate::objective::LabeledDataset;
use crate::rng;
use crate::worker::{CgSettings, WorkerShard};

pub const DEFAULT_AUGMENT_NOISE: f64 = 0.02;

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads `<label> <index>:<value> ...` lines with 1-based, strictly
/// ascending indices. Blank lines and `#` comments are skipped. Missing
/// entries are zero. Label sets `{0, 1}` and `{1, 2}` map to `{-1, +1}`.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<LabeledDataset> {
    parse_libsvm_padded(reader, 0)
}

/// As [`parse_libsvm`], with at least `min_dim` feature columns.
pub fn parse_libsvm_padded<R: BufRead>(reader: R, min_dim: usize) -> Result<LabeledDataset> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dim = min_dim;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default().replace('\u{2212}', "-");
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_error(lineno, format!("bad label `{label_tok}`")))?;
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(lineno, format!("expected index:value, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(lineno, format!("bad feature index `{idx}`")))?;
            if idx == 0 {
                return Err(parse_error(lineno, "feature indices are 1-based"));
            }
            if idx <= last {
                return Err(parse_error(lineno, format!("index {idx} does not follow {last}")));
            }
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_error(lineno, format!("bad feature value `{val}`")))?;
            last = idx;
            entries.push((idx - 1, val));
        }
        dim = dim.max(last);
        labels.push(label);
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(parse_error(0, "no samples"));
    }
    normalize_binary_labels(&mut labels);
    let mut x = DenseMatrix::zeros(rows.len(), dim);
    for (i, entries) in rows.iter().enumerate() {
        let row = x.row_mut(i);
        for &(j, v) in entries {
            row[j] = v;
        }
    }
    LabeledDataset::new(x, Vector::from(labels))
}

fn normalize_binary_labels(labels: &mut [f64]) {
    let has = |v: f64| labels.contains(&v);
    let only = |a: f64, b: f64| labels.iter().all(|&y| y == a || y == b);
    let (neg, pos) = if only(0.0, 1.0) && has(0.0) && has(1.0) {
        (0.0, 1.0)
    } else if only(1.0, 2.0) && has(1.0) && has(2.0) {
        (1.0, 2.0)
    } else {
        return;
    };
    for y in labels.iter_mut() {
        *y = if *y == neg { -1.0 } else if *y == pos { 1.0 } else { *y };
    }
}

/// Opens a LIBSVM file, decompressing it when it starts with the gzip magic.
pub fn read_libsvm_file(path: &Path) -> Result<LabeledDataset> {
    let mut reader = BufReader::new(File::open(path)?);
    let gz = reader.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if gz {
        parse_libsvm(BufReader::new(GzDecoder::new(reader)))
    } else {
        parse_libsvm(reader)
    }
}

/// Writes non-zero entries only, in shortest round-trip float notation.
pub fn write_libsvm<W: Write>(mut out: W, data: &LabeledDataset) -> std::io::Result<()> {
    for i in 0..data.len() {
        write!(out, "{}", data.labels[i])?;
        for (j, v) in data.features.row(i).iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{}", j + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Seeded shuffle split into `round(fraction·n)` training and the remaining
/// test indices.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Range(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let mut perm = rng::permutation(&mut rng::derived_rng(seed, "split", 0), n);
    let n_train = ((train_fraction * n as f64).round() as usize).min(n);
    let test = perm.split_off(n_train);
    Ok((perm, test))
}

pub fn train_test_split(data: &LabeledDataset, train_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, test) = split_indices(data.len(), train_fraction, seed)?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Range(format!(
            "fraction {train_fraction} of {} samples leaves an empty side",
            data.len()
        )));
    }
    Ok((data.subset(&train), data.subset(&test)))
}

/// Index blocks of a seeded global shuffle: `m` contiguous blocks of
/// `⌊n/m⌋`, the last absorbing the remainder.
pub fn partition_indices(n: usize, m: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if m == 0 {
        return Err(Error::Config("need at least one worker".into()));
    }
    if m > n {
        return Err(Error::Config(format!("{m} workers for only {n} samples")));
    }
    let perm = rng::permutation(&mut rng::derived_rng(seed, "partition", 0), n);
    let block = n / m;
    Ok((0..m)
        .map(|i| {
            let hi = if i + 1 == m { n } else { (i + 1) * block };
            perm[i * block..hi].to_vec()
        })
        .collect())
}

pub fn partition_shards(data: &LabeledDataset, m: usize, seed: u64, cg: CgSettings) -> Result<Vec<WorkerShard>> {
    partition_indices(data.len(), m, seed)?
        .into_iter()
        .enumerate()
        .map(|(i, idx)| WorkerShard::new(i, idx, data, cg))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RffConfig {
    pub target_dim: usize,
    /// Bandwidth of `k(x, x') = exp(-||x - x'||² / (2σ))`.
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Random Fourier features `z(x) = √(2/D)·cos(Wx + b)` with
/// `W ~ N(0, σ⁻¹I)` and `b ~ U[0, 2π)`.
pub fn rff_map(features: &DenseMatrix, config: &RffConfig) -> Result<DenseMatrix> {
    if config.target_dim == 0 {
        return Err(Error::Range("target_dim must be >= 1".into()));
    }
    if !(config.sigma > 0.0 && config.sigma.is_finite()) {
        return Err(Error::Range(format!("sigma must be positive, got {}", config.sigma)));
    }
    let d = features.cols();
    let big_d = config.target_dim;
    let mut r = rng::derived_rng(config.seed, "rff", 0);
    let mut w = rng::gaussian_matrix(&mut r, big_d, d);
    w.scale(1.0 / config.sigma.sqrt());
    let b: Vec<f64> = (0..big_d).map(|_| r.random_range(0.0..2.0 * PI)).collect();
    let scale = (2.0 / big_d as f64).sqrt();
    let mut z = DenseMatrix::zeros(features.rows(), big_d);
    for i in 0..features.rows() {
        let proj = w.matvec(features.row(i));
        for (k, out) in z.row_mut(i).iter_mut().enumerate() {
            *out = scale * (proj[k] + b[k]).cos();
        }
    }
    Ok(z)
}

/// Mean squared pairwise distance over `pair_budget` seeded pairs `i ≠ j`.
pub fn estimate_sigma(features: &DenseMatrix, pair_budget: usize, seed: u64) -> Result<f64> {
    let n = features.rows();
    if n < 2 {
        return Err(Error::Range("need at least two samples to estimate a bandwidth".into()));
    }
    if pair_budget == 0 {
        return Err(Error::Range("pair_budget must be >= 1".into()));
    }
    let mut r = rng::derived_rng(seed, "sigma", 0);
    let mut total = 0.0;
    for _ in 0..pair_budget {
        let i = r.random_range(0..n);
        let mut j = r.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        total += features
            .row(i)
            .iter()
            .zip(features.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    let sigma = total / pair_budget as f64;
    if !(sigma > 0.0) {
        return Err(Error::Precondition("degenerate bandwidth: sampled points coincide".into()));
    }
    Ok(sigma)
}

/// Stacks `factor` copies of the data and adds `N(0, noise_std²)` to every
/// feature entry; labels are repeated unchanged.
pub fn augment_replicate(data: &LabeledDataset, factor: usize, noise_std: f64, seed: u64) -> Result<LabeledDataset> {
    if factor == 0 {
        return Err(Error::Range("replication factor must be >= 1".into()));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::Range(format!("noise_std must be non-negative, got {noise_std}")));
    }
    let (n, d) = (data.len(), data.dim());
    let mut r = rng::derived_rng(seed, "augment", 0);
    let mut x = DenseMatrix::zeros(n * factor, d);
    let mut labels = Vec::with_capacity(n * factor);
    for c in 0..factor {
        for i in 0..n {
            let row = x.row_mut(c * n + i);
            row.copy_from_slice(data.features.row(i));
            if noise_std > 0.0 {
                for v in row.iter_mut() {
                    *v += noise_std * rng::gaussian(&mut r);
                }
            }
            labels.push(data.labels[i]);
        }
    }
    LabeledDataset::new(x, Vector::from(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_format_examples() {
        let d = parse_libsvm("+1 1:0.5 3:2.0\n-1\n".as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.features.row(0), &[0.5, 0.0, 2.0]);
        assert_eq!(d.features.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(d.labels.as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_libsvm("1 1:1\n1 3:1 2:1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_libsvm("1 1:1\n\n1 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        assert!(parse_libsvm("1 0:1\n".as_bytes()).is_err());
        assert!(parse_libsvm("1 1:nan\n".as_bytes()).is_err());
    }

    #[test]
    fn label_normalization() {
        let d = parse_libsvm("0 1:1\n1 1:2\n".as_bytes()).unwrap();
        assert_eq!(d.labels.as_slice(), &[-1.0, 1.0]);
        let d = parse_libsvm("2 1:1\n1 1:2\n".as_bytes()).unwrap();
        assert_eq!(d.labels.as_slice(), &[1.0, -1.0]);
        let d = parse_libsvm("0.5 1:1\n1 1:2\n".as_bytes()).unwrap();
        assert_eq!(d.labels.as_slice(), &[0.5, 1.0]);
    }

    #[test]
    fn split_sizes() {
        let (tr, te) = split_indices(10, 0.8, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split_indices(10, 0.8, 3).unwrap(), (tr, te));
        assert!(split_indices(10, 1.0, 3).is_err());
    }

    #[test]
    fn partition_remainder_policy() {
        let sizes: Vec<usize> = partition_indices(10, 3, 0).unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 4]);
        assert_eq!(partition_indices(10, 1, 0).unwrap()[0].len(), 10);
        assert!(partition_indices(3, 4, 0).is_err());
    }

    #[test]
    fn sigma_of_two_points() {
        let x = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(estimate_sigma(&x, 10, 1).unwrap(), 25.0);
        let same = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(estimate_sigma(&same, 10, 1).is_err());
    }

    #[test]
    fn augment_identity_and_repeat() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let d = LabeledDataset::new(x, vec![1.0, -1.0].into()).unwrap();
        let same = augment_replicate(&d, 1, 0.0, 9).unwrap();
        assert_eq!(same.features, d.features);
        let five = augment_replicate(&d, 5, 0.02, 9).unwrap();
        assert_eq!(five.len(), 10);
        assert_eq!(five.labels.as_slice(), &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
    }
}
