//! Snapshot sequences of a weighted dynamic network: validation, text I/O,
//! distance-to-weight preprocessing, normalization, summary statistics and a
//! seeded synthetic generator.

mod io;
mod synthetic;

pub use io::{
    load_distances, load_sequence, parse_distances, parse_sequence, save_distances, save_sequence,
    write_distances, write_sequence,
};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Absolute asymmetry tolerated when reading files; the matrix is then
/// symmetrized exactly.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Temporally ordered adjacency matrices over a fixed node set.
///
/// Every snapshot is symmetric, has a zero diagonal, and has entries in
/// `[0, max_weight]`. Index `t` (0-based) is time slice `t + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSequence {
    n_nodes: usize,
    snapshots: Vec<Matrix>,
    max_weight: f64,
}

impl SnapshotSequence {
    pub fn new(snapshots: Vec<Matrix>, max_weight: f64) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::Validation(
                "sequence must contain at least one snapshot".into(),
            ));
        }
        if !(max_weight > 0.0 && max_weight.is_finite()) {
            return Err(Error::Validation(format!(
                "max_weight must be positive and finite, got {max_weight}"
            )));
        }
        let n = snapshots[0].rows();
        for (t, s) in snapshots.iter().enumerate() {
            check_snapshot(s, n, max_weight)
                .map_err(|msg| Error::Validation(format!("snapshot {}: {msg}", t + 1)))?;
        }
        Ok(Self {
            n_nodes: n,
            snapshots,
            max_weight,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.max_weight
    }

    pub fn snapshots(&self) -> &[Matrix] {
        &self.snapshots
    }

    pub fn snapshot(&self, t: usize) -> &Matrix {
        &self.snapshots[t]
    }

    pub fn into_snapshots(self) -> Vec<Matrix> {
        self.snapshots
    }
}

fn check_snapshot(s: &Matrix, n: usize, max_weight: f64) -> std::result::Result<(), String> {
    if s.shape() != (n, n) {
        return Err(format!("shape {:?}, expected ({n}, {n})", s.shape()));
    }
    for i in 0..n {
        if s[(i, i)] != 0.0 {
            return Err(format!("nonzero diagonal entry at ({i}, {i})"));
        }
        for j in 0..n {
            let v = s[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return Err(format!("invalid weight {v} at ({i}, {j})"));
            }
            if v > max_weight {
                return Err(format!(
                    "weight {v} at ({i}, {j}) exceeds max_weight {max_weight}"
                ));
            }
            if v != s[(j, i)] {
                return Err(format!("asymmetric at ({i}, {j})"));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreprocessConfig {
    /// `δ`: distances at or beyond it produce no edge; it is also the largest
    /// weight the transform can emit.
    pub distance_threshold: f64,
}

impl PreprocessConfig {
    pub fn new(distance_threshold: f64) -> Result<Self> {
        if !(distance_threshold > 0.0 && distance_threshold.is_finite()) {
            return Err(Error::Validation(format!(
                "distance threshold must be positive, got {distance_threshold}"
            )));
        }
        Ok(Self { distance_threshold })
    }
}

/// `w = δ − d` when `d < δ`, else 0; diagonal forced to 0.
pub fn distances_to_weights(d: &Matrix, cfg: &PreprocessConfig) -> Result<Matrix> {
    if !d.is_square() {
        return Err(Error::shape(
            "distances_to_weights",
            format!("{:?} is not square", d.shape()),
        ));
    }
    if let Some(v) = d.data().iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Validation(format!(
            "distance {v} is negative or not finite"
        )));
    }
    if !d.is_symmetric(SYMMETRY_TOLERANCE) {
        return Err(Error::Validation("distance matrix is not symmetric".into()));
    }
    let delta = cfg.distance_threshold;
    let n = d.rows();
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = 0.5 * (d[(i, j)] + d[(j, i)]);
            let v = if dist < delta { delta - dist } else { 0.0 };
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(w)
}

/// Converts a distance sequence into a weight sequence whose global maximum
/// weight is `δ`.
pub fn preprocess_distances(
    distances: &[Matrix],
    cfg: &PreprocessConfig,
) -> Result<SnapshotSequence> {
    let snapshots = distances
        .iter()
        .map(|d| distances_to_weights(d, cfg))
        .collect::<Result<Vec<_>>>()?;
    SnapshotSequence::new(snapshots, cfg.distance_threshold)
}

/// Divides every snapshot by the dataset-global maximum weight.
pub fn normalize(seq: &SnapshotSequence) -> (Vec<Matrix>, f64) {
    let m = seq.max_weight();
    (
        seq.snapshots().iter().map(|s| s.scale(1.0 / m)).collect(),
        m,
    )
}

pub fn renormalize(m: &Matrix, max_weight: f64) -> Matrix {
    m.scale(max_weight)
}

/// Mean over snapshots of the fraction of zero entries, diagonal included.
pub fn sparsity(seq: &SnapshotSequence) -> f64 {
    let total: f64 = seq
        .snapshots()
        .iter()
        .map(|s| s.data().iter().filter(|&&v| v == 0.0).count() as f64 / s.len() as f64)
        .sum();
    total / seq.len() as f64
}

/// Counts of nonzero undirected edge weights in equal-width bins over
/// `(0, max_weight]`, aggregated over all snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// `(lower, upper]` bounds of bin `k`.
    pub fn bounds(&self, k: usize) -> (f64, f64) {
        (k as f64 * self.bin_width, (k + 1) as f64 * self.bin_width)
    }
}

pub fn weight_histogram(seq: &SnapshotSequence, n_bins: usize) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::Validation("histogram needs at least one bin".into()));
    }
    let width = seq.max_weight() / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    let n = seq.n_nodes();
    for s in seq.snapshots() {
        for i in 0..n {
            for j in (i + 1)..n {
                let v = s[(i, j)];
                if v > 0.0 {
                    let k = ((v / width).ceil() as usize).clamp(1, n_bins) - 1;
                    counts[k] += 1;
                }
            }
        }
    }
    Ok(Histogram {
        bin_width: width,
        counts,
    })
}
