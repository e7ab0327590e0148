use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};

use super::SnapshotSequence;

/// Parameters of a seeded random weighted dynamic network.
///
/// A fixed set of node pairs is active in every slice, chosen so that the
/// fraction of zero entries (diagonal included) matches `target_sparsity` as
/// closely as the pair count allows. Active weights start uniform in
/// `(0, max_weight]` and then drift multiplicatively by up to `±drift_rate`
/// per slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_nodes: usize,
    pub n_slices: usize,
    pub target_sparsity: f64,
    pub max_weight: f64,
    pub drift_rate: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.n_nodes < 2 {
            return bad(format!("n_nodes must be at least 2, got {}", self.n_nodes));
        }
        if self.n_slices == 0 {
            return bad("n_slices must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.target_sparsity) {
            return bad(format!(
                "target_sparsity must lie in [0, 1], got {}",
                self.target_sparsity
            ));
        }
        if !(self.max_weight > 0.0 && self.max_weight.is_finite()) {
            return bad(format!(
                "max_weight must be positive, got {}",
                self.max_weight
            ));
        }
        if !(0.0..=1.0).contains(&self.drift_rate) {
            return bad(format!(
                "drift_rate must lie in [0, 1], got {}",
                self.drift_rate
            ));
        }
        Ok(())
    }

    /// Number of unordered pairs that carry an edge.
    pub fn active_pairs(&self) -> usize {
        let n = self.n_nodes as f64;
        let pairs = self.n_nodes * (self.n_nodes - 1) / 2;
        // The N diagonal zeros are unavoidable; the remaining zeros come from
        // inactive pairs, two entries each.
        let zero_pair_fraction = ((self.target_sparsity * n - 1.0) / (n - 1.0)).clamp(0.0, 1.0);
        ((1.0 - zero_pair_fraction) * pairs as f64).round() as usize
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SnapshotSequence> {
    spec.validate()?;
    let n = spec.n_nodes;
    let max = spec.max_weight;
    let floor = max * 1e-9;
    let mut rng = Rng::new(spec.seed);

    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let active = spec.active_pairs();
    let (chosen, _) = pairs.partial_shuffle(&mut rng, active);
    let mut edges: Vec<(usize, usize, f64)> = chosen
        .iter()
        .map(|&(i, j)| (i, j, max * (1.0 - rng.uniform())))
        .collect();
    edges.sort_by_key(|&(i, j, _)| (i, j));

    let mut snapshots = Vec::with_capacity(spec.n_slices);
    for t in 0..spec.n_slices {
        if t > 0 {
            for e in &mut edges {
                let u = rng.uniform_in(-1.0, 1.0);
                e.2 = (e.2 * (1.0 + spec.drift_rate * u)).clamp(floor, max);
            }
        }
        let mut m = Matrix::zeros(n, n);
        for &(i, j, w) in &edges {
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
        snapshots.push(m);
    }
    SnapshotSequence::new(snapshots, max)
}
