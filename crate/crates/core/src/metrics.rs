//! Prediction quality metrics for weighted snapshots and their aggregation
//! over a run.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn check_pair(op: &'static str, truth: &Matrix, pred: &Matrix) -> Result<()> {
    if truth.shape() != pred.shape() || !truth.is_square() {
        return Err(Error::shape(
            op,
            format!("truth {:?}, prediction {:?}", truth.shape(), pred.shape()),
        ));
    }
    Ok(())
}

fn check_nonnegative(op: &str, m: &Matrix, which: &str) -> Result<()> {
    match m.data().iter().find(|v| !(**v >= 0.0)) {
        Some(v) => Err(Error::Validation(format!(
            "{op}: {which} has invalid entry {v}"
        ))),
        None => Ok(()),
    }
}

/// Mean squared error over all `N²` entries, diagonal included.
pub fn mse(truth: &Matrix, pred: &Matrix) -> Result<f64> {
    check_pair("mse", truth, pred)?;
    Ok(truth.sub(pred)?.frobenius_norm_sq() / truth.len() as f64)
}

/// KL divergence between the sum-normalized truth and prediction; entries
/// where either side is zero contribute nothing. Natural logarithm.
pub fn edgewise_kl(truth: &Matrix, pred: &Matrix) -> Result<f64> {
    check_pair("edgewise_kl", truth, pred)?;
    check_nonnegative("edgewise_kl", truth, "truth")?;
    check_nonnegative("edgewise_kl", pred, "prediction")?;
    let st = truth.sum();
    let sp = pred.sum();
    if st <= 0.0 {
        return Err(Error::UndefinedKl("truth"));
    }
    if sp <= 0.0 {
        return Err(Error::UndefinedKl("prediction"));
    }
    Ok(truth
        .data()
        .iter()
        .zip(pred.data())
        .filter(|(&t, &p)| t > 0.0 && p > 0.0)
        .map(|(&t, &p)| {
            let (pt, qp) = (t / st, p / sp);
            pt * (pt / qp).ln()
        })
        .sum())
}

/// Fraction of off-diagonal entries where exactly one of truth and
/// prediction is zero.
pub fn mismatch_rate(truth: &Matrix, pred: &Matrix) -> Result<f64> {
    check_pair("mismatch_rate", truth, pred)?;
    check_nonnegative("mismatch_rate", truth, "truth")?;
    check_nonnegative("mismatch_rate", pred, "prediction")?;
    let n = truth.rows();
    if n < 2 {
        return Err(Error::Validation(
            "mismatch_rate needs at least two nodes".into(),
        ));
    }
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j && (truth[(i, j)] == 0.0) != (pred[(i, j)] == 0.0) {
                count += 1;
            }
        }
    }
    Ok(count as f64 / (n * (n - 1)) as f64)
}

/// Scores of one predicted snapshot. `kl` is `None` when it is undefined
/// (an all-zero side).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceMetrics {
    pub slice: usize,
    pub mse: f64,
    pub kl: Option<f64>,
    pub mismatch: f64,
}

pub fn evaluate_slice(slice: usize, truth: &Matrix, pred: &Matrix) -> Result<SliceMetrics> {
    let kl = match edgewise_kl(truth, pred) {
        Ok(v) => Some(v),
        Err(e @ Error::UndefinedKl(_)) => {
            log::warn!("slice {slice}: {e}; excluded from the KL average");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(SliceMetrics {
        slice,
        mse: mse(truth, pred)?,
        kl,
        mismatch: mismatch_rate(truth, pred)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Averages {
    pub mse: f64,
    /// `None` when KL was undefined for every slice.
    pub kl: Option<f64>,
    pub mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_snapshot: Vec<SliceMetrics>,
    pub averages: Averages,
}

/// Column means; slices with undefined KL are skipped for the KL column only.
pub fn aggregate(per_snapshot: Vec<SliceMetrics>) -> Result<MetricsReport> {
    if per_snapshot.is_empty() {
        return Err(Error::Validation("no slices to aggregate".into()));
    }
    let n = per_snapshot.len() as f64;
    let kls: Vec<f64> = per_snapshot.iter().filter_map(|s| s.kl).collect();
    let averages = Averages {
        mse: per_snapshot.iter().map(|s| s.mse).sum::<f64>() / n,
        kl: (!kls.is_empty()).then(|| kls.iter().sum::<f64>() / kls.len() as f64),
        mismatch: per_snapshot.iter().map(|s| s.mismatch).sum::<f64>() / n,
    };
    Ok(MetricsReport {
        per_snapshot,
        averages,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl MetricsReport {
    /// `slice,mse,kl,mismatch` rows followed by an `average` row. Undefined
    /// KL values are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("slice,mse,kl,mismatch\n");
        for s in &self.per_snapshot {
            let _ = writeln!(out, "{},{},{},{}", s.slice, s.mse, opt(s.kl), s.mismatch);
        }
        let a = &self.averages;
        let _ = writeln!(out, "average,{},{},{}", a.mse, opt(a.kl), a.mismatch);
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
