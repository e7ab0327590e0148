//! Sliding-window experiment driver.
//!
//! With `T` snapshots and window `l`, training and prediction alternate for
//! `τ = l+2 … T−1` (slices numbered from 1): train on snapshots
//! `τ−l−1 … τ−1` against target `τ`, then predict slice `τ+1` from
//! `τ−l … τ` and score it against the truth. The first iteration
//! (`τ = l+2`, inputs `1 … l+1`, target `l+2`) is the initial training on
//! the first `l+2` snapshots; it is a single training pass like every later
//! one. Parameters carry over between slices unless `cold_start` is set.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baseline::{
    baseline_predict, baseline_train_for_slice, LstmBaseline, LstmBaselineParams,
};
use crate::checkpoint::Checkpoint;
use crate::data::{generate_synthetic, load_sequence, SnapshotSequence, SyntheticSpec};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};
use crate::metrics::{aggregate, evaluate_slice, MetricsReport};
use crate::model::{predict, train_for_slice, GcnGan, GcnGanShape, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    GcnGan,
    LstmBaseline,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GcnGan => "gcn-gan",
            ModelKind::LstmBaseline => "lstm-baseline",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gcn-gan" => Ok(ModelKind::GcnGan),
            "lstm-baseline" => Ok(ModelKind::LstmBaseline),
            other => Err(format!("unknown model '{other}' (gcn-gan|lstm-baseline)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

impl DataSource {
    pub fn load(&self) -> Result<SnapshotSequence> {
        match self {
            DataSource::File(p) => load_sequence(p),
            DataSource::Synthetic(spec) => generate_synthetic(spec),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// Training hyper-parameters; its `seed` drives initialization and noise.
    pub train: TrainConfig,
    pub model: ModelKind,
    /// LSTM hidden width (`N` for GCN-GAN, scaled from 128 at 38 nodes for
    /// the baseline when unset).
    pub lstm_hidden: Option<usize>,
    /// Critic hidden width (scaled from 512 at 38 nodes when unset).
    pub critic_hidden: Option<usize>,
    /// Re-initialize parameters for every slice instead of warm-starting.
    pub cold_start: bool,
    /// Apply refinement to baseline predictions too (ablation).
    pub refine_baseline: bool,
    /// Keep every prediction in the result.
    pub keep_predictions: bool,
    /// Write `metrics.csv`, `model.ckpt` and optional predictions here.
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(data: DataSource, train: TrainConfig, model: ModelKind) -> Self {
        Self {
            data,
            train,
            model,
            lstm_hidden: None,
            critic_hidden: None,
            cold_start: false,
            refine_baseline: false,
            keep_predictions: false,
            output_dir: None,
        }
    }
}

/// Read access to the snapshots of a run, so that the order of reads can be
/// observed.
pub trait SnapshotSource {
    fn n_nodes(&self) -> usize;
    fn len(&self) -> usize;
    fn max_weight(&self) -> f64;
    /// Snapshot of time slice `t`, numbered from 1.
    fn snapshot(&self, t: usize) -> &Matrix;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl SnapshotSource for SnapshotSequence {
    fn n_nodes(&self) -> usize {
        SnapshotSequence::n_nodes(self)
    }

    fn len(&self) -> usize {
        SnapshotSequence::len(self)
    }

    fn max_weight(&self) -> f64 {
        SnapshotSequence::max_weight(self)
    }

    fn snapshot(&self, t: usize) -> &Matrix {
        SnapshotSequence::snapshot(self, t - 1)
    }
}

/// Progress notifications from [`run_on_source`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunEvent {
    /// The prediction of this slice now exists; its truth has not been read
    /// before this point.
    Predicted(usize),
}

/// Losses recorded while training towards target slice `target`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SliceLosses {
    pub target: usize,
    /// Reconstruction loss per step (GCN-GAN pre-training, or every
    /// baseline step).
    pub reconstruction: Vec<f64>,
    pub critic: Vec<f64>,
    pub generator: Vec<f64>,
    pub critic_max_abs: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub pretrain: Duration,
    pub adversarial: Duration,
    pub predict: Duration,
    pub total: Duration,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub model: ModelKind,
    pub report: MetricsReport,
    /// `(slice, prediction)` pairs on the original weight scale, when kept.
    pub predictions: Vec<(usize, Matrix)>,
    pub losses: Vec<SliceLosses>,
    pub timings: Timings,
    pub checkpoint: Checkpoint,
}

enum Learner {
    Gan(Box<GcnGan>),
    Baseline(Box<LstmBaseline>),
}

fn new_learner(cfg: &ExperimentConfig, n: usize, rng: &mut Rng) -> Learner {
    match cfg.model {
        ModelKind::GcnGan => {
            let mut shape = GcnGanShape::for_nodes(n);
            if let Some(h) = cfg.lstm_hidden {
                shape.lstm_hidden = h;
            }
            if let Some(h) = cfg.critic_hidden {
                shape.critic_hidden = h;
            }
            Learner::Gan(Box::new(GcnGan::new(rng, shape, &cfg.train)))
        }
        ModelKind::LstmBaseline => {
            let h = cfg
                .lstm_hidden
                .unwrap_or_else(|| LstmBaselineParams::default_hidden(n));
            Learner::Baseline(Box::new(LstmBaseline::new(rng, n, h, &cfg.train)))
        }
    }
}

fn check_sizes(cfg: &ExperimentConfig) -> Result<()> {
    for (name, v) in [
        ("lstm_hidden", cfg.lstm_hidden),
        ("critic_hidden", cfg.critic_hidden),
    ] {
        if v == Some(0) {
            return Err(Error::Validation(format!("{name} must be positive")));
        }
    }
    Ok(())
}

/// Loads the configured data and runs the experiment; writes outputs when
/// `output_dir` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let seq = cfg.data.load()?;
    let result = run_on_source(&seq, cfg, &mut |_| {})?;
    if let Some(dir) = &cfg.output_dir {
        write_outputs(&result, dir)?;
    }
    Ok(result)
}

/// Runs the sliding-window protocol over `source`, reporting each produced
/// prediction to `observer` before the matching truth is read.
pub fn run_on_source(
    source: &dyn SnapshotSource,
    cfg: &ExperimentConfig,
    observer: &mut dyn FnMut(RunEvent),
) -> Result<ExperimentResult> {
    cfg.train.validate()?;
    check_sizes(cfg)?;
    let l = cfg.train.window;
    let t_total = source.len();
    if t_total < l + 2 {
        return Err(Error::Validation(format!(
            "sequence has {t_total} snapshots, window l = {l} needs at least {}",
            l + 2
        )));
    }
    if t_total == l + 2 {
        return Err(Error::Validation("no slices to evaluate".into()));
    }
    let started = Instant::now();
    let n = source.n_nodes();
    let max_weight = source.max_weight();

    let mut master = Rng::new(cfg.train.seed);
    let mut init_rng = master.split();
    let mut rng = master.split();
    let mut learner = new_learner(cfg, n, &mut init_rng);

    // Normalized snapshots, filled in on first use.
    let mut normalized: Vec<Option<Matrix>> = vec![None; t_total + 1];
    let mut norm = |t: usize| -> Matrix {
        normalized[t]
            .get_or_insert_with(|| source.snapshot(t).scale(1.0 / max_weight))
            .clone()
    };

    let mut per_slice = Vec::new();
    let mut predictions = Vec::new();
    let mut losses = Vec::new();
    let mut timings = Timings::default();

    for tau in (l + 2)..t_total {
        if cfg.cold_start && tau > l + 2 {
            learner = new_learner(cfg, n, &mut init_rng);
        }
        let history: Vec<Matrix> = ((tau - l - 1)..tau).map(&mut norm).collect();
        let target = norm(tau);
        let mut rec = SliceLosses {
            target: tau,
            ..SliceLosses::default()
        };
        match &mut learner {
            Learner::Gan(m) => {
                let tr = train_for_slice(m, &history, &target, &cfg.train, &mut rng)?;
                timings.pretrain += tr.pretrain_time;
                timings.adversarial += tr.adversarial_time;
                rec.reconstruction = tr.pretrain;
                rec.critic = tr.critic;
                rec.generator = tr.generator;
                rec.critic_max_abs = tr.critic_max_abs;
            }
            Learner::Baseline(m) => {
                let tr = baseline_train_for_slice(m, &history, &target, &cfg.train)?;
                timings.pretrain += tr.time;
                rec.reconstruction = tr.loss;
            }
        }
        losses.push(rec);

        let predict_started = Instant::now();
        let window: Vec<Matrix> = ((tau - l)..=tau).map(&mut norm).collect();
        let pred = match &learner {
            Learner::Gan(m) => predict(
                &m.generator,
                &window,
                &mut rng,
                max_weight,
                cfg.train.threshold,
            )?,
            Learner::Baseline(m) => baseline_predict(
                &m.params,
                &window,
                max_weight,
                cfg.refine_baseline.then_some(cfg.train.threshold),
            )?,
        };
        timings.predict += predict_started.elapsed();
        observer(RunEvent::Predicted(tau + 1));

        per_slice.push(evaluate_slice(tau + 1, source.snapshot(tau + 1), &pred)?);
        log::info!(
            "{} slice {}: mse {:.6} mismatch {:.4}",
            cfg.model,
            tau + 1,
            per_slice.last().map_or(0.0, |s| s.mse),
            per_slice.last().map_or(0.0, |s| s.mismatch)
        );
        if cfg.keep_predictions {
            predictions.push((tau + 1, pred));
        }
    }

    let checkpoint = match learner {
        Learner::Gan(m) => Checkpoint::GcnGan {
            config: cfg.train.clone(),
            generator: m.generator,
            critic: m.critic,
        },
        Learner::Baseline(m) => Checkpoint::LstmBaseline {
            config: cfg.train.clone(),
            params: m.params,
        },
    };
    timings.total = started.elapsed();
    Ok(ExperimentResult {
        model: cfg.model,
        report: aggregate(per_slice)?,
        predictions,
        losses,
        timings,
        checkpoint,
    })
}

/// Writes `metrics.csv`, `model.ckpt` and, when kept, one
/// `prediction_<slice>.csv` per predicted slice.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    result.report.write_csv(dir.join("metrics.csv"))?;
    crate::checkpoint::save_checkpoint(&result.checkpoint, dir.join("model.ckpt"))?;
    for (slice, m) in &result.predictions {
        let path = dir.join(format!("prediction_{slice}.csv"));
        fs::write(&path, matrix_csv(m, None)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Value written in place of exact zeros in heat-map exports, so that empty
/// cells stand apart from small weights.
pub const HEATMAP_ZERO: f64 = -200.0;

fn matrix_csv(m: &Matrix, zero_as: Option<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let row: Vec<String> = m
            .row(r)
            .iter()
            .map(|&v| match zero_as {
                Some(z) if v == 0.0 => format!("{z}"),
                _ => format!("{v}"),
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes `truth.csv`, `gcn_gan.csv` and `lstm_baseline.csv` into `dir`, with
/// zero entries replaced by [`HEATMAP_ZERO`]. Returns the three paths.
pub fn export_heatmap_csv(
    truth: &Matrix,
    pred_gan: &Matrix,
    pred_baseline: &Matrix,
    dir: &Path,
) -> Result<[PathBuf; 3]> {
    if pred_gan.shape() != truth.shape() || pred_baseline.shape() != truth.shape() {
        return Err(Error::shape(
            "export_heatmap_csv",
            format!(
                "truth {:?}, gcn-gan {:?}, baseline {:?}",
                truth.shape(),
                pred_gan.shape(),
                pred_baseline.shape()
            ),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = [
        dir.join("truth.csv"),
        dir.join("gcn_gan.csv"),
        dir.join("lstm_baseline.csv"),
    ];
    for (path, m) in paths.iter().zip([truth, pred_gan, pred_baseline]) {
        fs::write(path, matrix_csv(m, Some(HEATMAP_ZERO))).map_err(|e| Error::io(path, e))?;
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;

    fn synth(n: usize, t: usize, seed: u64) -> SnapshotSequence {
        generate_synthetic(&SyntheticSpec {
            n_nodes: n,
            n_slices: t,
            target_sparsity: 0.6,
            max_weight: 50.0,
            drift_rate: 0.1,
            seed,
        })
        .unwrap()
    }

    fn cfg(model: ModelKind, window: usize) -> ExperimentConfig {
        let train = TrainConfig {
            window,
            pretrain_iters: 3,
            train_iters: 3,
            ..TrainConfig::default()
        };
        ExperimentConfig::new(
            DataSource::Synthetic(SyntheticSpec {
                n_nodes: 4,
                n_slices: 8,
                target_sparsity: 0.5,
                max_weight: 1.0,
                drift_rate: 0.1,
                seed: 0,
            }),
            train,
            model,
        )
    }

    #[test]
    fn boundary_lengths() {
        let c = cfg(ModelKind::GcnGan, 3);
        let err = run_on_source(&synth(4, 5, 1), &c, &mut |_| {}).unwrap_err();
        assert!(err.to_string().contains("no slices to evaluate"));
        assert!(run_on_source(&synth(4, 4, 1), &c, &mut |_| {}).is_err());
        let r = run_on_source(&synth(4, 6, 1), &c, &mut |_| {}).unwrap();
        assert_eq!(r.report.per_snapshot.len(), 1);
        assert_eq!(r.report.per_snapshot[0].slice, 6);
    }

    struct Logged<'a> {
        inner: &'a SnapshotSequence,
        log: &'a RefCell<Vec<(char, usize)>>,
    }

    impl SnapshotSource for Logged<'_> {
        fn n_nodes(&self) -> usize {
            self.inner.n_nodes()
        }
        fn len(&self) -> usize {
            self.inner.len()
        }
        fn max_weight(&self) -> f64 {
            self.inner.max_weight()
        }
        fn snapshot(&self, t: usize) -> &Matrix {
            self.log.borrow_mut().push(('r', t));
            SnapshotSource::snapshot(self.inner, t)
        }
    }

    #[test]
    fn reads_are_causal_for_both_models() {
        for model in [ModelKind::GcnGan, ModelKind::LstmBaseline] {
            let seq = synth(4, 9, 2);
            let log = RefCell::new(Vec::new());
            let src = Logged {
                inner: &seq,
                log: &log,
            };
            let r = run_on_source(&src, &cfg(model, 2), &mut |RunEvent::Predicted(t)| {
                log.borrow_mut().push(('p', t))
            })
            .unwrap();
            assert_eq!(r.report.per_snapshot.len(), 9 - 2 - 2);
            let log = log.into_inner();
            for (i, &(kind, t)) in log.iter().enumerate() {
                if kind == 'r' {
                    let predicted_before = log[..i].contains(&('p', t));
                    let is_prediction_target = t > 2 + 2;
                    assert!(
                        !is_prediction_target || predicted_before,
                        "{model}: slice {t} read early"
                    );
                }
            }
        }
    }

    #[test]
    fn runs_are_deterministic_and_seed_sensitive() {
        let seq = synth(4, 7, 3);
        let mut c = cfg(ModelKind::GcnGan, 2);
        let a = run_on_source(&seq, &c, &mut |_| {}).unwrap();
        let b = run_on_source(&seq, &c, &mut |_| {}).unwrap();
        assert_eq!(a.report.to_csv(), b.report.to_csv());
        c.train.seed = 99;
        let d = run_on_source(&seq, &c, &mut |_| {}).unwrap();
        assert_ne!(a.report.to_csv(), d.report.to_csv());
    }

    #[test]
    fn cold_start_and_refined_baseline_options() {
        let seq = synth(4, 7, 4);
        let mut c = cfg(ModelKind::LstmBaseline, 2);
        c.keep_predictions = true;
        let raw = run_on_source(&seq, &c, &mut |_| {}).unwrap();
        assert!(raw
            .predictions
            .iter()
            .all(|(_, p)| p.data().iter().all(|&v| v > 0.0)));
        c.refine_baseline = true;
        c.cold_start = true;
        let refined = run_on_source(&seq, &c, &mut |_| {}).unwrap();
        assert_eq!(refined.predictions.len(), 3);
        assert!(refined
            .predictions
            .iter()
            .all(|(_, p)| (0..4).all(|i| p[(i, i)] == 0.0)));
    }

    #[test]
    fn heatmap_export_marks_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let t = Matrix::from_rows(&[[0.0, 2.5], [2.5, 0.0]]);
        let paths = export_heatmap_csv(&t, &t, &Matrix::filled(2, 2, 1.0), dir.path()).unwrap();
        assert_eq!(
            fs::read_to_string(&paths[0]).unwrap(),
            "-200,2.5\n2.5,-200\n"
        );
        assert_eq!(fs::read_to_string(&paths[2]).unwrap(), "1,1\n1,1\n");
        assert!(export_heatmap_csv(&t, &Matrix::zeros(3, 3), &t, dir.path()).is_err());
    }

    #[test]
    fn outputs_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(ModelKind::GcnGan, 2);
        c.keep_predictions = true;
        c.output_dir = Some(dir.path().join("out"));
        let r = run_experiment(&c).unwrap();
        let csv = fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
        assert_eq!(csv, r.report.to_csv());
        let ckpt = crate::checkpoint::load_checkpoint(dir.path().join("out/model.ckpt")).unwrap();
        assert_eq!(ckpt, r.checkpoint);
        assert!(dir.path().join("out/prediction_8.csv").exists());
    }
}
