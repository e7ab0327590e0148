use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;

use clap::{Args, Parser, Subcommand};

use gcngan::data::{
    load_distances, preprocess_distances, save_sequence, sparsity, weight_histogram,
    PreprocessConfig, SnapshotSequence, SyntheticSpec,
};
use gcngan::model::{CriticSign, Preset, TrainConfig};
use gcngan::nn::Activation;
use gcngan::runner::{
    export_heatmap_csv, run_on_source, write_outputs, DataSource, ExperimentConfig,
    ExperimentResult, ModelKind,
};
use gcngan::{Error, Result};

/// Temporal link prediction for weighted dynamic networks.
#[derive(Parser)]
#[command(name = "gcngan", version)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a distance sequence into a weight sequence.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Distance threshold; also the maximum weight of the result.
        #[arg(long)]
        delta: f64,
        /// Accepted for uniformity; preprocessing is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print sparsity and an edge-weight histogram.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic weight sequence.
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        spec: SynthArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one model over a sequence and report its metrics.
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value = "gcn-gan")]
        model: ModelKind,
        /// LSTM hidden width.
        #[arg(long)]
        lstm_hidden: Option<usize>,
        /// Critic hidden width.
        #[arg(long)]
        critic_hidden: Option<usize>,
        #[command(flatten)]
        options: RunOptions,
        /// Keep per-slice predictions and write them to the output directory.
        #[arg(long)]
        keep_predictions: bool,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run GCN-GAN and the LSTM baseline side by side.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        options: RunOptions,
        /// Per-model `metrics.csv` and `model.ckpt` go into subdirectories.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Export heat-map CSVs of the truth and both models' predictions for one slice.
    ExportCase {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        options: RunOptions,
        /// Slice to export (numbered from 1).
        #[arg(long)]
        slice: usize,
        #[arg(long)]
        output_dir: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SynthArgs {
    #[arg(long, default_value_t = 16)]
    nodes: usize,
    #[arg(long, default_value_t = 40)]
    slices: usize,
    #[arg(long, default_value_t = 0.7)]
    sparsity: f64,
    #[arg(long, default_value_t = 1.0)]
    max_weight: f64,
    #[arg(long, default_value_t = 0.1)]
    drift: f64,
}

impl SynthArgs {
    fn spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_nodes: self.nodes,
            n_slices: self.slices,
            target_sparsity: self.sparsity,
            max_weight: self.max_weight,
            drift_rate: self.drift,
            seed,
        }
    }
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Weight sequence file; without it a synthetic sequence is generated.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    synth: SynthArgs,
    /// Seed of the synthetic sequence (defaults to --seed).
    #[arg(long)]
    data_seed: Option<u64>,
}

impl DataArgs {
    fn source(&self, seed: u64) -> DataSource {
        match &self.input {
            Some(p) => DataSource::File(p.clone()),
            None => DataSource::Synthetic(self.synth.spec(self.data_seed.unwrap_or(seed))),
        }
    }
}

#[derive(Args, Clone)]
struct TrainArgs {
    /// Base hyper-parameters; individual flags override them.
    #[arg(long, default_value = "ucsb")]
    preset: Preset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// History length l; each window holds l + 1 snapshots.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    pretrain_lr: Option<f64>,
    #[arg(long)]
    critic_lr: Option<f64>,
    #[arg(long)]
    generator_lr: Option<f64>,
    #[arg(long)]
    pretrain_iters: Option<usize>,
    #[arg(long)]
    train_iters: Option<usize>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    /// Refinement threshold in the normalized domain.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    rms_decay: Option<f64>,
    #[arg(long)]
    rms_eps: Option<f64>,
    #[arg(long)]
    critic_sign: Option<CriticSign>,
    #[arg(long)]
    candidate_activation: Option<Activation>,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        let mut c = TrainConfig::preset(self.preset);
        c.seed = self.seed;
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(
            window,
            pretrain_lr,
            critic_lr,
            generator_lr,
            pretrain_iters,
            train_iters,
            clip,
            l2,
            threshold,
            rms_decay,
            rms_eps,
            critic_sign,
            candidate_activation
        );
        c
    }
}

#[derive(Args, Clone)]
struct RunOptions {
    /// Re-initialize parameters for every slice.
    #[arg(long)]
    cold_start: bool,
    /// Refine baseline predictions too.
    #[arg(long)]
    refine_baseline: bool,
}

fn experiment(
    data: &DataArgs,
    train: &TrainArgs,
    options: &RunOptions,
    model: ModelKind,
) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(data.source(train.seed), train.config(), model);
    cfg.cold_start = options.cold_start;
    cfg.refine_baseline = options.refine_baseline;
    cfg
}

fn run(cfg: &ExperimentConfig, seq: &SnapshotSequence) -> Result<ExperimentResult> {
    run_on_source(seq, cfg, &mut |_| {})
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |x| format!("{x:.6}"))
}

fn run_pair(
    gan: &ExperimentConfig,
    base: &ExperimentConfig,
    seq: &SnapshotSequence,
) -> Result<[ExperimentResult; 2]> {
    thread::scope(|s| {
        let a = s.spawn(|| run(gan, seq));
        let b = s.spawn(|| run(base, seq));
        let join = |h: thread::ScopedJoinHandle<'_, Result<ExperimentResult>>| {
            h.join()
                .unwrap_or_else(|_| Err(Error::Usage("worker thread panicked".into())))
        };
        Ok([join(a)?, join(b)?])
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess {
            input,
            output,
            delta,
            ..
        } => {
            let cfg = PreprocessConfig::new(delta)?;
            let seq = preprocess_distances(&load_distances(&input)?, &cfg)?;
            save_sequence(&seq, &output)?;
            println!(
                "wrote {} snapshots of {} nodes to {}",
                seq.len(),
                seq.n_nodes(),
                output.display()
            );
        }
        Command::Stats { input, bins, .. } => {
            let seq = gcngan::data::load_sequence(&input)?;
            let h = weight_histogram(&seq, bins)?;
            println!("nodes {}", seq.n_nodes());
            println!("snapshots {}", seq.len());
            println!("max_weight {}", seq.max_weight());
            println!("sparsity {:.6}", sparsity(&seq));
            println!("histogram (lower, upper] count");
            for (k, c) in h.counts.iter().enumerate() {
                let (lo, hi) = h.bounds(k);
                println!("({lo}, {hi}] {c}");
            }
        }
        Command::Synth { output, spec, seed } => {
            let seq = gcngan::data::generate_synthetic(&spec.spec(seed))?;
            save_sequence(&seq, &output)?;
            println!(
                "wrote {} snapshots of {} nodes (sparsity {:.4}) to {}",
                seq.len(),
                seq.n_nodes(),
                sparsity(&seq),
                output.display()
            );
        }
        Command::Run {
            data,
            train,
            model,
            lstm_hidden,
            critic_hidden,
            options,
            keep_predictions,
            output_dir,
        } => {
            let mut cfg = experiment(&data, &train, &options, model);
            cfg.lstm_hidden = lstm_hidden;
            cfg.critic_hidden = critic_hidden;
            cfg.keep_predictions = keep_predictions;
            let seq = cfg.data.load()?;
            let r = run(&cfg, &seq)?;
            if let Some(dir) = &output_dir {
                write_outputs(&r, dir)?;
            }
            print!("{}", r.report.to_csv());
            let t = r.timings;
            log::info!(
                "time: pretrain {:.2?}, adversarial {:.2?}, predict {:.2?}, total {:.2?}",
                t.pretrain,
                t.adversarial,
                t.predict,
                t.total
            );
        }
        Command::Compare {
            data,
            train,
            options,
            output_dir,
        } => {
            let gan = experiment(&data, &train, &options, ModelKind::GcnGan);
            let base = experiment(&data, &train, &options, ModelKind::LstmBaseline);
            let seq = gan.data.load()?;
            let results = run_pair(&gan, &base, &seq)?;
            println!(
                "{:<14} {:>14} {:>12} {:>10}",
                "model", "mse", "kl", "mismatch"
            );
            for r in &results {
                let a = &r.report.averages;
                println!(
                    "{:<14} {:>14.6} {:>12} {:>10.6}",
                    r.model.name(),
                    a.mse,
                    fmt_opt(a.kl),
                    a.mismatch
                );
                if let Some(dir) = &output_dir {
                    write_outputs(r, &dir.join(r.model.name()))?;
                }
            }
        }
        Command::ExportCase {
            data,
            train,
            options,
            slice,
            output_dir,
        } => {
            let mut gan = experiment(&data, &train, &options, ModelKind::GcnGan);
            let mut base = experiment(&data, &train, &options, ModelKind::LstmBaseline);
            gan.keep_predictions = true;
            base.keep_predictions = true;
            let seq = gan.data.load()?;
            let l = gan.train.window;
            if slice < l + 3 || slice > seq.len() {
                return Err(Error::Usage(format!(
                    "slice must lie in {}..={} for window l = {l}",
                    l + 3,
                    seq.len()
                )));
            }
            // Later snapshots cannot influence the prediction of `slice`.
            let prefix =
                SnapshotSequence::new(seq.snapshots()[..slice].to_vec(), seq.max_weight())?;
            let [g, b] = run_pair(&gan, &base, &prefix)?;
            let pick = |r: &ExperimentResult| {
                r.predictions
                    .iter()
                    .find(|(t, _)| *t == slice)
                    .map(|(_, m)| m.clone())
                    .ok_or_else(|| Error::Usage(format!("no prediction for slice {slice}")))
            };
            let paths =
                export_heatmap_csv(seq.snapshot(slice - 1), &pick(&g)?, &pick(&b)?, &output_dir)?;
            for p in paths {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_target(false)
        .init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
