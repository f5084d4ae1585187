//! Subcommand arguments and their execution.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand};
use envelope_core::envelope::write_run_report;
use envelope_core::eval::{error_rate, write_csv, write_pgm};
use envelope_core::tinynet::{init_model, train, Architecture};
use envelope_core::{Error, LabeledSet, Model, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::experiments::{class_heatmap, dropout_sweep, rolling_bench, rotation_experiment, RollingBenchConfig};
use crate::input::{load_images, load_model, load_set};
use crate::manifest::{sidecar_path, RunManifest};

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "args", rename_all = "kebab-case")]
pub enum Command {
    /// Train a dense classifier and save it in the binary model format.
    Train(TrainArgs),
    /// Error, mean uncertainty and confidence on rotated copies of a test set.
    MnistRotation(RotationArgs),
    /// Rolling vs vanilla Monte Carlo Dropout on synthetic drifting streams.
    RollingBench(RollingArgs),
    /// Single-pass error as a function of the inference dropout rate.
    DropoutSweep(SweepArgs),
    /// Per-class uncertainty bar of one image, written as a PGM.
    Heatmap(HeatmapArgs),
    /// Re-run the command recorded in a run manifest.
    Replay(ReplayArgs),
}

/// Hyperparameters shared by `train` and `dropout-sweep`.
#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct TrainingOptions {
    /// Layer sizes, input to output.
    #[arg(long, default_value = "784-256-10")]
    pub arch: String,
    /// Dropout rate on hidden layers during training.
    #[arg(long = "train-dropout", default_value_t = 0.5)]
    pub train_dropout: f64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.2)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Use only the first N training samples.
    #[arg(long)]
    pub train_limit: Option<usize>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub train_images: PathBuf,
    #[arg(long)]
    pub train_labels: PathBuf,
    #[arg(long, requires = "test_labels")]
    pub test_images: Option<PathBuf>,
    #[arg(long, requires = "test_images")]
    pub test_labels: Option<PathBuf>,
    #[command(flatten)]
    pub training: TrainingOptions,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct RotationArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test_images: PathBuf,
    #[arg(long)]
    pub test_labels: PathBuf,
    /// Forward passes per image.
    #[arg(long, default_value_t = 20)]
    pub fwp: usize,
    #[arg(long, default_value_t = 0.4)]
    pub dropout: f64,
    /// Use only the first N test samples.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct RollingArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// IDX image file holding the base frames.
    #[arg(long)]
    pub base_images: PathBuf,
    /// Indices into `--base-images`; one drifting stream per index.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9")]
    pub base_indices: Vec<usize>,
    /// Source stream length in frames, at 30 fps. With `6k + 1` frames every
    /// default frame rate keeps the last frame.
    #[arg(long, default_value_t = 91)]
    pub length: usize,
    #[arg(long, value_delimiter = ',', default_value = "30,15,10,5")]
    pub frame_rates: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "3,5,9")]
    pub strides: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "3,5,9")]
    pub fwp: Vec<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub dropout: f64,
    /// Fraction of brightness lost per source frame.
    #[arg(long, default_value_t = 0.008)]
    pub brightness_decay: f64,
    /// Growth of the noise standard deviation per source frame.
    #[arg(long, default_value_t = 0.004)]
    pub noise_ramp: f64,
    /// Pin masks to window slots instead of drawing fresh ones per frame.
    #[arg(long)]
    pub pinned: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Trained model; without it one is trained from `--train-images`.
    #[arg(long, conflicts_with_all = ["train_images", "train_labels"])]
    pub model: Option<PathBuf>,
    #[arg(long, requires = "train_labels")]
    pub train_images: Option<PathBuf>,
    #[arg(long, requires = "train_images")]
    pub train_labels: Option<PathBuf>,
    #[command(flatten)]
    pub training: TrainingOptions,
    #[arg(long)]
    pub test_images: PathBuf,
    #[arg(long)]
    pub test_labels: PathBuf,
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"
    )]
    pub rates: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// IDX image file.
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Anticlockwise rotation in degrees applied before inference.
    #[arg(long, default_value_t = 0.0)]
    pub rotate: f64,
    #[arg(long, default_value_t = 20)]
    pub fwp: usize,
    #[arg(long, default_value_t = 0.4)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// PGM file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded locations.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn into_dir(dir: &Path, file: &Path) -> PathBuf {
    dir.join(file.file_name().unwrap_or(file.as_os_str()))
}

impl Command {
    pub fn seeds(&self) -> BTreeMap<String, u64> {
        let seed = match self {
            Command::Train(a) => a.seed,
            Command::MnistRotation(a) => a.seed,
            Command::RollingBench(a) => a.seed,
            Command::DropoutSweep(a) => a.seed,
            Command::Heatmap(a) => a.seed,
            Command::Replay(_) => return BTreeMap::new(),
        };
        BTreeMap::from([("seed".to_string(), seed)])
    }

    /// Points every output of the command into `dir`, keeping file names.
    pub fn redirect(&mut self, dir: &Path) {
        match self {
            Command::Train(a) => a.out = into_dir(dir, &a.out),
            Command::MnistRotation(a) => a.out = dir.to_path_buf(),
            Command::RollingBench(a) => a.out = dir.to_path_buf(),
            Command::DropoutSweep(a) => a.out = into_dir(dir, &a.out),
            Command::Heatmap(a) => a.out = into_dir(dir, &a.out),
            Command::Replay(a) => a.out_dir = Some(dir.to_path_buf()),
        }
    }

    pub fn execute(&self) -> Result<()> {
        match self {
            Command::Train(a) => cmd_train(self, a),
            Command::MnistRotation(a) => cmd_mnist_rotation(self, a),
            Command::RollingBench(a) => cmd_rolling_bench(self, a),
            Command::DropoutSweep(a) => cmd_dropout_sweep(self, a),
            Command::Heatmap(a) => cmd_heatmap(self, a),
            Command::Replay(a) => cmd_replay(a),
        }
    }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
        }
        _ => Ok(()),
    }
}

fn train_model(images: &Path, labels: &Path, opts: &TrainingOptions, seed: u64) -> Result<(Model, Vec<f64>, LabeledSet)> {
    let set = load_set(images, labels, opts.train_limit)?;
    let arch: Architecture = opts.arch.parse()?;
    let class_count = *arch.sizes.last().ok_or_else(|| anyhow!("empty architecture"))?;
    let model = init_model(&arch.with_dropout(opts.train_dropout), class_count, seed)?;
    if opts.epochs == 0 {
        return Ok((model, Vec::new(), set));
    }
    let config = TrainConfig {
        epochs: opts.epochs,
        batch_size: opts.batch,
        learning_rate: opts.lr,
        train_dropout_rate: opts.train_dropout,
        seed,
    };
    let outcome = train(model, set.images(), set.labels(), &config)?;
    Ok((outcome.model, outcome.loss_history, set))
}

fn set_error(model: &Model, set: &LabeledSet) -> Result<f64> {
    let predictions = set
        .images()
        .iter()
        .map(|x| model.predict(x))
        .collect::<envelope_core::Result<Vec<_>>>()?;
    Ok(error_rate(&predictions, set.labels())?)
}

fn cmd_train(cmd: &Command, a: &TrainArgs) -> Result<()> {
    let (model, losses, set) = train_model(&a.train_images, &a.train_labels, &a.training, a.seed)?;
    for (epoch, loss) in losses.iter().enumerate() {
        println!("epoch {epoch}: loss {loss:.6}");
    }
    println!("train error: {:.4}", set_error(&model, &set)?);
    if let (Some(images), Some(labels)) = (&a.test_images, &a.test_labels) {
        let test = load_set(images, labels, None)?;
        println!("test error: {:.4}", set_error(&model, &test)?);
    }
    create_parent(&a.out)?;
    model.save(&a.out)?;
    RunManifest::new(cmd, vec![a.out.clone()]).write(&sidecar_path(&a.out))
}

fn cmd_mnist_rotation(cmd: &Command, a: &RotationArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let set = load_set(&a.test_images, &a.test_labels, a.limit)?;
    let result = rotation_experiment(&model, &set, a.fwp, a.dropout, a.seed)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let rotation_csv = a.out.join("rotation.csv");
    let samples_csv = a.out.join("samples.csv");
    let summary_json = a.out.join("summary.json");
    write_csv(&result.rows, &rotation_csv)?;
    write_csv(&result.samples, &samples_csv)?;
    let mut summary = serde_json::to_string_pretty(&result.summary)?;
    summary.push('\n');
    fs::write(&summary_json, summary).with_context(|| format!("writing {}", summary_json.display()))?;
    RunManifest::new(cmd, vec![rotation_csv, samples_csv, summary_json]).write(&a.out.join("manifest.json"))?;

    for row in &result.rows {
        println!(
            "{:>3} deg  error {:.4}  mean u {:.4}  mean confidence {:.4}",
            row.rotation_deg, row.error, row.mean_uncertainty, row.mean_confidence
        );
    }
    let show = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
    let s = &result.summary;
    println!("spearman(mean u, error): {}", show(s.spearman_uncertainty));
    println!("spearman(1 - mean confidence, error): {}", show(s.spearman_confidence));
    println!("spearman(u, misclassified) over samples: {}", show(s.spearman_samples));
    if s.spearman_uncertainty.is_none() {
        return Err(Error::Numeric("spearman(mean u, error) is undefined: a series is constant".into()).into());
    }
    Ok(())
}

fn cmd_rolling_bench(cmd: &Command, a: &RollingArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let images = load_images(&a.base_images)?;
    let bases = a
        .base_indices
        .iter()
        .map(|&i| {
            images
                .get(i)
                .cloned()
                .ok_or_else(|| anyhow!("base index {i} outside 0..{}", images.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let config = RollingBenchConfig {
        source_frame_rate: 30.0,
        length: a.length,
        frame_rates: a.frame_rates.clone(),
        strides: a.strides.clone(),
        fwps: a.fwp.clone(),
        dropout: a.dropout,
        brightness_decay_per_frame: a.brightness_decay,
        noise_sigma_ramp_per_frame: a.noise_ramp,
        pinned: a.pinned,
        seed: a.seed,
    };
    let result = rolling_bench(&model, &bases, &config)?;
    let reports = a.out.join("reports");
    fs::create_dir_all(&reports).with_context(|| format!("creating {}", reports.display()))?;
    let rolling_csv = a.out.join("rolling.csv");
    write_csv(&result.rows, &rolling_csv)?;
    let mut outputs = vec![rolling_csv];
    for trace in &result.traces {
        let path = reports.join(format!("{}.csv", trace.name));
        write_run_report(&trace.outputs, &path)?;
        outputs.push(path);
    }
    RunManifest::new(cmd, outputs).write(&a.out.join("manifest.json"))?;
    for row in &result.rows {
        println!(
            "{:>4} fps  {:<7} {:>2}  mean u {:.4}  passes {}",
            row.frame_rate, row.mode, row.stride, row.mean_u, row.forward_passes
        );
    }
    Ok(())
}

fn cmd_dropout_sweep(cmd: &Command, a: &SweepArgs) -> Result<()> {
    let model = match (&a.model, &a.train_images, &a.train_labels) {
        (Some(path), _, _) => load_model(path)?,
        (None, Some(images), Some(labels)) => train_model(images, labels, &a.training, a.seed)?.0,
        _ => bail!(Error::Input("pass --model, or --train-images with --train-labels".into())),
    };
    let set = load_set(&a.test_images, &a.test_labels, a.limit)?;
    let rows = dropout_sweep(&model, &set, &a.rates, a.seed)?;
    create_parent(&a.out)?;
    write_csv(&rows, &a.out)?;
    RunManifest::new(cmd, vec![a.out.clone()]).write(&sidecar_path(&a.out))?;
    for row in &rows {
        println!("dropout {:.2}  error {:.4}", row.dropout_rate, row.error);
    }
    Ok(())
}

fn cmd_heatmap(cmd: &Command, a: &HeatmapArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let images = load_images(&a.images)?;
    let image = images
        .get(a.index)
        .ok_or_else(|| Error::Input(format!("index {} outside 0..{}", a.index, images.len())))?;
    let heat = class_heatmap(&model, image, a.rotate, a.fwp, a.dropout, a.seed)?;
    create_parent(&a.out)?;
    write_pgm(&heat.map, &a.out)?;
    RunManifest::new(cmd, vec![a.out.clone()]).write(&sidecar_path(&a.out))?;
    let votes: Vec<String> = heat.hits.counts().iter().map(|(c, h)| format!("{c}:{h}")).collect();
    println!("votes {}  u {:.4}", votes.join(" "), heat.frame_uncertainty);
    Ok(())
}

fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let manifest = RunManifest::read(&a.manifest)?;
    let mut invocation = manifest.invocation;
    if let Command::Replay(_) = invocation {
        bail!(Error::Input("a manifest cannot record a replay".into()));
    }
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        invocation.redirect(dir);
    }
    invocation.execute()
}
