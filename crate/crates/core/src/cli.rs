//! Command-line front end. Every subcommand resolves its configuration as
//! preset < config file < flags and embeds the result in its outputs.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::data::{load_sequences, save_sequences, synthesize, window, DyadDataset, DyadSequence, SynthConfig};
use crate::error::{Error, Result};
use crate::eval::{baseline_error, classify_dataset, gen_error_curve, Aggregation, CurveKind, CurveSpec, GenErrorCurve};
use crate::generation::{generate_full, generate_partial, ClampMask, DEFAULT_GIBBS_ITERS};
use crate::models::{Checkpoint, DcrbmParams};
use crate::pipeline::{cross_validate, fit, prepare_split, FitConfig};
use crate::rng::{item_stream, Stream};
use crate::training::Reconstruction;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dcrbm", version, about = "Temporal RBM toolkit for dyadic motion")]
pub struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic two-actor dataset.
    Synth(SynthArgs),
    /// Fit a model and write a checkpoint plus a training report.
    Train(TrainArgs),
    /// Classify the sequences of a dataset with a checkpoint.
    Classify(ClassifyArgs),
    /// Roll out sequences from a checkpoint.
    Generate(GenerateArgs),
    /// Generation error against sequence length, with baselines.
    EvalGen(EvalGenArgs),
    /// Stratified k-fold cross-validation.
    Cv(CvArgs),
    /// Run the enumeration and gradient oracles.
    Verify(VerifyArgs),
}

/// Optional sections of a TOML config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub hidden_dim: Option<usize>,
    pub labels: Option<bool>,
    pub train: Option<toml::Table>,
    pub synth: Option<SynthConfig>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::error::read_text(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Declared training defaults.
    Base,
    Classification,
    Generation,
}

#[derive(Debug, Clone, Args)]
pub struct FitFlags {
    #[arg(long, value_enum, default_value = "classification")]
    pub preset: Preset,
    /// TOML file with `hidden_dim`, `labels` and a `[train]` table.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Train without the label layer (CRBM).
    #[arg(long)]
    pub no_labels: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub cd_steps: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub history_order: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_reconstruction)]
    pub reconstruction: Option<Reconstruction>,
    /// Keep labels clamped in the negative phase.
    #[arg(long)]
    pub clamp_labels: bool,
}

fn parse_reconstruction(s: &str) -> std::result::Result<Reconstruction, String> {
    match s {
        "mean-field" => Ok(Reconstruction::MeanField),
        "sample" => Ok(Reconstruction::Sample),
        other => Err(format!("unknown reconstruction '{other}' (mean-field | sample)")),
    }
}

impl FitFlags {
    pub fn resolve(&self) -> Result<FitConfig> {
        let mut cfg = match self.preset {
            Preset::Base => FitConfig::default(),
            Preset::Classification => FitConfig::classification_preset(),
            Preset::Generation => FitConfig::generation_preset(),
        };
        if let Some(path) = &self.config {
            let file = ConfigFile::load(path)?;
            cfg.hidden_dim = file.hidden_dim.unwrap_or(cfg.hidden_dim);
            cfg.labels = file.labels.unwrap_or(cfg.labels);
            if let Some(table) = file.train {
                let mut merged = toml::Table::try_from(&cfg.train).map_err(|e| Error::Config(e.to_string()))?;
                merged.extend(table);
                cfg.train = merged.try_into().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            }
        }
        cfg.hidden_dim = self.hidden.unwrap_or(cfg.hidden_dim);
        cfg.labels &= !self.no_labels;
        let t = &mut cfg.train;
        t.epochs = self.epochs.unwrap_or(t.epochs);
        t.learning_rate = self.lr.unwrap_or(t.learning_rate);
        t.momentum = self.momentum.unwrap_or(t.momentum);
        t.weight_decay = self.weight_decay.unwrap_or(t.weight_decay);
        t.cd_steps = self.cd_steps.unwrap_or(t.cd_steps);
        t.batch_size = self.batch_size.unwrap_or(t.batch_size);
        t.history_order = self.history_order.unwrap_or(t.history_order);
        t.seed = self.seed.unwrap_or(t.seed);
        t.reconstruction = self.reconstruction.unwrap_or(t.reconstruction);
        t.resample_labels &= !self.clamp_labels;
        t.validate()?;
        if cfg.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be >= 1".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with a `[synth]` table.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated coupling levels, one per class.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<f64>>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub joints: Option<usize>,
    #[arg(long)]
    pub lag: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub tempo: Option<f64>,
}

impl SynthArgs {
    pub fn resolve(&self) -> Result<SynthConfig> {
        let mut cfg = match &self.config {
            Some(path) => ConfigFile::load(path)?.synth.unwrap_or_default(),
            None => SynthConfig::default(),
        };
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.classes = self.classes.clone().unwrap_or(cfg.classes);
        cfg.per_class = self.per_class.unwrap_or(cfg.per_class);
        cfg.frames = self.frames.unwrap_or(cfg.frames);
        cfg.joints = self.joints.unwrap_or(cfg.joints);
        cfg.lag = self.lag.unwrap_or(cfg.lag);
        cfg.noise = self.noise.unwrap_or(cfg.noise);
        cfg.tempo = self.tempo.unwrap_or(cfg.tempo);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Training report path (JSON; a CSV with the same stem is written too).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Dataset for per-epoch held-out accuracy.
    #[arg(long)]
    pub heldout: Option<PathBuf>,
    #[command(flatten)]
    pub fit: FitFlags,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "majority", value_parser = parse_aggregation)]
    pub aggregation: Aggregation,
}

fn parse_aggregation(s: &str) -> std::result::Result<Aggregation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenMode {
    Full,
    Partial,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Source of seed frames (and of the observed actor for `partial`).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "partial")]
    pub mode: GenMode,
    #[arg(long, default_value_t = 100)]
    pub length: usize,
    /// Actor whose stream is observed in `partial` mode.
    #[arg(long, default_value_t = 0)]
    pub observe_actor: usize,
    /// Class to generate; defaults to each source sequence's label.
    #[arg(long)]
    pub label: Option<usize>,
    /// Number of source sequences to use (default: all).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_GIBBS_ITERS)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalGenArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Normalized with the checkpoint statistics before evaluation.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON report; a CSV with the same stem is written too.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "16,50,100,200,300")]
    pub lengths: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
    #[arg(long, default_value_t = DEFAULT_GIBBS_ITERS)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub observe_actor: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    /// Dataset file; the default synthetic benchmark is generated when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Seed of the fold assignment.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, default_value = "majority", value_parser = parse_aggregation)]
    pub aggregation: Aggregation,
    #[command(flatten)]
    pub fit: FitFlags,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Synth(a) => synth_cmd(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Classify(a) => classify_cmd(&a),
        Command::Generate(a) => generate_cmd(&a),
        Command::EvalGen(a) => eval_gen_cmd(&a),
        Command::Cv(a) => cv_cmd(&a),
        Command::Verify(a) => return verify_cmd(&a),
    }
    .map(|()| EXIT_OK)
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn synth_cmd(a: &SynthArgs) -> Result<()> {
    let cfg = a.resolve()?;
    let ds = synthesize(&cfg)?;
    save_sequences(&a.out, &ds)?;
    log::info!("wrote {} sequences to {}", ds.sequences.len(), a.out.display());
    Ok(())
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let cfg = a.fit.resolve()?;
    let ds = load_sequences(&a.data)?;
    let heldout = a.heldout.as_ref().map(load_sequences).transpose()?;
    let held_seqs = heldout.as_ref().map(|h| h.sequences.as_slice()).unwrap_or(&[]);
    let prepared = prepare_split(&ds.sequences, held_seqs, ds.joints)?;
    let heldout_arg = (!prepared.test.is_empty()).then_some(prepared.test.as_slice());
    let (params, mut report) = fit::<f64>(&prepared.train, ds.label_count(), &cfg, heldout_arg)?;
    let meta = json!({
        "fit": cfg,
        "label_names": ds.label_names,
        "training_sequences": ds.sequences.len(),
    });
    let ckpt = Checkpoint::from_params(&params, Some(prepared.stats), meta);
    ckpt.save(&a.out)?;
    let id = ckpt.id()?;
    report.checkpoint = Some(id);
    let report_path = a.report.clone().unwrap_or_else(|| sibling(&a.out, "report.json"));
    write_json(&report_path, &json!({ "fit": cfg, "report": report }))?;
    let rows: Vec<Vec<String>> = report
        .epochs
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                e.reconstruction_error.to_string(),
                e.heldout_accuracy.map_or_else(String::new, |x| x.to_string()),
            ]
        })
        .collect();
    write_csv(&sibling(&report_path, "csv"), &["epoch", "reconstruction_error", "heldout_accuracy"], &rows)?;
    log::info!("training took {:.1}s", report.wall_time.as_secs_f64());
    Ok(())
}

struct Loaded {
    ckpt: Checkpoint,
    params: DcrbmParams<f64>,
    id: String,
    data: DyadDataset,
    normalized: Vec<DyadSequence>,
    origins: Vec<[f64; 3]>,
}

fn load_model_and_data(model: &Path, data: &Path) -> Result<Loaded> {
    let ckpt = Checkpoint::load(model)?;
    let params = ckpt.params::<f64>()?;
    let id = ckpt.id()?;
    let ds = load_sequences(data)?;
    if ds.visible_dim != params.dims.visible_dim {
        return Err(Error::shape("dataset visible width vs checkpoint", params.dims.visible_dim, ds.visible_dim));
    }
    if params.dims.has_labels() && ds.label_count() != 0 && ds.label_count() != params.dims.label_count {
        return Err(Error::shape("dataset classes vs checkpoint", params.dims.label_count, ds.label_count()));
    }
    let stats = ckpt
        .normalization
        .clone()
        .ok_or_else(|| Error::Checkpoint("checkpoint carries no normalization statistics".into()))?;
    let mut normalized = Vec::with_capacity(ds.sequences.len());
    let mut origins = Vec::with_capacity(ds.sequences.len());
    for seq in &ds.sequences {
        let (n, o) = stats.apply(seq)?;
        normalized.push(n);
        origins.push(o);
    }
    Ok(Loaded { ckpt, params, id, data: ds, normalized, origins })
}

fn classify_cmd(a: &ClassifyArgs) -> Result<()> {
    let l = load_model_and_data(&a.model, &a.data)?;
    let windows = window::<f64>(&l.normalized, l.params.dims.history_order)?;
    let metrics = classify_dataset(&l.params, &windows, a.aggregation)?;
    write_json(
        &a.out,
        &json!({ "model": l.id, "aggregation": a.aggregation, "sequences": l.data.sequences.len(), "metrics": metrics }),
    )?;
    let names = &l.data.label_names;
    let rows: Vec<Vec<String>> = (0..metrics.confusion.len())
        .map(|k| {
            let mut row = vec![k.to_string(), names.get(k).cloned().unwrap_or_default()];
            row.push(metrics.precision[k].to_string());
            row.push(metrics.recall[k].to_string());
            row.extend(metrics.confusion[k].iter().map(|c| c.to_string()));
            row
        })
        .collect();
    let mut header = vec!["class".to_string(), "name".into(), "precision".into(), "recall".into()];
    header.extend((0..metrics.confusion.len()).map(|k| format!("pred_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&sibling(&a.out, "csv"), &header, &rows)?;
    println!("accuracy {:.4} over {} sequences", metrics.accuracy, metrics.count);
    Ok(())
}

fn actor_mask(dv: usize, actor: usize) -> Result<ClampMask> {
    if actor > 1 {
        return Err(Error::Config(format!("observe_actor must be 0 or 1, got {actor}")));
    }
    let half = dv / 2;
    ClampMask::range(dv, actor * half..(actor + 1) * half)
}

fn generate_cmd(a: &GenerateArgs) -> Result<()> {
    let l = load_model_and_data(&a.model, &a.data)?;
    let p = &l.params;
    let n = p.dims.history_order;
    let stats = l.ckpt.normalization.as_ref().expect("checked on load");
    let mask = match a.mode {
        GenMode::Full => ClampMask::free(p.dims.visible_dim),
        GenMode::Partial => actor_mask(p.dims.visible_dim, a.observe_actor)?,
    };
    let count = a.count.unwrap_or(l.normalized.len()).min(l.normalized.len());
    let mut out = Vec::with_capacity(count);
    for (i, seq) in l.normalized.iter().take(count).enumerate() {
        let need = n + if a.mode == GenMode::Partial { a.length } else { 0 };
        if seq.len() < need.max(n) {
            return Err(Error::Config(format!("sequence {} has {} frames; need {need}", seq.id, seq.len())));
        }
        let label = if p.dims.has_labels() {
            Some(a.label.or(seq.label).ok_or_else(|| Error::MissingLabels(format!("sequence {} has no label", seq.id)))?)
        } else {
            None
        };
        let seed_frames = seq.frames.slice(s![..n, ..]);
        let mut rng = item_stream(a.seed, Stream::Generation, i as u64);
        let generated = match a.mode {
            GenMode::Full => generate_full(p, label, seed_frames, a.length, a.iters, &mut rng)?,
            GenMode::Partial => {
                let observed = seq.frames.slice(s![n..n + a.length, ..]);
                generate_partial(p, label, observed, seed_frames, &mask, a.iters, &mut rng)?
            }
        };
        let mut frames = Array2::zeros((n + a.length, p.dims.visible_dim));
        frames.slice_mut(s![..n, ..]).assign(&seed_frames);
        frames.slice_mut(s![n.., ..]).assign(&generated.frames);
        out.push(DyadSequence {
            id: format!("gen-{}", seq.id),
            frames: crate::data::denormalize(&frames, stats, l.origins[i]),
            label,
            frame_rate: seq.frame_rate,
        });
    }
    let mut ds = DyadDataset::new(l.data.joints, l.data.label_names.clone(), out)?;
    let request = json!({
        "mode": a.mode,
        "length": a.length,
        "observe_actor": a.observe_actor,
        "label": a.label,
        "iters": a.iters,
        "seed": a.seed,
        "seed_frames": n,
    });
    ds.metadata.insert("model".into(), l.id.clone());
    ds.metadata.insert("request".into(), request.to_string());
    save_sequences(&a.out, &ds)?;
    Ok(())
}

fn eval_gen_cmd(a: &EvalGenArgs) -> Result<()> {
    let l = load_model_and_data(&a.model, &a.data)?;
    let p = &l.params;
    let dv = p.dims.visible_dim;
    let mask = actor_mask(dv, a.observe_actor)?;
    let spec = CurveSpec { lengths: &a.lengths, history_order: p.dims.history_order, mask: &mask, instances: a.instances };
    let mut groups: Vec<(Option<usize>, Vec<DyadSequence>)> = Vec::new();
    for seq in &l.normalized {
        match groups.iter_mut().find(|(k, _)| *k == seq.label) {
            Some((_, v)) => v.push(seq.clone()),
            None => groups.push((seq.label, vec![seq.clone()])),
        }
    }
    groups.sort_by_key(|(k, _)| *k);
    let zero = ndarray::Array1::zeros(dv);
    let mut curves: Vec<GenErrorCurve> = Vec::new();
    for (_, seqs) in &groups {
        for kind in [CurveKind::Partial, CurveKind::Full] {
            curves.push(gen_error_curve(p, seqs, &spec, kind, a.iters, a.seed)?);
        }
        for kind in [CurveKind::MeanPose, CurveKind::Persistence] {
            curves.push(baseline_error(seqs, &spec, kind, zero.view())?);
        }
    }
    write_json(
        &a.out,
        &json!({
            "model": l.id,
            "lengths": a.lengths,
            "instances": a.instances,
            "iters": a.iters,
            "observe_actor": a.observe_actor,
            "seed": a.seed,
            "curves": curves,
        }),
    )?;
    let rows: Vec<Vec<String>> = curves.iter().flat_map(|c| c.to_csv_rows()).map(|r| r.to_vec()).collect();
    write_csv(&sibling(&a.out, "csv"), &["setting", "class", "length", "mean", "std", "instances"], &rows)?;
    Ok(())
}

fn cv_cmd(a: &CvArgs) -> Result<()> {
    let cfg = a.fit.resolve()?;
    let ds = match &a.data {
        Some(path) => load_sequences(path)?,
        None => synthesize(&SynthConfig::default())?,
    };
    let report = cross_validate::<f64>(&ds, a.folds, a.split_seed, &cfg, a.aggregation)?;
    write_json(&a.out, &report)?;
    let rows: Vec<Vec<String>> = report
        .per_fold
        .iter()
        .map(|m| {
            vec![
                m.fold.map_or_else(String::new, |f| f.to_string()),
                m.accuracy.to_string(),
                m.window_accuracy.map_or_else(String::new, |x| x.to_string()),
                m.count.to_string(),
            ]
        })
        .collect();
    write_csv(&sibling(&a.out, "csv"), &["fold", "accuracy", "window_accuracy", "sequences"], &rows)?;
    println!("mean accuracy {:.4} (std {:.4}) over {} folds", report.mean_accuracy, report.std_accuracy, a.folds);
    Ok(())
}

fn verify_cmd(a: &VerifyArgs) -> Result<i32> {
    let report = crate::verify::run(a.seed)?;
    for c in &report.checks {
        println!(
            "{} {:<40} max deviation {:.3e} (tolerance {:.0e}, {} trials, {:.2}s)",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance,
            c.trials,
            c.seconds
        );
    }
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY })
}
