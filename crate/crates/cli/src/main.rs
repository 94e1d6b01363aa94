mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use reform::characterization::characterize_corpus;
use reform::classifiers::{pairwise_accuracy, train, ClassifierKind, Hyperparams};
use reform::evaluation::{evaluate, majority_baseline, Matching, Tolerance};
use reform::features::deconstruct_all;
use reform::io::{
    generate_synthetic, load_canonical, load_dataset, load_model, load_synth_config, save_model, write_canonical,
    CanonicalDataset, DataFormat, GroupSource, SynthConfig,
};
use reform::reconstruction::{detect_with, MergeMode};
use reform::{Frame, GroupSet};

#[derive(Parser)]
#[command(name = "reform", version, about = "Detect conversational groups from positions and body orientations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a pair classifier on a random split of a dataset.
    Train(TrainArgs),
    /// Detect groups in every frame of a dataset.
    Detect(DetectArgs),
    /// Score detections against ground truth.
    Evaluate(EvaluateArgs),
    /// Tabulate symmetry and tightness by group size.
    Characterize(CharacterizeArgs),
    /// Generate a synthetic labeled dataset.
    Synth(SynthArgs),
    /// Draw one frame as SVG.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Canonical,
    Salsa,
    Babble,
}

impl From<FormatArg> for DataFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Canonical => DataFormat::Canonical,
            FormatArg::Salsa => DataFormat::Salsa,
            FormatArg::Babble => DataFormat::Babble,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Knn,
    Trees,
    Logreg,
}

impl From<KindArg> for ClassifierKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Knn => ClassifierKind::WeightedKnn,
            KindArg::Trees => ClassifierKind::BaggedTrees,
            KindArg::Logreg => ClassifierKind::LogisticRegression,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Intersection,
    Union,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum UseArg {
    Truth,
    Detections,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file (canonical) or directory (salsa, babble).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "canonical")]
    format: FormatArg,
}

impl DataArgs {
    fn load(&self) -> Result<CanonicalDataset> {
        load_dataset(&self.data, self.format.into()).with_context(|| format!("loading {}", self.data.display()))
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Fraction of frames used for training, in (0, 1).
    #[arg(long, default_value_t = 0.6, value_parser = parse_split)]
    split: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,
    /// Also write the held-out frames as a canonical dataset.
    #[arg(long)]
    test_out: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 30)]
    n_trees: usize,
    /// 0 grows trees until leaves are pure.
    #[arg(long, default_value_t = 12)]
    max_depth: usize,
    #[arg(long, default_value_t = 5)]
    min_leaf: usize,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 2000)]
    max_epochs: usize,
}

fn parse_split(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("split must lie strictly between 0 and 1, got {v}"))
    }
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "intersection")]
    mode: ModeArg,
    /// Worker threads (0 uses one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Canonical dataset written by `detect`.
    #[arg(long)]
    detections: PathBuf,
    /// Canonical dataset with ground-truth groups.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 0.6667)]
    tolerance: f64,
    /// Use exhaustive one-to-one matching (at most 8 groups per frame).
    #[arg(long)]
    exhaustive: bool,
    /// Also write the report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CharacterizeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Which groups the dataset holds.
    #[arg(long = "use", value_enum, default_value = "truth")]
    use_: UseArg,
    /// Where to write the table.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator settings; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    frame: u64,
    #[arg(long)]
    svg: PathBuf,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let dataset = args.data.load()?;
    let (train_set, test_set) = dataset.split(args.split, args.seed)?;
    let train_samples = deconstruct_all(&train_set.frames)?;
    let hyperparams = Hyperparams {
        k: args.k,
        n_trees: args.n_trees,
        max_depth: (args.max_depth > 0).then_some(args.max_depth),
        min_leaf: args.min_leaf,
        l2: args.l2,
        learning_rate: args.learning_rate,
        max_epochs: args.max_epochs,
        ..Hyperparams::default()
    };
    let model = train(&train_samples, args.kind.into(), &hyperparams, args.seed)?;
    save_model(&args.out, &model)?;
    println!("model\t{}\t{}", model.kind().as_str(), args.out.display());
    println!("train_frames\t{}\ttrain_pairs\t{}", train_set.frames.len(), train_samples.len());
    println!("train_accuracy\t{:.4}", pairwise_accuracy(&model, &train_samples)?);
    let test_samples = deconstruct_all(&test_set.frames)?;
    if test_samples.is_empty() {
        println!("test_accuracy\tn/a (no held-out pairs)");
    } else {
        println!("test_frames\t{}\ttest_pairs\t{}", test_set.frames.len(), test_samples.len());
        println!("test_accuracy\t{:.4}", pairwise_accuracy(&model, &test_samples)?);
        println!("majority_baseline\t{:.4}", majority_baseline(&test_samples)?);
    }
    if let Some(path) = &args.test_out {
        write_canonical(path, &test_set)?;
    }
    Ok(())
}

fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let dataset = args.data.load()?;
    let mode = match args.mode {
        ModeArg::Intersection => MergeMode::Intersection,
        ModeArg::Union => MergeMode::Union,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build()?;
    let start = Instant::now();
    // collect keeps input order, and frames are already sorted by id
    let detected: Vec<GroupSet> = pool.install(|| {
        dataset
            .frames
            .par_iter()
            .map(|f| detect_with(&model, f, mode))
            .collect::<reform::Result<_>>()
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    let frames: Vec<Frame> = dataset
        .frames
        .iter()
        .zip(detected)
        .map(|(f, groups)| Frame { truth: Some(groups), ..f.clone() })
        .collect();
    let n = frames.len();
    let out = CanonicalDataset::new(frames)?.with_source(GroupSource::Detections);
    write_canonical(&args.out, &out)?;
    let groups: usize = out.frames.iter().map(|f| f.truth.as_ref().map_or(0, GroupSet::len)).sum();
    println!("frames\t{n}\tgroups\t{groups}");
    println!("seconds\t{elapsed:.3}\tframes_per_second\t{:.1}", n as f64 / elapsed.max(1e-9));
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let detections = load_canonical(&args.detections)?;
    let truth = load_canonical(&args.truth)?;
    if detections.source != GroupSource::Detections {
        log::warn!("{} is marked as ground truth, not detections", args.detections.display());
    }
    let tolerance = Tolerance::from_f64(args.tolerance)?;
    let matching = if args.exhaustive { Matching::Exhaustive } else { Matching::Greedy };
    let report = evaluate(&detections.group_sets(), &truth.group_sets(), tolerance, matching)?;
    print!("{}", report.to_text());
    if let Some(path) = &args.report {
        write_text(path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    Ok(())
}

fn cmd_characterize(args: &CharacterizeArgs) -> Result<()> {
    let dataset = args.data.load()?;
    let held = match dataset.source {
        GroupSource::Truth => UseArg::Truth,
        GroupSource::Detections => UseArg::Detections,
    };
    if held != args.use_ {
        bail!(
            "{} holds {} groups, but --use asked for {}",
            args.data.data.display(),
            if held == UseArg::Truth { "ground-truth" } else { "detected" },
            if args.use_ == UseArg::Truth { "truth" } else { "detections" }
        );
    }
    let groups = dataset.group_sets();
    let table = characterize_corpus(dataset.frames.iter().zip(&groups).map(|(f, (_, g))| (f, g)))?;
    let text = table.to_text();
    write_text(&args.out, &text)?;
    print!("{text}");
    if let Some(path) = &args.svg {
        write_text(path, &svg::size_chart(&table))?;
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => load_synth_config(path)?,
        None => SynthConfig::default(),
    };
    let dataset = generate_synthetic(&config)?;
    write_canonical(&args.out, &dataset)?;
    let groups: usize = dataset.frames.iter().map(|f| f.truth.as_ref().map_or(0, GroupSet::len)).sum();
    println!("frames\t{}\tgroups\t{groups}\t{}", dataset.frames.len(), args.out.display());
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> Result<()> {
    let dataset = args.data.load()?;
    let Some(frame) = dataset.frame(args.frame) else {
        bail!("{} has no frame {}", args.data.data.display(), args.frame);
    };
    write_text(&args.svg, &svg::render_frame(frame))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Characterize(a) => cmd_characterize(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
