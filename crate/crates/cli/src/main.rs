use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conjointnet::autoencoder::write_reconstruction_csv;
use conjointnet::dataio::synth::random_partworths;
use conjointnet::dataio::{
    car_dataset, load_car, load_mm, mm_dataset, synth_clustered, synth_interaction, synth_linear, InteractionKind,
    SchemaFile,
};
use conjointnet::harness::checkpoint::Checkpoint;
use conjointnet::harness::config::{apply_overrides, from_value, read_json, ExperimentConfig, PretrainConfig};
use conjointnet::harness::experiment::{
    evaluate_checkpoint, pretrain_ae, reconstruct_sample, run_experiment, ExperimentReport, SplitName,
};
use conjointnet::harness::report::{compare_table, ComparisonRow};
use conjointnet::linear_conjoint::{write_partworth_csv, ImportanceMethod};
use conjointnet::numcore::seeded_rng;
use conjointnet::{Error, ErrorClass, Result};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "conjointnet", version, about = "Conjoint analysis and ConjointNet preference models")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw survey exports into dataset files.
    #[command(subcommand)]
    Preprocess(Preprocess),
    /// Generate a synthetic dataset with a known decision rule.
    Synth(SynthArgs),
    /// Train a conjoint, SSL or residual model from a config file.
    Train(RunArgs),
    /// Pretrain an autoencoder on the items of a dataset.
    PretrainAe(RunArgs),
    /// Score a checkpoint on one partition of a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Also write the full evaluation (scores, targets) as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export effects-coded partworths and attribute importances.
    Partworths {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Importance::Range)]
        importance: Importance,
    },
    /// Dump the reconstruction of one held-out item.
    Reconstruct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        sample: usize,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the dataset recorded in the checkpoint.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Tabulate test metrics of several runs.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum Preprocess {
    /// Moral Machine SharedResponses export.
    Mm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep at most this many scenario pairs.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Car preference experiments; writes one dataset per experiment into
    /// the output directory.
    Car {
        #[arg(long)]
        exp1: Option<PathBuf>,
        #[arg(long)]
        exp2: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Linear,
    Xor,
    Threshold,
    Clustered,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_enum)]
    kind: Generator,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Label flip probability (xor, threshold).
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Range of random partworths when the schema file has none (linear).
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Number of prototypes (clustered).
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    /// Per-attribute resampling probability (clustered).
    #[arg(long, default_value_t = 0.05)]
    resample: f64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override any config key, e.g. `--set model.hidden_nodes=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Importance {
    Range,
    SumAbs,
}

impl RunArgs {
    /// The config file with flag overrides applied; `--set` comes last.
    fn resolved(&self) -> Result<Value> {
        let mut v = read_json(&self.config)?;
        let mut pairs = Vec::new();
        if let Some(s) = self.seed {
            pairs.push(format!("seed={s}"));
        }
        if let Some(e) = self.max_epochs {
            pairs.push(format!("max_epochs={e}"));
        }
        apply_overrides(&mut v, &pairs)?;
        let obj = v.as_object_mut().ok_or_else(|| Error::Validation("config must be a JSON object".into()))?;
        if let Some(d) = &self.dataset {
            obj.insert("dataset".into(), Value::String(d.display().to_string()));
        }
        if let Some(o) = &self.output_dir {
            obj.insert("output_dir".into(), Value::String(o.display().to_string()));
        }
        apply_overrides(&mut v, &self.set)?;
        Ok(v)
    }
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn stats_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into());
    out.with_file_name(format!("{stem}.stats.json"))
}

fn preprocess(cmd: Preprocess) -> Result<()> {
    match cmd {
        Preprocess::Mm { input, out, limit } => {
            let (pairs, schema, stats) = load_mm(&input, limit)?;
            if pairs.is_empty() {
                return Err(Error::Data(format!("{} produced no scenario pairs", input.display())));
            }
            let ds = mm_dataset(&pairs, schema);
            ds.save(&out)?;
            write_json(&stats_path(&out), &stats)?;
            println!("{} pairs written to {}", ds.len(), out.display());
        }
        Preprocess::Car { exp1, exp2, out } => {
            let data = load_car(exp1.as_deref(), exp2.as_deref())?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            for (tag, records, stats) in [("exp1", &data.exp1, &data.stats1), ("exp2", &data.exp2, &data.stats2)] {
                if records.is_empty() {
                    continue;
                }
                let mut ds = car_dataset(records)?;
                ds.name = format!("car_{tag}");
                let path = out.join(format!("car_{tag}.json"));
                ds.save(&path)?;
                write_json(&stats_path(&path), stats)?;
                println!("{} comparisons written to {}", ds.len(), path.display());
            }
        }
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let file = SchemaFile::load(&a.schema)?;
    let schema = file.schema()?;
    let ds = match a.kind {
        Generator::Linear => {
            let w = match file.partworths()? {
                Some(w) => w,
                None => random_partworths(&schema, a.scale, &mut seeded_rng(a.seed)),
            };
            synth_linear(&w, a.n, a.seed)
        }
        Generator::Xor => synth_interaction(&schema, InteractionKind::Xor, a.n, a.noise, a.seed)?,
        Generator::Threshold => synth_interaction(&schema, InteractionKind::Threshold, a.n, a.noise, a.seed)?,
        Generator::Clustered => synth_clustered(&schema, a.clusters, a.n, a.resample, a.seed)?,
    };
    ds.save(&a.out)?;
    println!("{} records written to {}", ds.len(), a.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess(p) => preprocess(p)?,
        Command::Synth(a) => synth(a)?,
        Command::Train(a) => {
            let cfg: ExperimentConfig = from_value(a.resolved()?)?;
            let r = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string(&r.test)?);
        }
        Command::PretrainAe(a) => {
            let cfg: PretrainConfig = from_value(a.resolved()?)?;
            let r = pretrain_ae(&cfg)?;
            println!(
                "{}",
                serde_json::json!({"test_recon_loss": r.test_recon_loss, "test_argmax_accuracy": r.test_argmax_accuracy})
            );
        }
        Command::Eval { model, dataset, split, out } => {
            let ck = Checkpoint::load(&model)?;
            let r = evaluate_checkpoint(&ck, &dataset, split.parse::<SplitName>()?)?;
            if let Some(out) = out {
                write_json(&out, &r)?;
            }
            println!("{}", serde_json::to_string(&r.metrics)?);
        }
        Command::Partworths { model, out, importance } => {
            let w = Checkpoint::load(&model)?.partworths()?;
            let method = match importance {
                Importance::Range => ImportanceMethod::Range,
                Importance::SumAbs => ImportanceMethod::SumAbs,
            };
            write_partworth_csv(&out, &w, method)?;
        }
        Command::Reconstruct { model, sample, out, dataset } => {
            let ck = Checkpoint::load(&model)?;
            let ds = dataset.unwrap_or_else(|| ck.dataset.clone());
            let rows = reconstruct_sample(&ck, &ds, sample)?;
            write_reconstruction_csv(&out, &rows)?;
        }
        Command::Compare { reports, out } => {
            let rows = reports
                .iter()
                .map(|p| {
                    ExperimentReport::load(p).map(|r| ComparisonRow { model_type: r.model_type, metrics: r.test })
                })
                .collect::<Result<Vec<_>>>()?;
            print!("{}", compare_table(&rows, &out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Data => 3,
                ErrorClass::Numeric => 4,
            })
        }
    }
}
