//! Running configured experiments end to end and the read-only operations
//! on their checkpoints.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autoencoder::{
    argmax_accuracy, reconstruction_dump, train_ae, AeConfig, Autoencoder, ReconstructionRow,
};
use crate::dataio::features::{concat_schema, option_schema};
use crate::dataio::{featurize, file_sha256, split, Dataset, DatasetSplit, FeatureSpec, Features, InputKind};
use crate::error::{Error, Result};
use crate::harness::checkpoint::{Checkpoint, LinearModel, ModelState, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
use crate::harness::config::{ExperimentConfig, ModelSpec, PretrainConfig};
use crate::harness::metrics::{evaluate, label, MetricSet};
use crate::harness::report::export_curves;
use crate::linear_conjoint::{fit_design, FitConfig, IterCallback};
use crate::numcore::{seeded_rng, sigmoid, Matrix};
use crate::residual_net::{train_residual, Pairing, ResidualNet};
use crate::ssl_net::{train_ssl, SslNet};
use crate::train::{EpochRecord, Selection, TrainReport};

pub const REPORT_FORMAT: &str = "conjointnet-report";
pub const REPORT_VERSION: u32 = 1;

pub const CONFIG_FILE: &str = "config.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const REPORT_FILE: &str = "report.json";
pub const CURVES_FILE: &str = "curves.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl From<&DatasetSplit> for SplitSizes {
    fn from(s: &DatasetSplit) -> Self {
        Self { train: s.train.len(), validation: s.validation.len(), test: s.test.len() }
    }
}

/// Everything a finished `train` run records. Raw test scores and targets
/// are kept so metrics can be recomputed at any threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub model_type: String,
    pub dataset: PathBuf,
    /// SHA-256 of every input file, keyed by path as given.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub split: SplitSizes,
    pub training: TrainReport,
    pub test: MetricSet,
    pub test_ids: Vec<String>,
    pub test_scores: Vec<f64>,
    pub test_targets: Vec<u8>,
}

impl ExperimentReport {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: Self = serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        if r.format != REPORT_FORMAT {
            return Err(Error::Data(format!("{} is not an experiment report", path.display())));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub dataset: PathBuf,
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub n_train_items: usize,
    pub n_test_items: usize,
    pub autoencoder: AeConfig,
    pub training: TrainReport,
    pub test_recon_loss: f64,
    /// Per-attribute argmax reconstruction accuracy on held-out items.
    pub test_argmax_accuracy: f64,
}

/// A trained model with its report, before anything touches the disk.
pub struct TrainedRun {
    pub checkpoint: Checkpoint,
    pub report: ExperimentReport,
}

fn accuracy_from_logits(logits: &[f64], y: &[f64]) -> f64 {
    let hit = logits.iter().zip(y).filter(|(s, t)| f64::from(label(sigmoid(**s))) == **t).count();
    hit as f64 / y.len().max(1) as f64
}

/// Penalized logit fit; each Newton iteration is recorded as one epoch and
/// the final iterate is kept.
pub fn train_conjoint(
    lambda: f64,
    max_iter: usize,
    pairing: Pairing,
    train: &Features,
    val: Option<&Features>,
) -> Result<(LinearModel, TrainReport)> {
    let x = LinearModel::design(pairing, train)?;
    let xv = val.map(|v| LinearModel::design(pairing, v)).transpose()?;
    let intercept = pairing == Pairing::SingleVector;
    let mut epochs = Vec::new();
    let cb: &mut IterCallback<'_> = &mut |it, w, b, obj| {
        let m = LinearModel { pairing, weights: w.to_vec(), intercept: b };
        let train_acc = m.logits(&x).ok().map(|l| accuracy_from_logits(&l, &train.y));
        let val_acc = match (&xv, val) {
            (Some(xv), Some(v)) => m.logits(xv).ok().map(|l| accuracy_from_logits(&l, &v.y)),
            _ => None,
        };
        epochs.push(EpochRecord { epoch: it, train_loss: obj, val_loss: None, train_acc, val_acc });
    };
    let fit = fit_design(&x, &train.y, intercept, &FitConfig { lambda, max_iter, ..FitConfig::default() }, Some(cb))?;
    let mut report = TrainReport::new("conjoint", Selection::Final);
    report.epochs = epochs;
    report.best_epoch = fit.iterations;
    report.warnings = fit.warnings;
    report.finish();
    Ok((LinearModel { pairing, weights: fit.weights, intercept: fit.intercept }, report))
}

fn input_hashes(paths: &[&Path]) -> Result<BTreeMap<String, String>> {
    paths.iter().map(|p| Ok((p.display().to_string(), file_sha256(p)?))).collect()
}

fn check_ssl_features(features: &FeatureSpec) -> Result<()> {
    if features.input != InputKind::OneHot {
        return Err(Error::Validation("the SSL model encodes one-hot items; set features.input to one_hot".into()));
    }
    Ok(())
}

/// Trains and evaluates per `cfg` on an already loaded dataset.
pub fn train_on(cfg: &ExperimentConfig, ds: &Dataset) -> Result<TrainedRun> {
    cfg.validate()?;
    ds.validate()?;
    let sp = split(ds, &cfg.split)?;
    if sp.train.is_empty() || sp.test.is_empty() {
        return Err(Error::Validation("split left the train or test partition empty".into()));
    }
    let train = featurize(ds, &sp.train, &cfg.features)?;
    let val = if sp.validation.is_empty() { None } else { Some(featurize(ds, &sp.validation, &cfg.features)?) };
    let test = featurize(ds, &sp.test, &cfg.features)?;
    let tcfg = cfg.train_config();
    let mut rng = seeded_rng(cfg.seed);
    let mut inputs = input_hashes(&[&cfg.dataset])?;

    let (model, mut training) = match &cfg.model {
        ModelSpec::Conjoint { lambda, max_iter, pairing } => {
            let pairing = pairing.unwrap_or(match ds.task {
                crate::dataio::Task::Pairwise => Pairing::Pairwise,
                crate::dataio::Task::SingleVector => Pairing::SingleVector,
            });
            let (m, r) = train_conjoint(*lambda, *max_iter, pairing, &train, val.as_ref())?;
            (ModelState::Conjoint(m), r)
        }
        ModelSpec::Residual { config } => {
            let width = match config.pairing {
                Pairing::Pairwise => train.option_width(),
                Pairing::SingleVector => train.options.iter().map(Matrix::cols).sum(),
            };
            let mut m = ResidualNet::new(config.clone(), width, &mut rng)?;
            let r = train_residual(&mut m, &train, val.as_ref(), &tcfg)?;
            (ModelState::Residual(m), r)
        }
        ModelSpec::Ssl { encoder, config } => {
            check_ssl_features(&cfg.features)?;
            let ae = Checkpoint::load(encoder)?;
            let ModelState::Autoencoder(ae) = ae.model else {
                return Err(Error::Validation(format!("{} is not an autoencoder checkpoint", encoder.display())));
            };
            if ae.input_dim() != train.option_width() {
                return Err(Error::Validation(format!(
                    "encoder expects {} input columns, dataset options have {}",
                    ae.input_dim(),
                    train.option_width()
                )));
            }
            inputs.extend(input_hashes(&[encoder])?);
            let mut m = SslNet::build(config.clone(), ae.encoder(), &mut rng)?;
            let r = train_ssl(&mut m, &train, val.as_ref(), &tcfg)?;
            (ModelState::Ssl(m), r)
        }
    };

    let scores = model.scores(&test)?;
    let metrics = evaluate(&scores, &test.y)?;
    training.test = Some(metrics.clone());
    let checkpoint = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        model,
        dataset: cfg.dataset.clone(),
        dataset_sha256: inputs[&cfg.dataset.display().to_string()].clone(),
        features: cfg.features,
        split: cfg.split,
        seed: cfg.seed,
        best_epoch: training.best_epoch,
        option_schema: option_schema(ds, &cfg.features)?,
        concat_schema: concat_schema(ds, &cfg.features)?,
    };
    let report = ExperimentReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        name: cfg.name.clone(),
        model_type: cfg.model.display_name().into(),
        dataset: cfg.dataset.clone(),
        inputs,
        seed: cfg.seed,
        split: SplitSizes::from(&sp),
        training,
        test: metrics,
        test_ids: sp.test.iter().map(|&i| ds.records[i].id.clone()).collect(),
        test_scores: scores,
        test_targets: test.y.iter().map(|&v| v as u8).collect(),
    };
    Ok(TrainedRun { checkpoint, report })
}

/// Writes a set of files into `dir`; on any failure the files already
/// written (and the directory, if this call created it) are removed.
fn write_outputs(dir: &Path, files: &[(&str, Box<dyn Fn(&Path) -> Result<()> + '_>)]) -> Result<()> {
    let created = !dir.exists();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, write) in files {
        let path = dir.join(name);
        if let Err(e) = write(&path) {
            for p in written.iter().chain(std::iter::once(&path)) {
                let _ = std::fs::remove_file(p);
            }
            if created {
                let _ = std::fs::remove_dir_all(dir);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Loads the dataset, trains, evaluates once on the test partition and
/// writes `config.json`, `checkpoint.json`, `report.json` and `curves.csv`
/// into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let ds = Dataset::load(&cfg.dataset)?;
    let run = train_on(cfg, &ds)?;
    log::info!(
        "{}: test accuracy {:.4}, AUC {}",
        run.report.model_type,
        run.report.test.accuracy,
        run.report.test.auc.map_or("n/a".to_string(), |a| format!("{a:.4}"))
    );
    write_outputs(
        &cfg.output_dir,
        &[
            (CONFIG_FILE, Box::new(|p: &Path| write_json(p, cfg))),
            (CHECKPOINT_FILE, Box::new(|p: &Path| run.checkpoint.save(p))),
            (REPORT_FILE, Box::new(|p: &Path| write_json(p, &run.report))),
            (CURVES_FILE, Box::new(|p: &Path| export_curves(&run.report.training, p))),
        ],
    )?;
    Ok(run.report)
}

/// Every option of the given records, stacked record-major.
fn stacked_items(ds: &Dataset, idx: &[usize]) -> Result<Matrix> {
    let f = featurize(ds, idx, &FeatureSpec::default())?;
    if f.options.len() == 1 {
        return Ok(f.options.into_iter().next().expect("one option"));
    }
    let w = f.option_width();
    let mut data = Vec::with_capacity(f.len() * f.options.len() * w);
    for r in 0..f.len() {
        for o in &f.options {
            data.extend_from_slice(o.row(r));
        }
    }
    Matrix::from_vec(f.len() * f.options.len(), w, data)
}

pub struct PretrainedRun {
    pub checkpoint: Checkpoint,
    pub report: PretrainReport,
}

/// Fits an autoencoder on the items of the training partition (train and
/// validation records) and scores reconstruction on the test items.
pub fn pretrain_on(cfg: &PretrainConfig, ds: &Dataset) -> Result<PretrainedRun> {
    cfg.validate()?;
    ds.validate()?;
    let sp = split(ds, &cfg.split)?;
    let mut fit_idx: Vec<usize> = sp.train.iter().chain(&sp.validation).copied().collect();
    fit_idx.sort_unstable();
    let x = stacked_items(ds, &fit_idx)?;
    let xt = stacked_items(ds, &sp.test)?;
    let mut ae_cfg = cfg.autoencoder.clone();
    if ae_cfg.input_dim == 0 {
        ae_cfg.input_dim = x.cols();
    } else if ae_cfg.input_dim != x.cols() {
        return Err(Error::Validation(format!(
            "autoencoder.input_dim is {} but dataset items have {} columns",
            ae_cfg.input_dim,
            x.cols()
        )));
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut model = Autoencoder::new(ae_cfg.clone(), &mut rng)?;
    let mut training = train_ae(&mut model, &x, &cfg.train_config())?;
    let test_recon_loss = model.eval_recon_loss(&xt)?;
    let test_argmax_accuracy = argmax_accuracy(&xt, &model.reconstruct(&xt)?, &ds.schema)?;
    training.test = None;
    let inputs = input_hashes(&[&cfg.dataset])?;
    let features = FeatureSpec::default();
    let checkpoint = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        model: ModelState::Autoencoder(model),
        dataset: cfg.dataset.clone(),
        dataset_sha256: inputs[&cfg.dataset.display().to_string()].clone(),
        features,
        split: cfg.split,
        seed: cfg.seed,
        best_epoch: training.best_epoch,
        option_schema: Some(ds.schema.clone()),
        concat_schema: concat_schema(ds, &features)?,
    };
    let report = PretrainReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        name: cfg.name.clone(),
        dataset: cfg.dataset.clone(),
        inputs,
        seed: cfg.seed,
        n_train_items: x.rows(),
        n_test_items: xt.rows(),
        autoencoder: ae_cfg,
        training,
        test_recon_loss,
        test_argmax_accuracy,
    };
    Ok(PretrainedRun { checkpoint, report })
}

pub fn pretrain_ae(cfg: &PretrainConfig) -> Result<PretrainReport> {
    let ds = Dataset::load(&cfg.dataset)?;
    let run = pretrain_on(cfg, &ds)?;
    log::info!(
        "autoencoder: held-out recon loss {:.5}, argmax accuracy {:.4}",
        run.report.test_recon_loss,
        run.report.test_argmax_accuracy
    );
    write_outputs(
        &cfg.output_dir,
        &[
            (CONFIG_FILE, Box::new(|p: &Path| write_json(p, cfg))),
            (CHECKPOINT_FILE, Box::new(|p: &Path| run.checkpoint.save(p))),
            (REPORT_FILE, Box::new(|p: &Path| write_json(p, &run.report))),
            (CURVES_FILE, Box::new(|p: &Path| export_curves(&run.report.training, p))),
        ],
    )?;
    Ok(run.report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Validation,
    Test,
    All,
}

impl std::str::FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "validation" | "val" => Ok(Self::Validation),
            "test" => Ok(Self::Test),
            "all" => Ok(Self::All),
            other => Err(Error::Validation(format!("unknown split '{other}' (train|validation|test|all)"))),
        }
    }
}

fn split_indices_for(ck: &Checkpoint, ds: &Dataset, which: SplitName) -> Result<Vec<usize>> {
    if which == SplitName::All {
        return Ok((0..ds.len()).collect());
    }
    let sp = split(ds, &ck.split)?;
    Ok(match which {
        SplitName::Train => sp.train,
        SplitName::Validation => sp.validation,
        SplitName::Test => sp.test,
        SplitName::All => unreachable!(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_type: String,
    pub dataset_sha256: String,
    /// Whether the dataset is byte-identical to the one trained on.
    pub same_dataset: bool,
    pub split: SplitName,
    pub metrics: MetricSet,
    pub ids: Vec<String>,
    pub scores: Vec<f64>,
    pub targets: Vec<u8>,
}

/// Re-derives the checkpoint's split on `dataset` and scores one partition.
pub fn evaluate_checkpoint(ck: &Checkpoint, dataset: &Path, which: SplitName) -> Result<EvalReport> {
    let ds = Dataset::load(dataset)?;
    let sha = file_sha256(dataset)?;
    if sha != ck.dataset_sha256 {
        log::warn!("{} differs from the dataset the model was trained on", dataset.display());
    }
    let idx = split_indices_for(ck, &ds, which)?;
    if idx.is_empty() {
        return Err(Error::Validation(format!("the {which:?} partition is empty")));
    }
    let f = featurize(&ds, &idx, &ck.features)?;
    let scores = ck.model.scores(&f)?;
    Ok(EvalReport {
        model_type: ck.model.display_name().into(),
        same_dataset: sha == ck.dataset_sha256,
        dataset_sha256: sha,
        split: which,
        metrics: evaluate(&scores, &f.y)?,
        ids: idx.iter().map(|&i| ds.records[i].id.clone()).collect(),
        scores,
        targets: f.y.iter().map(|&v| v as u8).collect(),
    })
}

/// Reconstruction of one held-out item. Items are the options of the test
/// records, numbered record-major (record 0 option 0, record 0 option 1, ...).
pub fn reconstruct_sample(ck: &Checkpoint, dataset: &Path, index: usize) -> Result<Vec<ReconstructionRow>> {
    let ModelState::Autoencoder(ae) = &ck.model else {
        return Err(Error::Validation(format!("reconstruct needs an autoencoder checkpoint, got {}", ck.model.display_name())));
    };
    let ds = Dataset::load(dataset)?;
    let idx = split_indices_for(ck, &ds, SplitName::Test)?;
    let per = ds.num_options();
    let n_items = idx.len() * per;
    if index >= n_items {
        return Err(Error::Validation(format!("sample {index} out of range; {n_items} held-out items")));
    }
    let x = stacked_items(&ds, &[idx[index / per]])?;
    reconstruction_dump(ae, x.row(index % per), &ds.schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::synth::random_partworths;
    use crate::dataio::{synth_linear, SplitSpec};
    use crate::schema::AttributeSchema;

    fn linear_ds(dir: &Path) -> PathBuf {
        let s = AttributeSchema::uniform(&[3, 3, 2]).unwrap();
        let w = random_partworths(&s, 1.0, &mut seeded_rng(5));
        let ds = synth_linear(&w, 600, 1);
        let p = dir.join("ds.json");
        ds.save(&p).unwrap();
        p
    }

    fn cfg(dir: &Path, model: ModelSpec) -> ExperimentConfig {
        ExperimentConfig {
            name: "t".into(),
            dataset: linear_ds(dir),
            output_dir: dir.join("out"),
            model,
            seed: 1,
            max_epochs: 5,
            batch_size: 32,
            learning_rate: 1e-2,
            optimizer: Default::default(),
            split: SplitSpec { seed: 2, ..Default::default() },
            features: FeatureSpec::default(),
        }
    }

    #[test]
    fn conjoint_run_writes_all_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(dir.path(), ModelSpec::Conjoint { lambda: 1e-4, max_iter: 50, pairing: None });
        let r = run_experiment(&c).unwrap();
        for f in [CONFIG_FILE, CHECKPOINT_FILE, REPORT_FILE, CURVES_FILE] {
            assert!(c.output_dir.join(f).exists(), "{f}");
        }
        assert_eq!(r.split, SplitSizes { train: 378, validation: 42, test: 180 });
        assert_eq!(r.test_scores.len(), 180);
        let hits = r.test_scores.iter().zip(&r.test_targets).filter(|(s, t)| label(**s) == **t).count();
        assert_eq!(hits as f64 / 180.0, r.test.accuracy);
        assert_eq!(r.training.selection, Selection::Final);
        let back = ExperimentReport::load(&c.output_dir.join(REPORT_FILE)).unwrap();
        assert_eq!(back, r);
        let ck = Checkpoint::load(&c.output_dir.join(CHECKPOINT_FILE)).unwrap();
        let ev = evaluate_checkpoint(&ck, &c.dataset, SplitName::Test).unwrap();
        assert!(ev.same_dataset);
        assert_eq!(ev.metrics, r.test);
        assert_eq!(ck.partworths().unwrap().schema.level_counts(), vec![3, 3, 2]);
    }

    #[test]
    fn residual_run_is_repeatable() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(dir.path(), ModelSpec::Residual { config: Default::default() });
        let ds = Dataset::load(&c.dataset).unwrap();
        let a = train_on(&c, &ds).unwrap();
        let b = train_on(&c, &ds).unwrap();
        assert_eq!(a.checkpoint.to_json().unwrap(), b.checkpoint.to_json().unwrap());
        assert_eq!(a.report, b.report);
        assert_eq!(a.report.training.epochs.len(), 5);
    }

    #[test]
    fn failed_run_leaves_no_output_dir() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path(), ModelSpec::Ssl { encoder: dir.path().join("missing.json"), config: Default::default() });
        c.output_dir = dir.path().join("never");
        assert!(run_experiment(&c).is_err());
        assert!(!c.output_dir.exists());
    }

    #[test]
    fn write_failure_removes_partial_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o");
        let res = write_outputs(
            &out,
            &[
                ("a.txt", Box::new(|p: &Path| std::fs::write(p, "x").map_err(|e| Error::io(p, e)))),
                ("b.txt", Box::new(|_: &Path| Err(Error::Numeric("boom".into())))),
            ],
        );
        assert!(res.is_err());
        assert!(!out.exists());
    }

    #[test]
    fn pretrain_then_ssl_then_reconstruct() {
        let dir = tempfile::tempdir().unwrap();
        let base = cfg(dir.path(), ModelSpec::Conjoint { lambda: 1e-4, max_iter: 5, pairing: None });
        let pc = PretrainConfig {
            name: "ae".into(),
            dataset: base.dataset.clone(),
            output_dir: dir.path().join("ae"),
            autoencoder: AeConfig { hidden_dims: vec![8], latent_dim: 2, ..Default::default() },
            seed: 3,
            max_epochs: 3,
            batch_size: 32,
            learning_rate: 1e-2,
            val_fraction: 0.1,
            split: base.split,
        };
        let pr = pretrain_ae(&pc).unwrap();
        assert_eq!(pr.n_test_items, 360);
        assert_eq!(pr.autoencoder.input_dim, 8);
        let ae_ck = pc.output_dir.join(CHECKPOINT_FILE);
        let mut c = base.clone();
        c.model = ModelSpec::Ssl { encoder: ae_ck.clone(), config: Default::default() };
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.model_type, "SSL ConjointNet");
        assert_eq!(r.inputs.len(), 2);

        let ck = Checkpoint::load(&ae_ck).unwrap();
        let rows = reconstruct_sample(&ck, &c.dataset, 3).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(reconstruct_sample(&ck, &c.dataset, 360).is_err());
        let ssl_ck = Checkpoint::load(&c.output_dir.join(CHECKPOINT_FILE)).unwrap();
        assert!(matches!(ssl_ck.partworths(), Err(Error::Validation(_))));
    }
}
