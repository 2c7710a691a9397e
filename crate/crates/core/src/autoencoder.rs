//! Plain and variational autoencoders over one-hot items.
//!
//! Encoder: `[Dense -> BatchNorm -> ReLU]` per hidden width, then a Dense
//! projection to the latent code (to `2 * latent_dim` for the VAE, split into
//! `mu` and `logvar`). Decoder: the hidden widths in reverse with
//! `Dense -> ReLU`, then `Dense -> Sigmoid` back to the input width.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{
    kl_standard_normal, recon_loss, seeded_rng, HasParams, LayerSpec, Matrix, Mode, Network, Optimizer, Parameter,
    ReconLossKind, Rng,
};
use crate::schema::{argmax, AttributeSchema};
use crate::train::{check_loss, check_max_epochs, minibatches, BestTracker, EpochRecord, Selection, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Ae,
    Vae,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AeConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub latent_dim: usize,
    pub variant: Variant,
    pub recon_loss: ReconLossKind,
    /// Weight of the KL term (VAE only).
    pub kl_weight: f64,
    pub batch_norm: bool,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self {
            input_dim: 0,
            hidden_dims: vec![128],
            latent_dim: 2,
            variant: Variant::Ae,
            recon_loss: ReconLossKind::Bce,
            kl_weight: 1.0,
            batch_norm: true,
        }
    }
}

impl AeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.latent_dim >= self.input_dim {
            return Err(Error::Validation(format!(
                "latent_dim must be in 1..{}, got {}",
                self.input_dim, self.latent_dim
            )));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::Validation("hidden widths must be positive".into()));
        }
        if !(self.kl_weight >= 0.0 && self.kl_weight.is_finite()) {
            return Err(Error::Validation(format!("kl_weight must be >= 0, got {}", self.kl_weight)));
        }
        Ok(())
    }

    fn encoder_specs(&self) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        let mut d = self.input_dim;
        for &h in &self.hidden_dims {
            specs.push(LayerSpec::dense(d, h));
            if self.batch_norm {
                specs.push(LayerSpec::batch_norm(h));
            }
            specs.push(LayerSpec::relu(h));
            d = h;
        }
        let out = match self.variant {
            Variant::Ae => self.latent_dim,
            Variant::Vae => 2 * self.latent_dim,
        };
        specs.push(LayerSpec::dense(d, out));
        specs
    }

    fn decoder_specs(&self) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        let mut d = self.latent_dim;
        for &h in self.hidden_dims.iter().rev() {
            specs.push(LayerSpec::dense(d, h));
            specs.push(LayerSpec::relu(h));
            d = h;
        }
        specs.push(LayerSpec::dense(d, self.input_dim));
        specs.push(LayerSpec::sigmoid(self.input_dim));
        specs
    }
}

/// Latent codes for a batch. For the plain AE `mu` and `logvar` are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    pub z: Matrix,
    pub mu: Option<Matrix>,
    pub logvar: Option<Matrix>,
}

/// The encoding half on its own, used as a feature extractor. A VAE encoder
/// yields its mean.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Encoder {
    pub net: Network,
    pub variant: Variant,
    pub latent_dim: usize,
}

impl Encoder {
    pub fn input_dim(&self) -> usize {
        self.net.in_dim()
    }

    fn head(&self, raw: Matrix) -> Matrix {
        match self.variant {
            Variant::Ae => raw,
            Variant::Vae => raw.slice_cols(0, self.latent_dim),
        }
    }

    pub fn forward(&mut self, x: &Matrix, mode: Mode) -> Result<Matrix> {
        let raw = self.net.forward(x, mode)?;
        Ok(self.head(raw))
    }

    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.head(self.net.infer(x)?))
    }

    pub fn backward(&mut self, dz: &Matrix) -> Result<Matrix> {
        let g = match self.variant {
            Variant::Ae => dz.clone(),
            Variant::Vae => Matrix::hcat(&[dz, &Matrix::zeros(dz.rows(), self.latent_dim)])?,
        };
        self.net.backward(&g)
    }
}

impl HasParams for Encoder {
    fn params(&self) -> Vec<&Parameter> {
        self.net.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.net.params_mut()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Autoencoder {
    pub config: AeConfig,
    pub encoder: Network,
    pub decoder: Network,
}

impl HasParams for Autoencoder {
    fn params(&self) -> Vec<&Parameter> {
        let mut p = self.encoder.params();
        p.extend(self.decoder.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.encoder.params_mut();
        p.extend(self.decoder.params_mut());
        p
    }
}

/// Objective components of one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeLoss {
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
}

impl Autoencoder {
    pub fn new(config: AeConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let encoder = Network::from_specs(&config.encoder_specs(), rng)?;
        let decoder = Network::from_specs(&config.decoder_specs(), rng)?;
        Ok(Self { config, encoder, decoder })
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    fn split(&self, raw: Matrix) -> LatentCode {
        match self.config.variant {
            Variant::Ae => LatentCode { z: raw, mu: None, logvar: None },
            Variant::Vae => {
                let l = self.config.latent_dim;
                let mu = raw.slice_cols(0, l);
                let logvar = raw.slice_cols(l, l);
                LatentCode { z: mu.clone(), mu: Some(mu), logvar: Some(logvar) }
            }
        }
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.config.input_dim {
            return Err(Error::LayerShape { layer: 0, expected: self.config.input_dim, got: x.cols() });
        }
        Ok(())
    }

    /// Encodes a batch. Train-mode VAE encoding samples
    /// `z = mu + exp(logvar / 2) * eps` with `eps` drawn from `rng`.
    pub fn encode(&mut self, x: &Matrix, mode: Mode, rng: &mut Rng) -> Result<LatentCode> {
        self.check_input(x)?;
        let raw = self.encoder.forward(x, mode)?;
        let mut code = self.split(raw);
        if mode == Mode::Train && self.config.variant == Variant::Vae {
            let eps = standard_normal(code.z.rows(), code.z.cols(), rng);
            code.z = reparameterize(code.mu.as_ref().expect("vae"), code.logvar.as_ref().expect("vae"), &eps)?;
        }
        Ok(code)
    }

    /// Deterministic encoding; the VAE returns `z = mu`.
    pub fn encode_infer(&self, x: &Matrix) -> Result<LatentCode> {
        self.check_input(x)?;
        Ok(self.split(self.encoder.infer(x)?))
    }

    pub fn decode(&mut self, z: &Matrix, mode: Mode) -> Result<Matrix> {
        self.check_latent(z)?;
        self.decoder.forward(z, mode)
    }

    pub fn decode_infer(&self, z: &Matrix) -> Result<Matrix> {
        self.check_latent(z)?;
        self.decoder.infer(z)
    }

    fn check_latent(&self, z: &Matrix) -> Result<()> {
        if z.cols() != self.config.latent_dim {
            return Err(Error::Shape(format!(
                "latent width {} does not match latent_dim {}",
                z.cols(),
                self.config.latent_dim
            )));
        }
        Ok(())
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        let code = self.encode_infer(x)?;
        self.decode_infer(&code.z)
    }

    /// Train-mode forward and backward of the full objective on one batch.
    /// `eps` is the VAE noise (ignored for the plain AE); gradients are
    /// accumulated into the parameters.
    pub fn loss_and_backward(&mut self, x: &Matrix, eps: Option<&Matrix>) -> Result<AeLoss> {
        self.check_input(x)?;
        let raw = self.encoder.forward(x, Mode::Train)?;
        let l = self.config.latent_dim;
        match self.config.variant {
            Variant::Ae => {
                let xr = self.decoder.forward(&raw, Mode::Train)?;
                let (recon, g) = recon_loss(x, &xr, self.config.recon_loss)?;
                let dz = self.decoder.backward(&g)?;
                self.encoder.backward(&dz)?;
                Ok(AeLoss { recon, kl: 0.0, total: recon })
            }
            Variant::Vae => {
                let mu = raw.slice_cols(0, l);
                let logvar = raw.slice_cols(l, l);
                let eps = eps.ok_or_else(|| Error::Validation("VAE objective needs noise".into()))?;
                let z = reparameterize(&mu, &logvar, eps)?;
                let xr = self.decoder.forward(&z, Mode::Train)?;
                let (recon, g) = recon_loss(x, &xr, self.config.recon_loss)?;
                let (kl, dmu_kl, dlv_kl) = kl_standard_normal(&mu, &logvar)?;
                let kw = self.config.kl_weight;
                let dz = self.decoder.backward(&g)?;
                // dz/dmu = 1, dz/dlogvar = eps * exp(logvar / 2) / 2
                let mut dmu = dz.clone();
                let mut dlv = dz.zip_map(&logvar, |d, lv| d * 0.5 * (0.5 * lv).exp())?;
                dlv = dlv.zip_map(eps, |a, e| a * e)?;
                for (a, b) in dmu.data_mut().iter_mut().zip(dmu_kl.data()) {
                    *a += kw * b;
                }
                for (a, b) in dlv.data_mut().iter_mut().zip(dlv_kl.data()) {
                    *a += kw * b;
                }
                self.encoder.backward(&Matrix::hcat(&[&dmu, &dlv])?)?;
                Ok(AeLoss { recon, kl, total: recon + kw * kl })
            }
        }
    }

    /// Standalone encoder for downstream models.
    pub fn encoder(&self) -> Encoder {
        Encoder { net: self.encoder.clone(), variant: self.config.variant, latent_dim: self.config.latent_dim }
    }

    /// Mean reconstruction loss in inference mode.
    pub fn eval_recon_loss(&self, x: &Matrix) -> Result<f64> {
        Ok(recon_loss(x, &self.reconstruct(x)?, self.config.recon_loss)?.0)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Autoencoder = serde_json::from_str(&text)?;
        m.config.validate()?;
        Ok(m)
    }
}

pub fn standard_normal(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

/// `mu + exp(logvar / 2) * eps`.
pub fn reparameterize(mu: &Matrix, logvar: &Matrix, eps: &Matrix) -> Result<Matrix> {
    let s = logvar.map(|lv| (0.5 * lv).exp()).zip_map(eps, |s, e| s * e)?;
    mu.zip_map(&s, |m, v| m + v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AeTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for AeTrainConfig {
    fn default() -> Self {
        Self { epochs: 50, batch_size: 64, learning_rate: 1e-3, val_fraction: 0.1, seed: 0 }
    }
}

/// Fits the autoencoder to unlabeled items. A `val_fraction` share of the
/// rows is held out; the parameters with the lowest validation
/// reconstruction loss are kept.
pub fn train_ae(model: &mut Autoencoder, data: &Matrix, cfg: &AeTrainConfig) -> Result<TrainReport> {
    check_max_epochs(cfg.epochs)?;
    if data.rows() == 0 {
        return Err(Error::Validation("cannot train an autoencoder on empty data".into()));
    }
    model.check_input(data)?;
    let mut rng = seeded_rng(cfg.seed);
    let mut idx: Vec<usize> = (0..data.rows()).collect();
    rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut rng);
    let n_val = (cfg.val_fraction * data.rows() as f64).floor() as usize;
    let (val_idx, train_idx) = idx.split_at(n_val);
    let train = data.select_rows(train_idx);
    let val = (n_val > 0).then(|| data.select_rows(val_idx));

    let name = match model.config.variant {
        Variant::Ae => "autoencoder",
        Variant::Vae => "vae",
    };
    let mut report = TrainReport::new(name, Selection::ValLoss);
    if val.is_none() {
        report.warnings.push("no validation rows; selecting on training loss".into());
    }
    let mut opt = Optimizer::adam(cfg.learning_rate)?;
    let mut best = BestTracker::new(Selection::ValLoss);

    for epoch in 1..=cfg.epochs {
        let mut total = 0.0;
        for batch in minibatches(train.rows(), cfg.batch_size, &mut rng) {
            let xb = train.select_rows(&batch);
            let eps = (model.config.variant == Variant::Vae)
                .then(|| standard_normal(xb.rows(), model.config.latent_dim, &mut rng));
            let loss = model.loss_and_backward(&xb, eps.as_ref())?;
            check_loss(loss.total, "autoencoder", epoch)?;
            total += loss.total * xb.rows() as f64;
            opt.step(&mut model.params_mut())?;
        }
        let train_loss = total / train.rows() as f64;
        let val_loss = match &val {
            Some(v) => model.eval_recon_loss(v)?,
            None => model.eval_recon_loss(&train)?,
        };
        check_loss(val_loss, "autoencoder validation", epoch)?;
        let rec = EpochRecord { epoch, train_loss, val_loss: Some(val_loss), train_acc: None, val_acc: None };
        best.offer(&rec, &*model);
        report.epochs.push(rec);
    }
    model.clear_cache();
    if let Some((epoch, m)) = best.into_best() {
        *model = m;
        report.best_epoch = epoch;
    }
    model.clear_cache();
    report.finish();
    Ok(report)
}

impl Autoencoder {
    fn clear_cache(&mut self) {
        self.encoder.clear_cache();
        self.decoder.clear_cache();
    }
}

/// Share of (row, attribute) blocks whose reconstructed argmax level equals
/// the original level.
pub fn argmax_accuracy(x: &Matrix, x_recon: &Matrix, schema: &AttributeSchema) -> Result<f64> {
    x.check_same_shape(x_recon, "argmax_accuracy")?;
    if x.cols() != schema.width() {
        return Err(Error::Schema(format!("width {} does not match schema width {}", x.cols(), schema.width())));
    }
    let offsets = schema.offsets();
    let counts = schema.level_counts();
    let mut hit = 0usize;
    for r in 0..x.rows() {
        for (&o, &k) in offsets.iter().zip(&counts) {
            if argmax(&x.row(r)[o..o + k]) == argmax(&x_recon.row(r)[o..o + k]) {
                hit += 1;
            }
        }
    }
    Ok(hit as f64 / (x.rows() * counts.len()).max(1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRow {
    pub dim_index: usize,
    pub attribute: String,
    pub level: String,
    pub original: f64,
    pub reconstructed: f64,
}

/// Per-dimension original vs. reconstructed values for one item.
pub fn reconstruction_dump(model: &Autoencoder, x: &[f64], schema: &AttributeSchema) -> Result<Vec<ReconstructionRow>> {
    if x.len() != schema.width() {
        return Err(Error::Schema(format!("item width {} does not match schema width {}", x.len(), schema.width())));
    }
    let xm = Matrix::from_vec(1, x.len(), x.to_vec())?;
    let xr = model.reconstruct(&xm)?;
    Ok(schema
        .column_labels()
        .into_iter()
        .enumerate()
        .map(|(d, (a, l))| ReconstructionRow {
            dim_index: d,
            attribute: schema.attributes[a].name.clone(),
            level: schema.attributes[a].levels[l].clone(),
            original: x[d],
            reconstructed: xr.get(0, d),
        })
        .collect())
}

pub fn write_reconstruction_csv(path: &Path, rows: &[ReconstructionRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::grad_check;

    fn random_one_hot(schema: &AttributeSchema, n: usize, rng: &mut Rng) -> Matrix {
        let rows: Vec<Vec<usize>> = (0..n).map(|_| crate::dataio::synth::random_levels(schema, rng)).collect();
        schema.encode_batch(rows.iter().map(Vec::as_slice)).unwrap()
    }

    fn cfg(input_dim: usize, variant: Variant) -> AeConfig {
        AeConfig { input_dim, hidden_dims: vec![8], latent_dim: 2, variant, ..Default::default() }
    }

    #[test]
    fn shapes_and_ranges() {
        let mut rng = seeded_rng(1);
        let schema = AttributeSchema::uniform(&[6; 46]).unwrap();
        assert_eq!(schema.width(), 276);
        let mut ae = Autoencoder::new(AeConfig { input_dim: 276, ..Default::default() }, &mut rng).unwrap();
        let x = random_one_hot(&schema, 5, &mut rng);
        let code = ae.encode(&x, Mode::Train, &mut rng).unwrap();
        assert_eq!(code.z.shape(), (5, 2));
        let xr = ae.decode(&code.z, Mode::Infer).unwrap();
        assert_eq!(xr.shape(), (5, 276));
        assert!(xr.data().iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(ae.decode_infer(&Matrix::zeros(1, 3)).is_err());
        assert!(ae.encode_infer(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn infer_encode_is_deterministic() {
        let mut rng = seeded_rng(2);
        let mut ae = Autoencoder::new(cfg(12, Variant::Vae), &mut rng).unwrap();
        let x = random_one_hot(&AttributeSchema::uniform(&[3, 3, 2, 4]).unwrap(), 4, &mut rng);
        ae.encode(&x, Mode::Train, &mut rng).unwrap();
        let a = ae.encode_infer(&x).unwrap();
        let b = ae.encode_infer(&x).unwrap();
        assert_eq!(a, b);
        assert_eq!(Some(&a.z), a.mu.as_ref());
    }

    #[test]
    fn vanishing_variance_gives_mu() {
        let mu = Matrix::from_vec(1, 2, vec![0.3, -1.2]).unwrap();
        let lv = Matrix::filled(1, 2, -30.0);
        let eps = Matrix::from_vec(1, 2, vec![2.5, -3.0]).unwrap();
        let z = reparameterize(&mu, &lv, &eps).unwrap();
        for (a, b) in z.data().iter().zip(mu.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn vae_sampling_reproducible() {
        let mut r0 = seeded_rng(3);
        let mut ae = Autoencoder::new(cfg(12, Variant::Vae), &mut r0).unwrap();
        let x = random_one_hot(&AttributeSchema::uniform(&[3, 3, 2, 4]).unwrap(), 4, &mut r0);
        let mut ae2 = ae.clone();
        let a = ae.encode(&x, Mode::Train, &mut seeded_rng(9)).unwrap();
        let b = ae2.encode(&x, Mode::Train, &mut seeded_rng(9)).unwrap();
        assert_eq!(a.z, b.z);
    }

    fn check(variant: Variant, batch_norm: bool, kind: ReconLossKind, tol: f64) {
        let mut rng = seeded_rng(4);
        let schema = AttributeSchema::uniform(&[3, 4, 2, 3]).unwrap();
        let mut ae = Autoencoder::new(
            AeConfig { batch_norm, recon_loss: kind, ..cfg(12, variant) },
            &mut rng,
        )
        .unwrap();
        let x = random_one_hot(&schema, 6, &mut rng);
        let eps = standard_normal(6, 2, &mut rng);
        let rep = grad_check(&mut ae, |m| Ok(m.loss_and_backward(&x, Some(&eps))?.total)).unwrap();
        assert!(rep.max_relative_error < tol, "{variant:?} bn={batch_norm}: {rep:?}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        check(Variant::Ae, false, ReconLossKind::Bce, 1e-4);
        check(Variant::Vae, false, ReconLossKind::Bce, 1e-4);
        check(Variant::Ae, true, ReconLossKind::L2, 1e-3);
        check(Variant::Vae, true, ReconLossKind::Bce, 1e-3);
    }

    #[test]
    fn single_item_dataset_is_memorized() {
        let mut rng = seeded_rng(5);
        let schema = AttributeSchema::uniform(&[3, 4, 2]).unwrap();
        let item = schema.encode_levels(&[2, 1, 0]).unwrap();
        let rows: Vec<Vec<f64>> = (0..64).map(|_| item.as_slice().to_vec()).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let mut ae = Autoencoder::new(
            AeConfig { batch_norm: false, recon_loss: ReconLossKind::L2, ..cfg(9, Variant::Ae) },
            &mut rng,
        )
        .unwrap();
        let rep = train_ae(&mut ae, &x, &AeTrainConfig { epochs: 100, learning_rate: 1e-2, batch_size: 16, ..Default::default() }).unwrap();
        assert!(rep.best().unwrap().val_loss.unwrap() < 1e-3, "{:?}", rep.best());
        let dump = reconstruction_dump(&ae, item.as_slice(), &schema).unwrap();
        assert_eq!(dump.len(), 9);
        assert!(dump.iter().all(|r| (r.original - r.reconstructed).abs() < 0.05));
        assert_eq!(argmax_accuracy(&x, &ae.reconstruct(&x).unwrap(), &schema).unwrap(), 1.0);
    }

    #[test]
    fn untrained_dump_is_well_formed() {
        let mut rng = seeded_rng(6);
        let schema = AttributeSchema::uniform(&[3, 4, 2]).unwrap();
        let ae = Autoencoder::new(cfg(9, Variant::Ae), &mut rng).unwrap();
        let item = schema.encode_levels(&[0, 3, 1]).unwrap();
        let dump = reconstruction_dump(&ae, item.as_slice(), &schema).unwrap();
        assert_eq!(dump.len(), schema.width());
        assert!(dump.iter().all(|r| (r.reconstructed - 0.5).abs() < 0.4));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_reconstruction_csv(&p, &dump).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("dim_index,attribute,level,original,reconstructed"));
        assert_eq!(text.lines().count(), 10);
    }

    #[test]
    fn decoder_mirrors_encoder() {
        let mut rng = seeded_rng(7);
        let ae = Autoencoder::new(AeConfig { input_dim: 40, hidden_dims: vec![32, 16, 8], ..Default::default() }, &mut rng).unwrap();
        let dense_widths = |n: &Network| {
            n.specs().iter().filter(|s| s.kind == crate::numcore::LayerKind::Dense).map(|s| (s.in_dim, s.out_dim)).collect::<Vec<_>>()
        };
        let enc = dense_widths(&ae.encoder);
        let mut dec = dense_widths(&ae.decoder);
        dec.reverse();
        let flipped: Vec<_> = dec.into_iter().map(|(a, b)| (b, a)).collect();
        assert_eq!(enc, flipped);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = seeded_rng(8);
        let ae = Autoencoder::new(cfg(12, Variant::Vae), &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ae.json");
        ae.save(&p).unwrap();
        let back = Autoencoder::load(&p).unwrap();
        let x = random_one_hot(&AttributeSchema::uniform(&[3, 3, 2, 4]).unwrap(), 3, &mut rng);
        assert_eq!(ae.reconstruct(&x).unwrap(), back.reconstruct(&x).unwrap());
    }
}
