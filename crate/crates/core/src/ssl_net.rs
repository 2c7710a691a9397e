//! Choice classifier on top of a pretrained encoder: every option is encoded
//! separately, the latent codes are concatenated in option order, and an MLP
//! with a sigmoid head predicts `P(y = 1)`.

use serde::{Deserialize, Serialize};

use crate::autoencoder::Encoder;
use crate::dataio::Features;
use crate::error::{Error, Result};
use crate::harness::metrics::label;
use crate::numcore::{bce_loss, HasParams, LayerSpec, Matrix, Mode, Network, Parameter, Rng};
use crate::train::{fit_classifier, BinaryClassifier, ClassifierTrainConfig, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderMode {
    /// Encoder parameters never change.
    #[default]
    Frozen,
    /// Encoder trained jointly at a reduced learning rate.
    FineTune,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SslConfig {
    pub classifier_hidden_dims: Vec<usize>,
    pub encoder_mode: EncoderMode,
    pub n_options: usize,
    /// Expected latent width; checked against the encoder when set.
    pub latent_dim: Option<usize>,
    /// Encoder learning-rate multiplier in fine-tune mode.
    pub encoder_lr_scale: f64,
    /// Train on every two-option record twice, once with the options
    /// swapped and the label flipped.
    pub swap_augmentation: bool,
}

impl Default for SslConfig {
    fn default() -> Self {
        Self {
            classifier_hidden_dims: vec![64, 32],
            encoder_mode: EncoderMode::Frozen,
            n_options: 2,
            latent_dim: None,
            encoder_lr_scale: 0.1,
            swap_augmentation: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoicePrediction {
    pub score: f64,
    pub label: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SslNet {
    pub config: SslConfig,
    pub encoder: Encoder,
    pub classifier: Network,
}

impl SslNet {
    pub fn build(config: SslConfig, mut encoder: Encoder, rng: &mut Rng) -> Result<Self> {
        if config.n_options == 0 {
            return Err(Error::Validation("n_options must be at least 1".into()));
        }
        if let Some(l) = config.latent_dim {
            if l != encoder.latent_dim {
                return Err(Error::Validation(format!(
                    "encoder latent width {} does not match configured latent_dim {l}",
                    encoder.latent_dim
                )));
            }
        }
        if config.classifier_hidden_dims.contains(&0) {
            return Err(Error::Validation("classifier widths must be positive".into()));
        }
        let mut specs = Vec::new();
        let mut d = config.n_options * encoder.latent_dim;
        for &h in &config.classifier_hidden_dims {
            specs.push(LayerSpec::dense(d, h));
            specs.push(LayerSpec::relu(h));
            d = h;
        }
        specs.push(LayerSpec::dense(d, 1));
        specs.push(LayerSpec::sigmoid(1));
        let classifier = Network::from_specs(&specs, rng)?;
        match config.encoder_mode {
            EncoderMode::Frozen => encoder.net.set_frozen(true),
            EncoderMode::FineTune => {
                encoder.net.set_frozen(false);
                encoder.net.set_lr_scale(config.encoder_lr_scale);
            }
        }
        Ok(Self { config, encoder, classifier })
    }

    pub fn classifier_input_dim(&self) -> usize {
        self.classifier.in_dim()
    }

    fn check(&self, options: &[Matrix]) -> Result<usize> {
        if options.len() != self.config.n_options {
            return Err(Error::Validation(format!(
                "{} options given, model expects {}",
                options.len(),
                self.config.n_options
            )));
        }
        let rows = options[0].rows();
        for o in options {
            if o.cols() != self.encoder.input_dim() {
                return Err(Error::LayerShape { layer: 0, expected: self.encoder.input_dim(), got: o.cols() });
            }
            if o.rows() != rows {
                return Err(Error::Shape("options have different batch sizes".into()));
            }
        }
        Ok(rows)
    }

    /// Stacked latents `(n_options * B, latent)` rearranged to `(B, n_options * latent)`.
    fn side_by_side(z: &Matrix, n: usize, rows: usize) -> Result<Matrix> {
        let blocks: Vec<Matrix> = (0..n).map(|o| z.slice_rows(o * rows, rows)).collect();
        let refs: Vec<&Matrix> = blocks.iter().collect();
        Matrix::hcat(&refs)
    }

    fn stacked(options: &[Matrix]) -> Result<Matrix> {
        let refs: Vec<&Matrix> = options.iter().collect();
        Matrix::vcat(&refs)
    }

    fn encoder_mode(&self) -> Mode {
        match self.config.encoder_mode {
            EncoderMode::Frozen => Mode::Infer,
            EncoderMode::FineTune => Mode::Train,
        }
    }

    /// Train-mode forward, BCE loss and backward on one batch.
    pub fn loss_and_backward(&mut self, options: &[Matrix], y: &[f64]) -> Result<f64> {
        let rows = self.check(options)?;
        let n = self.config.n_options;
        let z = self.encoder.forward(&Self::stacked(options)?, self.encoder_mode())?;
        let h = Self::side_by_side(&z, n, rows)?;
        let p = self.classifier.forward(&h, Mode::Train)?;
        let target = Matrix::from_vec(rows, 1, y.to_vec())?;
        let (loss, dp) = bce_loss(&p, &target)?;
        let dh = self.classifier.backward(&dp)?;
        if self.config.encoder_mode == EncoderMode::FineTune {
            let l = self.encoder.latent_dim;
            let parts: Vec<Matrix> = (0..n).map(|o| dh.slice_cols(o * l, l)).collect();
            let refs: Vec<&Matrix> = parts.iter().collect();
            self.encoder.backward(&Matrix::vcat(&refs)?)?;
        }
        Ok(loss)
    }

    /// Inference-mode `P(y = 1)` per record.
    pub fn predict_scores(&self, options: &[Matrix]) -> Result<Vec<f64>> {
        let rows = self.check(options)?;
        let z = self.encoder.infer(&Self::stacked(options)?)?;
        let h = Self::side_by_side(&z, self.config.n_options, rows)?;
        Ok(self.classifier.infer(&h)?.into_vec())
    }

    pub fn predict(&self, options: &[Matrix]) -> Result<Vec<ChoicePrediction>> {
        Ok(self
            .predict_scores(options)?
            .into_iter()
            .map(|score| ChoicePrediction { score, label: label(score) })
            .collect())
    }
}

impl HasParams for SslNet {
    fn params(&self) -> Vec<&Parameter> {
        let mut p = self.encoder.params();
        p.extend(self.classifier.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.encoder.params_mut();
        p.extend(self.classifier.params_mut());
        p
    }
}

impl BinaryClassifier for SslNet {
    fn batch_loss(&mut self, batch: &Features) -> Result<f64> {
        self.loss_and_backward(&batch.options, &batch.y)
    }

    fn scores(&self, data: &Features) -> Result<Vec<f64>> {
        self.predict_scores(&data.options)
    }

    fn clear_cache(&mut self) {
        self.encoder.net.clear_cache();
        self.classifier.clear_cache();
    }
}

/// Two-option records followed by their mirrored copies.
pub fn with_swapped(f: &Features) -> Result<Features> {
    if f.options.len() != 2 {
        return Err(Error::Validation("option swapping needs exactly two options".into()));
    }
    Ok(Features {
        options: vec![
            Matrix::vcat(&[&f.options[0], &f.options[1]])?,
            Matrix::vcat(&[&f.options[1], &f.options[0]])?,
        ],
        y: f.y.iter().copied().chain(f.y.iter().map(|v| 1.0 - v)).collect(),
    })
}

pub fn train_ssl(
    model: &mut SslNet,
    train: &Features,
    val: Option<&Features>,
    cfg: &ClassifierTrainConfig,
) -> Result<TrainReport> {
    if model.config.swap_augmentation {
        let aug = with_swapped(train)?;
        fit_classifier(model, "ssl_conjointnet", &aug, val, cfg)
    } else {
        fit_classifier(model, "ssl_conjointnet", train, val, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::{AeConfig, Autoencoder, Variant};
    use crate::numcore::{grad_check, seeded_rng};
    use crate::schema::AttributeSchema;
    use crate::train::accuracy_of;
    use rand::Rng as _;

    fn encoder(input_dim: usize, latent: usize, variant: Variant, rng: &mut Rng) -> Encoder {
        Autoencoder::new(AeConfig { input_dim, hidden_dims: vec![8], latent_dim: latent, variant, ..Default::default() }, rng)
            .unwrap()
            .encoder()
    }

    fn one_hot(schema: &AttributeSchema, n: usize, rng: &mut Rng) -> Matrix {
        let rows: Vec<Vec<usize>> = (0..n).map(|_| crate::dataio::synth::random_levels(schema, rng)).collect();
        schema.encode_batch(rows.iter().map(Vec::as_slice)).unwrap()
    }

    #[test]
    fn classifier_width_follows_options() {
        let mut rng = seeded_rng(1);
        let enc = encoder(10, 2, Variant::Ae, &mut rng);
        let m = SslNet::build(SslConfig::default(), enc.clone(), &mut rng).unwrap();
        assert_eq!(m.classifier_input_dim(), 4);
        let m3 = SslNet::build(SslConfig { n_options: 3, ..Default::default() }, enc.clone(), &mut rng).unwrap();
        assert_eq!(m3.classifier_input_dim(), 6);
        assert!(m.params()[..enc.params().len()].iter().all(|p| p.frozen));
        assert!(SslNet::build(SslConfig { latent_dim: Some(3), ..Default::default() }, enc, &mut rng).is_err());
    }

    #[test]
    fn fine_tune_gradients_match_finite_differences() {
        let mut rng = seeded_rng(2);
        let schema = AttributeSchema::uniform(&[3, 3, 2, 2]).unwrap();
        for variant in [Variant::Ae, Variant::Vae] {
            let enc = encoder(10, 2, variant, &mut rng);
            let cfg = SslConfig { encoder_mode: EncoderMode::FineTune, classifier_hidden_dims: vec![6, 4], ..Default::default() };
            let mut m = SslNet::build(cfg, enc, &mut rng).unwrap();
            let a = one_hot(&schema, 6, &mut rng);
            let b = one_hot(&schema, 6, &mut rng);
            let y: Vec<f64> = (0..6).map(|i| (i % 2) as f64).collect();
            let rep = grad_check(&mut m, |m| m.loss_and_backward(&[a.clone(), b.clone()], &y)).unwrap();
            assert!(rep.max_relative_error < 1e-3, "{variant:?}: {rep:?}");
        }
    }

    fn separable(n: usize, rng: &mut Rng) -> Features {
        // latent difference along a fixed direction decides the label
        let schema = AttributeSchema::uniform(&[3, 3, 2, 2]).unwrap();
        let a = one_hot(&schema, n, rng);
        let b = one_hot(&schema, n, rng);
        Features { options: vec![a, b], y: Vec::new() }
    }

    #[test]
    fn frozen_encoder_is_untouched_and_separable_codes_are_learned() {
        let mut rng = seeded_rng(3);
        let enc = encoder(10, 2, Variant::Ae, &mut rng);
        let mut f = separable(400, &mut rng);
        let za = enc.infer(&f.options[0]).unwrap();
        let zb = enc.infer(&f.options[1]).unwrap();
        f.y = (0..400)
            .map(|i| f64::from(u8::from((za.get(i, 0) - zb.get(i, 0)) + 0.5 * (za.get(i, 1) - zb.get(i, 1)) > 0.0)))
            .collect();
        let mut m = SslNet::build(SslConfig::default(), enc.clone(), &mut rng).unwrap();
        let before = serde_json::to_string(&m.encoder).unwrap();
        let cfg = ClassifierTrainConfig { epochs: 100, learning_rate: 1e-2, batch_size: 32, ..Default::default() };
        train_ssl(&mut m, &f, None, &cfg).unwrap();
        assert_eq!(before, serde_json::to_string(&m.encoder).unwrap());
        let acc = accuracy_of(&m, &f).unwrap();
        assert!(acc > 0.99, "{acc}");
    }

    #[test]
    fn fine_tune_moves_the_encoder() {
        let mut rng = seeded_rng(4);
        let enc = encoder(10, 2, Variant::Ae, &mut rng);
        let mut f = separable(64, &mut rng);
        f.y = (0..64).map(|_| f64::from(rng.random_range(0..2u8))).collect();
        let mut m = SslNet::build(SslConfig { encoder_mode: EncoderMode::FineTune, ..Default::default() }, enc, &mut rng).unwrap();
        let before = m.encoder.net.params()[0].value.clone();
        train_ssl(&mut m, &f, None, &ClassifierTrainConfig { epochs: 1, ..Default::default() }).unwrap();
        assert_ne!(before, m.encoder.net.params()[0].value);
    }

    #[test]
    fn predictions_are_deterministic_and_batch_consistent() {
        let mut rng = seeded_rng(5);
        let enc = encoder(10, 2, Variant::Vae, &mut rng);
        let m = SslNet::build(SslConfig::default(), enc, &mut rng).unwrap();
        let f = separable(5, &mut rng);
        let all = m.predict(&f.options).unwrap();
        assert_eq!(all, m.predict(&f.options).unwrap());
        for (i, p) in all.iter().enumerate() {
            assert!(p.score > 0.0 && p.score < 1.0);
            assert_eq!(p.label, u8::from(p.score >= 0.5));
            let one: Vec<Matrix> = f.options.iter().map(|o| o.slice_rows(i, 1)).collect();
            assert_eq!(m.predict(&one).unwrap()[0], *p);
        }
        assert!(m.predict(&f.options[..1]).is_err());
    }

    #[test]
    fn swapped_copies_flip_labels() {
        let mut rng = seeded_rng(6);
        let mut f = separable(3, &mut rng);
        f.y = vec![1.0, 0.0, 1.0];
        let s = with_swapped(&f).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.y[3..], [0.0, 1.0, 0.0]);
        assert_eq!(s.options[0].row(3), f.options[1].row(0));
    }
}
