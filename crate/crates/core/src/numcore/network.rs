use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Layer, LayerSpec, Mode};
use super::{HasParams, Matrix, Parameter};
use crate::error::{Error, Result};

/// A feed-forward stack of layers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn from_specs<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Validation("network needs at least one layer".into()));
        }
        for (i, pair) in specs.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Validation(format!(
                    "layer {} outputs {} but layer {} expects {}",
                    i,
                    pair[0].out_dim,
                    i + 1,
                    pair[1].in_dim
                )));
            }
        }
        let layers = specs
            .iter()
            .map(|s| Layer::from_spec(s, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::LayerShape {
                    layer: i + 1,
                    expected: pair[1].in_dim(),
                    got: pair[0].out_dim(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Runs the stack. Train mode caches what `backward` needs and updates
    /// batch-norm running statistics; Infer mode leaves the model untouched.
    pub fn forward(&mut self, x: &Matrix, mode: Mode) -> Result<Matrix> {
        if mode == Mode::Infer {
            return self.infer(x);
        }
        let mut h = x.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            check_width(i, layer, &h)?;
            h = layer.forward(&h, Mode::Train)?;
        }
        Ok(h)
    }

    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            check_width(i, layer, &h)?;
            h = layer.infer(&h)?;
        }
        Ok(h)
    }

    /// Accumulates parameter gradients and returns d(loss)/d(input).
    pub fn backward(&mut self, upstream: &Matrix) -> Result<Matrix> {
        let mut g = upstream.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn clear_cache(&mut self) {
        self.layers.iter_mut().for_each(Layer::clear_cache);
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        for p in self.params_mut() {
            p.frozen = frozen;
        }
    }

    pub fn set_lr_scale(&mut self, scale: f64) {
        for p in self.params_mut() {
            p.lr_scale = scale;
        }
    }
}

fn check_width(i: usize, layer: &Layer, h: &Matrix) -> Result<()> {
    if h.cols() != layer.in_dim() {
        return Err(Error::LayerShape {
            layer: i,
            expected: layer.in_dim(),
            got: h.cols(),
        });
    }
    Ok(())
}

impl HasParams for Network {
    fn params(&self) -> Vec<&Parameter> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_mismatched_adjacent_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let specs = [LayerSpec::dense(3, 4), LayerSpec::relu(5)];
        assert!(Network::from_specs(&specs, &mut rng).is_err());
    }

    #[test]
    fn width_error_names_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Network::from_specs(&[LayerSpec::dense(3, 2)], &mut rng).unwrap();
        match net.infer(&Matrix::zeros(1, 4)) {
            Err(Error::LayerShape { layer, expected, got }) => {
                assert_eq!((layer, expected, got), (0, 3, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn glorot_init_within_bounds_and_zero_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::from_specs(&[LayerSpec::dense(10, 6)], &mut rng).unwrap();
        let limit = (6.0f64 / 16.0).sqrt();
        let ps = net.params();
        assert!(ps[0].value.data().iter().all(|w| w.abs() <= limit));
        assert!(ps[1].value.data().iter().all(|&b| b == 0.0));
    }
}
