use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ModelConfig, TailKind};
use crate::numerics::{matmul_add, Matrix, Scalar};
use crate::seed::{rng_for, Stream};

/// Location of one affine map (`rows x cols` weight, `rows` bias) in the flat buffer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSlots {
    pub weight: Range<usize>,
    pub bias: Range<usize>,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSlots {
    pub hidden: AffineSlots,
    /// Head factors: empty, one (affine) or two (multiplicative).
    pub tail: Vec<AffineSlots>,
    /// Full extent of this layer, head included.
    pub span: Range<usize>,
}

/// Flat parameter layout: for each hidden layer `W_i, b_i`, then its head
/// factors `W, b` in order. Each layer occupies one contiguous span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    layers: Vec<LayerSlots>,
    len: usize,
}

impl ParamLayout {
    pub fn new(config: &ModelConfig) -> Self {
        let mut offset = 0;
        let mut take = |rows: usize, cols: usize| {
            let weight = offset..offset + rows * cols;
            offset = weight.end;
            let bias = offset..offset + rows;
            offset = bias.end;
            AffineSlots {
                weight,
                bias,
                rows,
                cols,
            }
        };
        let mut layers = Vec::with_capacity(config.num_hidden_layers);
        for layer in 1..=config.num_hidden_layers {
            let fan_in = if layer == 1 {
                config.input_dim
            } else {
                config.hidden_width
            };
            let hidden = take(config.hidden_width, fan_in);
            let factors = config.tail_kind(layer).map_or(0, TailKind::factors);
            let tail = (0..factors)
                .map(|_| take(config.output_dim, config.hidden_width))
                .collect::<Vec<_>>();
            let end = tail.last().map_or(hidden.bias.end, |t| t.bias.end);
            let span = hidden.weight.start..end;
            layers.push(LayerSlots { hidden, tail, span });
        }
        ParamLayout {
            layers,
            len: offset,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn layers(&self) -> &[LayerSlots] {
        &self.layers
    }

    /// Slots of hidden layer `layer` (1-based).
    pub fn layer(&self, layer: usize) -> &LayerSlots {
        &self.layers[layer - 1]
    }
}

/// Borrowed affine map.
#[derive(Clone, Copy, Debug)]
pub struct Affine<'a, T> {
    pub weight: &'a [T],
    pub bias: &'a [T],
    pub rows: usize,
    pub cols: usize,
}

impl<T: Scalar> Affine<'_, T> {
    pub fn matrix(&self) -> Matrix<T> {
        Matrix::from_fn(self.rows, self.cols, |r, c| self.weight[r * self.cols + c])
    }

    /// Per-sample `W x + b`.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        matmul_add(&self.matrix(), x, self.bias)
    }
}

/// All weights and biases of a network, stored in one flat buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    config: ModelConfig,
    layout: ParamLayout,
    values: Vec<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn from_values(config: ModelConfig, values: Vec<T>) -> Result<Self> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        if values.len() != layout.len() {
            return Err(Error::shape(
                "ModelParams::from_values",
                format!("{} parameters for {}", layout.len(), config.architecture),
                format!("{} values", values.len()),
            ));
        }
        Ok(ModelParams {
            config,
            layout,
            values,
        })
    }

    pub fn zeros(config: ModelConfig) -> Result<Self> {
        let len = ParamLayout::new(&config).len();
        Self::from_values(config, vec![T::zero(); len])
    }

    /// SIREN initialisation.
    ///
    /// First-layer weights are uniform in `±1/input_dim`; every other weight
    /// (deeper hidden layers and all heads) in `±sqrt(6/fan_in)/omega0`.
    /// Biases share the bound of their layer's weights. Values are drawn in
    /// binary64 and then cast, so binary32 and binary64 models built from one
    /// seed agree up to rounding.
    pub fn init_siren(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        let mut rng = rng_for(config.seed, Stream::Init);
        let mut values = vec![T::zero(); layout.len()];
        let deep_bound = |fan_in: usize| (6.0 / fan_in as f64).sqrt() / config.omega0;
        for (i, slots) in layout.layers().iter().enumerate() {
            let hidden_bound = if i == 0 {
                1.0 / config.input_dim as f64
            } else {
                deep_bound(slots.hidden.cols)
            };
            let mut fill = |range: Range<usize>, bound: f64| {
                for v in &mut values[range] {
                    *v = T::from_f64(rng.random_range(-bound..=bound));
                }
            };
            fill(slots.hidden.weight.clone(), hidden_bound);
            fill(slots.hidden.bias.clone(), hidden_bound);
            for factor in &slots.tail {
                let bound = deep_bound(factor.cols);
                fill(factor.weight.clone(), bound);
                fill(factor.bias.clone(), bound);
            }
        }
        Ok(ModelParams {
            config,
            layout,
            values,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn num_layers(&self) -> usize {
        self.config.num_hidden_layers
    }

    fn affine(&self, slots: &AffineSlots) -> Affine<'_, T> {
        Affine {
            weight: &self.values[slots.weight.clone()],
            bias: &self.values[slots.bias.clone()],
            rows: slots.rows,
            cols: slots.cols,
        }
    }

    /// Hidden affine map of layer `layer` (1-based).
    pub fn hidden(&self, layer: usize) -> Affine<'_, T> {
        self.affine(&self.layout.layer(layer).hidden)
    }

    /// Head factors of layer `layer` (1-based); empty when it has no head.
    pub fn tail(&self, layer: usize) -> Vec<Affine<'_, T>> {
        self.layout
            .layer(layer)
            .tail
            .iter()
            .map(|s| self.affine(s))
            .collect()
    }

    /// Keeps hidden layers `1..=j` and their heads.
    ///
    /// The baselines have no intermediate heads, so for them only `j = k` is
    /// accepted.
    pub fn truncate(&self, j: usize) -> Result<Self> {
        let k = self.num_layers();
        if j == 0 || j > k {
            return Err(Error::LevelOutOfRange {
                level: j as f64,
                max: k,
            });
        }
        if j < k && !self.config.architecture.is_tailed() {
            return Err(Error::InvalidConfig(format!(
                "{} has no head before layer {k}",
                self.config.architecture
            )));
        }
        let config = ModelConfig {
            num_hidden_layers: j,
            ..self.config.clone()
        };
        let end = self.layout.layer(j).span.end;
        Self::from_values(config, self.values[..end].to_vec())
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            config: self.config.clone(),
            layout: self.layout.clone(),
            values: self
                .values
                .iter()
                .map(|v| U::from_f64(v.as_f64()))
                .collect(),
        }
    }
}
