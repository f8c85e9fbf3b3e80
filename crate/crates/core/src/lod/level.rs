use crate::error::{Error, Result};
use crate::model::{evaluate, ModelParams, TailOutputs};
use crate::numerics::Scalar;
use crate::signals::ImageSignal;

/// A continuous level of detail `l` in `[1, k]`, split into the integer part
/// `l*` and the blend weight `alpha = l - l*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LodLevel {
    value: f64,
}

impl LodLevel {
    pub fn new(value: f64, k: usize) -> Result<Self> {
        if !value.is_finite() || value < 1.0 || value > k as f64 {
            return Err(Error::LevelOutOfRange {
                level: value,
                max: k,
            });
        }
        Ok(LodLevel { value })
    }

    pub fn integer(level: usize, k: usize) -> Result<Self> {
        Self::new(level as f64, k)
    }

    pub fn value(self) -> f64 {
        self.value
    }

    /// `l*`, the coarser of the two blended outputs.
    pub fn floor(self) -> usize {
        self.value.floor() as usize
    }

    pub fn alpha(self) -> f64 {
        self.value - self.value.floor()
    }

    pub fn is_integer(self) -> bool {
        self.alpha() == 0.0
    }
}

fn output_at<T: Scalar>(outputs: &TailOutputs<T>, level: usize) -> Result<&[T]> {
    outputs
        .at_level(level)
        .ok_or_else(|| Error::InvalidConfig(format!("the model has no output at level {level}")))
}

/// Blends already computed outputs at `level`. Integer levels return `y_l`
/// unchanged; fractional levels return `(1 - alpha) y_l* + alpha y_{l*+1}`.
pub fn lod_from_outputs<T: Scalar>(outputs: &TailOutputs<T>, level: LodLevel) -> Result<Vec<T>> {
    let k = outputs.levels().last().copied().unwrap_or(0);
    if level.value() > k as f64 {
        return Err(Error::LevelOutOfRange {
            level: level.value(),
            max: k,
        });
    }
    let lo = output_at(outputs, level.floor())?;
    if level.is_integer() {
        return Ok(lo.to_vec());
    }
    let hi = output_at(outputs, level.floor() + 1)?;
    let a = T::from_f64(level.alpha());
    let b = T::one() - a;
    Ok(lo.iter().zip(hi).map(|(&p, &q)| b * p + a * q).collect())
}

/// Model output at a continuous level of detail for a batch of coordinates.
pub fn eval_lod<T: Scalar>(params: &ModelParams<T>, x: &[T], level: LodLevel) -> Result<Vec<T>> {
    let k = params.num_layers();
    if level.value() > k as f64 {
        return Err(Error::LevelOutOfRange {
            level: level.value(),
            max: k,
        });
    }
    lod_from_outputs(&evaluate(params, x)?, level)
}

/// Model outputs sampled at the cell centres of a regular grid over
/// `[-1, 1]^dim`, with `resolution` cells per axis.
///
/// Samples are ordered with the first coordinate varying fastest, so a 2D
/// field is row-major with `x` along columns. Values are raw model outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    resolution: usize,
    dim: usize,
    channels: usize,
    values: Vec<f64>,
}

/// Cell-centre coordinate of index `i` on an axis with `resolution` cells.
pub fn cell_centre(i: usize, resolution: usize) -> f64 {
    -1.0 + (2 * i + 1) as f64 / resolution as f64
}

/// All grid sample coordinates in [`Field`] order.
pub fn grid_points(resolution: usize, dim: usize) -> Vec<f64> {
    let count = resolution.pow(dim as u32);
    let mut coords = Vec::with_capacity(count * dim);
    for flat in 0..count {
        let mut rest = flat;
        for _ in 0..dim {
            coords.push(cell_centre(rest % resolution, resolution));
            rest /= resolution;
        }
    }
    coords
}

impl Field {
    pub fn new(resolution: usize, dim: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if resolution == 0 || dim == 0 || channels == 0 {
            return Err(Error::InvalidConfig(
                "field resolution, dimension and channels must be positive".into(),
            ));
        }
        let expected = resolution.pow(dim as u32) * channels;
        if values.len() != expected {
            return Err(Error::shape(
                "Field::new",
                format!("{resolution}^{dim} x {channels}"),
                format!("{} values", values.len()),
            ));
        }
        Ok(Field {
            resolution,
            dim,
            channels,
            values,
        })
    }

    /// Samples a scalar function at every grid point.
    pub fn from_fn(resolution: usize, dim: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let points = grid_points(resolution, dim);
        let values = points.chunks_exact(dim).map(f).collect();
        Self::new(resolution, dim, 1, values)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Scalar value at integer grid index `idx` (first axis fastest).
    pub fn at(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.dim);
        let flat = idx
            .iter()
            .rev()
            .fold(0, |acc, &i| acc * self.resolution + i);
        self.values[flat * self.channels]
    }

    /// Export view of a 2D field as an image, clamping into `[0, 1]`.
    pub fn to_image(&self) -> Result<ImageSignal> {
        if self.dim != 2 {
            return Err(Error::InvalidConfig(format!(
                "only 2D fields convert to images, this one is {}D",
                self.dim
            )));
        }
        ImageSignal::from_clamped(
            self.resolution,
            self.resolution,
            self.channels,
            &self.values,
        )
    }
}

/// Evaluates the model on a `resolution^dim` grid at `level`.
pub fn render_grid<T: Scalar>(
    params: &ModelParams<T>,
    resolution: usize,
    level: LodLevel,
) -> Result<Field> {
    let config = params.config();
    let points = grid_points(resolution, config.input_dim);
    let x: Vec<T> = points.iter().map(|&v| T::from_f64(v)).collect();
    let y = eval_lod(params, &x, level)?;
    Field::new(
        resolution,
        config.input_dim,
        config.output_dim,
        y.iter().map(|v| v.as_f64()).collect(),
    )
}
