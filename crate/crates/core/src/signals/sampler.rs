use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::numerics::Scalar;
use crate::signals::{image_coords, ImageSignal, SdfShape};
use crate::training::Sampler;

/// Standard deviation of the near-surface perturbation.
pub const NEAR_SURFACE_SIGMA: f64 = 0.01;

/// Largest image trained on whole; bigger images use random pixel batches.
pub const FULL_BATCH_PIXELS: usize = 256 * 256;

/// Pixel minibatch size for images above [`FULL_BATCH_PIXELS`].
pub const IMAGE_MINIBATCH: usize = 1 << 16;

/// Row-major coordinates and targets for one optimisation step.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch<T> {
    pub coords: Vec<T>,
    pub targets: Vec<T>,
    pub dim: usize,
    pub output_dim: usize,
}

impl<T: Scalar> SampleBatch<T> {
    pub fn count(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn coord(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn target(&self, i: usize) -> &[T] {
        &self.targets[i * self.output_dim..(i + 1) * self.output_dim]
    }

    pub fn cast<U: Scalar>(&self) -> SampleBatch<U> {
        SampleBatch {
            coords: self
                .coords
                .iter()
                .map(|v| U::from_f64(v.as_f64()))
                .collect(),
            targets: self
                .targets
                .iter()
                .map(|v| U::from_f64(v.as_f64()))
                .collect(),
            dim: self.dim,
            output_dim: self.output_dim,
        }
    }
}

/// Point counts `(uniform, surface, near_surface)` for an `n`-point batch:
/// 20% uniform in the box, 40% on the surface, the rest perturbed surface points.
pub fn sdf_split(n: usize) -> (usize, usize, usize) {
    let uniform = n / 5;
    let surface = 2 * n / 5;
    (uniform, surface, n - uniform - surface)
}

/// Draws an SDF training batch. Points are ordered uniform, surface, then
/// near-surface. Perturbed points are clamped into the box and every target is
/// the exact signed distance at the final position.
pub fn sample_sdf_batch<R: Rng + ?Sized>(
    shape: &SdfShape,
    n: usize,
    rng: &mut R,
) -> SampleBatch<f64> {
    let dim = shape.dim();
    let (uniform, surface, near) = sdf_split(n);
    let noise = Normal::new(0.0, NEAR_SURFACE_SIGMA).expect("positive sigma");
    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..uniform {
        coords.extend((0..dim).map(|_| rng.random_range(-1.0..=1.0)));
    }
    for _ in 0..surface {
        coords.extend(shape.sample_surface(rng).0);
    }
    for _ in 0..near {
        let (p, _) = shape.sample_surface(rng);
        coords.extend(p.iter().map(|&v| (v + noise.sample(rng)).clamp(-1.0, 1.0)));
    }
    let targets = coords.chunks_exact(dim).map(|p| shape.sdf(p)).collect();
    SampleBatch {
        coords,
        targets,
        dim,
        output_dim: 1,
    }
}

/// Fresh SDF batch every step.
pub struct SdfSampler<T> {
    shape: SdfShape,
    batch_size: usize,
    rng: ChaCha8Rng,
    batch: SampleBatch<T>,
}

impl<T: Scalar> SdfSampler<T> {
    pub fn new(shape: SdfShape, batch_size: usize, rng: ChaCha8Rng) -> Self {
        let dim = shape.dim();
        SdfSampler {
            shape,
            batch_size: batch_size.max(5),
            rng,
            batch: SampleBatch {
                coords: Vec::new(),
                targets: Vec::new(),
                dim,
                output_dim: 1,
            },
        }
    }

    pub fn shape(&self) -> &SdfShape {
        &self.shape
    }
}

impl<T: Scalar> Sampler<T> for SdfSampler<T> {
    fn input_dim(&self) -> usize {
        self.shape.dim()
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn next_batch(&mut self) -> &SampleBatch<T> {
        self.batch = sample_sdf_batch(&self.shape, self.batch_size, &mut self.rng).cast();
        &self.batch
    }
}

/// Image pixels as a regression target over pixel-centre coordinates.
///
/// With `batch_size == 0` images up to 256x256 are used whole every step and
/// larger ones in random minibatches of 2^16 pixels. Minibatch pixels are
/// drawn uniformly with replacement.
pub struct ImageSampler<T> {
    coords: Vec<T>,
    values: Vec<T>,
    channels: usize,
    batch_size: usize,
    rng: ChaCha8Rng,
    batch: SampleBatch<T>,
}

impl<T: Scalar> ImageSampler<T> {
    pub fn new(image: &ImageSignal, batch_size: usize, rng: ChaCha8Rng) -> Self {
        let pixels = image.pixel_count();
        let batch_size = match batch_size {
            0 if pixels <= FULL_BATCH_PIXELS => pixels,
            0 => IMAGE_MINIBATCH,
            b => b.min(pixels),
        };
        let coords: Vec<T> = image_coords(image).into_iter().map(T::from_f64).collect();
        let values: Vec<T> = image.pixels().iter().map(|&v| T::from_f64(v)).collect();
        let batch = if batch_size == pixels {
            SampleBatch {
                coords: coords.clone(),
                targets: values.clone(),
                dim: 2,
                output_dim: image.channels(),
            }
        } else {
            SampleBatch {
                coords: Vec::new(),
                targets: Vec::new(),
                dim: 2,
                output_dim: image.channels(),
            }
        };
        ImageSampler {
            coords,
            values,
            channels: image.channels(),
            batch_size,
            rng,
            batch,
        }
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }
}

impl<T: Scalar> Sampler<T> for ImageSampler<T> {
    fn input_dim(&self) -> usize {
        2
    }

    fn output_dim(&self) -> usize {
        self.channels
    }

    fn next_batch(&mut self) -> &SampleBatch<T> {
        if self.is_fixed() {
            return &self.batch;
        }
        let pixels = self.values.len() / self.channels;
        let c = self.channels;
        self.batch.coords.clear();
        self.batch.targets.clear();
        for _ in 0..self.batch_size {
            let i = self.rng.random_range(0..pixels);
            self.batch
                .coords
                .extend_from_slice(&self.coords[2 * i..2 * i + 2]);
            self.batch
                .targets
                .extend_from_slice(&self.values[c * i..c * (i + 1)]);
        }
        &self.batch
    }

    fn is_fixed(&self) -> bool {
        self.batch_size * self.channels == self.values.len()
    }
}
