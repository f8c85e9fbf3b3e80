//! Per-level metric tables for image and SDF models.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lod::{
    chamfer_and_normals, lod_from_outputs, marching_cubes, marching_squares, psnr_values,
    sample_polylines, ssim_plane, Field, LodLevel, OrientedPoints,
};
use crate::model::{evaluate, ModelParams};
use crate::numerics::Scalar;
use crate::signals::{image_coords, ImageSignal, SdfShape};

/// Metrics for one level of detail. Fields that do not apply to the signal
/// type are `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelMetrics {
    pub level: f64,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    /// Mean `|prediction - sdf|` over the evaluation grid.
    pub sdf_mae: Option<f64>,
    pub chamfer: Option<f64>,
    pub normal_consistency: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<LevelMetrics>,
}

impl MetricReport {
    pub fn row(&self, level: f64) -> Option<&LevelMetrics> {
        self.rows.iter().find(|r| r.level == level)
    }

    /// Comma-separated table with a header line; absent metrics are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,psnr,ssim,sdf_mae,chamfer,normal_consistency\n");
        let cell = |v: Option<f64>| v.map(|v| format!("{v:.9}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.level,
                cell(r.psnr),
                cell(r.ssim),
                cell(r.sdf_mae),
                cell(r.chamfer),
                cell(r.normal_consistency)
            );
        }
        out
    }
}

fn validated_levels(levels: &[f64], k: usize) -> Result<Vec<LodLevel>> {
    levels.iter().map(|&l| LodLevel::new(l, k)).collect()
}

/// PSNR and SSIM of the model at each level against `image`, sampled at the
/// image's pixel centres. Raw outputs are compared without clamping.
pub fn image_report<T: Scalar>(
    params: &ModelParams<T>,
    image: &ImageSignal,
    levels: &[f64],
) -> Result<MetricReport> {
    let config = params.config();
    if config.input_dim != 2 || config.output_dim != image.channels() {
        return Err(Error::shape(
            "image_report",
            format!("model {}->{}", config.input_dim, config.output_dim),
            format!("2D image with {} channels", image.channels()),
        ));
    }
    let levels = validated_levels(levels, params.num_layers())?;
    let x: Vec<T> = image_coords(image).into_iter().map(T::from_f64).collect();
    let outputs = evaluate(params, &x)?;
    let reference = image.to_luma();
    let mut rows = Vec::new();
    for level in levels {
        let y: Vec<f64> = lod_from_outputs(&outputs, level)?
            .into_iter()
            .map(|v| v.as_f64())
            .collect();
        let luma = luma_of(&y, image.channels());
        rows.push(LevelMetrics {
            level: level.value(),
            psnr: Some(psnr_values(&y, image.pixels())?),
            ssim: Some(ssim_plane(
                &luma,
                reference.pixels(),
                image.width(),
                image.height(),
            )?),
            ..Default::default()
        });
    }
    Ok(MetricReport { rows })
}

/// Rec.601 luma of interleaved raw values, without clamping.
fn luma_of(values: &[f64], channels: usize) -> Vec<f64> {
    if channels == 1 {
        return values.to_vec();
    }
    values
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
        .collect()
}

/// Settings for SDF evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SdfEvalOptions {
    /// Grid cells per axis for the error field and zero-set extraction.
    pub resolution: usize,
    /// Oriented samples drawn from each of the predicted and true surfaces.
    pub surface_samples: usize,
}

impl Default for SdfEvalOptions {
    fn default() -> Self {
        SdfEvalOptions {
            resolution: 128,
            surface_samples: 2000,
        }
    }
}

/// Oriented samples of the zero set of a 2D or 3D field.
pub fn zero_set_samples<R: Rng + ?Sized>(
    field: &Field,
    count: usize,
    rng: &mut R,
) -> OrientedPoints {
    match field.dim() {
        2 => sample_polylines(&marching_squares(field, 0.0), count),
        3 => marching_cubes(field, 0.0).sample(count, rng),
        d => panic!("zero sets are extracted from 2D or 3D fields, not {d}D"),
    }
}

/// Oriented samples of the analytic surface with exact normals.
pub fn shape_samples<R: Rng + ?Sized>(
    shape: &SdfShape,
    count: usize,
    rng: &mut R,
) -> OrientedPoints {
    let dim = shape.dim();
    let mut points = Vec::with_capacity(count * dim);
    let mut normals = Vec::with_capacity(count * dim);
    for _ in 0..count {
        let (p, n) = shape.sample_surface(rng);
        points.extend(p);
        normals.extend(n);
    }
    OrientedPoints::from_parts_unchecked(dim, points, normals)
}

/// Grid error against the analytic SDF plus Chamfer distance and normal
/// consistency of the extracted zero set, for each level. A level whose
/// prediction has no zero crossing on the grid reports no Chamfer or NC.
pub fn sdf_report<T: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<T>,
    shape: &SdfShape,
    levels: &[f64],
    options: &SdfEvalOptions,
    rng: &mut R,
) -> Result<MetricReport> {
    let config = params.config();
    if config.input_dim != shape.dim() || config.output_dim != 1 {
        return Err(Error::shape(
            "sdf_report",
            format!("model {}->{}", config.input_dim, config.output_dim),
            format!("{}D scalar SDF", shape.dim()),
        ));
    }
    let levels = validated_levels(levels, params.num_layers())?;
    let dim = shape.dim();
    let truth = Field::from_fn(options.resolution, dim, |p| shape.sdf(p))?;
    let points = crate::lod::grid_points(options.resolution, dim);
    let x: Vec<T> = points.into_iter().map(T::from_f64).collect();
    let outputs = evaluate(params, &x)?;
    let reference = shape_samples(shape, options.surface_samples, rng);

    let mut rows = Vec::new();
    for level in levels {
        let y: Vec<f64> = lod_from_outputs(&outputs, level)?
            .into_iter()
            .map(|v| v.as_f64())
            .collect();
        let mae = y
            .iter()
            .zip(truth.values())
            .map(|(p, t)| (p - t).abs())
            .sum::<f64>()
            / y.len() as f64;
        let field = Field::new(options.resolution, dim, 1, y)?;
        let predicted = zero_set_samples(&field, options.surface_samples, rng);
        let (chamfer, nc) = if predicted.is_empty() {
            (None, None)
        } else {
            let (c, n) = chamfer_and_normals(&predicted, &reference)?;
            (Some(c), Some(n))
        };
        rows.push(LevelMetrics {
            level: level.value(),
            sdf_mae: Some(mae),
            chamfer,
            normal_consistency: nc,
            ..Default::default()
        });
    }
    Ok(MetricReport { rows })
}
