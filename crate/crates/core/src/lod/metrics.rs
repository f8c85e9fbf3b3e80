//! Image and geometry quality metrics.

use crate::error::{Error, Result};
use crate::signals::ImageSignal;

/// Value reported in place of an infinite PSNR.
pub const PSNR_CAP: f64 = 99.0;

/// Side length of the square SSIM window.
pub const SSIM_WINDOW: usize = 8;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn check_same_len(op: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::shape(
            op,
            format!("{a} values"),
            format!("{b} values"),
        ));
    }
    Ok(())
}

/// `10 log10(1 / MSE)` for signals with peak 1, capped at [`PSNR_CAP`].
pub fn psnr_values(a: &[f64], b: &[f64]) -> Result<f64> {
    check_same_len("psnr", a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::InvalidConfig("psnr of empty signals".into()));
    }
    let mse = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    Ok(if mse > 0.0 {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP)
    } else {
        PSNR_CAP
    })
}

fn check_same_shape(op: &'static str, a: &ImageSignal, b: &ImageSignal) -> Result<()> {
    let shape = |i: &ImageSignal| (i.width(), i.height(), i.channels());
    if shape(a) != shape(b) {
        let fmt = |i: &ImageSignal| format!("{}x{}x{}", i.width(), i.height(), i.channels());
        return Err(Error::shape(op, fmt(a), fmt(b)));
    }
    Ok(())
}

/// PSNR over all pixels and channels.
pub fn psnr(a: &ImageSignal, b: &ImageSignal) -> Result<f64> {
    check_same_shape("psnr", a, b)?;
    psnr_values(a.pixels(), b.pixels())
}

/// Mean SSIM of two single-channel `width x height` planes over every
/// 8x8 window position (stride 1, no padding). Window statistics use the
/// population (1/N) normalisation.
pub fn ssim_plane(a: &[f64], b: &[f64], width: usize, height: usize) -> Result<f64> {
    check_same_len("ssim", a.len(), b.len())?;
    check_same_len("ssim", a.len(), width * height)?;
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(Error::InvalidConfig(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {width}x{height}"
        )));
    }
    let w = SSIM_WINDOW;
    let count = (w * w) as f64;
    let mut total = 0.0;
    let positions = (width - w + 1) * (height - w + 1);
    for r0 in 0..=height - w {
        for c0 in 0..=width - w {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for r in r0..r0 + w {
                for c in c0..c0 + w {
                    let (x, y) = (a[r * width + c], b[r * width + c]);
                    sa += x;
                    sb += y;
                    saa += x * x;
                    sbb += y * y;
                    sab += x * y;
                }
            }
            let (ma, mb) = (sa / count, sb / count);
            let va = saa / count - ma * ma;
            let vb = sbb / count - mb * mb;
            let cov = sab / count - ma * mb;
            total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
        }
    }
    Ok(total / positions as f64)
}

/// SSIM on luma (Rec.601 for colour images).
pub fn ssim(a: &ImageSignal, b: &ImageSignal) -> Result<f64> {
    check_same_shape("ssim", a, b)?;
    let (la, lb) = (a.to_luma(), b.to_luma());
    ssim_plane(la.pixels(), lb.pixels(), a.width(), a.height())
}

/// A point set in which every point carries a unit normal. Coordinates and
/// normals are stored flat, `dim` values per point.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientedPoints {
    dim: usize,
    points: Vec<f64>,
    normals: Vec<f64>,
}

impl OrientedPoints {
    /// Builds a set, normalising each normal. Zero normals are rejected.
    pub fn new(dim: usize, points: Vec<f64>, mut normals: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 || points.len() != normals.len() {
            return Err(Error::shape(
                "OrientedPoints::new",
                format!("{} point values in dimension {dim}", points.len()),
                format!("{} normal values", normals.len()),
            ));
        }
        if points.iter().chain(&normals).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("oriented points"));
        }
        for n in normals.chunks_exact_mut(dim) {
            let len = n.iter().map(|v| v * v).sum::<f64>().sqrt();
            if len == 0.0 {
                return Err(Error::InvalidConfig("zero-length normal".into()));
            }
            n.iter_mut().for_each(|v| *v /= len);
        }
        Ok(OrientedPoints {
            dim,
            points,
            normals,
        })
    }

    /// For producers that already emit unit normals.
    pub(crate) fn from_parts_unchecked(dim: usize, points: Vec<f64>, normals: Vec<f64>) -> Self {
        debug_assert_eq!(points.len(), normals.len());
        OrientedPoints {
            dim,
            points,
            normals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn normals(&self) -> &[f64] {
        &self.normals
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }
}

/// For every point of `from`, the distance to its nearest point in `to` and
/// the absolute cosine between their normals. Ties go to the lower index.
fn directed(from: &OrientedPoints, to: &OrientedPoints) -> (f64, f64) {
    let (mut dist, mut cos) = (0.0, 0.0);
    for i in 0..from.len() {
        let p = from.point(i);
        let (mut best, mut best_j) = (f64::INFINITY, 0);
        for j in 0..to.len() {
            let d2: f64 = p
                .iter()
                .zip(to.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 < best {
                best = d2;
                best_j = j;
            }
        }
        dist += best.sqrt();
        let dot: f64 = from
            .normal(i)
            .iter()
            .zip(to.normal(best_j))
            .map(|(a, b)| a * b)
            .sum();
        cos += dot.abs();
    }
    let n = from.len() as f64;
    (dist / n, cos / n)
}

/// Symmetric Chamfer distance (the average of both directed mean
/// nearest-neighbour distances) and normal consistency (the same average of
/// mean absolute cosines between matched normals). Brute force.
pub fn chamfer_and_normals(a: &OrientedPoints, b: &OrientedPoints) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidConfig(
            "chamfer needs two non-empty point sets".into(),
        ));
    }
    if a.dim != b.dim {
        return Err(Error::shape(
            "chamfer_and_normals",
            format!("dimension {}", a.dim),
            format!("dimension {}", b.dim),
        ));
    }
    let (dab, cab) = directed(a, b);
    let (dba, cba) = directed(b, a);
    Ok(((dab + dba) / 2.0, (cab + cba) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle(r: f64, n: usize, phase: f64) -> OrientedPoints {
        let mut p = Vec::new();
        let mut nn = Vec::new();
        for i in 0..n {
            let t = TAU * (i as f64 + phase) / n as f64;
            p.extend([r * t.cos(), r * t.sin()]);
            nn.extend([t.cos(), t.sin()]);
        }
        OrientedPoints::new(2, p, nn).unwrap()
    }

    #[test]
    fn psnr_closed_forms() {
        let a = ImageSignal::filled(4, 4, 1, 0.5).unwrap();
        let black = ImageSignal::filled(4, 4, 1, 0.0).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
        assert!((psnr(&a, &black).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert!((psnr_values(&[0.1], &[0.0]).unwrap() - 20.0).abs() < 1e-12);
        let wide = ImageSignal::filled(8, 2, 1, 0.0).unwrap();
        assert!(matches!(psnr(&a, &wide), Err(Error::Shape { .. })));
    }

    #[test]
    fn psnr_decreases_with_mse() {
        let base = [0.0; 10];
        let mut last = f64::INFINITY;
        for k in 1..20 {
            let v = psnr_values(&base, &[0.01 * k as f64; 10]).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn ssim_identity_and_anticorrelation() {
        let px: Vec<f64> = (0..256).map(|i| ((i / 16 + i % 16) % 2) as f64).collect();
        let a = ImageSignal::new(16, 16, 1, px.clone()).unwrap();
        let b = ImageSignal::new(16, 16, 1, px.iter().map(|v| 1.0 - v).collect()).unwrap();
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(ssim(&a, &b).unwrap() < 0.0);
        let tiny = ImageSignal::filled(4, 4, 1, 0.0).unwrap();
        assert!(ssim(&tiny, &tiny).is_err());
    }

    #[test]
    fn chamfer_exact_cases() {
        let a = circle(0.5, 64, 0.0);
        assert_eq!(chamfer_and_normals(&a, &a).unwrap(), (0.0, 1.0));
        let b = circle(0.6, 64, 0.0);
        let (cd, nc) = chamfer_and_normals(&a, &b).unwrap();
        assert!((cd - 0.1).abs() < 1e-12);
        assert!((nc - 1.0).abs() < 1e-12);
        assert_eq!(
            chamfer_and_normals(&a, &b).unwrap(),
            chamfer_and_normals(&b, &a).unwrap()
        );
    }

    #[test]
    fn chamfer_zero_only_for_coincident_sets() {
        let a = OrientedPoints::new(2, vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let swapped =
            OrientedPoints::new(2, vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let moved =
            OrientedPoints::new(2, vec![1.0, 0.0, 0.0, 1e-9], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(chamfer_and_normals(&a, &swapped).unwrap().0, 0.0);
        assert!(chamfer_and_normals(&a, &moved).unwrap().0 > 0.0);
    }

    #[test]
    fn rotated_normals_lower_consistency() {
        let a = circle(0.5, 50, 0.0);
        let twisted: Vec<f64> = a
            .normals()
            .chunks_exact(2)
            .enumerate()
            .flat_map(|(i, n)| {
                let t = 0.3 + 0.1 * i as f64;
                [
                    n[0] * t.cos() - n[1] * t.sin(),
                    n[0] * t.sin() + n[1] * t.cos(),
                ]
            })
            .collect();
        let b = OrientedPoints::new(2, a.points().to_vec(), twisted).unwrap();
        assert!(chamfer_and_normals(&a, &b).unwrap().1 < 1.0);
    }

    #[test]
    fn invalid_point_sets() {
        let a = circle(0.5, 4, 0.0);
        let empty = OrientedPoints::new(2, vec![], vec![]).unwrap();
        assert!(chamfer_and_normals(&a, &empty).is_err());
        assert!(OrientedPoints::new(2, vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(OrientedPoints::new(2, vec![0.0], vec![1.0]).is_err());
    }
}
