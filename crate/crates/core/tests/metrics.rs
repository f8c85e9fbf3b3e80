use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tmlp_core::lod::{
    chamfer_and_normals, marching_cubes, marching_squares, psnr, sample_polylines, shape_samples,
    ssim, total_length, Field,
};
use tmlp_core::signals::{ImageSignal, SdfShape};

/// The 16x16 pair used for the cross-implementation check.
fn fixture_pair() -> (ImageSignal, ImageSignal) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for r in 0..16 {
        for c in 0..16 {
            let v = ((r * 7 + c * 3) % 11) as f64 / 10.0;
            a.push(v);
            b.push((v + 0.15 * (0.7 * r as f64 + 1.3 * c as f64).sin()).clamp(0.0, 1.0));
        }
    }
    (
        ImageSignal::new(16, 16, 1, a).unwrap(),
        ImageSignal::new(16, 16, 1, b).unwrap(),
    )
}

// Reference values from an independent NumPy implementation (sliding 8x8
// windows, population variance and covariance).
const SSIM_REFERENCE: f64 = 0.9430220061841779;
const PSNR_REFERENCE: f64 = 19.612747588056124;

#[test]
fn ssim_and_psnr_match_the_reference_implementation() {
    let (a, b) = fixture_pair();
    assert!((ssim(&a, &b).unwrap() - SSIM_REFERENCE).abs() < 1e-6);
    assert!((psnr(&a, &b).unwrap() - PSNR_REFERENCE).abs() < 1e-9);
    assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
}

#[test]
fn colour_ssim_uses_luma() {
    let (a, b) = fixture_pair();
    let grey_to_rgb = |i: &ImageSignal| {
        let px = i.pixels().iter().flat_map(|&v| [v, v, v]).collect();
        ImageSignal::new(16, 16, 3, px).unwrap()
    };
    let colour = ssim(&grey_to_rgb(&a), &grey_to_rgb(&b)).unwrap();
    assert!((colour - SSIM_REFERENCE).abs() < 1e-9);
}

#[test]
fn circle_contour_against_analytic_samples() {
    let shape: SdfShape = "circle2d 0 0 0.5".parse().unwrap();
    let field = Field::from_fn(128, 2, |p| shape.sdf(p)).unwrap();
    let lines = marching_squares(&field, 0.0);
    let exact = std::f64::consts::TAU * 0.5;
    assert!((total_length(&lines) - exact).abs() / exact < 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (cd, nc) = chamfer_and_normals(
        &sample_polylines(&lines, 2000),
        &shape_samples(&shape, 2000, &mut rng),
    )
    .unwrap();
    assert!(cd < 1e-3, "chamfer {cd}");
    assert!(nc > 0.999, "normal consistency {nc}");
}

#[test]
fn sphere_surface_against_analytic_samples() {
    let shape: SdfShape = "sphere3d 0 0 0 0.5".parse().unwrap();
    let field = Field::from_fn(48, 3, |p| shape.sdf(p)).unwrap();
    let mesh = marching_cubes(&field, 0.0);
    let exact = 4.0 * std::f64::consts::PI * 0.25;
    assert!((mesh.area() - exact).abs() / exact < 0.03);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (cd, nc) = chamfer_and_normals(
        &mesh.oriented_vertices(),
        &shape_samples(&shape, 3000, &mut rng),
    )
    .unwrap();
    assert!(cd < 0.02, "chamfer {cd}");
    assert!(nc > 0.99, "normal consistency {nc}");
}
