//! Sample-major batched kernels. A batch of `n` vectors of width `d` is a
//! row-major `n x d` buffer.

use crate::numerics::scalar::{gemm, View};
use crate::numerics::Scalar;

/// `z = x W^T + b` for every row of `x`; `w` is row-major `out_dim x in_dim`.
pub fn affine_forward<T: Scalar>(x: &[T], n: usize, in_dim: usize, w: &[T], b: &[T], z: &mut [T]) {
    let out_dim = b.len();
    debug_assert_eq!(w.len(), out_dim * in_dim);
    if out_dim == 1 {
        // A single output row is a dot product per sample, which the packed
        // GEMM kernels handle poorly.
        for (zr, xr) in z[..n].iter_mut().zip(x.chunks_exact(in_dim)) {
            *zr = b[0] + dot(xr, w);
        }
        return;
    }
    for row in z.chunks_exact_mut(out_dim) {
        row.copy_from_slice(b);
    }
    gemm(
        T::one(),
        View::row_major(x, n, in_dim),
        View::transposed(w, out_dim, in_dim),
        T::one(),
        z,
    );
}

/// Accumulates `dW += dz^T x`, `db += colsum(dz)` and, when requested,
/// `dx += dz W`.
#[allow(clippy::too_many_arguments)]
pub fn affine_backward<T: Scalar>(
    dz: &[T],
    n: usize,
    out_dim: usize,
    x: &[T],
    in_dim: usize,
    w: &[T],
    dw: &mut [T],
    db: &mut [T],
    dx: Option<&mut [T]>,
) {
    if out_dim == 1 {
        let mut bias = T::zero();
        for (&g, xr) in dz[..n].iter().zip(x.chunks_exact(in_dim)) {
            axpy(g, xr, dw);
            bias = bias + g;
        }
        db[0] = db[0] + bias;
        if let Some(dx) = dx {
            for (&g, dxr) in dz[..n].iter().zip(dx.chunks_exact_mut(in_dim)) {
                axpy(g, w, dxr);
            }
        }
        return;
    }
    gemm(
        T::one(),
        View::transposed(dz, n, out_dim),
        View::row_major(x, n, in_dim),
        T::one(),
        dw,
    );
    column_sums_into(dz, out_dim, db);
    if let Some(dx) = dx {
        gemm(
            T::one(),
            View::row_major(dz, n, out_dim),
            View::row_major(w, out_dim, in_dim),
            T::one(),
            dx,
        );
    }
}

/// Dot product with eight interleaved partial sums so the loop vectorises.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    const LANES: usize = 8;
    let mut acc = [T::zero(); LANES];
    let (ac, bc) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let tail: T = ac
        .remainder()
        .iter()
        .zip(bc.remainder())
        .fold(T::zero(), |s, (&p, &q)| p.mul_add(q, s));
    for (pa, pb) in ac.zip(bc) {
        for i in 0..LANES {
            acc[i] = pa[i].mul_add(pb[i], acc[i]);
        }
    }
    acc.iter().fold(tail, |s, &v| s + v)
}

/// `y += alpha x`.
fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (d, &v) in y.iter_mut().zip(x) {
        *d = alpha.mul_add(v, *d);
    }
}

/// `acc[j] += sum_r m[r][j]`, summing rows in index order.
pub fn column_sums_into<T: Scalar>(m: &[T], cols: usize, acc: &mut [T]) {
    for row in m.chunks_exact(cols) {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a = *a + v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{matmul_add, Matrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn batched_affine_matches_per_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (n, din, dout) = (37, 9, 13);
        let w: Vec<f64> = (0..din * dout)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let b: Vec<f64> = (0..dout).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..n * din).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut z = vec![0.0; n * dout];
        affine_forward(&x, n, din, &w, &b, &mut z);

        let wm = Matrix::new(dout, din, w.clone()).unwrap();
        for r in 0..n {
            let reference = matmul_add(&wm, &x[r * din..(r + 1) * din], &b).unwrap();
            for (a, e) in z[r * dout..(r + 1) * dout].iter().zip(&reference) {
                assert!((a - e).abs() <= 1e-6 * e.abs().max(1e-12) + 1e-14);
            }
        }

        // binary32 path against the binary64 reference
        let w32: Vec<f32> = w.iter().map(|&v| v as f32).collect();
        let b32: Vec<f32> = b.iter().map(|&v| v as f32).collect();
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let mut z32 = vec![0.0f32; n * dout];
        affine_forward(&x32, n, din, &w32, &b32, &mut z32);
        for (a, e) in z32.iter().zip(&z) {
            assert!((*a as f64 - e).abs() <= 1e-5 * e.abs().max(1.0));
        }
    }

    #[test]
    fn backward_matches_explicit_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n, din, dout) = (6, 3, 4);
        let x: Vec<f64> = (0..n * din).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..din * dout)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let dz: Vec<f64> = (0..n * dout).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut dw = vec![0.0; dout * din];
        let mut db = vec![0.0; dout];
        let mut dx = vec![0.0; n * din];
        affine_backward(&dz, n, dout, &x, din, &w, &mut dw, &mut db, Some(&mut dx));
        for o in 0..dout {
            for i in 0..din {
                let e: f64 = (0..n).map(|r| dz[r * dout + o] * x[r * din + i]).sum();
                assert!((dw[o * din + i] - e).abs() < 1e-12);
            }
            let e: f64 = (0..n).map(|r| dz[r * dout + o]).sum();
            assert!((db[o] - e).abs() < 1e-12);
        }
        for r in 0..n {
            for i in 0..din {
                let e: f64 = (0..dout).map(|o| dz[r * dout + o] * w[o * din + i]).sum();
                assert!((dx[r * din + i] - e).abs() < 1e-12);
            }
        }
    }
}
