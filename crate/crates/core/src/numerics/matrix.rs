//! Per-sample dense linear algebra.
//!
//! Vectors are plain slices / `Vec<T>`. These routines favour clarity and are
//! the reference path; the batched kernels in [`crate::numerics::batch`] must
//! agree with them.

use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::new",
                format!("{rows}x{cols}"),
                format!("{} values", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Matrix::new"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }
}

fn check_finite<T: Scalar>(v: Vec<T>, op: &'static str) -> Result<Vec<T>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite(op))
    }
}

/// Affine map `W x + b`.
pub fn matmul_add<T: Scalar>(w: &Matrix<T>, x: &[T], b: &[T]) -> Result<Vec<T>> {
    if w.cols != x.len() || w.rows != b.len() {
        return Err(Error::shape(
            "matmul_add",
            format!("W {}", w.shape_string()),
            format!("x[{}], b[{}]", x.len(), b.len()),
        ));
    }
    let out = (0..w.rows)
        .map(|r| {
            w.row(r)
                .iter()
                .zip(x)
                .fold(b[r], |acc, (&wv, &xv)| acc + wv * xv)
        })
        .collect();
    check_finite(out, "matmul_add")
}

/// Elementwise `sin(omega0 * z)`.
///
/// Pass `omega0 = 1` where the frequency has already been applied to `z`.
pub fn sine_activation<T: Scalar>(z: &[T], omega0: T) -> Result<Vec<T>> {
    if !(omega0 > T::zero()) || !omega0.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "omega0 must be positive, got {omega0}"
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sine_activation input"));
    }
    Ok(z.iter().map(|&v| (omega0 * v).sin()).collect())
}

/// Elementwise product.
pub fn hadamard<T: Scalar>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    if a.len() != b.len() {
        return Err(Error::shape(
            "hadamard",
            format!("[{}]", a.len()),
            format!("[{}]", b.len()),
        ));
    }
    check_finite(a.iter().zip(b).map(|(&x, &y)| x * y).collect(), "hadamard")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matmul_add_identity_and_zero_input() {
        let eye = Matrix::<f64>::identity(2);
        assert_eq!(
            matmul_add(&eye, &[3.0, -1.0], &[0.0, 0.0]).unwrap(),
            vec![3.0, -1.0]
        );

        let w = Matrix::new(2, 3, vec![0.3, -1.0, 2.0, 5.0, 0.1, -0.7]).unwrap();
        let b = [0.25, -4.0];
        assert_eq!(matmul_add(&w, &[0.0; 3], &b).unwrap(), b.to_vec());
    }

    #[test]
    fn matmul_add_hand_example() {
        let w = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(
            matmul_add(&w, &[1.0, 1.0], &[1.0, 1.0]).unwrap(),
            vec![4.0, 8.0]
        );
    }

    #[test]
    fn matmul_add_reports_both_shapes() {
        let w = Matrix::<f64>::zeros(2, 3);
        let err = matmul_add(&w, &[1.0, 2.0], &[0.0, 0.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("x[2]"), "{msg}");
    }

    #[test]
    fn matmul_add_rejects_overflow() {
        let w = Matrix::new(1, 2, vec![f64::MAX, f64::MAX]).unwrap();
        assert!(matches!(
            matmul_add(&w, &[2.0, 2.0], &[0.0]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn sine_examples() {
        assert_eq!(sine_activation(&[0.0f64], 30.0).unwrap(), vec![0.0]);
        let z = std::f64::consts::PI / 60.0;
        assert!((sine_activation(&[z], 30.0).unwrap()[0] - 1.0).abs() < 1e-15);
        let v = sine_activation(&[0.1f64, 0.2], 1.0).unwrap();
        assert_eq!(v, vec![0.1f64.sin(), 0.2f64.sin()]);
        assert!(sine_activation(&[f64::NAN], 1.0).is_err());
        assert!(sine_activation(&[1.0f64], 0.0).is_err());
    }

    #[test]
    fn hadamard_examples() {
        let v = [0.5, -2.0, 7.0];
        assert_eq!(hadamard(&[1.0, 1.0, 1.0], &v).unwrap(), v.to_vec());
        assert_eq!(hadamard(&[0.0; 3], &v).unwrap(), vec![0.0, -0.0, 0.0]);
        assert_eq!(hadamard(&[2.0, 3.0], &[4.0, 5.0]).unwrap(), vec![8.0, 15.0]);
        assert!(matches!(
            hadamard(&[1.0], &[1.0, 2.0]),
            Err(Error::Shape { .. })
        ));
    }

    proptest! {
        #[test]
        fn matmul_add_is_linear(
            w in prop::collection::vec(-3.0f64..3.0, 12),
            x in prop::collection::vec(-1.0f64..1.0, 4).prop_filter("unit ball", |v| v.iter().map(|a| a * a).sum::<f64>() <= 1.0),
            y in prop::collection::vec(-1.0f64..1.0, 4).prop_filter("unit ball", |v| v.iter().map(|a| a * a).sum::<f64>() <= 1.0),
            alpha in -2.0f64..2.0,
            beta in -2.0f64..2.0,
        ) {
            let w = Matrix::new(3, 4, w).unwrap();
            let zero = [0.0; 3];
            let mixed: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = matmul_add(&w, &mixed, &zero).unwrap();
            let wx = matmul_add(&w, &x, &zero).unwrap();
            let wy = matmul_add(&w, &y, &zero).unwrap();
            for i in 0..3 {
                prop_assert!((lhs[i] - (alpha * wx[i] + beta * wy[i])).abs() < 1e-12);
            }
        }
    }
}
