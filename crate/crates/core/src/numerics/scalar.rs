//! Floating-point element types and the dense kernels specialised per type.

use std::fmt::{Debug, Display};

use num_traits::Float;

/// Element type of every tensor in the crate.
///
/// `f32` is the training type and takes the fast paths (vectorised sine,
/// `sgemm`); `f64` is the validation type and uses the standard library
/// transcendental functions so finite-difference checks stay meaningful.
pub trait Scalar: Float + Default + Debug + Display + Send + Sync + 'static {
    const NAME: &'static str;

    fn from_f64(v: f64) -> Self;

    fn as_f64(self) -> f64;

    /// `c = alpha * a * b + beta * c` over strided row/column views.
    ///
    /// # Safety
    /// The strides and dimensions must address only elements inside the
    /// backing buffers. Callers go through [`gemm`], which checks this.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    /// Writes `sin(omega x)` and its derivative `omega cos(omega x)` for every
    /// element of `x`.
    fn sine_layer(x: &[Self], omega: Self, sin: &mut [Self], dsin: &mut [Self]);
}

impl Scalar for f64 {
    const NAME: &'static str = "binary64";

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }

    fn sine_layer(x: &[Self], omega: Self, sin: &mut [Self], dsin: &mut [Self]) {
        for ((&v, s), d) in x.iter().zip(sin.iter_mut()).zip(dsin.iter_mut()) {
            let (sv, cv) = (omega * v).sin_cos();
            *s = sv;
            *d = omega * cv;
        }
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "binary32";

    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }

    fn sine_layer(x: &[Self], omega: Self, sin: &mut [Self], dsin: &mut [Self]) {
        let n = x.len();
        let (sin, dsin) = (&mut sin[..n], &mut dsin[..n]);
        let w = omega as f64;
        for i in 0..n {
            let (sv, cv) = sin_cos_poly(w * x[i] as f64);
            sin[i] = sv as f32;
            dsin[i] = (w * cv) as f32;
        }
    }
}

/// Branch-free sine/cosine accurate to well below binary32 resolution for
/// |x| < 1e6. Written so the loop in `sin_cos_into` auto-vectorises.
#[inline(always)]
fn sin_cos_poly(x: f64) -> (f64, f64) {
    const PIO2_HI: f64 = 1.570_796_326_734_125_6;
    const PIO2_LO: f64 = 6.077_100_506_506_192e-11;

    // 1.5 * 2^52: adding it rounds to an integer held in the low mantissa bits
    const SHIFTER: f64 = 6_755_399_441_055_744.0;
    let shifted = x * std::f64::consts::FRAC_2_PI + SHIFTER;
    let q = shifted - SHIFTER;
    let r = (x - q * PIO2_HI) - q * PIO2_LO;
    let r2 = r * r;

    // Taylor series on [-pi/4, pi/4]; truncation error below 1e-10.
    const S3: f64 = -1.0 / 6.0;
    const S5: f64 = 1.0 / 120.0;
    const S7: f64 = -1.0 / 5040.0;
    const S9: f64 = 1.0 / 362_880.0;
    const S11: f64 = -1.0 / 39_916_800.0;
    const C2: f64 = -0.5;
    const C4: f64 = 1.0 / 24.0;
    const C6: f64 = -1.0 / 720.0;
    const C8: f64 = 1.0 / 40_320.0;
    const C10: f64 = -1.0 / 3_628_800.0;
    let sp = S11
        .mul_add(r2, S9)
        .mul_add(r2, S7)
        .mul_add(r2, S5)
        .mul_add(r2, S3);
    let s = (sp * r2).mul_add(r, r);
    let cp = C10
        .mul_add(r2, C8)
        .mul_add(r2, C6)
        .mul_add(r2, C4)
        .mul_add(r2, C2);
    let c = cp.mul_add(r2, 1.0);

    // quadrant selection as arithmetic blends so the loop vectorises
    let quadrant = (shifted.to_bits() & 3) as i32;
    let swap = (quadrant & 1) as f64;
    let sin_sign = 1.0 - 2.0 * ((quadrant >> 1) & 1) as f64;
    let cos_sign = 1.0 - 2.0 * (((quadrant + 1) >> 1) & 1) as f64;
    let sv = swap * c + (1.0 - swap) * s;
    let cv = swap * s + (1.0 - swap) * c;
    (sin_sign * sv, cos_sign * cv)
}

/// Strided read-only matrix view used to describe GEMM operands.
#[derive(Clone, Copy, Debug)]
pub struct View<'a, T> {
    pub data: &'a [T],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a, T> View<'a, T> {
    /// Row-major `rows x cols` view.
    pub fn row_major(data: &'a [T], rows: usize, cols: usize) -> Self {
        View {
            data,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    /// The transpose of a row-major `rows x cols` buffer, i.e. a `cols x rows` view.
    pub fn transposed(data: &'a [T], rows: usize, cols: usize) -> Self {
        View {
            data,
            rows: cols,
            cols: rows,
            row_stride: 1,
            col_stride: cols,
        }
    }

    fn max_index(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            0
        } else {
            (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride
        }
    }
}

/// `c = alpha * a * b + beta * c` where `c` is row-major `a.rows x b.cols`.
///
/// Panics when the operand shapes disagree; callers validate user input
/// before reaching this kernel.
pub fn gemm<T: Scalar>(alpha: T, a: View<'_, T>, b: View<'_, T>, beta: T, c: &mut [T]) {
    assert_eq!(a.cols, b.rows, "gemm inner dimensions");
    assert_eq!(c.len(), a.rows * b.cols, "gemm output length");
    if a.rows == 0 || b.cols == 0 {
        return;
    }
    if a.cols == 0 {
        for v in c.iter_mut() {
            *v = *v * beta;
        }
        return;
    }
    assert!(a.max_index() < a.data.len(), "gemm lhs out of bounds");
    assert!(b.max_index() < b.data.len(), "gemm rhs out of bounds");
    // SAFETY: bounds of all three operands were checked above.
    unsafe {
        T::gemm_raw(
            a.rows,
            a.cols,
            b.cols,
            alpha,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            beta,
            c.as_mut_ptr(),
            b.cols as isize,
            1,
        );
    }
}
