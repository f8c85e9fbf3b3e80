use crate::error::{Error, Result};

/// Central finite-difference gradient of `loss` at `params`.
///
/// Coordinate `i` is `(f(p + h e_i) - f(p - h e_i)) / 2h`. Always binary64.
pub fn finite_difference_gradient<F>(mut loss: F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "step h must be positive, got {h}"
        )));
    }
    let mut probe = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = loss(&probe);
        probe[i] = orig - h;
        let minus = loss(&probe);
        probe[i] = orig;
        for value in [plus, minus] {
            if !value.is_finite() {
                return Err(Error::Oracle { index: i, value });
            }
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Largest `|a - b| / max(|b|, floor)` over paired entries.
pub fn max_relative_error(analytic: &[f64], reference: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs() / b.abs().max(a.abs()).max(floor))
        .fold(0.0, f64::max)
}
