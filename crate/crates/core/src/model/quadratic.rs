//! A multiplicative head written out as an explicit quadratic form.
//!
//! For one output coordinate with factor rows `a`, `b` and biases `c`, `d`:
//! `(a·h + c)(b·h + d) = hᵀ(abᵀ)h + (d a + c b)·h + c d`.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::Matrix;

#[derive(Clone, Debug)]
pub struct QuadraticForm {
    pub q: Matrix<f64>,
    pub u: Vec<f64>,
    pub s: f64,
    /// `hᵀ Q h + uᵀ h + s` at the queried hidden state.
    pub value: f64,
}

/// One quadratic form per output coordinate for the head on `layer`,
/// evaluated at hidden state `h`.
pub fn tail_quadratic_oracle(
    params: &ModelParams<f64>,
    layer: usize,
    h: &[f64],
) -> Result<Vec<QuadraticForm>> {
    let k = params.num_layers();
    if layer < 2 || layer > k {
        return Err(Error::LevelOutOfRange {
            level: layer as f64,
            max: k,
        });
    }
    let tail = params.tail(layer);
    let [f0, f1] = tail.as_slice() else {
        return Err(Error::InvalidConfig(format!(
            "layer {layer} of {} has no multiplicative head",
            params.config().architecture
        )));
    };
    let width = f0.cols;
    if h.len() != width {
        return Err(Error::shape(
            "tail_quadratic_oracle",
            format!("hidden width {width}"),
            format!("h[{}]", h.len()),
        ));
    }

    let forms = (0..f0.rows)
        .map(|o| {
            let a = &f0.weight[o * width..(o + 1) * width];
            let b = &f1.weight[o * width..(o + 1) * width];
            let (c, d) = (f0.bias[o], f1.bias[o]);
            let q = Matrix::from_fn(width, width, |r, col| a[r] * b[col]);
            let u: Vec<f64> = a.iter().zip(b).map(|(&ai, &bi)| d * ai + c * bi).collect();
            let s = c * d;
            let mut quad = 0.0;
            for r in 0..width {
                let row: f64 = q.row(r).iter().zip(h).map(|(&qv, &hv)| qv * hv).sum();
                quad += h[r] * row;
            }
            let lin: f64 = u.iter().zip(h).map(|(&uv, &hv)| uv * hv).sum();
            QuadraticForm {
                value: quad + lin + s,
                q,
                u,
                s,
            }
        })
        .collect();
    Ok(forms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward, Architecture, ModelConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(arch: Architecture, seed: u64) -> ModelParams<f64> {
        ModelParams::init_siren(ModelConfig {
            input_dim: 2,
            output_dim: 3,
            hidden_width: 7,
            num_hidden_layers: 3,
            omega0: 30.0,
            architecture: arch,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn matches_the_head_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..1000 {
            let params = model(Architecture::Tmlp, trial);
            let layer = 2 + (trial as usize % 2);
            let h: Vec<f64> = (0..7).map(|_| rng.random_range(-1.5..1.5)).collect();
            let heads = params.tail(layer);
            let (f0, f1) = (heads[0].apply(&h).unwrap(), heads[1].apply(&h).unwrap());
            for (o, form) in tail_quadratic_oracle(&params, layer, &h)
                .unwrap()
                .iter()
                .enumerate()
            {
                assert!((form.value - f0[o] * f1[o]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn matches_the_forward_pass() {
        let params = model(Architecture::TmlpNoResidual, 4);
        let x = [0.3, -0.7, -0.1, 0.45];
        let (out, trace) = forward(&params, &x).unwrap();
        for layer in 2..=3 {
            let hidden = &trace.layers[layer - 1].hidden;
            for i in 0..2 {
                let h = &hidden[i * 7..(i + 1) * 7];
                let forms = tail_quadratic_oracle(&params, layer, h).unwrap();
                for (o, form) in forms.iter().enumerate() {
                    assert!((form.value - out.t(layer - 1)[i * 3 + o]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn each_form_has_rank_at_most_one() {
        let params = model(Architecture::Tmlp, 8);
        for form in tail_quadratic_oracle(&params, 2, &[0.1; 7]).unwrap() {
            let q = &form.q;
            let scale = q.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (i, j) in (0..7).flat_map(|i| (0..7).map(move |j| (i, j))) {
                for (k, l) in [(0, 0), (3, 5), (6, 1)] {
                    let minor = q.get(i, j) * q.get(k, l) - q.get(i, l) * q.get(k, j);
                    assert!(minor.abs() <= 1e-12 * scale * scale);
                }
            }
        }
    }

    #[test]
    fn rejects_affine_heads_and_bad_states() {
        let params = model(Architecture::Tmlp, 1);
        assert!(tail_quadratic_oracle(&params, 1, &[0.0; 7]).is_err());
        assert!(tail_quadratic_oracle(&params, 2, &[0.0; 6]).is_err());
        let affine = model(Architecture::TmlpNoMultiplicative, 1);
        assert!(tail_quadratic_oracle(&affine, 2, &[0.0; 7]).is_err());
    }
}
