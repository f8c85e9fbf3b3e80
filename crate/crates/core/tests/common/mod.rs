//! Helpers shared by integration test targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmlp_core::model::{backward, forward, Architecture, ModelConfig, ModelParams};
use tmlp_core::numerics::{finite_difference_gradient, max_relative_error};
use tmlp_core::training::{total_loss, LossKind, LossWeights};

/// One randomly drawn gradient-check problem.
pub struct GradCase {
    pub config: ModelConfig,
    pub kind: LossKind,
    pub weights: LossWeights,
    pub x: Vec<f64>,
    pub gt: Vec<f64>,
}

/// Case `i` of the gradient suite. Architectures cycle with period 5 and
/// loss kinds with period 2, so any 10 consecutive cases cover every pair.
pub fn grad_case(i: usize, seed: u64) -> GradCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9));
    let architecture = Architecture::ALL[i % 5];
    let kind = if i % 2 == 0 {
        LossKind::L1Sdf
    } else {
        LossKind::L2Image
    };
    let k = rng.random_range(2..=3);
    let (input_dim, output_dim) = match kind {
        LossKind::L1Sdf => (rng.random_range(2..=3), 1),
        LossKind::L2Image => (2, if rng.random_bool(0.5) { 1 } else { 3 }),
    };
    let config = ModelConfig {
        input_dim,
        output_dim,
        hidden_width: rng.random_range(2..=16),
        num_hidden_layers: k,
        omega0: 30.0,
        architecture,
        seed: rng.random(),
    };
    let lambda: Vec<f64> = (0..k)
        .map(|_| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(0.1..2.0)
            }
        })
        .collect();
    let mut lambda = lambda;
    lambda[k - 1] = lambda[k - 1].max(0.5);
    let n = rng.random_range(3..=8);
    let x = (0..n * input_dim)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let gt = (0..n * output_dim)
        .map(|_| rng.random_range(-0.5..1.0))
        .collect();
    GradCase {
        config,
        kind,
        weights: LossWeights::new(lambda).expect("valid weights"),
        x,
        gt,
    }
}

/// Max relative error between backprop and central differences with step
/// `h`, both in binary64.
pub fn grad_check(case: &GradCase, h: f64) -> f64 {
    let params = ModelParams::<f64>::init_siren(case.config.clone()).expect("valid config");
    let (out, trace) = forward(&params, &case.x).expect("forward");
    let eval = total_loss(&out, &case.gt, &case.weights, case.kind).expect("loss");
    let analytic = backward(&params, &trace, &eval.grads).expect("backward");
    let loss = |p: &[f64]| {
        let m = ModelParams::from_values(case.config.clone(), p.to_vec()).expect("values");
        let (o, _) = forward(&m, &case.x).expect("forward");
        total_loss(&o, &case.gt, &case.weights, case.kind)
            .expect("loss")
            .total
    };
    let numeric = finite_difference_gradient(loss, params.values(), h).expect("oracle");
    max_relative_error(&analytic, &numeric, 1e-6)
}

/// Checks prefix-decode equivalence for one random `k = 5`, width-32 model:
/// every prefix decodes to the truncated model with bit-identical outputs
/// on `inputs` random coordinates. Returns the number of comparisons made.
pub fn prefix_equivalence(seed: u64, inputs: usize) -> Result<usize, String> {
    use tmlp_core::stream::{decode_prefix, encode, ContainerHeader};

    let config = ModelConfig {
        input_dim: 2,
        output_dim: 1,
        hidden_width: 32,
        num_hidden_layers: 5,
        omega0: 30.0,
        architecture: Architecture::Tmlp,
        seed,
    };
    let params = ModelParams::<f32>::init_siren(config).map_err(|e| e.to_string())?;
    let bytes = encode(&params).map_err(|e| e.to_string())?;
    let header = ContainerHeader::parse(&bytes).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let x: Vec<f32> = (0..2 * inputs)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let mut checks = 0;
    let mut last_len = 24;
    for j in 1..=5 {
        let prefix = header.prefix_len(j);
        if prefix <= last_len {
            return Err(format!("prefix length not increasing at {j}"));
        }
        last_len = prefix;
        let truncated = params.truncate(j).map_err(|e| e.to_string())?;
        let (want, _) = forward(&truncated, &x).map_err(|e| e.to_string())?;
        // Both an exact prefix and a limit on the full stream.
        for (slice, limit) in [(&bytes[..prefix], None), (&bytes[..], Some(j))] {
            let (decoded, got_j) = decode_prefix(slice, limit).map_err(|e| e.to_string())?;
            if got_j != j || decoded.values() != truncated.values() {
                return Err(format!("layer {j}: decoded parameters differ"));
            }
            let (got, _) = forward(&decoded, &x).map_err(|e| e.to_string())?;
            for i in 0..j {
                if got.y(i) != want.y(i) {
                    return Err(format!("layer {j}: y_{} differs", i + 1));
                }
                checks += 1;
            }
        }
    }
    Ok(checks)
}

/// Flips one random byte inside every chunk in turn and checks that the
/// error names that chunk while all earlier chunks still decode.
pub fn corruption_locality(seed: u64) -> Result<(), String> {
    use tmlp_core::stream::{chunk_iter, decode_prefix, encode};
    use tmlp_core::Error;

    let params = ModelParams::<f32>::init_siren(ModelConfig {
        hidden_width: 32,
        num_hidden_layers: 5,
        seed,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let bytes = encode(&params).map_err(|e| e.to_string())?;
    let chunks: Vec<_> = chunk_iter(&bytes).map_err(|e| e.to_string())?.collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, chunk) in chunks.iter().enumerate() {
        let layer = i + 1;
        let pos = rng.random_range(chunk.range.clone());
        let mut bad = bytes.clone();
        bad[pos] ^= 1 << rng.random_range(0..8);
        match decode_prefix(&bad, None) {
            Err(Error::Integrity(m)) if m.starts_with(&format!("chunk {layer}:")) => {}
            other => return Err(format!("byte {pos} in chunk {layer}: got {other:?}")),
        }
        if layer > 1 {
            let (m, j) = decode_prefix(&bad, Some(layer - 1)).map_err(|e| e.to_string())?;
            if j != layer - 1 || m.values() != params.truncate(j).unwrap().values() {
                return Err(format!("chunks before {layer} unusable"));
            }
        }
    }
    Ok(())
}
