//! Head probing on a frozen trunk.
//!
//! Starting from a trained single-head network with `k` hidden layers, a
//! fresh affine head is attached to hidden layer `j` for `j = k, ..., 1` and
//! only that head is optimised. Each resulting `j`-layer network shows what
//! an affine readout of layer `j` can reconstruct.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{forward, ModelConfig, ModelParams};
use crate::numerics::batch::{affine_backward, affine_forward};
use crate::numerics::{AdamState, Scalar};
use crate::seed::{rng_for, Stream};
use crate::training::{head_loss, HistoryRecord, Sampler, TrainConfig, TrainHistory};

/// A `level`-layer network sharing the trunk's first `level` hidden layers,
/// with a retrained affine head.
#[derive(Clone, Debug)]
pub struct ProbeHead<T> {
    pub level: usize,
    pub model: ModelParams<T>,
    pub history: TrainHistory,
}

/// Retrains a head on every hidden layer of `trunk`, deepest first, and
/// returns the models ordered by level (`M^1, ..., M^k`).
///
/// The deepest probe starts from the trunk's own head; shallower ones start
/// from a SIREN-style uniform head. The trunk is never modified.
pub fn probe_retrain_heads<T: Scalar, S: Sampler<T>>(
    trunk: &ModelParams<T>,
    sampler: &mut S,
    config: &TrainConfig,
) -> Result<Vec<ProbeHead<T>>> {
    config.validate()?;
    let tc = trunk.config();
    if tc.architecture.is_tailed() {
        return Err(Error::InvalidConfig(format!(
            "probing expects a single-head trunk, got {}",
            tc.architecture
        )));
    }
    if sampler.input_dim() != tc.input_dim || sampler.output_dim() != tc.output_dim {
        return Err(Error::shape(
            "probe_retrain_heads",
            format!("trunk {}->{}", tc.input_dim, tc.output_dim),
            format!("sampler {}->{}", sampler.input_dim(), sampler.output_dim()),
        ));
    }
    let k = trunk.num_layers();
    let mut rng = rng_for(config.seed, Stream::Probe);
    let mut heads = Vec::with_capacity(k);

    for level in (1..=k).rev() {
        let cfg = ModelConfig {
            num_hidden_layers: level,
            ..tc.clone()
        };
        let mut values: Vec<T> = Vec::with_capacity(cfg.parameter_count());
        for l in 1..=level {
            let s = &trunk.layout().layer(l).hidden;
            values.extend_from_slice(&trunk.values()[s.weight.start..s.bias.end]);
        }
        let head_start = values.len();
        if level == k {
            let s = &trunk.layout().layer(k).tail[0];
            values.extend_from_slice(&trunk.values()[s.weight.start..s.bias.end]);
        } else {
            let bound = (6.0 / tc.hidden_width as f64).sqrt() / tc.omega0;
            let n = tc.output_dim * (tc.hidden_width + 1);
            values.extend((0..n).map(|_| T::from_f64(rng.random_range(-bound..=bound))));
        }
        let mut model = ModelParams::from_values(cfg, values)?;
        let history = train_head(&mut model, head_start, sampler, config)?;
        heads.push(ProbeHead {
            level,
            model,
            history,
        });
    }
    heads.reverse();
    Ok(heads)
}

fn hidden_features<T: Scalar>(model: &ModelParams<T>, coords: &[T]) -> Result<Vec<T>> {
    let (_, mut trace) = forward(model, coords)?;
    Ok(trace.layers.pop().expect("at least one layer").hidden)
}

fn train_head<T: Scalar, S: Sampler<T>>(
    model: &mut ModelParams<T>,
    head_start: usize,
    sampler: &mut S,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    let level = model.num_layers();
    let width = model.config().hidden_width;
    let out_dim = model.config().output_dim;
    let n_weight = out_dim * width;
    let mut head: Vec<T> = model.values()[head_start..].to_vec();
    let mut adam = AdamState::with_config(head.len(), config.adam);
    let mut history = TrainHistory {
        levels: vec![level],
        num_layers: level,
        records: Vec::new(),
    };

    let cached = if sampler.is_fixed() {
        Some(hidden_features(model, &sampler.next_batch().coords)?)
    } else {
        None
    };
    for step in 0..config.iterations {
        let batch = sampler.next_batch();
        let computed;
        let features: &[T] = match &cached {
            Some(f) => f,
            None => {
                computed = hidden_features(model, &batch.coords)?;
                &computed
            }
        };
        let n = batch.count();
        let (weight, bias) = head.split_at(n_weight);
        let mut out = vec![T::zero(); n * out_dim];
        affine_forward(features, n, width, weight, bias, &mut out);
        let (loss, grad) = head_loss(&out, &batch.targets, config.loss_kind, 1.0);
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        let lr = config.lr_at(step);
        if step % config.log_every == 0 || step + 1 == config.iterations {
            history.records.push(HistoryRecord {
                step,
                lr,
                per_head: vec![loss],
                total: loss,
            });
        }
        let mut grads = vec![T::zero(); head.len()];
        let (dw, db) = grads.split_at_mut(n_weight);
        affine_backward(&grad, n, out_dim, features, width, weight, dw, db, None);
        adam.step(&mut head, &grads, lr)?;
    }
    model.values_mut()[head_start..].copy_from_slice(&head);
    Ok(history)
}
