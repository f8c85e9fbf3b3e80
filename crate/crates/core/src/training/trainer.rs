use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{
    backward_into, forward_into, BackwardWorkspace, ForwardTrace, ModelConfig, ModelParams,
    TailOutputs,
};
use crate::numerics::{AdamConfig, AdamState, Scalar};
use crate::signals::SampleBatch;
use crate::training::{total_loss, LossKind, LossWeights, LrSchedule};

/// A source of training batches.
pub trait Sampler<T> {
    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    /// The batch for the next optimisation step.
    fn next_batch(&mut self) -> &SampleBatch<T>;

    /// True when every call returns the same batch (full-signal training).
    fn is_fixed(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Samples per step; 0 lets the signal pick (see `signals`).
    pub batch_size: usize,
    pub schedule: LrSchedule,
    pub loss_kind: LossKind,
    pub weights: LossWeights,
    pub seed: u64,
    /// History is recorded every `log_every` steps and at the last step.
    pub log_every: usize,
    pub adam: AdamConfig,
}

impl TrainConfig {
    /// Five-layer signed-distance defaults: 10k steps of 100k points, L1 loss,
    /// decayed learning rate.
    pub fn sdf_default() -> Self {
        TrainConfig {
            iterations: 10_000,
            batch_size: 100_000,
            schedule: LrSchedule::sdf_default(),
            loss_kind: LossKind::L1Sdf,
            weights: LossWeights::sdf_default(),
            seed: 0,
            log_every: 100,
            adam: AdamConfig::default(),
        }
    }

    /// Five-layer image defaults: 10k steps, L2 loss, constant 3e-4.
    pub fn image_default() -> Self {
        TrainConfig {
            iterations: 10_000,
            batch_size: 0,
            schedule: LrSchedule::constant(3e-4),
            loss_kind: LossKind::L2Image,
            weights: LossWeights::image_default(),
            seed: 0,
            log_every: 100,
            adam: AdamConfig::default(),
        }
    }

    pub fn initial_lr(&self) -> f64 {
        self.schedule.initial
    }

    pub fn lr_at(&self, step: usize) -> f64 {
        self.schedule.lr_at(step)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.log_every == 0 {
            return Err(Error::InvalidConfig("log_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryRecord {
    pub step: usize,
    pub lr: f64,
    /// Unweighted loss of each head, in head order.
    pub per_head: Vec<f64>,
    pub total: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    /// Hidden layer of each head, matching `HistoryRecord::per_head`.
    pub levels: Vec<usize>,
    pub num_layers: usize,
    pub records: Vec<HistoryRecord>,
}

impl TrainHistory {
    pub fn first(&self) -> Option<&HistoryRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&HistoryRecord> {
        self.records.last()
    }

    /// `step,lr,loss_1..loss_k,total`; layers without a head are left blank.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,lr");
        for l in 1..=self.num_layers {
            let _ = write!(out, ",loss_{l}");
        }
        out.push_str(",total\n");
        for r in &self.records {
            let _ = write!(out, "{},{:e}", r.step, r.lr);
            for l in 1..=self.num_layers {
                out.push(',');
                if let Some(j) = self.levels.iter().position(|&x| x == l) {
                    let _ = write!(out, "{:e}", r.per_head[j]);
                }
            }
            let _ = writeln!(out, ",{:e}", r.total);
        }
        out
    }
}

/// Trains a freshly initialised model.
pub fn train<T: Scalar, S: Sampler<T>>(
    config: &TrainConfig,
    model_config: &ModelConfig,
    sampler: &mut S,
) -> Result<(ModelParams<T>, TrainHistory)> {
    let params = ModelParams::init_siren(model_config.clone())?;
    train_from(config, params, sampler)
}

/// Runs `config.iterations` steps of forward, loss, backward and Adam
/// starting from `params`.
pub fn train_from<T: Scalar, S: Sampler<T>>(
    config: &TrainConfig,
    mut params: ModelParams<T>,
    sampler: &mut S,
) -> Result<(ModelParams<T>, TrainHistory)> {
    config.validate()?;
    let model_config = params.config().clone();
    if sampler.input_dim() != model_config.input_dim
        || sampler.output_dim() != model_config.output_dim
    {
        return Err(Error::shape(
            "train",
            format!(
                "model {}->{}",
                model_config.input_dim, model_config.output_dim
            ),
            format!("sampler {}->{}", sampler.input_dim(), sampler.output_dim()),
        ));
    }
    if config.weights.len() != model_config.num_hidden_layers {
        return Err(Error::InvalidConfig(format!(
            "{} loss weights for {} hidden layers",
            config.weights.len(),
            model_config.num_hidden_layers
        )));
    }

    let mut history = TrainHistory {
        levels: model_config.head_levels(),
        num_layers: model_config.num_hidden_layers,
        records: Vec::new(),
    };
    let mut adam = AdamState::with_config(params.values().len(), config.adam);

    let mut outputs = TailOutputs::new(&model_config);
    let mut trace = ForwardTrace::new();
    let mut workspace = BackwardWorkspace::new();
    let mut grads = Vec::new();

    for step in 0..config.iterations {
        let batch = sampler.next_batch();
        forward_into(&params, &batch.coords, &mut outputs, &mut trace).map_err(|e| match e {
            Error::NonFinite(_) => Error::Diverged {
                step,
                loss: f64::NAN,
            },
            other => other,
        })?;
        let loss = total_loss(&outputs, &batch.targets, &config.weights, config.loss_kind)?;
        if !loss.total.is_finite() {
            return Err(Error::Diverged {
                step,
                loss: loss.total,
            });
        }
        let lr = config.lr_at(step);
        if step % config.log_every == 0 || step + 1 == config.iterations {
            history.records.push(HistoryRecord {
                step,
                lr,
                per_head: loss.per_head.clone(),
                total: loss.total,
            });
        }
        backward_into(&params, &trace, &loss.grads, &mut workspace, &mut grads)?;
        adam.step(params.values_mut(), &grads, lr)
            .map_err(|e| match e {
                Error::NonFiniteGradient { .. } => Error::Diverged {
                    step,
                    loss: loss.total,
                },
                other => other,
            })?;
    }
    Ok((params, history))
}
