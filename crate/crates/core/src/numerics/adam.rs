use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// Adam hyperparameters other than the learning rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for one flat parameter buffer.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    first_moment: Vec<T>,
    second_moment: Vec<T>,
    step_count: u64,
    config: AdamConfig,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self::with_config(len, AdamConfig::default())
    }

    pub fn with_config(len: usize, config: AdamConfig) -> Self {
        AdamState {
            first_moment: vec![T::zero(); len],
            second_moment: vec![T::zero(); len],
            step_count: 0,
            config,
        }
    }

    pub fn len(&self) -> usize {
        self.first_moment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_moment.is_empty()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    pub fn first_moment(&self) -> &[T] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[T] {
        &self.second_moment
    }

    /// One bias-corrected Adam update of `params` in place.
    ///
    /// Gradients are validated before anything is mutated, so a rejected step
    /// leaves both `params` and the state untouched.
    pub fn step(&mut self, params: &mut [T], grads: &[T], lr: f64) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.len() {
            return Err(Error::shape(
                "adam_step",
                format!("params[{}], grads[{}]", params.len(), grads.len()),
                format!("state[{}]", self.len()),
            ));
        }
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }

        self.step_count += 1;
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);

        let b1 = T::from_f64(beta1);
        let b2 = T::from_f64(beta2);
        let one_minus_b1 = T::from_f64(1.0 - beta1);
        let one_minus_b2 = T::from_f64(1.0 - beta2);
        let step_size = T::from_f64(lr / bias1);
        let inv_sqrt_bias2 = T::from_f64(1.0 / bias2.sqrt());
        let eps = T::from_f64(epsilon);

        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = b1 * *m + one_minus_b1 * g;
            *v = b2 * *v + one_minus_b2 * g * g;
            *p = *p - step_size * *m / ((*v).sqrt() * inv_sqrt_bias2 + eps);
        }
        Ok(())
    }
}
