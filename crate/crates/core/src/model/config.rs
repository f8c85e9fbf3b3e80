use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Network family. The three `Tmlp*` variants attach a head to every hidden
/// layer; the two baselines only have a head after the last one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Architecture {
    Tmlp,
    TmlpNoResidual,
    TmlpNoMultiplicative,
    PlainMlp,
    ResidualMlp,
}

/// How a head maps its hidden state to an output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailKind {
    /// `W h + b`
    Affine,
    /// `(W0 h + b0) * (W1 h + b1)`, elementwise.
    Multiplicative,
}

impl TailKind {
    pub fn factors(self) -> usize {
        match self {
            TailKind::Affine => 1,
            TailKind::Multiplicative => 2,
        }
    }
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::Tmlp,
        Architecture::TmlpNoResidual,
        Architecture::TmlpNoMultiplicative,
        Architecture::PlainMlp,
        Architecture::ResidualMlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Tmlp => "tmlp",
            Architecture::TmlpNoResidual => "tmlp_no_residual",
            Architecture::TmlpNoMultiplicative => "tmlp_no_multiplicative",
            Architecture::PlainMlp => "plain_mlp",
            Architecture::ResidualMlp => "residual_mlp",
        }
    }

    /// Wire identifier used by the container header.
    pub fn id(self) -> u8 {
        match self {
            Architecture::Tmlp => 0,
            Architecture::TmlpNoResidual => 1,
            Architecture::TmlpNoMultiplicative => 2,
            Architecture::PlainMlp => 3,
            Architecture::ResidualMlp => 4,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.id() == id)
    }

    /// Head attached to hidden layer `layer` (1-based) of a `k`-layer network.
    pub fn tail_kind(self, layer: usize, k: usize) -> Option<TailKind> {
        match self {
            Architecture::Tmlp | Architecture::TmlpNoResidual => Some(if layer == 1 {
                TailKind::Affine
            } else {
                TailKind::Multiplicative
            }),
            Architecture::TmlpNoMultiplicative => Some(TailKind::Affine),
            Architecture::PlainMlp | Architecture::ResidualMlp => {
                (layer == k).then_some(TailKind::Affine)
            }
        }
    }

    /// Whether outputs accumulate across heads (`y_i = y_{i-1} + t_i`).
    pub fn accumulates(self) -> bool {
        matches!(
            self,
            Architecture::Tmlp | Architecture::TmlpNoMultiplicative
        )
    }

    /// Whether hidden layers after the first carry identity skips.
    pub fn has_skips(self) -> bool {
        self == Architecture::ResidualMlp
    }

    /// Whether every hidden layer carries a head.
    pub fn is_tailed(self) -> bool {
        !matches!(self, Architecture::PlainMlp | Architecture::ResidualMlp)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown architecture '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_width: usize,
    pub num_hidden_layers: usize,
    pub omega0: f64,
    pub architecture: Architecture,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 2,
            output_dim: 1,
            hidden_width: 256,
            num_hidden_layers: 5,
            omega0: 30.0,
            architecture: Architecture::Tmlp,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.input_dim == 0 || self.output_dim == 0 {
            return bad("input_dim and output_dim must be >= 1");
        }
        if self.hidden_width == 0 {
            return bad("hidden_width must be >= 1");
        }
        if self.num_hidden_layers == 0 {
            return bad("num_hidden_layers must be >= 1");
        }
        if !(self.omega0 > 0.0) || !self.omega0.is_finite() {
            return bad("omega0 must be a positive finite number");
        }
        Ok(())
    }

    pub fn tail_kind(&self, layer: usize) -> Option<TailKind> {
        self.architecture.tail_kind(layer, self.num_hidden_layers)
    }

    /// 1-based layers that carry a head, in order.
    pub fn head_levels(&self) -> Vec<usize> {
        (1..=self.num_hidden_layers)
            .filter(|&l| self.tail_kind(l).is_some())
            .collect()
    }

    /// Scalars stored for hidden layer `layer` including its head.
    pub fn layer_param_count(&self, layer: usize) -> usize {
        let fan_in = if layer == 1 {
            self.input_dim
        } else {
            self.hidden_width
        };
        let hidden = self.hidden_width * (fan_in + 1);
        hidden + self.tail_param_count(layer)
    }

    /// Scalars in the head attached to `layer`, zero when there is none.
    pub fn tail_param_count(&self, layer: usize) -> usize {
        self.tail_kind(layer).map_or(0, |k| {
            k.factors() * self.output_dim * (self.hidden_width + 1)
        })
    }

    pub fn parameter_count(&self) -> usize {
        (1..=self.num_hidden_layers)
            .map(|l| self.layer_param_count(l))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts_for_reference_configuration() {
        let cfg = ModelConfig {
            input_dim: 3,
            output_dim: 1,
            hidden_width: 256,
            num_hidden_layers: 5,
            ..ModelConfig::default()
        };
        assert_eq!(cfg.tail_param_count(1), 257);
        for l in 2..=5 {
            assert_eq!(cfg.tail_param_count(l), 514);
        }
        let hidden = 256 * 4 + 4 * 256 * 257;
        assert_eq!(cfg.parameter_count(), hidden + 257 + 4 * 514);

        let plain = ModelConfig {
            architecture: Architecture::PlainMlp,
            ..cfg.clone()
        };
        assert_eq!(plain.parameter_count(), hidden + 257);
        let residual = ModelConfig {
            architecture: Architecture::ResidualMlp,
            ..cfg.clone()
        };
        assert_eq!(residual.parameter_count(), hidden + 257);
        let no_mult = ModelConfig {
            architecture: Architecture::TmlpNoMultiplicative,
            ..cfg.clone()
        };
        assert_eq!(no_mult.parameter_count(), hidden + 5 * 257);
        let no_res = ModelConfig {
            architecture: Architecture::TmlpNoResidual,
            ..cfg
        };
        assert_eq!(no_res.parameter_count(), hidden + 257 + 4 * 514);
    }

    #[test]
    fn names_and_ids_round_trip() {
        for a in Architecture::ALL {
            assert_eq!(a.name().parse::<Architecture>().unwrap(), a);
            assert_eq!(Architecture::from_id(a.id()), Some(a));
        }
        assert!("siren".parse::<Architecture>().is_err());
        assert_eq!(Architecture::from_id(9), None);
    }

    #[test]
    fn validation() {
        assert!(ModelConfig::default().validate().is_ok());
        for cfg in [
            ModelConfig {
                num_hidden_layers: 0,
                ..Default::default()
            },
            ModelConfig {
                hidden_width: 0,
                ..Default::default()
            },
            ModelConfig {
                omega0: 0.0,
                ..Default::default()
            },
            ModelConfig {
                input_dim: 0,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn single_layer_tmlp_is_affine_siren() {
        let cfg = ModelConfig {
            num_hidden_layers: 1,
            ..Default::default()
        };
        assert_eq!(cfg.head_levels(), vec![1]);
        assert_eq!(cfg.tail_kind(1), Some(TailKind::Affine));
    }
}
