//! Run configuration files.
//!
//! A run is described by a TOML file with a top-level `task` and optional
//! `[model]`, `[train]`, `[signal]` and `[eval]` tables:
//!
//! ```toml
//! task = "sdf2d"            # image | sdf2d | sdf3d
//! seed = 1
//! out = "runs/circle"
//!
//! [model]
//! architecture = "tmlp"     # tmlp_no_residual, tmlp_no_multiplicative, plain_mlp, residual_mlp
//! hidden_width = 64
//! num_hidden_layers = 5
//! omega0 = 30.0
//!
//! [train]
//! iterations = 3000
//! batch_size = 4096         # 0 picks a default for the signal
//! lr = 3e-4
//! lr_milestones = [2100, 2400, 2700]
//! lr_decay = 0.25
//! loss_weights = [0, 0.5, 0.5, 0.5, 2.5]
//! log_every = 100
//!
//! [signal]
//! shape = "circle2d 0 0 0.5"  # or: image = "photo.png", grayscale = true
//! noise_sigma = 15            # image tasks only, 8-bit scale
//!
//! [eval]
//! levels = [2, 3, 4, 5]
//! resolution = 128
//! surface_samples = 2000
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tmlp_core::model::{Architecture, ModelConfig};
use tmlp_core::signals::SdfShape;
use tmlp_core::training::{LossKind, LossWeights, LrSchedule, TrainConfig};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Image,
    Sdf2d,
    Sdf3d,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    architecture: Option<String>,
    hidden_width: Option<usize>,
    num_hidden_layers: Option<usize>,
    omega0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    iterations: Option<usize>,
    batch_size: Option<usize>,
    lr: Option<f64>,
    lr_milestones: Option<Vec<usize>>,
    lr_decay: Option<f64>,
    loss_weights: Option<Vec<f64>>,
    log_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    image: Option<PathBuf>,
    grayscale: Option<bool>,
    shape: Option<String>,
    noise_sigma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEval {
    levels: Option<Vec<f64>>,
    resolution: Option<usize>,
    surface_samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    task: Task,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    train: RawTrain,
    #[serde(default)]
    signal: RawSignal,
    #[serde(default)]
    eval: RawEval,
}

/// What the network is fitted to.
#[derive(Clone, Debug, PartialEq)]
pub enum SignalSpec {
    Image { path: PathBuf, grayscale: bool },
    Shape(SdfShape),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub levels: Vec<f64>,
    /// Grid cells per axis for SDF error fields, contours and renders.
    pub resolution: usize,
    pub surface_samples: usize,
}

/// A validated run description with every default filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub seed: u64,
    pub out: PathBuf,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Whether `train.loss_weights` was given explicitly.
    pub weights_given: bool,
    pub signal: SignalSpec,
    pub noise_sigma: Option<f64>,
    pub eval: EvalConfig,
}

fn config_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

/// Reads and validates a config file. `seed` and `out` override the file.
pub fn load(path: &Path, seed: Option<u64>, out: Option<&Path>) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base, seed, out)
}

/// Parses config text, resolving relative paths against `base`.
pub fn parse(
    text: &str,
    base: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
) -> CliResult<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let task = raw.task;
    let seed = seed.or(raw.seed).unwrap_or(0);
    let resolve = |p: &Path| {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let out = match (out, &raw.out) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => resolve(o),
        (None, None) => PathBuf::from("tmlp-out"),
    };

    let (signal, input_dim, output_dim) = match task {
        Task::Image => {
            if raw.signal.shape.is_some() {
                return Err(config_error("signal.shape", "not used by image tasks"));
            }
            let path = raw
                .signal
                .image
                .as_deref()
                .map(resolve)
                .ok_or_else(|| config_error("signal.image", "required for image tasks"))?;
            if !path.is_file() {
                return Err(config_error(
                    "signal.image",
                    format!("{} does not exist", path.display()),
                ));
            }
            let grayscale = raw.signal.grayscale.unwrap_or(false);
            let channels = if grayscale { 1 } else { image_channels(&path)? };
            (SignalSpec::Image { path, grayscale }, 2, channels)
        }
        Task::Sdf2d | Task::Sdf3d => {
            if raw.signal.image.is_some() || raw.signal.grayscale.is_some() {
                return Err(config_error("signal.image", "not used by sdf tasks"));
            }
            if raw.signal.noise_sigma.is_some() {
                return Err(config_error(
                    "signal.noise_sigma",
                    "only image tasks take noise",
                ));
            }
            let text = raw
                .signal
                .shape
                .as_deref()
                .ok_or_else(|| config_error("signal.shape", "required for sdf tasks"))?;
            let shape: SdfShape = text.parse().map_err(|e| config_error("signal.shape", e))?;
            let dim = if task == Task::Sdf2d { 2 } else { 3 };
            if shape.dim() != dim {
                return Err(config_error(
                    "signal.shape",
                    format!(
                        "{} is {}D but the task is {dim}D",
                        shape.kind(),
                        shape.dim()
                    ),
                ));
            }
            (SignalSpec::Shape(shape), dim, 1)
        }
    };
    if let Some(s) = raw.signal.noise_sigma {
        if !(s.is_finite() && s >= 0.0) {
            return Err(config_error(
                "signal.noise_sigma",
                "must be a non-negative number",
            ));
        }
    }

    let architecture = match raw.model.architecture.as_deref() {
        Some(a) => a
            .parse::<Architecture>()
            .map_err(|e| config_error("model.architecture", e))?,
        None => Architecture::Tmlp,
    };
    let model = ModelConfig {
        input_dim,
        output_dim,
        hidden_width: raw.model.hidden_width.unwrap_or(256),
        num_hidden_layers: raw.model.num_hidden_layers.unwrap_or(5),
        omega0: raw.model.omega0.unwrap_or(30.0),
        architecture,
        seed,
    };
    model.validate().map_err(|e| config_error("model", e))?;
    let k = model.num_hidden_layers;

    let defaults = match task {
        Task::Image => TrainConfig::image_default(),
        _ => TrainConfig::sdf_default(),
    };
    let iterations = raw.train.iterations.unwrap_or(defaults.iterations);
    let initial = raw.train.lr.unwrap_or(defaults.initial_lr());
    let schedule = match (&raw.train.lr_milestones, task) {
        (Some(steps), _) => {
            let decay = raw.train.lr_decay.unwrap_or(0.25);
            LrSchedule::new(initial, steps.iter().map(|&s| (s, decay)).collect())
                .map_err(|e| config_error("train.lr_milestones", e))?
        }
        (None, Task::Image) => LrSchedule::constant(initial),
        // The decay points scale with the run length.
        (None, _) => {
            let decay = raw.train.lr_decay.unwrap_or(0.25);
            let base = LrSchedule::sdf_default();
            let steps = base.milestones.iter().map(|&(s, _)| (s, decay)).collect();
            LrSchedule::new(initial, steps)
                .map_err(|e| config_error("train.lr", e))?
                .rescaled(defaults.iterations, iterations)
        }
    };
    schedule
        .validate()
        .map_err(|e| config_error("train.lr", e))?;
    let weights_given = raw.train.loss_weights.is_some();
    let weights = match raw.train.loss_weights {
        Some(w) => LossWeights::new(w).map_err(|e| config_error("train.loss_weights", e))?,
        None if k == 5 => defaults.weights.clone(),
        None => LossWeights::uniform(k),
    };
    if weights.len() != k {
        return Err(config_error(
            "train.loss_weights",
            format!("{} weights for {k} hidden layers", weights.len()),
        ));
    }
    let train = TrainConfig {
        iterations,
        batch_size: raw.train.batch_size.unwrap_or(defaults.batch_size),
        schedule,
        loss_kind: if task == Task::Image {
            LossKind::L2Image
        } else {
            LossKind::L1Sdf
        },
        weights,
        seed,
        log_every: raw.train.log_every.unwrap_or(defaults.log_every),
        adam: defaults.adam,
    };
    train.validate().map_err(|e| config_error("train", e))?;

    let heads = model.head_levels();
    let levels = match raw.eval.levels {
        Some(l) => l,
        None if architecture.is_tailed() => (1..=k)
            .filter(|&l| train.weights.at(l) > 0.0)
            .map(|l| l as f64)
            .collect(),
        None => vec![k as f64],
    };
    check_levels(&levels, &heads, "eval.levels")?;
    let default_resolution = if task == Task::Sdf3d { 64 } else { 128 };
    let eval = EvalConfig {
        levels,
        resolution: raw.eval.resolution.unwrap_or(default_resolution),
        surface_samples: raw.eval.surface_samples.unwrap_or(2000),
    };
    if eval.resolution < 2 {
        return Err(config_error("eval.resolution", "must be at least 2"));
    }
    if eval.surface_samples == 0 {
        return Err(config_error("eval.surface_samples", "must be positive"));
    }

    Ok(RunConfig {
        task,
        seed,
        out,
        model,
        train,
        weights_given,
        signal,
        noise_sigma: raw.signal.noise_sigma,
        eval,
    })
}

/// Checks that each level lies in `[1, k]` and only blends levels that have
/// an output.
pub fn check_levels(levels: &[f64], heads: &[usize], field: &str) -> CliResult<()> {
    let k = heads.last().copied().unwrap_or(0);
    if levels.is_empty() {
        return Err(config_error(field, "no levels given"));
    }
    for &l in levels {
        if !(l.is_finite() && l >= 1.0 && l <= k as f64) {
            return Err(config_error(field, format!("level {l} outside [1, {k}]")));
        }
        let lo = l.floor() as usize;
        let needed: &[usize] = if l == l.floor() {
            &[lo][..]
        } else {
            &[lo, lo + 1][..]
        };
        if let Some(missing) = needed.iter().find(|n| !heads.contains(n)) {
            return Err(config_error(
                field,
                format!("level {l} needs an output at layer {missing}, which this model lacks"),
            ));
        }
    }
    Ok(())
}

/// Channel count of a PNG without decoding it: 1 for grey, 3 for colour.
fn image_channels(path: &Path) -> CliResult<usize> {
    tmlp_core::signals::load_image(path)
        .map(|i| i.channels())
        .map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sdf(text: &str) -> CliResult<RunConfig> {
        parse(
            &format!("task = \"sdf2d\"\n[signal]\nshape = \"circle2d 0 0 0.5\"\n{text}"),
            Path::new("."),
            None,
            None,
        )
    }

    #[test]
    fn sdf_defaults() {
        let cfg = sdf("").unwrap();
        assert_eq!(cfg.model.hidden_width, 256);
        assert_eq!(cfg.model.num_hidden_layers, 5);
        assert_eq!(cfg.train.weights.as_slice(), &[0.0, 0.5, 0.5, 0.5, 2.5]);
        assert_eq!(cfg.train.iterations, 10_000);
        assert!((cfg.train.lr_at(7000) - 3e-4 * 0.25).abs() < 1e-18);
        assert_eq!(cfg.eval.levels, vec![2.0, 3.0, 4.0, 5.0]);
        assert_eq!(cfg.model.input_dim, 2);
    }

    #[test]
    fn shorter_runs_rescale_the_decay() {
        let cfg = sdf("[train]\niterations = 3000").unwrap();
        assert_eq!(cfg.train.lr_at(2099), 3e-4);
        assert!((cfg.train.lr_at(2100) - 7.5e-5).abs() < 1e-18);
    }

    #[test]
    fn overrides_and_field_errors() {
        let cfg = parse(
            "task = \"sdf3d\"\nseed = 4\n[signal]\nshape = \"sphere3d 0 0 0 0.5\"\n[model]\nnum_hidden_layers = 3",
            Path::new("."),
            Some(9),
            Some(Path::new("elsewhere")),
        )
        .unwrap();
        assert_eq!((cfg.seed, cfg.model.seed, cfg.train.seed), (9, 9, 9));
        assert_eq!(cfg.out, PathBuf::from("elsewhere"));
        assert_eq!(cfg.train.weights.as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(cfg.eval.resolution, 64);

        let err = |t: &str| sdf(t).unwrap_err().to_string();
        assert!(err("[train]\nloss_weights = [1, 1]").contains("train.loss_weights"));
        assert!(err("[model]\narchitecture = \"wide\"").contains("model.architecture"));
        assert!(err("[model]\nwidth = 3").contains("width"));
        assert!(err("[eval]\nlevels = [0.5]").contains("eval.levels"));
        assert!(
            err("[model]\narchitecture = \"plain_mlp\"\n[eval]\nlevels = [2]").contains("layer 2")
        );
        let wrong_dim = parse(
            "task = \"sdf3d\"\n[signal]\nshape = \"circle2d 0 0 0.5\"",
            Path::new("."),
            None,
            None,
        );
        assert!(matches!(wrong_dim, Err(CliError::Config(m)) if m.contains("signal.shape")));
    }

    #[test]
    fn image_tasks_need_an_existing_file() {
        let missing = parse(
            "task = \"image\"\n[signal]\nimage = \"nope.png\"",
            Path::new("."),
            None,
            None,
        );
        assert!(matches!(missing, Err(CliError::Config(m)) if m.contains("signal.image")));
        let no_signal = parse("task = \"image\"", Path::new("."), None, None);
        assert!(matches!(no_signal, Err(CliError::Config(_))));
    }
}
