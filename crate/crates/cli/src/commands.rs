//! Implementations of the `tmlp` verbs.

use std::path::{Path, PathBuf};

use tmlp_core::lod::{
    eval_lod, image_report, marching_cubes, marching_squares, mesh_to_obj, polylines_to_obj,
    render_grid, sdf_report, write_text, LodLevel, MetricReport, SdfEvalOptions,
};
use tmlp_core::model::{Architecture, ModelConfig, ModelParams};
use tmlp_core::seed::{rng_for, Stream};
use tmlp_core::signals::{
    add_gaussian_noise, image_coords, load_image, save_png, ImageSampler, ImageSignal, SdfSampler,
    SdfShape,
};
use tmlp_core::stream::{decode_prefix, encode, ContainerHeader};
use tmlp_core::training::{probe_retrain_heads, train, LossWeights, TrainConfig, TrainHistory};

use crate::config::{self, check_levels, RunConfig, SignalSpec, Task};
use crate::error::{CliError, CliResult};
use crate::{Cli, Command};

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Train => run_train(&load_config(cli)?),
        Command::Eval {
            model,
            image,
            shape,
            levels,
        } => run_eval(cli, model, image.as_deref(), shape.as_deref(), levels),
        Command::Probe => run_probe(&load_config(cli)?),
        Command::Truncate {
            model,
            layers,
            output,
        } => run_truncate(cli, model, *layers, output.as_deref()),
        Command::Render {
            model,
            level,
            resolution,
            iso,
        } => run_render(cli, model, *level, *resolution, *iso),
    }
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    config::load(path, cli.seed, cli.out.as_deref())
}

/// A loaded target signal. Image metrics compare against `clean`; training
/// uses `noisy`, which equals `clean` without noise.
enum Signal {
    Image {
        clean: ImageSignal,
        noisy: ImageSignal,
    },
    Shape(SdfShape),
}

fn load_signal(cfg: &RunConfig) -> CliResult<Signal> {
    match &cfg.signal {
        SignalSpec::Image { path, grayscale } => {
            let mut clean = load_image(path)?;
            if *grayscale {
                clean = clean.to_luma();
            }
            let noisy = match cfg.noise_sigma {
                Some(s) if s > 0.0 => {
                    add_gaussian_noise(&clean, s, &mut rng_for(cfg.seed, Stream::Noise))?
                }
                _ => clean.clone(),
            };
            Ok(Signal::Image { clean, noisy })
        }
        SignalSpec::Shape(shape) => Ok(Signal::Shape(shape.clone())),
    }
}

fn fit(
    train_cfg: &TrainConfig,
    model: &ModelConfig,
    signal: &Signal,
) -> CliResult<(ModelParams<f32>, TrainHistory)> {
    let rng = rng_for(train_cfg.seed, Stream::Sampler);
    let fitted = match signal {
        Signal::Image { noisy, .. } => {
            let mut sampler = ImageSampler::<f32>::new(noisy, train_cfg.batch_size, rng);
            train(train_cfg, model, &mut sampler)?
        }
        Signal::Shape(shape) => {
            let mut sampler = SdfSampler::<f32>::new(shape.clone(), train_cfg.batch_size, rng);
            train(train_cfg, model, &mut sampler)?
        }
    };
    Ok(fitted)
}

fn report(
    params: &ModelParams<f32>,
    signal: &Signal,
    levels: &[f64],
    resolution: usize,
    surface_samples: usize,
    seed: u64,
) -> CliResult<MetricReport> {
    let report = match signal {
        Signal::Image { clean, .. } => image_report(params, clean, levels)?,
        Signal::Shape(shape) => {
            let options = SdfEvalOptions {
                resolution,
                surface_samples,
            };
            sdf_report(
                params,
                shape,
                levels,
                &options,
                &mut rng_for(seed, Stream::Eval),
            )?
        }
    };
    Ok(report)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> CliResult<(Vec<u8>, ModelParams<f32>, usize)> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (params, layers) = decode_prefix(&bytes, None)?;
    Ok((bytes, params, layers))
}

/// `2`, `1.5`: the level as it appears in file names and tables.
fn level_tag(level: f64) -> String {
    format!("{level}")
}

fn print_report(report: &MetricReport) {
    print!("{}", report.to_csv());
}

/// Writes the render for one level: the reconstructed image, the zero
/// contour of a 2D field or the zero surface of a 3D field.
fn write_render(
    params: &ModelParams<f32>,
    signal: &Signal,
    level: f64,
    resolution: usize,
    out: &Path,
) -> CliResult<PathBuf> {
    let lod = LodLevel::new(level, params.num_layers())?;
    let tag = level_tag(level);
    match signal {
        Signal::Image { clean, .. } => {
            let x: Vec<f32> = image_coords(clean).into_iter().map(|v| v as f32).collect();
            let y = eval_lod(params, &x, lod)?;
            let values: Vec<f64> = y.iter().map(|&v| v as f64).collect();
            let image = ImageSignal::from_clamped(
                clean.width(),
                clean.height(),
                params.config().output_dim,
                &values,
            )?;
            let path = out.join(format!("render_L{tag}.png"));
            save_png(&image, &path)?;
            Ok(path)
        }
        Signal::Shape(shape) => {
            let field = render_grid(params, resolution, lod)?;
            let (path, text) = if shape.dim() == 2 {
                (
                    out.join(format!("contour_L{tag}.obj")),
                    polylines_to_obj(&marching_squares(&field, 0.0)),
                )
            } else {
                (
                    out.join(format!("mesh_L{tag}.obj")),
                    mesh_to_obj(&marching_cubes(&field, 0.0)),
                )
            };
            write_text(&path, &text)?;
            Ok(path)
        }
    }
}

fn run_train(cfg: &RunConfig) -> CliResult<()> {
    let signal = load_signal(cfg)?;
    create_dir(&cfg.out)?;
    if let (Signal::Image { noisy, .. }, Some(s)) = (&signal, cfg.noise_sigma) {
        if s > 0.0 {
            save_png(noisy, cfg.out.join("noisy.png"))?;
        }
    }
    let (params, history) = fit(&cfg.train, &cfg.model, &signal)?;
    let model_path = cfg.out.join("model.tmlp");
    write_bytes(&model_path, &encode(&params)?)?;
    write_text(cfg.out.join("history.csv"), &history.to_csv())?;

    let metrics = report(
        &params,
        &signal,
        &cfg.eval.levels,
        cfg.eval.resolution,
        cfg.eval.surface_samples,
        cfg.seed,
    )?;
    write_text(cfg.out.join("metrics.csv"), &metrics.to_csv())?;
    for &level in &cfg.eval.levels {
        write_render(&params, &signal, level, cfg.eval.resolution, &cfg.out)?;
    }
    if let Some(last) = history.last() {
        eprintln!(
            "trained {} for {} steps, final loss {:.6e}; wrote {}",
            cfg.model.architecture,
            cfg.train.iterations,
            last.total,
            cfg.out.display()
        );
    }
    print_report(&metrics);
    Ok(())
}

fn run_eval(
    cli: &Cli,
    model: &Path,
    image: Option<&Path>,
    shape: Option<&str>,
    levels: &[f64],
) -> CliResult<()> {
    let (_, params, _) = read_model(model)?;
    let mc = params.config().clone();
    let heads = mc.head_levels();

    let from_flags = image.is_some() || shape.is_some();
    let cfg = if from_flags {
        None
    } else {
        Some(load_config(cli)?)
    };
    let signal = match (image, shape, &cfg) {
        (Some(path), _, _) => {
            let clean = load_image(path)?;
            Signal::Image {
                noisy: clean.clone(),
                clean,
            }
        }
        (None, Some(text), _) => {
            let shape: SdfShape = text
                .parse()
                .map_err(|e| CliError::Config(format!("--shape: {e}")))?;
            Signal::Shape(shape)
        }
        (None, None, Some(cfg)) => load_signal(cfg)?,
        (None, None, None) => unreachable!("load_config either succeeds or errors"),
    };
    // A grey model is compared against the luma of a colour image.
    let signal = match signal {
        Signal::Image { clean, .. } if mc.output_dim == 1 && clean.channels() == 3 => {
            let luma = clean.to_luma();
            Signal::Image {
                noisy: luma.clone(),
                clean: luma,
            }
        }
        other => other,
    };

    let levels: Vec<f64> = if !levels.is_empty() {
        check_levels(levels, &heads, "--levels")?;
        levels.to_vec()
    } else if let Some(cfg) = &cfg {
        let k = mc.num_hidden_layers as f64;
        cfg.eval
            .levels
            .iter()
            .copied()
            .filter(|&l| l <= k)
            .collect()
    } else {
        heads.iter().map(|&l| l as f64).collect()
    };
    check_levels(&levels, &heads, "levels")?;

    let (resolution, samples, seed) = match &cfg {
        Some(c) => (c.eval.resolution, c.eval.surface_samples, c.seed),
        None => {
            let res = if mc.input_dim == 3 { 64 } else { 128 };
            (res, 2000, cli.seed.unwrap_or(0))
        }
    };
    let metrics = report(&params, &signal, &levels, resolution, samples, seed)?;
    if let Some(out) = &cli.out {
        create_dir(out)?;
        write_text(out.join("metrics.csv"), &metrics.to_csv())?;
    }
    print_report(&metrics);
    Ok(())
}

fn run_probe(cfg: &RunConfig) -> CliResult<()> {
    if cfg.task != Task::Image {
        return Err(CliError::Config(
            "task: probing is defined for image tasks".into(),
        ));
    }
    let signal = load_signal(cfg)?;
    let Signal::Image { clean, noisy } = &signal else {
        unreachable!("image task");
    };
    create_dir(&cfg.out)?;
    let k = cfg.model.num_hidden_layers;

    let plain_model = ModelConfig {
        architecture: Architecture::PlainMlp,
        ..cfg.model.clone()
    };
    let plain_train = TrainConfig {
        weights: LossWeights::uniform(k),
        ..cfg.train.clone()
    };
    let (plain, _) = fit(&plain_train, &plain_model, &signal)?;
    let mut sampler = ImageSampler::<f32>::new(
        noisy,
        cfg.train.batch_size,
        rng_for(cfg.seed, Stream::Sampler),
    );
    let probes = probe_retrain_heads(&plain, &mut sampler, &cfg.train)?;

    // Every level is supervised unless the config says otherwise, so that
    // each tailed output is comparable with its probe.
    let tailed_model = ModelConfig {
        architecture: Architecture::Tmlp,
        ..cfg.model.clone()
    };
    let tailed_train = TrainConfig {
        weights: if cfg.weights_given {
            cfg.train.weights.clone()
        } else {
            LossWeights::uniform(k)
        },
        ..cfg.train.clone()
    };
    let (tailed, _) = fit(&tailed_train, &tailed_model, &signal)?;
    write_bytes(&cfg.out.join("plain.tmlp"), &encode(&plain)?)?;
    write_bytes(&cfg.out.join("model.tmlp"), &encode(&tailed)?)?;

    let all: Vec<f64> = (1..=k).map(|l| l as f64).collect();
    let tailed_report = image_report(&tailed, clean, &all)?;
    let mut csv = String::from("level,probe_psnr,tmlp_psnr\n");
    for head in &probes {
        let probe_psnr = image_report(&head.model, clean, &[head.level as f64])?.rows[0].psnr;
        let tmlp_psnr = tailed_report.rows[head.level - 1].psnr;
        csv.push_str(&format!(
            "{},{:.9},{:.9}\n",
            head.level,
            probe_psnr.unwrap_or(f64::NAN),
            tmlp_psnr.unwrap_or(f64::NAN)
        ));
    }
    write_text(cfg.out.join("probe.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn run_truncate(cli: &Cli, model: &Path, layers: usize, output: Option<&Path>) -> CliResult<()> {
    let bytes =
        std::fs::read(model).map_err(|e| CliError::Io(format!("{}: {e}", model.display())))?;
    let header = ContainerHeader::parse(&bytes)?;
    let k = header.num_layers as usize;
    if layers == 0 || layers > k {
        return Err(CliError::Config(format!(
            "--layers: {layers} outside [1, {k}]"
        )));
    }
    let (_, available) = decode_prefix(&bytes, Some(layers))?;
    if available < layers {
        return Err(CliError::Io(format!(
            "{}: holds {available} complete layers, {layers} requested",
            model.display()
        )));
    }
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = match &cli.out {
                Some(d) => d.clone(),
                None => model.parent().unwrap_or(Path::new(".")).to_path_buf(),
            };
            let stem = model
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("model");
            dir.join(format!("{stem}.L{layers}.tmlp"))
        }
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let len = header.prefix_len(layers);
    write_bytes(&path, &bytes[..len])?;
    println!(
        "{} ({len} of {} bytes, {layers} of {k} layers)",
        path.display(),
        bytes.len()
    );
    Ok(())
}

fn run_render(
    cli: &Cli,
    model: &Path,
    level: Option<f64>,
    resolution: usize,
    iso: Option<f64>,
) -> CliResult<()> {
    let (_, params, layers) = read_model(model)?;
    let mc = params.config().clone();
    let level = level.unwrap_or(layers as f64);
    check_levels(&[level], &mc.head_levels(), "--level")?;
    if resolution < 2 {
        return Err(CliError::Config("--resolution: must be at least 2".into()));
    }
    let out = match &cli.out {
        Some(d) => d.clone(),
        None => model.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    create_dir(&out)?;
    let field = render_grid(&params, resolution, LodLevel::new(level, layers)?)?;
    let tag = level_tag(level);
    let mut written = Vec::new();
    match mc.input_dim {
        2 => {
            if !matches!(mc.output_dim, 1 | 3) {
                return Err(CliError::Runtime(format!(
                    "cannot render {} output channels as an image",
                    mc.output_dim
                )));
            }
            let path = out.join(format!("render_L{tag}.png"));
            save_png(&field.to_image()?, &path)?;
            written.push(path);
            if let Some(iso) = iso {
                if mc.output_dim != 1 {
                    return Err(CliError::Config(
                        "--iso: contours need a scalar field".into(),
                    ));
                }
                let path = out.join(format!("contour_L{tag}.obj"));
                write_text(&path, &polylines_to_obj(&marching_squares(&field, iso)))?;
                written.push(path);
            }
        }
        3 if mc.output_dim == 1 => {
            let path = out.join(format!("mesh_L{tag}.obj"));
            write_text(
                &path,
                &mesh_to_obj(&marching_cubes(&field, iso.unwrap_or(0.0))),
            )?;
            written.push(path);
        }
        d => {
            return Err(CliError::Runtime(format!(
                "cannot render a {d}D model with {} outputs",
                mc.output_dim
            )))
        }
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}
