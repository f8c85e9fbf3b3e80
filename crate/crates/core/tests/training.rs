use tmlp_core::model::{Architecture, ModelConfig, ModelParams};
use tmlp_core::seed::{rng_for, Stream};
use tmlp_core::signals::{grid_coords, ImageSampler, ImageSignal, SampleBatch, SdfSampler};
use tmlp_core::training::{
    probe_retrain_heads, train, train_from, LossWeights, LrSchedule, Sampler, TrainConfig,
};
use tmlp_core::Error;

fn pattern(n: usize) -> ImageSignal {
    let px = grid_coords(n, n)
        .chunks_exact(2)
        .map(|p| 0.5 + 0.4 * (3.0 * p[0]).sin() * (2.0 * p[1]).cos())
        .collect();
    ImageSignal::new(n, n, 1, px).unwrap()
}

fn small(arch: Architecture, k: usize) -> ModelConfig {
    ModelConfig {
        hidden_width: 16,
        num_hidden_layers: k,
        architecture: arch,
        seed: 4,
        ..Default::default()
    }
}

fn image_config(iterations: usize, k: usize) -> TrainConfig {
    TrainConfig {
        iterations,
        weights: LossWeights::uniform(k),
        schedule: LrSchedule::constant(1e-3),
        log_every: 10,
        ..TrainConfig::image_default()
    }
}

fn sampler(image: &ImageSignal) -> ImageSampler<f32> {
    ImageSampler::new(image, 0, rng_for(0, Stream::Sampler))
}

#[test]
fn zero_iterations_return_the_initial_model() {
    let image = pattern(8);
    let (params, history) = train(
        &image_config(0, 3),
        &small(Architecture::Tmlp, 3),
        &mut sampler(&image),
    )
    .unwrap();
    let init = ModelParams::<f32>::init_siren(small(Architecture::Tmlp, 3)).unwrap();
    assert_eq!(params.values(), init.values());
    assert!(history.records.is_empty());
}

#[test]
fn loss_decreases_on_a_smooth_image() {
    let image = pattern(16);
    let (_, history) = train(
        &image_config(200, 3),
        &small(Architecture::Tmlp, 3),
        &mut sampler(&image),
    )
    .unwrap();
    let (first, last) = (history.first().unwrap(), history.last().unwrap());
    assert_eq!(last.step, 199);
    assert!(
        last.total < 0.1 * first.total,
        "{} -> {}",
        first.total,
        last.total
    );
    let csv = history.to_csv();
    assert!(csv.starts_with("step,lr,loss_1,loss_2,loss_3,total\n"));
    assert_eq!(csv.lines().count(), 1 + 21);
}

#[test]
fn training_is_deterministic() {
    let image = pattern(12);
    let mut cfg = image_config(30, 3);
    cfg.batch_size = 50;
    let run = || {
        let mut s = ImageSampler::<f32>::new(&image, 50, rng_for(1, Stream::Sampler));
        train(&cfg, &small(Architecture::Tmlp, 3), &mut s).unwrap()
    };
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(a.values(), b.values());
    assert_eq!(ha, hb);
}

#[test]
fn unsupervised_independent_heads_stay_at_initialisation() {
    let image = pattern(8);
    let config = small(Architecture::TmlpNoResidual, 3);
    let mut cfg = image_config(20, 3);
    cfg.weights = LossWeights::new(vec![0.0, 0.0, 1.0]).unwrap();
    let init = ModelParams::<f32>::init_siren(config.clone()).unwrap();
    let (trained, _) = train_from(&cfg, init.clone(), &mut sampler(&image)).unwrap();
    for layer in 1..=2 {
        for slots in &init.layout().layer(layer).tail {
            let span = slots.weight.start..slots.bias.end;
            assert_eq!(trained.values()[span.clone()], init.values()[span]);
        }
    }
    let span = init.layout().layer(3).span.clone();
    assert_ne!(trained.values()[span.clone()], init.values()[span]);
}

#[test]
fn sdf_training_reduces_the_l1_error() {
    let shape = "circle2d 0 0 0.5".parse().unwrap();
    let mut s = SdfSampler::<f32>::new(shape, 500, rng_for(0, Stream::Sampler));
    let cfg = TrainConfig {
        iterations: 150,
        batch_size: 500,
        schedule: LrSchedule::sdf_default().rescaled(10_000, 150),
        log_every: 50,
        ..TrainConfig::sdf_default()
    };
    let (_, history) = train(&cfg, &small(Architecture::Tmlp, 5), &mut s).unwrap();
    let (first, last) = (history.first().unwrap(), history.last().unwrap());
    assert!(last.per_head[4] < 0.5 * first.per_head[4]);
}

struct Poisoned(SampleBatch<f32>);

impl Sampler<f32> for Poisoned {
    fn input_dim(&self) -> usize {
        2
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn next_batch(&mut self) -> &SampleBatch<f32> {
        &self.0
    }
}

#[test]
fn non_finite_targets_report_divergence() {
    let mut s = Poisoned(SampleBatch {
        coords: vec![0.0, 0.0, 0.5, 0.5],
        targets: vec![0.0, f32::NAN],
        dim: 2,
        output_dim: 1,
    });
    let err = train(&image_config(5, 2), &small(Architecture::Tmlp, 2), &mut s).unwrap_err();
    assert!(matches!(err, Error::Diverged { step: 0, .. }));
}

#[test]
fn mismatched_sampler_and_weights_are_rejected() {
    let rgb = ImageSignal::filled(4, 4, 3, 0.5).unwrap();
    assert!(train(
        &image_config(1, 3),
        &small(Architecture::Tmlp, 3),
        &mut sampler(&rgb)
    )
    .is_err());
    let grey = pattern(4);
    assert!(train(
        &image_config(1, 2),
        &small(Architecture::Tmlp, 3),
        &mut sampler(&grey)
    )
    .is_err());
}

#[test]
fn probing_keeps_the_trunk_frozen() {
    let image = pattern(16);
    let mut cfg = image_config(100, 3);
    let (trunk, _) = train(
        &cfg,
        &small(Architecture::PlainMlp, 3),
        &mut sampler(&image),
    )
    .unwrap();
    cfg.weights = LossWeights::uniform(1);
    let heads = probe_retrain_heads(&trunk, &mut sampler(&image), &cfg).unwrap();
    assert_eq!(
        heads.iter().map(|h| h.level).collect::<Vec<_>>(),
        vec![1, 2, 3]
    );
    for h in &heads {
        assert_eq!(h.model.config().architecture, Architecture::PlainMlp);
        assert_eq!(h.model.num_layers(), h.level);
        for l in 1..=h.level {
            let s = &trunk.layout().layer(l).hidden;
            let span = s.weight.start..s.bias.end;
            assert_eq!(h.model.values()[span.clone()], trunk.values()[span]);
        }
        let (first, last) = (h.history.first().unwrap(), h.history.last().unwrap());
        assert!(last.total <= first.total);
    }
    let tailed = ModelParams::<f32>::init_siren(small(Architecture::Tmlp, 3)).unwrap();
    assert!(probe_retrain_heads(&tailed, &mut sampler(&image), &cfg).is_err());
}
