use pixgrasp::datasets::{load_cornell, write_cornell, Modality, SplitMode};
use pixgrasp::network::{load_checkpoint, Network, NetworkConfig};
use pixgrasp::sim::synthetic_dataset;
use pixgrasp::training::{
    gradient_check, overfit_probe, prepare_batch, train, GradCheckOptions, NetworkObjective, ProbeConfig, ToyNetwork,
    TrainConfig, Trainer, METRICS_HEADER,
};
use pixgrasp::Error;
use pixgrasp_nn::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_config() -> NetworkConfig {
    NetworkConfig {
        input_channels: 1,
        stem_channels: 4,
        channel_schedule: vec![4, 8],
        num_residual_blocks: 1,
        spp_kernels: vec![3],
        upsample_factor_per_stage: 2,
        head_channels: 4,
    }
}

#[test]
fn toy_network_gradients_match_finite_differences() {
    let mut toy = ToyNetwork::new(2, 4, 6, 1.0, 7);
    assert!(toy.num_params() <= 10_000);
    let r = gradient_check(&mut toy, &GradCheckOptions { samples_per_param: 40, ..Default::default() }).unwrap();
    println!("{r:?}");
    assert!(r.checked > 50);
    assert!(r.dead_params.is_empty());
    assert!(r.max_relative_error < 1e-4, "{r:?}");
}

#[test]
fn full_architecture_gradients_match_finite_differences() {
    let cfg = tiny_config();
    let net = Network::<f64>::new(cfg, 3).unwrap();
    assert!(net.count_parameters() <= 10_000, "{}", net.count_parameters());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (n, s) = (2, 8);
    let input = Tensor::from_vec([n, 1, s, s], (0..n * s * s).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let target = Tensor::from_vec([n, 4, s, s], (0..n * 4 * s * s).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap();
    let mut obj = NetworkObjective { net, input, target, beta: 1.0 };
    let r = gradient_check(&mut obj, &GradCheckOptions { samples_per_param: 6, ..Default::default() }).unwrap();
    println!("{r:?}");
    assert!(r.checked > 100);
    assert!(r.max_relative_error < 1e-4, "{r:?}");
}

#[test]
fn probe_loss_falls_almost_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    write_cornell(dir.path(), &synthetic_dataset(8, 256, 11).unwrap()).unwrap();
    let samples = load_cornell(dir.path(), 224).unwrap();
    let cfg = ProbeConfig { max_iterations: 50, eval_every: 50, ..ProbeConfig::default() };
    let (report, _) = overfit_probe(&samples, Modality::RgbD, &NetworkConfig::default(), &cfg).unwrap();
    let rises = report.losses.windows(2).filter(|w| w[1] > w[0]).count();
    assert_eq!(report.losses.len(), 50);
    assert!(rises <= 5, "{rises} increases in {:?}", report.losses);
    assert!(report.losses[49] < 0.5 * report.losses[0]);
}

#[test]
fn seeded_training_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_cornell(&dir.path().join("data"), &synthetic_dataset(12, 80, 21).unwrap()).unwrap();
    let samples = load_cornell(&dir.path().join("data"), 64).unwrap();
    let cfg = TrainConfig {
        input_size: 64,
        batch_size: 4,
        epochs: Some(2),
        split_mode: SplitMode::ObjectWise,
        seed: 9,
        ..TrainConfig::default()
    };
    let net = NetworkConfig { stem_channels: 8, channel_schedule: vec![8, 16], head_channels: 4, ..NetworkConfig::default() };
    let a = train(&cfg, &net, samples.clone(), &dir.path().join("a")).unwrap();
    let b = train(&cfg, &net, samples, &dir.path().join("b")).unwrap();
    assert_eq!(a.epochs.len(), 2);
    for (x, y) in a.epochs.iter().zip(&b.epochs) {
        assert!((x.loss_total - y.loss_total).abs() <= 1e-6 * x.loss_total.abs());
        assert_eq!(x.val_accuracy, y.val_accuracy);
    }
    let csv = std::fs::read_to_string(dir.path().join("a").join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], METRICS_HEADER);
    assert_eq!(lines.len(), 3);
    for n in 1..=2 {
        assert!(dir.path().join("a").join(format!("epoch_{n}.ckpt")).exists());
    }
    let best = load_checkpoint(&a.best_checkpoint).unwrap();
    assert_eq!(best.config().input_channels, 4);
}

#[test]
fn non_finite_loss_names_the_batch() {
    let samples = synthetic_dataset(2, 32, 4).unwrap();
    let refs: Vec<_> = samples.iter().collect();
    let (x, mut y) = prepare_batch(&refs, Modality::RgbD, 150.0).unwrap();
    y.data_mut()[5] = f32::NAN;
    let net = Network::new(
        NetworkConfig { stem_channels: 4, channel_schedule: vec![4, 8], head_channels: 4, ..NetworkConfig::default() },
        0,
    )
    .unwrap();
    let mut trainer = Trainer::new(net, 1e-3, 1.0);
    match trainer.train_step(&x, &y, "epoch 3 batch 7 [syn0000, syn0001]") {
        Err(Error::Diverged { batch, .. }) => assert!(batch.contains("batch 7") && batch.contains("syn0001")),
        other => panic!("expected divergence, got {other:?}"),
    }
}
