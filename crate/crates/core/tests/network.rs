use pixgrasp::datasets::Modality;
use pixgrasp::evaluation::{measure_timing, write_reports, EvalOptions, EvaluationReport};
use pixgrasp::network::{build_network, count_parameters, load_checkpoint, save_checkpoint, spp_pool, NetworkConfig};
use pixgrasp::Error;
use pixgrasp_nn::Tensor;

#[test]
fn default_parameter_count_is_in_budget() {
    let net = build_network(NetworkConfig::default(), 0).unwrap();
    let n = count_parameters(&net);
    assert!((1_300_000..=1_450_000).contains(&n), "{n} parameters");
}

#[test]
fn forward_preserves_spatial_shape() {
    for modality in [Modality::Depth, Modality::Rgb, Modality::RgbD] {
        let net = build_network(NetworkConfig::default().with_input_channels(modality.channels()), 1).unwrap();
        for size in [224, 304, 320, 480] {
            let x = Tensor::full([1, modality.channels(), size, size], 0.25f32);
            let y = net.infer(&x).unwrap();
            assert_eq!(y.shape(), [1, 4, size, size], "{modality} at {size}");
            assert!(y.data().iter().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn indivisible_input_is_a_shape_error() {
    let net = build_network(NetworkConfig::default(), 0).unwrap();
    let err = net.infer(&Tensor::full([1, 4, 100, 100], 0.0f32)).unwrap_err();
    assert!(matches!(err, Error::Shape(_) | Error::Nn(_)), "{err}");
    let err = net.infer(&Tensor::full([1, 3, 224, 224], 0.0f32)).unwrap_err();
    assert!(matches!(err, Error::Shape(_) | Error::Nn(_)), "{err}");
}

#[test]
fn spp_keeps_shape_and_concatenates_levels() {
    let x = Tensor::from_vec([1, 2, 6, 6], (0..72).map(|v| v as f32).collect()).unwrap();
    let y = spp_pool(&x, &[5, 9, 13]).unwrap();
    assert_eq!(y.shape(), [1, 8, 6, 6]);
    // The largest kernel covers the whole 6x6 map from every pixel.
    assert!(y.plane(0, 7).iter().all(|&v| v == 71.0));
    assert_eq!(y.plane(0, 0), x.plane(0, 0));
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = NetworkConfig { stem_channels: 8, channel_schedule: vec![8, 16], head_channels: 4, ..NetworkConfig::default() };
    let net = build_network(cfg.clone(), 3).unwrap();
    let path = dir.path().join("n.ckpt");
    save_checkpoint(&net, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back.config(), &cfg);
    let x = Tensor::full([1, 4, 32, 32], 0.3f32);
    assert_eq!(net.infer(&x).unwrap().data(), back.infer(&x).unwrap().data());
    assert!(matches!(load_checkpoint(&dir.path().join("absent.ckpt")), Err(Error::FileNotFound(_))));
}

#[test]
fn timing_report_separates_forward_and_end_to_end() {
    let net = build_network(NetworkConfig::default(), 0).unwrap();
    let t = measure_timing(&net, 480, Modality::RgbD, 1, &EvalOptions::default()).unwrap();
    assert_eq!((t.input_size, t.modality.as_str()), (480, "rgbd"));
    assert!(t.forward_ms > 0.0 && t.decode_ms > 0.0);
    assert!((t.end_to_end_ms - t.forward_ms - t.decode_ms).abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let report = EvaluationReport {
        dataset: "cornell".into(),
        modality: "rgbd".into(),
        input_size: 480,
        n_samples: 0,
        n_correct: 0,
        accuracy: 0.0,
        mean_inference_ms: t.forward_ms,
    };
    write_reports(dir.path(), &report, &[], Some(&t)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("timing.json")).unwrap()).unwrap();
    for key in ["forward_ms", "decode_ms", "end_to_end_ms"] {
        assert!(v[key].as_f64().is_some(), "{key}");
    }
}
