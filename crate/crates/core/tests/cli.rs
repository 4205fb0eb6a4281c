use std::path::{Path, PathBuf};
use std::process::Command as Process;

use pixgrasp::cli::{dispatch, parse_config, AppConfig, Command, Flags};
use pixgrasp::datasets::write_cornell;
use pixgrasp::sim::{synthetic_dataset, Scene, SceneObject};
use pixgrasp::Error;

const TINY_NETWORK: &str = r#"
[network]
stem_channels = 8
channel_schedule = [8, 16]
num_residual_blocks = 1
spp_kernels = [3]
head_channels = 4
"#;

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_pixgrasp"))
}

fn tiny_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("app.toml");
    std::fs::write(&path, format!("{TINY_NETWORK}\n[train]\ninput_size = 64\nepochs = 1\nbatch_size = 4\n{extra}")).unwrap();
    path
}

fn dataset(dir: &Path) -> PathBuf {
    let root = dir.join("cornell");
    write_cornell(&root, &synthetic_dataset(10, 80, 5).unwrap()).unwrap();
    root
}

#[test]
fn input_size_flag_beats_file_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "[train]\ninput_size = 224\n").unwrap();
    let flags = Flags { input_size: Some(480), ..Flags::default() };
    assert_eq!(parse_config(Some(&path), &flags).unwrap().train.input_size, 480);
    assert_eq!(parse_config(Some(&path), &Flags::default()).unwrap().train.input_size, 224);
}

#[test]
fn modality_flag_sets_input_channels() {
    let flags = Flags { modality: Some("d".parse().unwrap()), ..Flags::default() };
    let cfg = parse_config(None, &flags).unwrap();
    assert_eq!(cfg.network.input_channels, 1);
}

#[test]
fn unknown_key_is_rejected_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "[train]\nbatch_sz = 4\n").unwrap();
    let err = parse_config(Some(&path), &Flags::default()).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("unknown key: train.batch_sz"), "{err}");
}

#[test]
fn eval_without_checkpoint_fails_naming_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["eval", "--out"]).arg(dir.path().join("run")).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--checkpoint"), "{stderr}");
    assert!(!dir.path().join("run").exists());
}

#[test]
fn missing_checkpoint_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.ckpt");
    let out = bin()
        .args(["predict", "--image", "x.png", "--checkpoint"])
        .arg(&missing)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("file not found") && stderr.contains("nope.ckpt"), "{stderr}");
}

#[test]
fn simulate_writes_one_result_per_scene() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    std::fs::create_dir_all(&scenes).unwrap();
    for (i, x) in [0.03, -0.04].into_iter().enumerate() {
        let block = SceneObject::block("block", [x, 0.02], 0.3, [0.012, 0.035], 0.03);
        let text = Scene::with_objects(vec![block]).to_toml_string().unwrap();
        std::fs::write(scenes.join(format!("scene{i}.toml")), text).unwrap();
    }
    let cfg_path = dir.path().join("sim.toml");
    std::fs::write(&cfg_path, "[sim]\ntimeout_s = 4.0\n").unwrap();
    let out_dir = dir.path().join("run");
    let status = bin()
        .args(["simulate", "--predictor", "oracle", "--config"])
        .arg(&cfg_path)
        .arg("--scenes")
        .arg(&scenes)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    for stem in ["scene0", "scene1"] {
        let text = std::fs::read_to_string(out_dir.join(format!("{stem}.json"))).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["success"], serde_json::Value::Bool(true), "{stem}");
    }
    let echoed = std::fs::read_to_string(out_dir.join("config.toml")).unwrap();
    let cfg = AppConfig::from_toml_str(&echoed, "echo").unwrap();
    assert_eq!(cfg.sim.timeout_s, 4.0);
    assert_eq!(cfg.run.scenes.as_deref(), Some(scenes.as_path()));
}

#[test]
fn train_eval_predict_visualize_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let root = dataset(dir.path());
    let cfg_path = tiny_config(dir.path(), "split_mode = \"image-wise\"\n");
    let flags = Flags { dataset_root: Some(root.clone()), ..Flags::default() };
    let cfg = parse_config(Some(&cfg_path), &flags).unwrap();

    let train_dir = dir.path().join("train");
    let trained = dispatch(Command::Train, &cfg, &train_dir).unwrap();
    let ckpt = train_dir.join("best.ckpt");
    assert!(ckpt.exists() && train_dir.join("metrics.csv").exists() && train_dir.join("config.toml").exists());
    assert!(trained.summary.contains("1 epochs"), "{}", trained.summary);

    // The echoed config alone reproduces the resolved configuration.
    let echoed = parse_config(Some(&train_dir.join("config.toml")), &Flags::default()).unwrap();
    assert_eq!(echoed, cfg);

    let flags = Flags { dataset_root: Some(root.clone()), checkpoint: Some(ckpt.clone()), ..Flags::default() };
    let mut cfg = parse_config(Some(&cfg_path), &flags).unwrap();
    cfg.eval.timing_runs = 1;
    let eval_dir = dir.path().join("eval");
    dispatch(Command::Eval, &cfg, &eval_dir).unwrap();
    for f in ["report.json", "samples.csv", "timing.json"] {
        assert!(eval_dir.join(f).exists(), "{f}");
    }

    let image = root.join("01").join("pcd0100r.png");
    let depth = root.join("01").join("pcd0100d.tiff");
    let flags = Flags { checkpoint: Some(ckpt), image: Some(image), depth: Some(depth), ..Flags::default() };
    let cfg = parse_config(Some(&cfg_path), &flags).unwrap();
    let pred_dir = dir.path().join("predict");
    let out = dispatch(Command::Predict, &cfg, &pred_dir).unwrap();
    let pngs = out.files.iter().filter(|p| p.extension().is_some_and(|e| e == "png")).count();
    assert_eq!(pngs, 4);
    assert!(pred_dir.join("overlay.png").exists());

    let flags = Flags { maps: Some(pred_dir.join("maps.safetensors")), ..Flags::default() };
    let cfg = parse_config(None, &flags).unwrap();
    let vis_dir = dir.path().join("vis");
    let out = dispatch(Command::Visualize, &cfg, &vis_dir).unwrap();
    assert_eq!(out.files.len(), 4);
    let names = |d: &Path| {
        let mut v: Vec<String> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".png"))
            .collect();
        v.sort();
        v
    };
    assert_eq!(names(&pred_dir), names(&vis_dir));
}
