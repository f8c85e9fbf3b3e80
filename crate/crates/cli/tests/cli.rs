use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use tempfile::TempDir;
use tmlp_core::signals::{save_png, ImageSignal};
use tmlp_core::stream::{ContainerHeader, CHUNK_OVERHEAD, HEADER_LEN};

fn tmlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmlp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A 32x32 grey test pattern with smooth and sharp structure.
fn write_image(dir: &Path) -> PathBuf {
    let n = 32;
    let pixels = (0..n * n)
        .map(|i| {
            let (r, c) = ((i / n) as f64, (i % n) as f64);
            let stripe = if (r as usize / 8 + c as usize / 8) % 2 == 0 {
                0.2
            } else {
                0.0
            };
            0.5 + 0.3 * (0.3 * r).sin() * (0.2 * c).cos() + stripe - 0.1
        })
        .collect();
    let path = dir.join("pattern.png");
    save_png(&ImageSignal::new(n, n, 1, pixels).unwrap(), &path).unwrap();
    path
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const SMOKE: &str = r#"
task = "image"
seed = 5
out = "run"

[signal]
image = "pattern.png"

[model]
hidden_width = 16
num_hidden_layers = 2

[train]
iterations = 100
lr = 1e-3
log_every = 10
"#;

fn smoke_setup() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    write_image(dir.path());
    let cfg = write_config(dir.path(), "smoke.toml", SMOKE);
    (dir, cfg)
}

fn train_smoke(cfg: &Path, out: &Path) {
    let run = tmlp(&["train", "--config", s(cfg), "--out", s(out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn smoke_training_writes_every_artifact_quickly() {
    let (dir, cfg) = smoke_setup();
    let out = dir.path().join("run");
    let start = Instant::now();
    train_smoke(&cfg, &out);
    assert!(start.elapsed().as_secs_f64() < 10.0);
    for f in [
        "model.tmlp",
        "history.csv",
        "metrics.csv",
        "render_L1.png",
        "render_L2.png",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert!(history.starts_with("step,lr,loss_1,loss_2,total\n"));
    assert_eq!(history.lines().count(), 1 + 11);
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 2);
}

#[test]
fn same_seed_reproduces_the_run() {
    let (dir, cfg) = smoke_setup();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    train_smoke(&cfg, &a);
    train_smoke(&cfg, &b);
    for f in ["model.tmlp", "history.csv", "metrics.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let c = dir.path().join("c");
    let run = tmlp(&["train", "--config", s(&cfg), "--out", s(&c), "--seed", "6"]);
    assert_eq!(code(&run), 0);
    assert_ne!(
        std::fs::read(a.join("model.tmlp")).unwrap(),
        std::fs::read(c.join("model.tmlp")).unwrap()
    );
}

#[test]
fn eval_levels_and_self_comparison() {
    let (dir, cfg) = smoke_setup();
    let out = dir.path().join("run");
    train_smoke(&cfg, &out);
    let model = out.join("model.tmlp");

    let run = tmlp(&[
        "eval",
        "--model",
        s(&model),
        "--config",
        s(&cfg),
        "--levels",
        "1,1.5,2",
    ]);
    assert_eq!(code(&run), 0);
    let table = stdout(&run);
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("1.5,"));

    // The render is the model's own clamped, 8-bit output, so only
    // quantisation separates them.
    let render = out.join("render_L2.png");
    let run = tmlp(&[
        "eval",
        "--model",
        s(&model),
        "--image",
        s(&render),
        "--levels",
        "2",
    ]);
    assert_eq!(code(&run), 0);
    let psnr: f64 = stdout(&run)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(psnr > 40.0, "self PSNR {psnr}");
}

#[test]
fn truncation_is_a_byte_prefix() {
    let (dir, cfg) = smoke_setup();
    let out = dir.path().join("run");
    train_smoke(&cfg, &out);
    let model = out.join("model.tmlp");
    let full = std::fs::read(&model).unwrap();
    let header = ContainerHeader::parse(&full).unwrap();

    let same = dir.path().join("same.tmlp");
    let run = tmlp(&[
        "truncate",
        "--model",
        s(&model),
        "--layers",
        "2",
        "--output",
        s(&same),
    ]);
    assert_eq!(code(&run), 0);
    assert_eq!(std::fs::read(&same).unwrap(), full);

    let run = tmlp(&["truncate", "--model", s(&model), "--layers", "1"]);
    assert_eq!(code(&run), 0);
    let short = std::fs::read(out.join("model.L1.tmlp")).unwrap();
    assert_eq!(
        short.len(),
        HEADER_LEN + CHUNK_OVERHEAD + header.payload_len(1)
    );
    assert_eq!(&full[..short.len()], &short[..]);

    // A one-layer prefix evaluates at level 1 but not level 2.
    let l1 = out.join("model.L1.tmlp");
    let ok = tmlp(&["eval", "--model", s(&l1), "--config", s(&cfg)]);
    assert_eq!(code(&ok), 0);
    assert_eq!(stdout(&ok).lines().count(), 2);
    let too_deep = tmlp(&[
        "eval",
        "--model",
        s(&l1),
        "--config",
        s(&cfg),
        "--levels",
        "2",
    ]);
    assert_eq!(code(&too_deep), 1);
}

#[test]
fn render_writes_images_and_contours() {
    let (dir, cfg) = smoke_setup();
    let out = dir.path().join("run");
    train_smoke(&cfg, &out);
    let dest = dir.path().join("renders");
    let run = tmlp(&[
        "render",
        "--model",
        s(&out.join("model.tmlp")),
        "--level",
        "1.5",
        "--resolution",
        "24",
        "--iso",
        "0.5",
        "--out",
        s(&dest),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert!(dest.join("render_L1.5.png").is_file());
    assert!(dest.join("contour_L1.5.obj").is_file());
}

#[test]
fn sdf_tasks_write_contours_and_meshes() {
    let dir = TempDir::new().unwrap();
    let cfg2 = write_config(
        dir.path(),
        "circle.toml",
        r#"
task = "sdf2d"
seed = 1
[signal]
shape = "circle2d 0 0 0.5"
[model]
hidden_width = 16
num_hidden_layers = 3
omega0 = 10
[train]
iterations = 60
batch_size = 512
[eval]
resolution = 32
surface_samples = 100
"#,
    );
    let out2 = dir.path().join("circle");
    let run = tmlp(&["train", "--config", s(&cfg2), "--out", s(&out2)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let metrics = std::fs::read_to_string(out2.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 3);
    assert!(out2.join("contour_L3.obj").is_file());

    let cfg3 = write_config(
        dir.path(),
        "sphere.toml",
        r#"
task = "sdf3d"
[signal]
shape = "sphere3d 0 0 0 0.5"
[model]
hidden_width = 16
num_hidden_layers = 2
omega0 = 10
[train]
iterations = 40
batch_size = 512
[eval]
resolution = 16
surface_samples = 100
"#,
    );
    let out3 = dir.path().join("sphere");
    let run = tmlp(&["train", "--config", s(&cfg3), "--out", s(&out3)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out3.join("mesh_L2.obj").is_file());

    // A 2D model cannot be scored against a 3D shape.
    let run = tmlp(&[
        "eval",
        "--model",
        s(&out2.join("model.tmlp")),
        "--shape",
        "sphere3d 0 0 0 0.5",
    ]);
    assert_eq!(code(&run), 2);
}

#[test]
fn probe_reports_both_models_per_level() {
    let (dir, _) = smoke_setup();
    let cfg = write_config(
        dir.path(),
        "probe.toml",
        &SMOKE.replace("iterations = 100", "iterations = 30"),
    );
    let out = dir.path().join("probe");
    let run = tmlp(&["probe", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(out.join("probe.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("level,probe_psnr,tmlp_psnr"));
    let values: Vec<f64> = lines
        .flat_map(|l| {
            l.split(',')
                .skip(1)
                .map(|v| v.parse::<f64>().unwrap())
                .collect::<Vec<_>>()
        })
        .collect();
    assert_eq!(values.len(), 4);
    assert!(values.iter().all(|v| v.is_finite()));
}

#[test]
fn exit_codes_follow_the_error_class() {
    let (dir, cfg) = smoke_setup();
    assert_eq!(code(&tmlp(&["--help"])), 0);
    assert_eq!(code(&tmlp(&[])), 1);
    assert_eq!(code(&tmlp(&["fly"])), 1);
    assert_eq!(code(&tmlp(&["train"])), 1);

    let bad = write_config(
        dir.path(),
        "bad.toml",
        &SMOKE.replace("hidden_width", "hidden_widht"),
    );
    let run = tmlp(&["train", "--config", s(&bad)]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("hidden_widht"));
    let weights = write_config(
        dir.path(),
        "weights.toml",
        &SMOKE.replace("log_every = 10", "log_every = 10\nloss_weights = [1, 1, 1]"),
    );
    assert_eq!(code(&tmlp(&["train", "--config", s(&weights)])), 1);
    let missing = dir.path().join("nowhere.toml");
    assert_eq!(code(&tmlp(&["train", "--config", s(&missing)])), 3);

    let out = dir.path().join("run");
    train_smoke(&cfg, &out);
    let model = out.join("model.tmlp");
    assert_eq!(
        code(&tmlp(&["truncate", "--model", s(&model), "--layers", "3"])),
        1
    );
    assert_eq!(
        code(&tmlp(&["render", "--model", s(&model), "--level", "2.5"])),
        1
    );

    let absent = dir.path().join("absent.tmlp");
    assert_eq!(
        code(&tmlp(&["eval", "--model", s(&absent), "--config", s(&cfg)])),
        3
    );
    let mut bytes = std::fs::read(&model).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    let damaged = dir.path().join("damaged.tmlp");
    std::fs::write(&damaged, &bytes).unwrap();
    assert_eq!(
        code(&tmlp(&[
            "eval",
            "--model",
            s(&damaged),
            "--config",
            s(&cfg)
        ])),
        3
    );
    // The first layer, before the damage, can still be cut out and used.
    let first = dir.path().join("first.tmlp");
    let run = tmlp(&[
        "truncate",
        "--model",
        s(&damaged),
        "--layers",
        "1",
        "--output",
        s(&first),
    ]);
    assert_eq!(code(&run), 0);
    assert_eq!(
        code(&tmlp(&["eval", "--model", s(&first), "--config", s(&cfg)])),
        0
    );
    bytes[HEADER_LEN + 3] ^= 0x01;
    std::fs::write(&damaged, &bytes).unwrap();
    assert_eq!(
        code(&tmlp(&[
            "eval",
            "--model",
            s(&damaged),
            "--config",
            s(&cfg)
        ])),
        3
    );
}
