use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn nirpulse() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nirpulse"));
    cmd.env_remove("NIRPULSE_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    nirpulse().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small dataset: 8x8 frames, 4 s per video, windows of 16.
fn tiny_synth(dir: &Path, extra: &[&str]) {
    let mut args = vec![
        "synth",
        "--out-dir",
        s(dir),
        "--size",
        "8",
        "--duration",
        "4",
        "--window",
        "16",
    ];
    args.extend_from_slice(extra);
    ok(&args);
}

fn tiny_train(manifest: &Path, model: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "train",
        "--manifest",
        s(manifest),
        "--out",
        s(model),
        "--window",
        "16",
        "--stride",
        "8",
        "--c1",
        "2",
        "--c2",
        "2",
        "--hidden",
        "4",
        "--steps",
        "20",
    ];
    args.extend_from_slice(extra);
    ok(&args)
}

fn manifest_rows(dir: &Path) -> usize {
    fs::read_to_string(dir.join("manifest.csv"))
        .unwrap()
        .lines()
        .count()
        - 1
}

fn loss_values(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn help_lists_flags_with_defaults() {
    let out = ok(&["train", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in [
        "--lr <LR>",
        "[default: 0.001]",
        "--steps <STEPS>",
        "[default: 1000]",
        "--seed <SEED>",
        "NIRPULSE_SEED",
        "--threads <THREADS>",
        "--config <FILE>",
    ] {
        assert!(text.contains(needle), "help lacks {needle}:\n{text}");
    }
    let out = ok(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "synth",
        "correct",
        "normalize",
        "augment",
        "crop",
        "train",
        "infer",
        "eval",
    ] {
        assert!(text.contains(sub), "top-level help lacks {sub}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["synth", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["train"]).status.code(), Some(2));
    assert_eq!(
        run(&["--threads", "0", "synth", "--out-dir", "x"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn data_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = run(&["normalize", "--manifest", s(&missing)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.starts_with("error: code=3 kind=io message="), "{err}");
    assert_eq!(err.lines().count(), 1);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "not,a,manifest\n1,2,3\n").unwrap();
    assert_eq!(run(&["crop", "--manifest", s(&bad)]).status.code(), Some(3));
}

#[test]
fn invariant_violations_exit_4() {
    let dir = TempDir::new().unwrap();
    let out = run(&["synth", "--out-dir", s(dir.path()), "--subjects", "0"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("error: code=4 "));

    tiny_synth(dir.path(), &[]);
    let manifest = dir.path().join("manifest.csv");
    let model = dir.path().join("m.bin");
    let out = run(&[
        "train",
        "--manifest",
        s(&manifest),
        "--out",
        s(&model),
        "--window",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));

    ok(&["augment", "--manifest", s(&manifest), "--window", "16"]);
    let out = run(&["augment", "--manifest", s(&manifest), "--window", "16"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn config_file_sits_between_flags_and_env() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.conf");
    fs::write(
        &config,
        "# tiny run\nsubjects = 3\nsize = 8\nduration = 4\nwindow = 16\ntest_subjects = 1\nlr = 0.5\n",
    )
    .unwrap();

    let a = dir.path().join("a");
    ok(&["synth", "--config", s(&config), "--out-dir", s(&a)]);
    assert_eq!(manifest_rows(&a), 3);

    let b = dir.path().join("b");
    ok(&[
        "synth",
        "--config",
        s(&config),
        "--out-dir",
        s(&b),
        "--subjects",
        "2",
    ]);
    assert_eq!(manifest_rows(&b), 2);

    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "no_such_key = 1\n").unwrap();
    let out = run(&["synth", "--config", s(&bad), "--out-dir", s(&a)]);
    assert_eq!(out.status.code(), Some(2));

    // A config seed beats the environment; a flag beats both.
    let seeded = dir.path().join("seed.conf");
    fs::write(&seeded, "seed = 3\nsize = 8\nduration = 4\nwindow = 16\n").unwrap();
    let env_only = dir.path().join("env");
    let from_conf = dir.path().join("conf");
    let from_flag = dir.path().join("flag");
    let plain3 = dir.path().join("plain3");
    let plain9 = dir.path().join("plain9");
    let go = |out: &Path, args: &[&str]| {
        let mut cmd = nirpulse();
        cmd.env("NIRPULSE_SEED", "9")
            .args(["synth", "--out-dir", s(out)]);
        let status = cmd.args(args).status().unwrap();
        assert!(status.success());
    };
    go(
        &env_only,
        &["--size", "8", "--duration", "4", "--window", "16"],
    );
    go(&from_conf, &["--config", s(&seeded)]);
    go(&from_flag, &["--config", s(&seeded), "--seed", "9"]);
    tiny_synth(&plain3, &["--seed", "3"]);
    tiny_synth(&plain9, &["--seed", "9"]);
    let video = |d: &Path| fs::read(d.join("videos/s00.nirv")).unwrap();
    assert_eq!(video(&env_only), video(&plain9));
    assert_eq!(video(&from_conf), video(&plain3));
    assert_eq!(video(&from_flag), video(&plain9));
    assert_ne!(video(&plain3), video(&plain9));
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    tiny_synth(&a, &["--seed", "4"]);
    tiny_synth(&b, &["--seed", "4"]);
    for f in [
        "manifest.csv",
        "videos/s03.nirv",
        "signals/s03.csv",
        "boxes/s03.csv",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let manifest = a.join("manifest.csv");
    let m1 = dir.path().join("m1.bin");
    let m2 = dir.path().join("m2.bin");
    tiny_train(&manifest, &m1, &["--seed", "5"]);
    tiny_train(&manifest, &m2, &["--seed", "5", "--threads", "4"]);
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
    let trace = |m: &Path| fs::read(format!("{}.loss.csv", m.display())).unwrap();
    assert_eq!(trace(&m1), trace(&m2));

    let p1 = dir.path().join("p1");
    let p2 = dir.path().join("p2");
    for (m, p) in [(&m1, &p1), (&m2, &p2)] {
        ok(&[
            "infer",
            "--manifest",
            s(&manifest),
            "--model",
            s(m),
            "--out-dir",
            s(p),
        ]);
    }
    for f in ["s02.csv", "s02.meta", "s05.csv"] {
        assert_eq!(
            fs::read(p1.join(f)).unwrap(),
            fs::read(p2.join(f)).unwrap(),
            "{f}"
        );
    }
    let meta = fs::read_to_string(p1.join("s02.meta")).unwrap();
    assert!(meta.contains("\"model_sha256\": \""), "{meta}");
}

#[test]
fn zero_learning_rate_gives_constant_loss() {
    let dir = TempDir::new().unwrap();
    tiny_synth(dir.path(), &[]);
    let manifest = dir.path().join("manifest.csv");
    let model = dir.path().join("m.bin");
    let trace = dir.path().join("trace.csv");
    tiny_train(
        &manifest,
        &model,
        &[
            "--lr",
            "0",
            "--batch-size",
            "100000",
            "--loss-trace",
            s(&trace),
        ],
    );
    let losses = loss_values(&trace);
    assert_eq!(losses.len(), 20);
    assert!(losses.iter().all(|&l| l == losses[0]), "{losses:?}");
}

#[test]
fn eval_of_ground_truth_is_zero() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "synth",
        "--out-dir",
        s(dir.path()),
        "--size",
        "8",
        "--duration",
        "10",
        "--window",
        "16",
    ]);
    let manifest = dir.path().join("manifest.csv");
    ok(&["normalize", "--manifest", s(&manifest)]);
    let out = dir.path().join("eval");
    let gt = dir.path().join("normalized");
    let res = ok(&[
        "eval",
        "--manifest",
        s(&manifest),
        "--pred",
        &format!("gt={}", s(&gt)),
        "--pred",
        &format!("again={}", s(&gt)),
        "--out-dir",
        s(&out),
    ]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    // Ground truth is resampled on ingest, so identical files agree to
    // interpolation roundoff rather than exactly.
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2, "{stdout}");
    for (line, label) in lines.iter().zip(["gt", "again"]) {
        let mae: f64 = line
            .strip_prefix(&format!("mae {label} "))
            .expect("mae line")
            .parse()
            .unwrap();
        assert!(mae < 1e-6, "{line}");
    }
    for f in [
        "report.txt",
        "report_gt.csv",
        "report_again.csv",
        "plots/gt/s02.csv",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn correct_rewrites_signals_and_keeps_aligned_records() {
    let dir = TempDir::new().unwrap();
    tiny_synth(dir.path(), &[]);
    let manifest = dir.path().join("manifest.csv");
    ok(&["correct", "--manifest", s(&manifest)]);
    assert_eq!(manifest_rows(dir.path()), 8);
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("corrected/s00.csv"), "{text}");
}

/// Synthesize, augment, crop, train, infer and evaluate through the binary.
#[test]
fn scripted_pipeline_reaches_three_bpm() {
    let dir = TempDir::new().unwrap();
    let root = dir.path();
    let manifest = root.join("manifest.csv");
    let model = root.join("model.bin");
    let pred = root.join("pred");
    let eval = root.join("eval");
    ok(&["synth", "--out-dir", s(root), "--size", "32"]);
    ok(&["--seed", "3", "augment", "--manifest", s(&manifest)]);
    ok(&["crop", "--manifest", s(&manifest), "--size", "16"]);
    ok(&[
        "--seed",
        "7",
        "train",
        "--manifest",
        s(&manifest),
        "--out",
        s(&model),
        "--c1",
        "4",
        "--c2",
        "8",
        "--hidden",
        "32",
        "--stride",
        "4",
        "--batch-size",
        "16",
        "--steps",
        "3000",
    ]);
    ok(&[
        "infer",
        "--manifest",
        s(&manifest),
        "--model",
        s(&model),
        "--out-dir",
        s(&pred),
    ]);
    let out = ok(&[
        "eval",
        "--manifest",
        s(&manifest),
        "--pred",
        s(&pred),
        "--out-dir",
        s(&eval),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mae: f64 = stdout
        .trim()
        .strip_prefix("mae pred ")
        .expect("mae line")
        .parse()
        .unwrap();
    assert!(mae <= 3.0, "MAE {mae} bpm");
}
