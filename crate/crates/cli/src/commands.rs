use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nirpulse::augmentation::{augment_pair, plan_augmentation};
use nirpulse::dataset::format_sig;
use nirpulse::dataset::{
    check_alignment, correct_signal, generate_synthetic, read_signal, write_bbox_csv,
    write_signal_csv, write_video, BoxTrack, Manifest, ManifestRecord, MotionLevel, Provenance,
    Scenario, Split, SynthSpec,
};
use nirpulse::evaluation::{emit_plot_data, evaluate_set};
use nirpulse::frames::{crop_resize_per_frame, resize_bilinear};
use nirpulse::inference::{
    sliding_window_regress, PreparedVideo, TrainingVideo, WindowConfig, WindowDataset,
};
use nirpulse::model::{load_weights, save_weights, CanConfig, CanModel, TrainConfig};
use nirpulse::signal::{detect_extrema_default, normalize_peak_trough};
use nirpulse::Error;
use sha2::{Digest, Sha256};

use crate::{
    AugmentArgs, CliError, CropArgs, EvalArgs, InferArgs, ManifestArgs, SplitChoice, SynthArgs,
    TrainArgs,
};

type CmdResult = Result<(), CliError>;

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| {
        CliError::from(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| {
        CliError::from(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

/// Ensures `<root>/<sub>` exists and returns the relative file path `sub/name`.
fn data_path(root: &Path, sub: &str, name: &str) -> Result<PathBuf, CliError> {
    create_dir(&root.join(sub))?;
    Ok(Path::new(sub).join(name))
}

fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    Ok(Manifest::load(path)?)
}

fn save_manifest(manifest: &Manifest, path: &Path) -> CmdResult {
    manifest.validate()?;
    Ok(manifest.save(path)?)
}

pub fn synth(a: &SynthArgs, seed: u64) -> CmdResult {
    if a.subjects == 0 {
        return Err(CliError::invariant("--subjects must be positive"));
    }
    if !(a.hr_min <= a.hr_max) || !(a.dicrotic_min <= a.dicrotic_max) {
        return Err(CliError::invariant("ranges must have min <= max"));
    }
    if let Some(&bad) = a.test_subjects.iter().find(|&&s| s >= a.subjects) {
        return Err(CliError::invariant(format!(
            "test subject {bad} does not exist among {} subjects",
            a.subjects
        )));
    }
    create_dir(&a.out_dir)?;
    let mut manifest = Manifest::new(&a.out_dir);
    for i in 0..a.subjects {
        let frac = if a.subjects > 1 {
            i as f64 / (a.subjects - 1) as f64
        } else {
            0.5
        };
        let spec = SynthSpec {
            hr_bpm: a.hr_min + (a.hr_max - a.hr_min) * frac,
            duration_s: a.duration,
            fps: a.fps,
            h: a.size,
            w: a.size,
            noise_sigma: a.noise,
            dicrotic_ratio: a.dicrotic_min + (a.dicrotic_max - a.dicrotic_min) * frac,
            seed: seed.wrapping_add(i as u64),
        };
        let (seq, gt, bbox) = generate_synthetic(&spec, a.window + 1)?;
        let id = format!("s{i:02}");
        let video_path = data_path(&a.out_dir, "videos", &format!("{id}.nirv"))?;
        let signal_path = data_path(&a.out_dir, "signals", &format!("{id}.csv"))?;
        let bbox_path = data_path(&a.out_dir, "boxes", &format!("{id}.csv"))?;
        write_video(&seq, &a.out_dir.join(&video_path))?;
        write_signal_csv(&gt, &a.out_dir.join(&signal_path))?;
        write_bbox_csv(&BoxTrack::Static(bbox), &a.out_dir.join(&bbox_path))?;
        manifest.records.push(ManifestRecord {
            video_id: id,
            subject_id: format!("subject{i:02}"),
            video_path,
            signal_path,
            bbox_path: Some(bbox_path),
            fps: a.fps,
            split: if a.test_subjects.contains(&i) {
                Split::Test
            } else {
                Split::Train
            },
            scenario: Scenario::Synthetic,
            motion: MotionLevel::Still,
            wavelength_nm: 940,
            provenance: Provenance::Original,
        });
        eprintln!(
            "synth: {} at {:.2} bpm",
            manifest.records[i].video_id, spec.hr_bpm
        );
    }
    save_manifest(&manifest, &a.out_dir.join("manifest.csv"))
}

pub fn correct(a: &ManifestArgs) -> CmdResult {
    let mut manifest = load_manifest(&a.manifest)?;
    let root = manifest.root.clone();
    let mut kept = Vec::new();
    for mut rec in std::mem::take(&mut manifest.records) {
        let raw = read_signal(&root.join(&rec.signal_path))?;
        let fixed = correct_signal(&raw)?;
        let seq = manifest.load_video(&rec)?;
        if let Err(e) = check_alignment(&seq, &fixed) {
            eprintln!("correct: dropping {}: {e}", rec.video_id);
            continue;
        }
        rec.signal_path = data_path(&root, "corrected", &format!("{}.csv", rec.video_id))?;
        write_signal_csv(&fixed, &root.join(&rec.signal_path))?;
        kept.push(rec);
    }
    eprintln!("correct: {} records kept", kept.len());
    manifest.records = kept;
    save_manifest(&manifest, &a.manifest)
}

pub fn normalize(a: &ManifestArgs) -> CmdResult {
    let mut manifest = load_manifest(&a.manifest)?;
    let root = manifest.root.clone();
    for i in 0..manifest.records.len() {
        let signal = manifest.load_signal(&manifest.records[i])?;
        let normalized = normalize_peak_trough(&signal, &detect_extrema_default(&signal)?)?;
        let rec = &mut manifest.records[i];
        rec.signal_path = data_path(&root, "normalized", &format!("{}.csv", rec.video_id))?;
        write_signal_csv(&normalized, &root.join(&rec.signal_path))?;
    }
    eprintln!("normalize: {} signals", manifest.records.len());
    save_manifest(&manifest, &a.manifest)
}

pub fn augment(a: &AugmentArgs, seed: u64) -> CmdResult {
    let mut manifest = load_manifest(&a.manifest)?;
    if manifest.records.iter().any(|r| !r.is_original()) {
        return Err(CliError::invariant(
            "manifest already holds augmented records",
        ));
    }
    let root = manifest.root.clone();
    let wc = WindowConfig::new(a.window, 1)?;
    let sources: Vec<ManifestRecord> = manifest
        .records
        .iter()
        .filter(|r| r.split == Split::Train)
        .cloned()
        .collect();
    for (k, rec) in sources.iter().enumerate() {
        let pair = manifest.load_pair(rec);
        let samples = pair.and_then(|(seq, gt)| {
            let plan = plan_augmentation(&gt, seed.wrapping_add(k as u64))?;
            augment_pair(&seq, &gt, &plan, &wc)
        });
        let samples = match samples {
            Ok(s) => s,
            Err(Error::Rejected(reason)) => {
                eprintln!("augment: skipping {}: {reason}", rec.video_id);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let copies = samples.len();
        for s in samples {
            let id = format!("{}__hr{:.2}", rec.video_id, s.target_hr);
            let video_path = data_path(&root, "augmented", &format!("{id}.nirv"))?;
            let signal_path = data_path(&root, "augmented", &format!("{id}.csv"))?;
            write_video(&s.frames, &root.join(&video_path))?;
            write_signal_csv(&s.signal, &root.join(&signal_path))?;
            manifest.records.push(ManifestRecord {
                video_id: id,
                video_path,
                signal_path,
                provenance: Provenance::Augmented {
                    target_hr: s.target_hr,
                },
                ..rec.clone()
            });
        }
        eprintln!("augment: {} -> {} copies", rec.video_id, copies);
    }
    save_manifest(&manifest, &a.manifest)
}

pub fn crop(a: &CropArgs) -> CmdResult {
    let mut manifest = load_manifest(&a.manifest)?;
    let root = manifest.root.clone();
    let sub = if a.no_crop {
        format!("resized{}", a.size)
    } else {
        format!("cropped{}", a.size)
    };
    for i in 0..manifest.records.len() {
        let rec = &manifest.records[i];
        let seq = manifest.load_video(rec)?;
        let boxes = if a.no_crop {
            None
        } else {
            manifest.load_boxes(rec)?
        };
        let out = match boxes {
            Some(track) => {
                crop_resize_per_frame(&seq, &track.boxes_for(seq.len())?, a.pad, a.size, a.size)?
            }
            None => {
                if !a.no_crop {
                    eprintln!(
                        "crop: {} has no face box, resizing whole frames",
                        rec.video_id
                    );
                }
                resize_bilinear(&seq, a.size, a.size)?
            }
        };
        let rec = &mut manifest.records[i];
        rec.video_path = data_path(&root, &sub, &format!("{}.nirv", rec.video_id))?;
        rec.bbox_path = None;
        write_video(&out, &root.join(&rec.video_path))?;
    }
    eprintln!(
        "crop: {} videos to {}x{}",
        manifest.records.len(),
        a.size,
        a.size
    );
    save_manifest(&manifest, &a.manifest)
}

pub fn train(a: &TrainArgs, seed: u64) -> CmdResult {
    let manifest = load_manifest(&a.manifest)?;
    let wc = WindowConfig::new(a.window, a.stride)?;
    let mut videos = Vec::new();
    let mut size = None;
    for rec in manifest.records.iter().filter(|r| r.split == Split::Train) {
        let (seq, gt) = manifest.load_pair(rec)?;
        let len = seq.len().min(gt.len());
        let (seq, gt) = (seq.truncated(len)?, gt.truncated(len)?);
        let dims = (seq.height(), seq.width());
        if *size.get_or_insert(dims) != dims {
            return Err(Error::Shape(format!(
                "{} is {}x{} but earlier videos are {}x{}; crop first",
                rec.video_id,
                dims.0,
                dims.1,
                size.unwrap().0,
                size.unwrap().1
            ))
            .into());
        }
        let target = normalize_peak_trough(&gt, &detect_extrema_default(&gt)?)?;
        videos.push(TrainingVideo {
            video: PreparedVideo::new(&seq)?,
            target: target.into_samples(),
        });
    }
    let Some((h, w)) = size else {
        return Err(CliError::invariant("the manifest has no train records"));
    };
    let data = WindowDataset::new(videos, &wc)?;
    eprintln!(
        "train: {} videos, {} windows",
        data.videos().len(),
        nirpulse::model::WindowSet::len(&data)
    );
    let config = CanConfig {
        n: a.window,
        h,
        w,
        c1: a.c1,
        c2: a.c2,
        hidden: a.hidden,
        snake_a: a.snake_a,
        seed,
    };
    let cfg = TrainConfig {
        learning_rate: a.lr,
        steps: a.steps,
        batch_size: a.batch_size,
        seed: seed.wrapping_add(1),
        ..TrainConfig::default()
    };
    let mut model = CanModel::new(config)?;
    let outcome = nirpulse::model::train(&mut model, &data, &cfg)?;
    save_weights(&model, &a.out)?;

    let trace_path = a.loss_trace.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".loss.csv");
        p.into()
    });
    let mut csv = String::from("step,loss\n");
    for (i, l) in outcome.loss_trace.iter().enumerate() {
        let _ = writeln!(csv, "{i},{}", format_sig(*l));
    }
    write_text(&trace_path, &csv)?;
    let last = outcome.loss_trace.last().copied().unwrap_or(f64::NAN);
    eprintln!(
        "train: {} steps, final batch loss {}",
        cfg.steps,
        format_sig(last)
    );
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn selected(manifest: &Manifest, split: SplitChoice) -> impl Iterator<Item = &ManifestRecord> {
    manifest.records.iter().filter(move |r| {
        r.is_original()
            && match split {
                SplitChoice::Train => r.split == Split::Train,
                SplitChoice::Test => r.split == Split::Test,
                SplitChoice::All => true,
            }
    })
}

pub fn infer(a: &InferArgs) -> CmdResult {
    let manifest = load_manifest(&a.manifest)?;
    let bytes = fs::read(&a.model).map_err(|e| {
        CliError::from(Error::Io {
            path: a.model.clone(),
            source: e,
        })
    })?;
    let digest = sha256_hex(&bytes);
    let model = load_weights(&a.model)?;
    let wc = WindowConfig::new(model.config.n, a.stride)?;
    create_dir(&a.out_dir)?;
    let mut count = 0;
    for rec in selected(&manifest, a.split) {
        let seq = manifest.load_video(rec)?;
        let reg = sliding_window_regress(&seq, &model, &wc)?;
        write_signal_csv(
            &reg.signal,
            &a.out_dir.join(format!("{}.csv", rec.video_id)),
        )?;
        let meta = format!(
            "{{\n  \"video_id\": \"{}\",\n  \"n\": {},\n  \"stride\": {},\n  \"covered\": [{}, {}],\n  \"model_sha256\": \"{digest}\"\n}}\n",
            rec.video_id, wc.n, wc.stride, reg.covered.start, reg.covered.end
        );
        write_text(&a.out_dir.join(format!("{}.meta", rec.video_id)), &meta)?;
        count += 1;
    }
    if count == 0 {
        return Err(CliError::invariant("no records selected for inference"));
    }
    eprintln!("infer: {count} videos");
    Ok(())
}

fn parse_pred(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((label, dir)) if !label.is_empty() => (label.to_string(), PathBuf::from(dir)),
        _ => ("pred".to_string(), PathBuf::from(spec)),
    }
}

pub fn eval(a: &EvalArgs) -> CmdResult {
    let manifest = load_manifest(&a.manifest)?;
    let preds: Vec<(String, PathBuf)> = a.pred.iter().map(|p| parse_pred(p)).collect();
    let mut labels: Vec<&str> = preds.iter().map(|(l, _)| l.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::usage("prediction labels must be distinct"));
    }
    create_dir(&a.out_dir)?;
    let several = preds.len() > 1;
    let mut text = String::new();
    let mut summary = Vec::new();
    for (label, dir) in &preds {
        let plot_dir = if several {
            a.out_dir.join("plots").join(label)
        } else {
            a.out_dir.join("plots")
        };
        create_dir(&plot_dir)?;
        let mut pairs = Vec::new();
        let mut warnings = Vec::new();
        for rec in selected(&manifest, SplitChoice::Test) {
            let pred = read_signal(&dir.join(format!("{}.csv", rec.video_id)))?;
            let gt = manifest.load_signal(rec)?;
            let plot = emit_plot_data(&pred, &gt, &plot_dir.join(format!("{}.csv", rec.video_id)))?;
            if let Some(w) = plot.warning {
                warnings.push(format!("{}: {w}", rec.video_id));
            }
            let n = pred.len().min(gt.len());
            pairs.push((rec.video_id.clone(), pred.truncated(n)?, gt.truncated(n)?));
        }
        if pairs.is_empty() {
            return Err(CliError::invariant(
                "the manifest has no original test records",
            ));
        }
        let report = evaluate_set(&pairs)?;
        let csv_name = if several {
            format!("report_{label}.csv")
        } else {
            "report.csv".to_string()
        };
        report.write_csv(&a.out_dir.join(csv_name))?;
        let _ = writeln!(text, "== {label} ({}) ==", dir.display());
        text.push_str(&report.render_table());
        for w in &warnings {
            let _ = writeln!(text, "warning: {w}");
        }
        text.push('\n');
        summary.push((label.clone(), report.mae, report.evaluated, report.excluded));
    }
    if several {
        let _ = writeln!(
            text,
            "{:<12}  {:>8}  {:>9}  {:>8}",
            "label", "MAE", "evaluated", "excluded"
        );
        for (label, mae, ev, ex) in &summary {
            let _ = writeln!(text, "{label:<12}  {mae:>8.4}  {ev:>9}  {ex:>8}");
        }
    }
    write_text(&a.out_dir.join("report.txt"), &text)?;
    let mut out = std::io::stdout().lock();
    for (label, mae, _, _) in &summary {
        let _ = writeln!(out, "mae {label} {}", format_sig(*mae));
    }
    Ok(())
}
