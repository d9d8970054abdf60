//! Whole-video heart-rate evaluation from R-R intervals.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{signal_hr, PpgSignal};

/// Heart rates of one prediction/ground-truth pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoEval {
    pub pred_hr: f64,
    pub gt_hr: f64,
    pub abs_err: f64,
}

/// Detects peaks on both signals with the default detector and compares the
/// resulting heart rates.
pub fn evaluate_video(pred: &PpgSignal, gt: &PpgSignal) -> Result<VideoEval> {
    let pred_hr = signal_hr(pred)?;
    let gt_hr = signal_hr(gt)?;
    Ok(VideoEval {
        pred_hr,
        gt_hr,
        abs_err: (pred_hr - gt_hr).abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoOutcome {
    pub video_id: String,
    /// `Err` holds the reason the video was excluded.
    pub result: std::result::Result<VideoEval, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetReport {
    /// Sorted by video id.
    pub videos: Vec<VideoOutcome>,
    pub mae: f64,
    pub evaluated: usize,
    pub excluded: usize,
}

/// Evaluates every pair; videos without enough peaks are excluded from the
/// MAE and counted.
pub fn evaluate_set(pairs: &[(String, PpgSignal, PpgSignal)]) -> Result<SetReport> {
    if pairs.is_empty() {
        return Err(Error::invalid("no videos to evaluate"));
    }
    let mut videos: Vec<VideoOutcome> = pairs
        .iter()
        .map(|(id, pred, gt)| VideoOutcome {
            video_id: id.clone(),
            result: evaluate_video(pred, gt).map_err(|e| e.to_string()),
        })
        .collect();
    videos.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    let mut errors: Vec<f64> = videos
        .iter()
        .filter_map(|v| v.result.as_ref().ok().map(|e| e.abs_err))
        .collect();
    if errors.is_empty() {
        return Err(Error::Rejected(format!(
            "all {} videos were excluded",
            videos.len()
        )));
    }
    // order-independent sum
    errors.sort_by(f64::total_cmp);
    let evaluated = errors.len();
    let mae = errors.iter().sum::<f64>() / evaluated as f64;
    Ok(SetReport {
        excluded: videos.len() - evaluated,
        videos,
        mae,
        evaluated,
    })
}

impl SetReport {
    /// Human-readable table.
    pub fn render_table(&self) -> String {
        let width = self
            .videos
            .iter()
            .map(|v| v.video_id.len())
            .max()
            .unwrap_or(0)
            .max("video_id".len());
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$}  {:>8}  {:>8}  {:>8}",
            "video_id", "pred_hr", "gt_hr", "abs_err"
        );
        for v in &self.videos {
            match &v.result {
                Ok(e) => {
                    let _ = writeln!(
                        s,
                        "{:<width$}  {:>8.2}  {:>8.2}  {:>8.2}",
                        v.video_id, e.pred_hr, e.gt_hr, e.abs_err
                    );
                }
                Err(reason) => {
                    let _ = writeln!(s, "{:<width$}  excluded: {reason}", v.video_id);
                }
            }
        }
        let _ = writeln!(
            s,
            "MAE {:.4} bpm over {} videos ({} excluded)",
            self.mae, self.evaluated, self.excluded
        );
        s
    }

    /// `video_id,pred_hr,gt_hr,abs_err,excluded` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["video_id", "pred_hr", "gt_hr", "abs_err", "excluded"])
            .map_err(|e| csv_err(path, e))?;
        for v in &self.videos {
            let row = match &v.result {
                Ok(e) => [
                    v.video_id.clone(),
                    format!("{:.6}", e.pred_hr),
                    format!("{:.6}", e.gt_hr),
                    format!("{:.6}", e.abs_err),
                    "false".into(),
                ],
                Err(_) => [
                    v.video_id.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "true".into(),
                ],
            };
            w.write_record(&row).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

/// What [`emit_plot_data`] wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSummary {
    pub rows: usize,
    pub warning: Option<String>,
}

/// Writes `t_sec,pred,gt` rows over the common prefix of both signals.
pub fn emit_plot_data(pred: &PpgSignal, gt: &PpgSignal, path: &Path) -> Result<PlotSummary> {
    if pred.has_gaps() || gt.has_gaps() {
        return Err(Error::invalid("plot data requires gap-free signals"));
    }
    // rates read back from 9-digit timestamps differ in the last digits
    if (pred.sample_rate_hz() - gt.sample_rate_hz()).abs() > 1e-6 * gt.sample_rate_hz() {
        return Err(Error::invalid(format!(
            "sample rates differ: {} vs {} Hz",
            pred.sample_rate_hz(),
            gt.sample_rate_hz()
        )));
    }
    let rows = pred.len().min(gt.len());
    let warning = (pred.len() != gt.len()).then(|| {
        format!(
            "prediction has {} samples and ground truth {}; truncated to {rows}",
            pred.len(),
            gt.len()
        )
    });
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let rate = pred.sample_rate_hz();
    let io = |e| Error::io(path, e);
    writeln!(w, "t_sec,pred,gt").map_err(io)?;
    for i in 0..rows {
        writeln!(
            w,
            "{},{},{}",
            crate::dataset::format_sig(i as f64 / rate),
            crate::dataset::format_sig(pred.samples()[i]),
            crate::dataset::format_sig(gt.samples()[i])
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(PlotSummary { rows, warning })
}

/// Reads a plot-data CSV back as `(t_sec, pred, gt)` columns.
pub fn read_plot_data(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t_sec", "pred", "gt"] {
        return Err(Error::format(path, "expected header t_sec,pred,gt"));
    }
    let (mut t, mut p, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| {
                    Error::format(path, format!("row {}: bad number in column {k}", line + 2))
                })
        };
        t.push(parse(0)?);
        p.push(parse(1)?);
        g.push(parse(2)?);
    }
    Ok((t, p, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(hz: f64, seconds: f64, phase: f64) -> PpgSignal {
        let n = (seconds * 30.0) as usize;
        PpgSignal::new(
            (0..n)
                .map(|i| (2.0 * PI * hz * i as f64 / 30.0 + phase).sin())
                .collect(),
            30.0,
        )
        .unwrap()
    }

    #[test]
    fn identical_signals_have_zero_error() {
        let gt = tone(1.2, 20.0, 0.0);
        assert_eq!(evaluate_video(&gt, &gt).unwrap().abs_err, 0.0);
    }

    #[test]
    fn tone_pair_error() {
        let e = evaluate_video(&tone(1.0, 30.0, 0.0), &tone(1.1, 30.0, 0.0)).unwrap();
        assert!((e.abs_err - 6.0).abs() <= 1.0, "{e:?}");
    }

    #[test]
    fn phase_shift_is_nearly_invisible() {
        let gt = tone(1.3, 30.0, 0.0);
        let shifted = tone(1.3, 30.0, PI / 2.0);
        assert!(evaluate_video(&shifted, &gt).unwrap().abs_err <= 1.0);
    }

    #[test]
    fn set_mae_and_exclusions() {
        let gt = tone(1.0, 20.0, 0.0);
        let flat = PpgSignal::new(vec![0.5; 600], 30.0).unwrap();
        let pairs = vec![
            ("b".to_string(), gt.clone(), gt.clone()),
            ("a".to_string(), flat.clone(), gt.clone()),
        ];
        let report = evaluate_set(&pairs).unwrap();
        assert_eq!(report.mae, 0.0);
        assert_eq!((report.evaluated, report.excluded), (1, 1));
        assert_eq!(report.videos[0].video_id, "a");
        assert!(report.render_table().contains("excluded"));

        let none = vec![("x".to_string(), flat.clone(), gt)];
        assert!(evaluate_set(&none).is_err());
        assert!(evaluate_set(&[]).is_err());
    }

    #[test]
    fn plot_data_truncates_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.csv");
        let pred = tone(1.0, 10.0, 0.3);
        let gt = tone(1.0, 11.0, 0.0);
        let summary = emit_plot_data(&pred, &gt, &path).unwrap();
        assert_eq!(summary.rows, 300);
        assert!(summary.warning.is_some());
        let (t, p, g) = read_plot_data(&path).unwrap();
        assert_eq!(t.len(), 300);
        for i in 0..300 {
            assert!((p[i] - pred.samples()[i]).abs() < 1e-6);
            assert!((g[i] - gt.samples()[i]).abs() < 1e-6);
        }
        let same = emit_plot_data(&gt, &gt, &path).unwrap();
        assert_eq!((same.rows, same.warning), (330, None));
    }
}
