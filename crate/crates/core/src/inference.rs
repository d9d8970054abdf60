//! Window construction and whole-video regression by overlap averaging.
//!
//! A window starting at position `s` uses raw frames `s..=s+n`, i.e. motion
//! maps `s..s+n`, and its `n` outputs land on signal positions `s..s+n`.
//! Position `i` therefore lines up with motion map `i` (frames `i`, `i+1`).

use std::borrow::Cow;
use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{motion_representation, FrameSequence, DEFAULT_MOTION_EPSILON};
use crate::model::{CanModel, Window, WindowSet};
use crate::signal::PpgSignal;

/// Sliding-window geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    pub n: usize,
    pub stride: usize,
}

impl WindowConfig {
    pub fn new(n: usize, stride: usize) -> Result<Self> {
        let wc = Self { n, stride };
        wc.validate()?;
        Ok(wc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("window length {} < 2", self.n)));
        }
        if self.stride == 0 || self.stride > self.n {
            return Err(Error::invalid(format!(
                "stride {} must lie in [1, {}]",
                self.stride, self.n
            )));
        }
        Ok(())
    }

    /// Raw frames one window consumes.
    pub fn frames_needed(&self) -> usize {
        self.n + 1
    }

    /// Window starts for `positions` output positions, in scan order.
    pub fn starts(&self, positions: usize) -> impl Iterator<Item = usize> {
        let n = self.n;
        (0..positions)
            .step_by(self.stride)
            .take_while(move |&s| s + n <= positions)
    }
}

/// Number of windows covering each of `positions` output positions.
pub fn coverage_counts(positions: usize, wc: &WindowConfig) -> Vec<usize> {
    let mut counts = vec![0; positions];
    for s in wc.starts(positions) {
        for c in &mut counts[s..s + wc.n] {
            *c += 1;
        }
    }
    counts
}

/// Averages per-window outputs over every covered position.
///
/// `window_output(s)` must return `wc.n` values for the window starting at
/// `s`. Windows are evaluated in parallel and summed in start order, so the
/// result does not depend on scheduling. Returns the averaged values for
/// the covered prefix and that prefix's range.
pub fn overlap_average<F>(
    positions: usize,
    wc: &WindowConfig,
    window_output: F,
) -> Result<(Vec<f64>, Range<usize>)>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    wc.validate()?;
    if positions < wc.n {
        return Err(Error::invalid(format!(
            "{positions} positions cannot hold a window of {}",
            wc.n
        )));
    }
    let starts: Vec<usize> = wc.starts(positions).collect();
    let outputs: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| window_output(s))
        .collect::<Result<_>>()?;
    let covered_end = starts.last().map_or(0, |&s| s + wc.n);
    let mut sum = vec![0.0f64; covered_end];
    let mut count = vec![0usize; covered_end];
    for (&s, out) in starts.iter().zip(&outputs) {
        if out.len() != wc.n {
            return Err(Error::shape(format!(
                "window at {s} produced {} values, expected {}",
                out.len(),
                wc.n
            )));
        }
        for (k, &v) in out.iter().enumerate() {
            sum[s + k] += v;
            count[s + k] += 1;
        }
    }
    let avg = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    Ok((avg, 0..covered_end))
}

/// Model-ready arrays for one video: standardized frames and motion maps.
///
/// Frames are shifted and scaled to zero mean and unit variance over the
/// whole video; motion maps are scaled to unit standard deviation.
#[derive(Debug, Clone)]
pub struct PreparedVideo {
    h: usize,
    w: usize,
    frames: Vec<f64>,
    motion: Vec<f64>,
    fps: f64,
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl PreparedVideo {
    pub fn new(seq: &FrameSequence) -> Result<Self> {
        let motion32 = motion_representation(seq, DEFAULT_MOTION_EPSILON)?;
        let mut motion: Vec<f64> = motion32.iter().map(|&v| v as f64).collect();
        let (_, m_std) = mean_std(&motion);
        if m_std > 0.0 {
            motion.iter_mut().for_each(|v| *v /= m_std);
        }
        let mut frames: Vec<f64> = seq.data().iter().map(|&v| v as f64).collect();
        let (f_mean, f_std) = mean_std(&frames);
        let f_scale = if f_std > 0.0 { 1.0 / f_std } else { 1.0 };
        frames.iter_mut().for_each(|v| *v = (*v - f_mean) * f_scale);
        Ok(Self {
            h: seq.height(),
            w: seq.width(),
            frames,
            motion,
            fps: seq.fps(),
        })
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// Number of motion maps, i.e. output positions.
    pub fn positions(&self) -> usize {
        self.motion.len() / (self.h * self.w)
    }

    /// Mean of the `n + 1` raw frames a window starting at `start` spans.
    pub fn appearance(&self, start: usize, n: usize) -> Vec<f64> {
        let plane = self.h * self.w;
        let mut out = vec![0.0; plane];
        for frame in self.frames[start * plane..(start + n + 1) * plane].chunks_exact(plane) {
            for (o, &v) in out.iter_mut().zip(frame) {
                *o += v;
            }
        }
        let inv = 1.0 / (n + 1) as f64;
        out.iter_mut().for_each(|v| *v *= inv);
        out
    }

    /// The `n` stacked motion maps of the window starting at `start`.
    pub fn motion(&self, start: usize, n: usize) -> &[f64] {
        let plane = self.h * self.w;
        &self.motion[start * plane..(start + n) * plane]
    }
}

fn check_model_fits(model: &CanModel, wc: &WindowConfig, h: usize, w: usize) -> Result<()> {
    if model.config.n != wc.n {
        return Err(Error::shape(format!(
            "model predicts {} samples but windows hold {}",
            model.config.n, wc.n
        )));
    }
    if (model.config.h, model.config.w) != (h, w) {
        return Err(Error::shape(format!(
            "frames are {h}x{w}, model expects {}x{}",
            model.config.h, model.config.w
        )));
    }
    Ok(())
}

/// Output of [`sliding_window_regress`].
#[derive(Debug, Clone)]
pub struct Regression {
    /// Averaged waveform over `covered`, sampled at the video frame rate.
    pub signal: PpgSignal,
    /// Output positions that at least one window reached.
    pub covered: Range<usize>,
}

/// Runs the model on every window of a video and averages the overlaps.
pub fn sliding_window_regress(
    seq: &FrameSequence,
    model: &CanModel,
    wc: &WindowConfig,
) -> Result<Regression> {
    wc.validate()?;
    if seq.len() < wc.frames_needed() {
        return Err(Error::invalid(format!(
            "{} frames, a window needs {}",
            seq.len(),
            wc.frames_needed()
        )));
    }
    check_model_fits(model, wc, seq.height(), seq.width())?;
    let video = PreparedVideo::new(seq)?;
    regress_prepared(&video, model, wc)
}

pub fn regress_prepared(
    video: &PreparedVideo,
    model: &CanModel,
    wc: &WindowConfig,
) -> Result<Regression> {
    check_model_fits(model, wc, video.h, video.w)?;
    let (values, covered) = overlap_average(video.positions(), wc, |s| {
        model.predict(&video.appearance(s, wc.n), video.motion(s, wc.n))
    })?;
    Ok(Regression {
        signal: PpgSignal::new(values, video.fps)?,
        covered,
    })
}

/// A video paired with its per-position regression target.
#[derive(Debug, Clone)]
pub struct TrainingVideo {
    pub video: PreparedVideo,
    pub target: Vec<f64>,
}

/// All training windows of a set of videos, addressed by `(video, start)`.
#[derive(Debug, Clone)]
pub struct WindowDataset {
    videos: Vec<TrainingVideo>,
    index: Vec<(usize, usize)>,
    n: usize,
}

impl WindowDataset {
    /// Enumerates windows with the given geometry. Each target needs at
    /// least as many samples as the video has motion maps.
    pub fn new(videos: Vec<TrainingVideo>, wc: &WindowConfig) -> Result<Self> {
        wc.validate()?;
        let mut index = Vec::new();
        for (v, tv) in videos.iter().enumerate() {
            let positions = tv.video.positions();
            if tv.target.len() < positions {
                return Err(Error::shape(format!(
                    "video {v}: {} target samples for {positions} motion maps",
                    tv.target.len()
                )));
            }
            index.extend(wc.starts(positions).map(|s| (v, s)));
        }
        Ok(Self {
            videos,
            index,
            n: wc.n,
        })
    }

    pub fn videos(&self) -> &[TrainingVideo] {
        &self.videos
    }
}

impl WindowSet for WindowDataset {
    fn len(&self) -> usize {
        self.index.len()
    }

    fn window(&self, index: usize) -> Window<'_> {
        let (v, s) = self.index[index];
        let tv = &self.videos[v];
        Window {
            appearance: Cow::Owned(tv.video.appearance(s, self.n)),
            motion: Cow::Borrowed(tv.video.motion(s, self.n)),
            target: Cow::Borrowed(&tv.target[s..s + self.n]),
        }
    }
}
