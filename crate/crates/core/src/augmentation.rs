//! Heart-rate augmentation by paired temporal stretching.
//!
//! Each video is replayed at ten target heart rates, one drawn uniformly
//! from every 10 bpm bin between 40 and 140 bpm. Video and ground truth are
//! stretched by the same factor at a fixed rate, so a stretch slows the
//! apparent pulse and a squeeze speeds it up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::inference::WindowConfig;
use crate::signal::{floor_tolerant, interp_at, signal_hr, PpgSignal};

pub const BPM_LOW: f64 = 40.0;
pub const BPM_BIN_WIDTH: f64 = 10.0;
pub const BIN_COUNT: usize = 10;

/// Target heart rates for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationPlan {
    pub targets: [f64; BIN_COUNT],
    pub source_hr: f64,
    pub seed: u64,
}

impl AugmentationPlan {
    /// `[lo, hi)` bounds of bin `k`.
    pub fn bin_edges(k: usize) -> (f64, f64) {
        let lo = BPM_LOW + BPM_BIN_WIDTH * k as f64;
        (lo, lo + BPM_BIN_WIDTH)
    }

    /// Bin index holding `bpm`; the upper edge of the last bin is included.
    pub fn bin_of(bpm: f64) -> Option<usize> {
        let top = BPM_LOW + BPM_BIN_WIDTH * BIN_COUNT as f64;
        if !(BPM_LOW..=top).contains(&bpm) {
            return None;
        }
        Some((((bpm - BPM_LOW) / BPM_BIN_WIDTH) as usize).min(BIN_COUNT - 1))
    }

    /// Stretch factor that moves the source rate to `target`.
    pub fn factor_for(&self, target: f64) -> f64 {
        self.source_hr / target
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.source_hr > 0.0 && self.source_hr.is_finite()) {
            return Err(Error::invalid("source heart rate must be positive"));
        }
        for (k, &t) in self.targets.iter().enumerate() {
            let (lo, hi) = Self::bin_edges(k);
            if !(lo..hi).contains(&t) {
                return Err(Error::invalid(format!(
                    "target {t} outside bin [{lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Estimates the source rate from `gt` and draws one target per bin.
pub fn plan_augmentation(gt: &PpgSignal, seed: u64) -> Result<AugmentationPlan> {
    let source_hr = signal_hr(gt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets = [0.0; BIN_COUNT];
    for (k, t) in targets.iter_mut().enumerate() {
        let (lo, hi) = AugmentationPlan::bin_edges(k);
        *t = rng.random_range(lo..hi);
    }
    Ok(AugmentationPlan {
        targets,
        source_hr,
        seed,
    })
}

fn stretched_len(len: usize, factor: f64) -> usize {
    floor_tolerant((len - 1) as f64 * factor) + 1
}

fn check_factor(factor: f64) -> Result<()> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::invalid(format!(
            "stretch factor must be positive, got {factor}"
        )));
    }
    Ok(())
}

/// Stretches the duration by `factor` at an unchanged sample rate; output
/// sample `j` reads the input at position `j / factor`.
pub fn time_stretch_signal(signal: &PpgSignal, factor: f64) -> Result<PpgSignal> {
    check_factor(factor)?;
    if signal.has_gaps() {
        return Err(Error::invalid(
            "time_stretch_signal: fill dropped samples first",
        ));
    }
    if factor == 1.0 {
        return Ok(signal.clone());
    }
    let x = signal.samples();
    let out = (0..stretched_len(x.len(), factor))
        .map(|j| interp_at(x, j as f64 / factor))
        .collect();
    PpgSignal::new(out, signal.sample_rate_hz())
}

/// Frame counterpart of [`time_stretch_signal`], interpolating every pixel
/// linearly in time.
pub fn time_stretch_frames(seq: &FrameSequence, factor: f64) -> Result<FrameSequence> {
    check_factor(factor)?;
    if seq.len() < 2 {
        return Err(Error::invalid("time stretching needs at least 2 frames"));
    }
    if factor == 1.0 {
        return Ok(seq.clone());
    }
    let t_out = stretched_len(seq.len(), factor);
    let last = seq.len() - 1;
    let mut data = Vec::with_capacity(t_out * seq.frame_len());
    for j in 0..t_out {
        let pos = j as f64 / factor;
        let i = (pos.floor() as usize).min(last);
        let frac = (pos - i as f64) as f32;
        if i == last || frac == 0.0 {
            data.extend_from_slice(seq.frame(i));
        } else {
            let (a, b) = (seq.frame(i), seq.frame(i + 1));
            data.extend(
                a.iter()
                    .zip(b)
                    .map(|(&p, &q)| (p + frac * (q - p)).clamp(0.0, 1.0)),
            );
        }
    }
    FrameSequence::new(data, t_out, seq.height(), seq.width(), seq.fps())
}

/// One augmented copy of a video.
#[derive(Debug, Clone)]
pub struct AugmentedSample {
    pub frames: FrameSequence,
    pub signal: PpgSignal,
    pub target_hr: f64,
    pub factor: f64,
}

/// Produces the ten stretched copies of a video, trimmed from the end to
/// the shortest copy. Videos whose trimmed copies cannot hold one window
/// are rejected.
pub fn augment_pair(
    seq: &FrameSequence,
    gt: &PpgSignal,
    plan: &AugmentationPlan,
    window: &WindowConfig,
) -> Result<Vec<AugmentedSample>> {
    plan.validate()?;
    let slack = 1.0 / seq.fps().min(gt.sample_rate_hz()) + 1e-9;
    if (seq.duration_s() - gt.duration_s()).abs() > slack {
        return Err(Error::Rejected(format!(
            "video lasts {:.3} s but its signal {:.3} s",
            seq.duration_s(),
            gt.duration_s()
        )));
    }
    let mut out = Vec::with_capacity(BIN_COUNT);
    for &target in &plan.targets {
        let factor = plan.factor_for(target);
        out.push(AugmentedSample {
            frames: time_stretch_frames(seq, factor)?,
            signal: time_stretch_signal(gt, factor)?,
            target_hr: target,
            factor,
        });
    }
    let shortest = out
        .iter()
        .map(|s| s.frames.len().min(s.signal.len()))
        .min()
        .unwrap_or(0);
    if shortest < window.frames_needed() {
        return Err(Error::Rejected(format!(
            "augmented copies trim to {shortest} frames, a window needs {}",
            window.frames_needed()
        )));
    }
    for s in &mut out {
        s.frames = s.frames.truncated(shortest)?;
        s.signal = s.signal.truncated(shortest)?;
    }
    Ok(out)
}
