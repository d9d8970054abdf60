//! Synthetic NIR recordings with known ground truth.
//!
//! A static Gaussian "face" on a dim background brightens and darkens with
//! a two-harmonic pulse waveform, plus independent Gaussian pixel noise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::frames::{BoundingBox, FrameSequence};
use crate::signal::PpgSignal;

const BACKGROUND: f64 = 0.2;
const FACE_GAIN: f64 = 0.5;
/// Relative change of face brightness per unit of the waveform.
const PULSE_DEPTH: f64 = 0.1;

/// Parameters of one synthetic video.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub hr_bpm: f64,
    pub duration_s: f64,
    pub fps: f64,
    pub h: usize,
    pub w: usize,
    pub noise_sigma: f64,
    /// Amplitude of the second harmonic relative to the fundamental.
    pub dicrotic_ratio: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            hr_bpm: 70.0,
            duration_s: 30.0,
            fps: 30.0,
            h: 64,
            w: 64,
            noise_sigma: 0.01,
            dicrotic_ratio: 0.2,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }

    /// `min_frames` is the shortest acceptable video, normally one window.
    pub fn validate(&self, min_frames: usize) -> Result<()> {
        if !(40.0..=140.0).contains(&self.hr_bpm) {
            return Err(Error::invalid(format!(
                "heart rate {} outside 40-140 bpm",
                self.hr_bpm
            )));
        }
        if !(self.fps > 0.0) || self.h == 0 || self.w == 0 {
            return Err(Error::invalid("fps and frame size must be positive"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise sigma must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.dicrotic_ratio) {
            return Err(Error::invalid("dicrotic ratio must lie in [0, 1)"));
        }
        if self.frame_count() < min_frames.max(2) {
            return Err(Error::invalid(format!(
                "{} s at {} fps gives {} frames, need {min_frames}",
                self.duration_s,
                self.fps,
                self.frame_count()
            )));
        }
        Ok(())
    }
}

/// Ground-truth waveform value at time `t`.
pub fn pulse_waveform(t: f64, hr_bpm: f64, dicrotic_ratio: f64, phase: f64) -> f64 {
    let cycles = hr_bpm / 60.0 * t;
    let x = 2.0 * PI * (cycles - cycles.floor());
    0.5 + 0.4 * x.sin() + dicrotic_ratio * 0.4 * (2.0 * x + phase).sin()
}

/// Generates a video, its 30 Hz-aligned ground truth and the face box.
pub fn generate_synthetic(
    spec: &SynthSpec,
    min_frames: usize,
) -> Result<(FrameSequence, PpgSignal, BoundingBox)> {
    spec.validate(min_frames)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phase = rng.random_range(0.0..2.0 * PI);
    let (h, w) = (spec.h as f64, spec.w as f64);
    let cy = rng.random_range(0.4..0.6) * h;
    let cx = rng.random_range(0.4..0.6) * w;
    let sigma = rng.random_range(0.15..0.2) * h.min(w);

    let t_count = spec.frame_count();
    let gt: Vec<f64> = (0..t_count)
        .map(|i| pulse_waveform(i as f64 / spec.fps, spec.hr_bpm, spec.dicrotic_ratio, phase))
        .collect();

    let blob: Vec<f64> = (0..spec.h)
        .flat_map(|y| {
            (0..spec.w).map(move |x| {
                let dy = y as f64 + 0.5 - cy;
                let dx = x as f64 + 0.5 - cx;
                (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
            })
        })
        .collect();
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::invalid(e.to_string()))?;
    let mut data = Vec::with_capacity(t_count * blob.len());
    for &g in &gt {
        let brightness = FACE_GAIN * (1.0 + PULSE_DEPTH * (g - 0.5));
        for &b in &blob {
            let mut v = BACKGROUND + b * brightness;
            if spec.noise_sigma > 0.0 {
                v += noise.sample(&mut rng);
            }
            data.push(v.clamp(0.0, 1.0) as f32);
        }
    }
    let frames = FrameSequence::new(data, t_count, spec.h, spec.w, spec.fps)?;
    let signal = PpgSignal::new(gt, spec.fps)?;

    let x0 = (cx - 2.0 * sigma).floor().max(0.0) as i64;
    let y0 = (cy - 2.0 * sigma).floor().max(0.0) as i64;
    let x1 = ((cx + 2.0 * sigma).ceil() as i64).min(spec.w as i64);
    let y1 = ((cy + 2.0 * sigma).ceil() as i64).min(spec.h as i64);
    let bbox = BoundingBox {
        x: x0,
        y: y0,
        w: (x1 - x0).max(1) as u32,
        h: (y1 - y0).max(1) as u32,
    };
    Ok((frames, signal, bbox))
}
