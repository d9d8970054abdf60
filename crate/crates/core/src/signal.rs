//! PPG waveform type and 1-D signal operations.
//!
//! Everything here works on uniformly sampled `f64` sequences. Missing
//! samples are carried as NaN values flagged in a gap mask and must be
//! filled with [`fill_dropped_samples`] before any other operation.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Nominal rate every signal is corrected to at ingest.
pub const TARGET_RATE_HZ: f64 = 30.0;

/// Highest heart rate the default detector will resolve.
pub const MAX_PLAUSIBLE_BPM: f64 = 220.0;

/// A uniformly sampled scalar waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct PpgSignal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    gap_mask: Option<Vec<bool>>,
}

impl PpgSignal {
    /// Builds a signal; non-finite samples are flagged as gaps.
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        let mask: Vec<bool> = samples.iter().map(|v| !v.is_finite()).collect();
        let gap_mask = mask.iter().any(|&g| g).then_some(mask);
        Self::with_gaps(samples, sample_rate_hz, gap_mask)
    }

    pub fn with_gaps(
        samples: Vec<f64>,
        sample_rate_hz: f64,
        gap_mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("signal has no samples"));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(mask) = &gap_mask {
            if mask.len() != samples.len() {
                return Err(Error::shape(format!(
                    "gap mask length {} != sample count {}",
                    mask.len(),
                    samples.len()
                )));
            }
            if let Some(i) = (0..samples.len()).find(|&i| !mask[i] && !samples[i].is_finite()) {
                return Err(Error::invalid(format!(
                    "sample {i} is not finite but is not marked as a gap"
                )));
            }
        } else if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            gap_mask,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn gap_mask(&self) -> Option<&[bool]> {
        self.gap_mask.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration covered by the sample grid, `len / rate`.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn has_gaps(&self) -> bool {
        self.gap_mask.as_ref().is_some_and(|m| m.iter().any(|&g| g))
    }

    fn require_gap_free(&self, op: &str) -> Result<()> {
        if self.has_gaps() {
            return Err(Error::invalid(format!(
                "{op}: signal has dropped samples, fill them first"
            )));
        }
        Ok(())
    }

    /// Keeps the first `len` samples.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len() {
            return Err(Error::invalid(format!(
                "cannot truncate {} samples to {len}",
                self.len()
            )));
        }
        let gap_mask = self.gap_mask.as_ref().map(|m| m[..len].to_vec());
        Self::with_gaps(self.samples[..len].to_vec(), self.sample_rate_hz, gap_mask)
    }
}

/// Peak and trough sample indices, strictly alternating when merged.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtremaIndex {
    pub peaks: Vec<usize>,
    pub troughs: Vec<usize>,
}

/// Linear interpolation of `samples` at fractional index `pos`.
///
/// Integral positions return the stored sample unchanged.
pub(crate) fn interp_at(samples: &[f64], pos: f64) -> f64 {
    let last = samples.len() - 1;
    if pos <= 0.0 {
        return samples[0];
    }
    let i = pos.floor() as usize;
    if i >= last {
        return samples[last];
    }
    let frac = pos - i as f64;
    if frac == 0.0 {
        samples[i]
    } else {
        samples[i] + frac * (samples[i + 1] - samples[i])
    }
}

/// `floor(x)` that tolerates representation error just below an integer.
pub(crate) fn floor_tolerant(x: f64) -> usize {
    (x + 1e-9).floor().max(0.0) as usize
}

/// Resamples to `target_rate_hz` by linear interpolation.
///
/// The output grid spans the input exactly, so the first and last samples
/// are carried over unchanged.
pub fn resample_linear(signal: &PpgSignal, target_rate_hz: f64) -> Result<PpgSignal> {
    if !(target_rate_hz > 0.0 && target_rate_hz.is_finite()) {
        return Err(Error::invalid(format!(
            "target rate must be positive, got {target_rate_hz}"
        )));
    }
    signal.require_gap_free("resample_linear")?;
    let len = signal.len();
    let out_len = floor_tolerant((len - 1) as f64 * target_rate_hz / signal.sample_rate_hz) + 1;
    let samples = if out_len == len {
        signal.samples.clone()
    } else if out_len == 1 {
        vec![signal.samples[0]]
    } else {
        let step = (len - 1) as f64 / (out_len - 1) as f64;
        let mut out: Vec<f64> = (0..out_len)
            .map(|j| interp_at(&signal.samples, j as f64 * step))
            .collect();
        out[out_len - 1] = signal.samples[len - 1];
        out
    };
    PpgSignal::new(samples, target_rate_hz)
}

/// Fills gaps by linear interpolation between the nearest valid neighbours;
/// leading and trailing gaps take the nearest valid value.
pub fn fill_dropped_samples(signal: &PpgSignal) -> Result<PpgSignal> {
    let Some(mask) = signal.gap_mask() else {
        return Ok(signal.clone());
    };
    let valid: Vec<usize> = (0..signal.len()).filter(|&i| !mask[i]).collect();
    let (&first, &last) = match (valid.first(), valid.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::invalid("every sample is missing")),
    };
    let x = signal.samples();
    let mut out = x.to_vec();
    out[..first].fill(x[first]);
    out[last + 1..].fill(x[last]);
    for pair in valid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let span = (b - a) as f64;
        for (k, slot) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            let frac = (k - a) as f64 / span;
            *slot = x[a] + frac * (x[b] - x[a]);
        }
    }
    PpgSignal::new(out, signal.sample_rate_hz)
}

/// Peak-detector settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub min_distance_samples: usize,
    pub min_prominence: f64,
}

impl DetectorParams {
    /// Defaults tied to physiology: no beats closer than 220 bpm allows, and
    /// a prominence of 10% of the signal range.
    pub fn for_signal(signal: &PpgSignal) -> Self {
        let x = signal.samples();
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let min_distance = (signal.sample_rate_hz() * 60.0 / MAX_PLAUSIBLE_BPM).floor() as usize;
        Self {
            min_distance_samples: min_distance.max(1),
            min_prominence: 0.1 * (hi - lo),
        }
    }
}

/// Start index of every plateau-aware strict local maximum, endpoints excluded.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = x.len();
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && x[end + 1] == x[start] {
            end += 1;
        }
        if start > 0 && end + 1 < n && x[start - 1] < x[start] && x[end + 1] < x[start] {
            out.push(start);
        }
        start = end + 1;
    }
    out
}

/// Topographic prominence: height above the higher of the two lowest points
/// reached before meeting a strictly higher sample on either side.
fn prominence(x: &[f64], peak: usize) -> f64 {
    let v = x[peak];
    let mut left_min = v;
    for &s in x[..peak].iter().rev() {
        if s > v {
            break;
        }
        left_min = left_min.min(s);
    }
    let mut right_min = v;
    for &s in &x[peak + 1..] {
        if s > v {
            break;
        }
        right_min = right_min.min(s);
    }
    v - left_min.max(right_min)
}

fn select_peaks(x: &[f64], min_distance: usize, min_prominence: f64) -> Vec<usize> {
    let mut candidates: Vec<usize> = local_maxima(x)
        .into_iter()
        .filter(|&p| prominence(x, p) >= min_prominence)
        .collect();
    // highest first, earlier index wins ties
    candidates.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut kept = BTreeSet::new();
    for p in candidates {
        let clear_left = kept
            .range(..p)
            .next_back()
            .is_none_or(|&q: &usize| p - q >= min_distance);
        let clear_right = kept
            .range(p..)
            .next()
            .is_none_or(|&q: &usize| q - p >= min_distance);
        if clear_left && clear_right {
            kept.insert(p);
        }
    }
    kept.into_iter().collect()
}

/// Reduces every run of same-kind extrema to its most extreme member.
fn enforce_alternation(x: &[f64], peaks: &[usize], troughs: &[usize]) -> ExtremaIndex {
    let mut merged: Vec<(usize, bool)> = peaks
        .iter()
        .map(|&i| (i, true))
        .chain(troughs.iter().map(|&i| (i, false)))
        .collect();
    merged.sort_unstable();
    let mut out = ExtremaIndex::default();
    let mut i = 0;
    while i < merged.len() {
        let is_peak = merged[i].1;
        let mut best = merged[i].0;
        let mut j = i + 1;
        while j < merged.len() && merged[j].1 == is_peak {
            let idx = merged[j].0;
            if (is_peak && x[idx] > x[best]) || (!is_peak && x[idx] < x[best]) {
                best = idx;
            }
            j += 1;
        }
        if is_peak {
            out.peaks.push(best);
        } else {
            out.troughs.push(best);
        }
        i = j;
    }
    out
}

/// Finds alternating peaks and troughs.
///
/// Troughs are found as peaks of the negated signal with the same spacing
/// and prominence limits.
pub fn detect_extrema(
    signal: &PpgSignal,
    min_distance_samples: usize,
    min_prominence: f64,
) -> Result<ExtremaIndex> {
    signal.require_gap_free("detect_extrema")?;
    if min_distance_samples == 0 {
        return Err(Error::invalid("min_distance_samples must be at least 1"));
    }
    if !(min_prominence >= 0.0) {
        return Err(Error::invalid("min_prominence must be non-negative"));
    }
    let x = signal.samples();
    let negated: Vec<f64> = x.iter().map(|v| -v).collect();
    let peaks = select_peaks(x, min_distance_samples, min_prominence);
    let troughs = select_peaks(&negated, min_distance_samples, min_prominence);
    Ok(enforce_alternation(x, &peaks, &troughs))
}

/// [`detect_extrema`] with [`DetectorParams::for_signal`].
pub fn detect_extrema_default(signal: &PpgSignal) -> Result<ExtremaIndex> {
    let p = DetectorParams::for_signal(signal);
    detect_extrema(signal, p.min_distance_samples, p.min_prominence)
}

/// Piecewise-linear curve through `(knots[k], x[knots[k]])`, held constant
/// outside the first and last knot.
fn envelope(x: &[f64], knots: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut k = 0;
    for t in 0..x.len() {
        while k + 1 < knots.len() && knots[k + 1] <= t {
            k += 1;
        }
        let a = knots[k];
        let v = if t <= a || k + 1 == knots.len() {
            x[a]
        } else {
            let b = knots[k + 1];
            let frac = (t - a) as f64 / (b - a) as f64;
            x[a] + frac * (x[b] - x[a])
        };
        out.push(v);
    }
    out
}

/// Maps every peak to 1 and every trough to 0 using interpolated upper and
/// lower envelopes, clamping everything else into `[0, 1]`.
pub fn normalize_peak_trough(signal: &PpgSignal, extrema: &ExtremaIndex) -> Result<PpgSignal> {
    signal.require_gap_free("normalize_peak_trough")?;
    if extrema.peaks.is_empty() || extrema.troughs.is_empty() {
        return Err(Error::InsufficientPeaks {
            found: extrema.peaks.len().min(extrema.troughs.len()),
            needed: 1,
        });
    }
    let x = signal.samples();
    if let Some(&bad) = extrema
        .peaks
        .iter()
        .chain(&extrema.troughs)
        .find(|&&i| i >= x.len())
    {
        return Err(Error::invalid(format!(
            "extremum index {bad} out of range for {} samples",
            x.len()
        )));
    }
    let upper = envelope(x, &extrema.peaks);
    let lower = envelope(x, &extrema.troughs);
    let mut out = Vec::with_capacity(x.len());
    for (i, ((&v, &u), &l)) in x.iter().zip(&upper).zip(&lower).enumerate() {
        if u <= l {
            return Err(Error::DegenerateEnvelope {
                index: i,
                upper: u,
                lower: l,
            });
        }
        out.push(((v - l) / (u - l)).clamp(0.0, 1.0));
    }
    PpgSignal::new(out, signal.sample_rate_hz())
}

/// Heart rate from the mean peak-to-peak interval.
pub fn hr_from_rr(extrema: &ExtremaIndex, sample_rate_hz: f64) -> Result<f64> {
    let peaks = &extrema.peaks;
    if peaks.len() < 2 {
        return Err(Error::InsufficientPeaks {
            found: peaks.len(),
            needed: 2,
        });
    }
    if !(sample_rate_hz > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let span = (peaks[peaks.len() - 1] - peaks[0]) as f64;
    let mean_interval_samples = span / (peaks.len() - 1) as f64;
    Ok(60.0 * sample_rate_hz / mean_interval_samples)
}

/// Heart rate of a signal using the default detector.
pub fn signal_hr(signal: &PpgSignal) -> Result<f64> {
    let extrema = detect_extrema_default(signal)?;
    hr_from_rr(&extrema, signal.sample_rate_hz())
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "sequence lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("sequences are empty"));
    }
    Ok(())
}

pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn sig(v: &[f64], rate: f64) -> PpgSignal {
        PpgSignal::new(v.to_vec(), rate).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(PpgSignal::new(vec![], 30.0).is_err());
        assert!(PpgSignal::new(vec![1.0], 0.0).is_err());
        assert!(PpgSignal::with_gaps(vec![1.0, 2.0], 30.0, Some(vec![false])).is_err());
        assert!(PpgSignal::with_gaps(vec![f64::NAN], 30.0, Some(vec![false])).is_err());
        assert!(PpgSignal::new(vec![1.0, f64::NAN], 30.0)
            .unwrap()
            .has_gaps());
    }

    #[test]
    fn resample_examples() {
        let out = resample_linear(&sig(&[1.0, 1.0, 1.0], 15.0), 30.0).unwrap();
        assert_eq!(out.samples(), &[1.0; 5]);
        assert_eq!(out.sample_rate_hz(), 30.0);

        let out = resample_linear(&sig(&[0.0, 1.0, 2.0], 10.0), 20.0).unwrap();
        assert_eq!(out.samples(), &[0.0, 0.5, 1.0, 1.5, 2.0]);

        let s = sig(&[0.3, -1.2, 7.5, 2.25], 29.7);
        let out = resample_linear(&s, 29.7).unwrap();
        assert_eq!(out.samples(), s.samples());
    }

    #[test]
    fn resample_keeps_endpoints_and_length_rule() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let out = resample_linear(&sig(&x, 29.7), 30.0).unwrap();
        assert_eq!(out.len(), (99.0 * 30.0 / 29.7_f64).floor() as usize + 1);
        assert_eq!(out.samples()[0], x[0]);
        assert_eq!(*out.samples().last().unwrap(), x[99]);
        let down = resample_linear(&sig(&x, 30.0), 7.0).unwrap();
        assert_eq!(down.len(), (99.0 * 7.0 / 30.0_f64).floor() as usize + 1);
    }

    #[test]
    fn resample_errors() {
        assert!(resample_linear(&sig(&[1.0, 2.0], 10.0), 0.0).is_err());
        assert!(resample_linear(&sig(&[1.0, 2.0], 10.0), -3.0).is_err());
        let gappy = PpgSignal::new(vec![1.0, f64::NAN, 3.0], 10.0).unwrap();
        assert!(resample_linear(&gappy, 20.0).is_err());
    }

    #[test]
    fn fill_examples() {
        let s = PpgSignal::new(vec![0.0, f64::NAN, 2.0], 30.0).unwrap();
        assert_eq!(
            fill_dropped_samples(&s).unwrap().samples(),
            &[0.0, 1.0, 2.0]
        );

        let nan = f64::NAN;
        let s = PpgSignal::new(vec![nan, 5.0, nan, nan, 8.0, nan], 30.0).unwrap();
        let filled = fill_dropped_samples(&s).unwrap();
        assert_eq!(filled.samples(), &[5.0, 5.0, 6.0, 7.0, 8.0, 8.0]);
        assert!(!filled.has_gaps());

        let clean = sig(&[1.0, 4.0, 2.0], 30.0);
        assert_eq!(fill_dropped_samples(&clean).unwrap(), clean);

        let all = PpgSignal::new(vec![nan, nan], 30.0).unwrap();
        assert!(fill_dropped_samples(&all).is_err());
    }

    #[test]
    fn fill_respects_mask_over_values() {
        // a masked sample is replaced even if its stored value is finite
        let s = PpgSignal::with_gaps(vec![0.0, 9.0, 4.0], 30.0, Some(vec![false, true, false]))
            .unwrap();
        assert_eq!(
            fill_dropped_samples(&s).unwrap().samples(),
            &[0.0, 2.0, 4.0]
        );
    }

    #[test]
    fn extrema_examples() {
        let e = detect_extrema(&sig(&[0.0, 1.0, 2.0, 3.0], 30.0), 1, 0.0).unwrap();
        assert!(e.peaks.is_empty() && e.troughs.is_empty());

        let e = detect_extrema(&sig(&[0.0, 2.0, 1.0, 3.0, 0.0], 30.0), 1, 0.0).unwrap();
        assert_eq!(e.peaks, vec![1, 3]);
        assert_eq!(e.troughs, vec![2]);

        let x: Vec<f64> = (0..301)
            .map(|i| (2.0 * PI * i as f64 / 30.0).cos())
            .collect();
        let e = detect_extrema(&sig(&x, 30.0), 9, 0.0).unwrap();
        assert_eq!(e.peaks, (1..10).map(|k| 30 * k).collect::<Vec<_>>());
        assert_eq!(e.troughs, (0..10).map(|k| 15 + 30 * k).collect::<Vec<_>>());
    }

    #[test]
    fn plateau_reports_first_sample() {
        let e = detect_extrema(
            &sig(&[0.0, 2.0, 2.0, 2.0, 0.0, -1.0, -1.0, 3.0], 30.0),
            1,
            0.0,
        )
        .unwrap();
        assert_eq!(e.peaks, vec![1]);
        assert_eq!(e.troughs, vec![5]);
    }

    #[test]
    fn prominence_filters_ripples() {
        // small ripple at index 3 sits on the flank of the main peak
        let x = [0.0, 1.0, 2.0, 2.05, 2.0, 3.0, 2.0, 0.0, 1.0, 0.5];
        let e = detect_extrema(&sig(&x, 30.0), 1, 0.5).unwrap();
        assert_eq!(e.peaks, vec![5, 8]);
        assert_eq!(e.troughs, vec![7]);
    }

    #[test]
    fn spacing_keeps_higher_peak() {
        let x = [0.0, 2.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0];
        let e = detect_extrema(&sig(&x, 30.0), 3, 0.0).unwrap();
        assert_eq!(e.peaks, vec![3]);
    }

    #[test]
    fn extrema_rejects_bad_params() {
        assert!(detect_extrema(&sig(&[0.0, 1.0, 0.0], 30.0), 0, 0.0).is_err());
        assert!(detect_extrema(&sig(&[0.0, 1.0, 0.0], 30.0), 1, -1.0).is_err());
    }

    #[test]
    fn default_detector_params() {
        let s = sig(&[0.0, 2.0, 1.0], 30.0);
        let p = DetectorParams::for_signal(&s);
        assert_eq!(p.min_distance_samples, 8);
        assert_abs_diff_eq!(p.min_prominence, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn normalize_pure_sine() {
        let x: Vec<f64> = (0..301)
            .map(|i| (2.0 * PI * i as f64 / 30.0).sin())
            .collect();
        let s = sig(&x, 30.0);
        let e = detect_extrema_default(&s).unwrap();
        let out = normalize_peak_trough(&s, &e).unwrap();
        for &p in &e.peaks {
            assert_abs_diff_eq!(out.samples()[p], 1.0, epsilon = 1e-12);
        }
        for &t in &e.troughs {
            assert_abs_diff_eq!(out.samples()[t], 0.0, epsilon = 1e-12);
        }
        // both envelopes are flat at +-m, so the map is (x + m) / 2m
        let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (&o, &v) in out.samples().iter().zip(&x) {
            assert_abs_diff_eq!(o, ((v + m) / (2.0 * m)).clamp(0.0, 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_fixed_point() {
        let x: Vec<f64> = (0..200)
            .map(|i| 0.5 + 0.5 * (2.0 * PI * i as f64 / 20.0).cos())
            .collect();
        let s = sig(&x, 30.0);
        let e = detect_extrema_default(&s).unwrap();
        assert_eq!(e.peaks[0], 20);
        let out = normalize_peak_trough(&s, &e).unwrap();
        for (&o, &v) in out.samples().iter().zip(&x) {
            assert_abs_diff_eq!(o, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_errors() {
        let s = sig(&[0.0, 1.0, 0.0, 1.0, 0.0], 30.0);
        let only_peaks = ExtremaIndex {
            peaks: vec![1, 3],
            troughs: vec![],
        };
        assert!(matches!(
            normalize_peak_trough(&s, &only_peaks),
            Err(Error::InsufficientPeaks { .. })
        ));
        let inverted = ExtremaIndex {
            peaks: vec![2],
            troughs: vec![1],
        };
        assert!(matches!(
            normalize_peak_trough(&s, &inverted),
            Err(Error::DegenerateEnvelope { index: 0, .. })
        ));
    }

    #[test]
    fn hr_examples() {
        let e = |p: &[usize]| ExtremaIndex {
            peaks: p.to_vec(),
            troughs: vec![],
        };
        assert_eq!(hr_from_rr(&e(&[0, 30, 60]), 30.0).unwrap(), 60.0);
        assert_eq!(hr_from_rr(&e(&[0, 15, 30]), 30.0).unwrap(), 120.0);
        assert_abs_diff_eq!(
            hr_from_rr(&e(&[0, 30, 75]), 30.0).unwrap(),
            48.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            hr_from_rr(&e(&[4]), 30.0),
            Err(Error::InsufficientPeaks {
                found: 1,
                needed: 2
            })
        ));
    }

    #[test]
    fn error_metrics() {
        assert_eq!(mae(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 2.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 5.0);
        assert_eq!(mae(&[1.0], &[-1.0]).unwrap(), 2.0);
        assert_eq!(mse(&[1.0], &[-1.0]).unwrap(), 4.0);
        assert_eq!(mae(&[0.5, 2.0], &[0.5, 2.0]).unwrap(), 0.0);
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }
}
