//! Single-channel NIR frame sequences: face crop, bilinear resize and the
//! normalized frame-difference motion representation.

use crate::error::{Error, Result};

/// Padding applied around detected faces before resizing.
pub const DEFAULT_CROP_PAD: f64 = 0.25;

/// Model input resolution used for real recordings.
pub const DEFAULT_FRAME_SIZE: usize = 64;

/// Guard against division by zero on black pixels.
pub const DEFAULT_MOTION_EPSILON: f32 = 1e-6;

/// `T x H x W` video stored t-major, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    data: Vec<f32>,
    t: usize,
    h: usize,
    w: usize,
    fps: f64,
}

impl FrameSequence {
    pub fn new(data: Vec<f32>, t: usize, h: usize, w: usize, fps: f64) -> Result<Self> {
        if t == 0 || h == 0 || w == 0 {
            return Err(Error::shape(format!("empty frame sequence {t}x{h}x{w}")));
        }
        if data.len() != t * h * w {
            return Err(Error::shape(format!(
                "{} pixels for a {t}x{h}x{w} sequence",
                data.len()
            )));
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::invalid(format!("fps must be positive, got {fps}")));
        }
        if let Some(i) = data
            .iter()
            .position(|v| !(v.is_finite() && (0.0..=1.0).contains(v)))
        {
            return Err(Error::invalid(format!(
                "pixel {i} = {} outside [0, 1]",
                data[i]
            )));
        }
        Ok(Self { data, t, h, w, fps })
    }

    /// Builds a sequence from per-frame buffers of equal size.
    pub fn from_frames(frames: Vec<Vec<f32>>, h: usize, w: usize, fps: f64) -> Result<Self> {
        let t = frames.len();
        let data: Vec<f32> = frames.into_iter().flatten().collect();
        Self::new(data, t, h, w, fps)
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
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

    pub fn frame_len(&self) -> usize {
        self.h * self.w
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        let n = self.frame_len();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn duration_s(&self) -> f64 {
        self.t as f64 / self.fps
    }

    /// Keeps the first `t` frames.
    pub fn truncated(&self, t: usize) -> Result<Self> {
        if t == 0 || t > self.t {
            return Err(Error::invalid(format!(
                "cannot truncate {} frames to {t}",
                self.t
            )));
        }
        Ok(Self {
            data: self.data[..t * self.frame_len()].to_vec(),
            t,
            ..*self
        })
    }
}

/// Face box in pixel coordinates; `x`/`y` may be negative before clamping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x: i64,
    pub y: i64,
    pub w: u32,
    pub h: u32,
}

/// Pixel rectangle fully inside a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropRegion {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

/// Expands `bbox` by `pad_fraction` of its size on every side and clamps it
/// to a `frame_h x frame_w` frame.
pub fn padded_region(
    bbox: BoundingBox,
    pad_fraction: f64,
    frame_h: usize,
    frame_w: usize,
) -> Result<CropRegion> {
    if !(pad_fraction >= 0.0 && pad_fraction.is_finite()) {
        return Err(Error::invalid(format!(
            "pad fraction must be non-negative, got {pad_fraction}"
        )));
    }
    if bbox.w == 0 || bbox.h == 0 {
        return Err(Error::invalid("bounding box has zero size"));
    }
    let pad_x = pad_fraction * bbox.w as f64;
    let pad_y = pad_fraction * bbox.h as f64;
    let x0 = (bbox.x as f64 - pad_x).floor() as i64;
    let y0 = (bbox.y as f64 - pad_y).floor() as i64;
    let x1 = x0 + (bbox.w as f64 + 2.0 * pad_x).ceil() as i64;
    let y1 = y0 + (bbox.h as f64 + 2.0 * pad_y).ceil() as i64;
    let cx0 = x0.clamp(0, frame_w as i64);
    let cy0 = y0.clamp(0, frame_h as i64);
    let cx1 = x1.clamp(0, frame_w as i64);
    let cy1 = y1.clamp(0, frame_h as i64);
    if cx1 <= cx0 || cy1 <= cy0 {
        return Err(Error::invalid(format!(
            "padded box {bbox:?} does not intersect the {frame_w}x{frame_h} frame"
        )));
    }
    Ok(CropRegion {
        x: cx0 as usize,
        y: cy0 as usize,
        w: (cx1 - cx0) as usize,
        h: (cy1 - cy0) as usize,
    })
}

fn crop_frame(frame: &[f32], frame_w: usize, region: CropRegion, out: &mut Vec<f32>) {
    for row in region.y..region.y + region.h {
        let start = row * frame_w + region.x;
        out.extend_from_slice(&frame[start..start + region.w]);
    }
}

/// Crops every frame to the padded box.
pub fn crop_with_padding(
    seq: &FrameSequence,
    bbox: BoundingBox,
    pad_fraction: f64,
) -> Result<FrameSequence> {
    let region = padded_region(bbox, pad_fraction, seq.h, seq.w)?;
    let mut data = Vec::with_capacity(seq.t * region.w * region.h);
    for t in 0..seq.t {
        crop_frame(seq.frame(t), seq.w, region, &mut data);
    }
    FrameSequence::new(data, seq.t, region.h, region.w, seq.fps)
}

/// Precomputed source taps for one output axis.
struct AxisTaps {
    lo: Vec<usize>,
    hi: Vec<usize>,
    frac: Vec<f32>,
}

impl AxisTaps {
    fn new(src: usize, dst: usize) -> Self {
        let scale = src as f64 / dst as f64;
        let mut taps = AxisTaps {
            lo: Vec::with_capacity(dst),
            hi: Vec::with_capacity(dst),
            frac: Vec::with_capacity(dst),
        };
        for i in 0..dst {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = pos.floor() as usize;
            taps.lo.push(lo);
            taps.hi.push((lo + 1).min(src - 1));
            taps.frac.push((pos - lo as f64) as f32);
        }
        taps
    }
}

fn resize_frame(src: &[f32], src_w: usize, rows: &AxisTaps, cols: &AxisTaps, out: &mut Vec<f32>) {
    for ((&y0, &y1), &fy) in rows.lo.iter().zip(&rows.hi).zip(&rows.frac) {
        let r0 = &src[y0 * src_w..(y0 + 1) * src_w];
        let r1 = &src[y1 * src_w..(y1 + 1) * src_w];
        for ((&x0, &x1), &fx) in cols.lo.iter().zip(&cols.hi).zip(&cols.frac) {
            let top = r0[x0] + fx * (r0[x1] - r0[x0]);
            let bottom = r1[x0] + fx * (r1[x1] - r1[x0]);
            out.push((top + fy * (bottom - top)).clamp(0.0, 1.0));
        }
    }
}

/// Bilinear resize with half-pixel centers.
pub fn resize_bilinear(seq: &FrameSequence, out_h: usize, out_w: usize) -> Result<FrameSequence> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::invalid("output size must be positive"));
    }
    if out_h == seq.h && out_w == seq.w {
        return Ok(seq.clone());
    }
    let rows = AxisTaps::new(seq.h, out_h);
    let cols = AxisTaps::new(seq.w, out_w);
    let mut data = Vec::with_capacity(seq.t * out_h * out_w);
    for t in 0..seq.t {
        resize_frame(seq.frame(t), seq.w, &rows, &cols, &mut data);
    }
    FrameSequence::new(data, seq.t, out_h, out_w, seq.fps)
}

/// Crops each frame with its own box, then resizes every crop to
/// `out_h x out_w`. `boxes` holds one box per frame.
pub fn crop_resize_per_frame(
    seq: &FrameSequence,
    boxes: &[BoundingBox],
    pad_fraction: f64,
    out_h: usize,
    out_w: usize,
) -> Result<FrameSequence> {
    if boxes.len() != seq.t {
        return Err(Error::shape(format!(
            "{} boxes for {} frames",
            boxes.len(),
            seq.t
        )));
    }
    if out_h == 0 || out_w == 0 {
        return Err(Error::invalid("output size must be positive"));
    }
    let mut data = Vec::with_capacity(seq.t * out_h * out_w);
    let mut crop = Vec::new();
    for (t, &bbox) in boxes.iter().enumerate() {
        let region = padded_region(bbox, pad_fraction, seq.h, seq.w)?;
        crop.clear();
        crop_frame(seq.frame(t), seq.w, region, &mut crop);
        let rows = AxisTaps::new(region.h, out_h);
        let cols = AxisTaps::new(region.w, out_w);
        resize_frame(&crop, region.w, &rows, &cols, &mut data);
    }
    FrameSequence::new(data, seq.t, out_h, out_w, seq.fps)
}

/// Normalized frame differences, `(C[t+1] - C[t]) / (C[t+1] + C[t] + eps)`,
/// as a flat `(T-1) x H x W` buffer.
pub fn motion_representation(seq: &FrameSequence, epsilon: f32) -> Result<Vec<f32>> {
    if seq.t < 2 {
        return Err(Error::invalid(format!(
            "motion needs at least 2 frames, got {}",
            seq.t
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("epsilon must be non-negative"));
    }
    let n = seq.frame_len();
    let mut out = Vec::with_capacity((seq.t - 1) * n);
    for pair in seq.data.chunks_exact(n).collect::<Vec<_>>().windows(2) {
        for (&a, &b) in pair[0].iter().zip(pair[1]) {
            let denom = b + a + epsilon;
            out.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(t: usize, h: usize, w: usize, v: f32) -> FrameSequence {
        FrameSequence::new(vec![v; t * h * w], t, h, w, 30.0).unwrap()
    }

    #[test]
    fn sequence_validation() {
        assert!(FrameSequence::new(vec![], 0, 1, 1, 30.0).is_err());
        assert!(FrameSequence::new(vec![0.5; 3], 1, 2, 2, 30.0).is_err());
        assert!(FrameSequence::new(vec![1.5], 1, 1, 1, 30.0).is_err());
        assert!(FrameSequence::new(vec![f32::NAN], 1, 1, 1, 30.0).is_err());
        assert!(FrameSequence::new(vec![0.5], 1, 1, 1, 0.0).is_err());
    }

    #[test]
    fn padded_region_examples() {
        let b = BoundingBox {
            x: 100,
            y: 100,
            w: 200,
            h: 200,
        };
        assert_eq!(
            padded_region(b, 0.25, 640, 640).unwrap(),
            CropRegion {
                x: 50,
                y: 50,
                w: 300,
                h: 300
            }
        );
        assert_eq!(
            padded_region(b, 0.0, 640, 640).unwrap(),
            CropRegion {
                x: 100,
                y: 100,
                w: 200,
                h: 200
            }
        );
        let corner = BoundingBox {
            x: 0,
            y: 0,
            w: 100,
            h: 100,
        };
        assert_eq!(
            padded_region(corner, 0.25, 640, 640).unwrap(),
            CropRegion {
                x: 0,
                y: 0,
                w: 125,
                h: 125
            }
        );
    }

    #[test]
    fn padded_region_rounds_outward_per_axis() {
        let b = BoundingBox {
            x: 10,
            y: 20,
            w: 5,
            h: 3,
        };
        // pads 1.25 horizontally and 0.75 vertically
        assert_eq!(
            padded_region(b, 0.25, 100, 100).unwrap(),
            CropRegion {
                x: 8,
                y: 19,
                w: 8,
                h: 5
            }
        );
    }

    #[test]
    fn padded_region_errors() {
        let outside = BoundingBox {
            x: 700,
            y: 700,
            w: 10,
            h: 10,
        };
        assert!(padded_region(outside, 0.25, 640, 640).is_err());
        let b = BoundingBox {
            x: 0,
            y: 0,
            w: 10,
            h: 10,
        };
        assert!(padded_region(b, -0.1, 64, 64).is_err());
        assert!(padded_region(BoundingBox { w: 0, ..b }, 0.0, 64, 64).is_err());
    }

    #[test]
    fn crop_extracts_region() {
        let data: Vec<f32> = (0..2 * 4 * 5).map(|i| i as f32 / 40.0).collect();
        let seq = FrameSequence::new(data, 2, 4, 5, 30.0).unwrap();
        let out = crop_with_padding(
            &seq,
            BoundingBox {
                x: 1,
                y: 2,
                w: 3,
                h: 2,
            },
            0.0,
        )
        .unwrap();
        assert_eq!((out.len(), out.height(), out.width()), (2, 2, 3));
        assert_eq!(
            out.frame(0),
            &[
                11.0 / 40.0,
                12.0 / 40.0,
                13.0 / 40.0,
                16.0 / 40.0,
                17.0 / 40.0,
                18.0 / 40.0
            ]
        );
        assert_eq!(out.frame(1)[0], 31.0 / 40.0);
    }

    #[test]
    fn crop_then_full_crop_is_idempotent() {
        let data: Vec<f32> = (0..3 * 10 * 12).map(|i| (i % 17) as f32 / 16.0).collect();
        let seq = FrameSequence::new(data, 3, 10, 12, 30.0).unwrap();
        let once = crop_with_padding(
            &seq,
            BoundingBox {
                x: 3,
                y: 2,
                w: 4,
                h: 4,
            },
            0.25,
        )
        .unwrap();
        let full = BoundingBox {
            x: 0,
            y: 0,
            w: once.width() as u32,
            h: once.height() as u32,
        };
        assert_eq!(crop_with_padding(&once, full, 0.0).unwrap(), once);
    }

    #[test]
    fn resize_examples() {
        let c = constant(2, 5, 7, 0.3);
        let out = resize_bilinear(&c, 11, 3).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.3).abs() < 1e-6));

        let s = FrameSequence::new(vec![0.0, 1.0, 0.0, 1.0], 1, 2, 2, 30.0).unwrap();
        let out = resize_bilinear(&s, 1, 1).unwrap();
        assert!((out.data()[0] - 0.5).abs() < 1e-7);

        let data: Vec<f32> = (0..20).map(|i| i as f32 / 20.0).collect();
        let s = FrameSequence::new(data, 1, 4, 5, 30.0).unwrap();
        assert_eq!(resize_bilinear(&s, 4, 5).unwrap(), s);
        assert!(resize_bilinear(&s, 0, 5).is_err());
    }

    #[test]
    fn resize_upsamples_linear_ramp() {
        let s = FrameSequence::new(vec![0.0, 1.0], 1, 1, 2, 30.0).unwrap();
        let out = resize_bilinear(&s, 1, 4).unwrap();
        // source x = (i + 0.5) / 2 - 0.5 clamped: 0, 0.25, 0.75, 1
        let expect = [0.0, 0.25, 0.75, 1.0];
        for (a, b) in out.data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn per_frame_crop_matches_single_box() {
        let data: Vec<f32> = (0..4 * 12 * 12).map(|i| (i % 23) as f32 / 22.0).collect();
        let seq = FrameSequence::new(data, 4, 12, 12, 30.0).unwrap();
        let b = BoundingBox {
            x: 2,
            y: 3,
            w: 6,
            h: 5,
        };
        let once = resize_bilinear(&crop_with_padding(&seq, b, 0.25).unwrap(), 8, 8).unwrap();
        let each = crop_resize_per_frame(&seq, &[b; 4], 0.25, 8, 8).unwrap();
        assert_eq!(once, each);
        assert!(crop_resize_per_frame(&seq, &[b; 3], 0.25, 8, 8).is_err());
    }

    #[test]
    fn motion_examples() {
        let c = constant(4, 2, 2, 0.6);
        assert!(motion_representation(&c, 1e-6)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));

        let s = FrameSequence::new(vec![0.25, 0.75], 2, 1, 1, 30.0).unwrap();
        assert_eq!(motion_representation(&s, 0.0).unwrap(), vec![0.5]);

        let swapped = FrameSequence::new(vec![0.75, 0.25], 2, 1, 1, 30.0).unwrap();
        assert_eq!(motion_representation(&swapped, 0.0).unwrap(), vec![-0.5]);

        let black = constant(2, 1, 1, 0.0);
        assert_eq!(motion_representation(&black, 0.0).unwrap(), vec![0.0]);

        assert!(motion_representation(&constant(1, 2, 2, 0.1), 1e-6).is_err());
    }
}
