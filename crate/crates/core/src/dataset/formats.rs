//! NIRV1 video files, signal CSVs and bounding-box sidecars.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frames::{BoundingBox, FrameSequence};
use crate::signal::PpgSignal;

const NIRV_MAGIC: &[u8; 4] = b"NIRV";
const NIRV_VERSION: u8 = 0x01;
const NIRV_HEADER: usize = 4 + 1 + 4 * 3 + 4;

/// Formats `v` with 9 significant digits; NaN becomes `nan`.
pub fn format_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v == 0.0 || v.is_infinite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.8e}")
    }
}

pub fn video_to_bytes(seq: &FrameSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(NIRV_HEADER + seq.data().len() * 4);
    out.extend_from_slice(NIRV_MAGIC);
    out.push(NIRV_VERSION);
    for d in [seq.len(), seq.height(), seq.width()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(seq.fps() as f32).to_le_bytes());
    for v in seq.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn video_from_bytes(bytes: &[u8], path: &Path) -> Result<FrameSequence> {
    if bytes.len() < NIRV_HEADER {
        return Err(Error::format(
            path,
            format!("{} bytes is shorter than the NIRV1 header", bytes.len()),
        ));
    }
    if &bytes[..4] != NIRV_MAGIC {
        return Err(Error::format(path, "bad magic, not a NIRV1 video"));
    }
    if bytes[4] != NIRV_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported NIRV version {}", bytes[4]),
        ));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (t, h, w) = (u32_at(5), u32_at(9), u32_at(13));
    let fps = f32::from_le_bytes(bytes[17..21].try_into().unwrap()) as f64;
    let expected = t
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(NIRV_HEADER));
    if expected != Some(bytes.len()) {
        return Err(Error::format(
            path,
            format!(
                "header declares {t}x{h}x{w} but file has {} bytes",
                bytes.len()
            ),
        ));
    }
    let data = bytes[NIRV_HEADER..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FrameSequence::new(data, t, h, w, fps).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_video(seq: &FrameSequence, path: &Path) -> Result<()> {
    fs::write(path, video_to_bytes(seq)).map_err(|e| Error::io(path, e))
}

pub fn read_video(path: &Path) -> Result<FrameSequence> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    video_from_bytes(&bytes, path)
}

/// Timestamped samples exactly as stored in a signal CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSignal {
    pub t_sec: Vec<f64>,
    pub values: Vec<f64>,
}

impl RawSignal {
    /// Places the samples on a uniform grid. Timestamp jumps longer than 1.5
    /// typical intervals become runs of missing samples, and NaN values are
    /// flagged as gaps.
    pub fn to_signal(&self) -> Result<PpgSignal> {
        let n = self.t_sec.len();
        if n < 2 {
            return Err(Error::invalid(
                "a signal file needs at least two rows to fix its rate",
            ));
        }
        let mut diffs: Vec<f64> = self.t_sec.windows(2).map(|p| p[1] - p[0]).collect();
        diffs.sort_by(f64::total_cmp);
        let dt = diffs[diffs.len() / 2];
        let mut values = Vec::with_capacity(n);
        values.push(self.values[0]);
        for i in 1..n {
            let gap = self.t_sec[i] - self.t_sec[i - 1];
            if gap > 1.5 * dt {
                let missing = (gap / dt).round() as usize - 1;
                values.extend(std::iter::repeat_n(f64::NAN, missing));
            }
            values.push(self.values[i]);
        }
        let span = self.t_sec[n - 1] - self.t_sec[0];
        let rate = (values.len() - 1) as f64 / span;
        PpgSignal::new(values, rate)
    }
}

/// Opens a CSV file with headers; a missing or unreadable file is an I/O error.
pub(crate) fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

pub fn read_signal_csv(path: &Path) -> Result<RawSignal> {
    let mut r = open_csv(path)?;
    let headers = r
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["t_sec", "value"] {
        return Err(Error::format(path, "expected header t_sec,value"));
    }
    let mut raw = RawSignal {
        t_sec: Vec::new(),
        values: Vec::new(),
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let row = i + 2;
        let field = |k: usize| rec.get(k).map(str::trim).unwrap_or("");
        let t: f64 = field(0)
            .parse()
            .map_err(|_| Error::format(path, format!("row {row}: bad t_sec '{}'", field(0))))?;
        let v: f64 = match field(1) {
            "nan" | "NaN" | "" => f64::NAN,
            s => s
                .parse()
                .map_err(|_| Error::format(path, format!("row {row}: bad value '{s}'")))?,
        };
        if !t.is_finite() || raw.t_sec.last().is_some_and(|&p| t <= p) {
            return Err(Error::format(
                path,
                format!("row {row}: t_sec must increase"),
            ));
        }
        raw.t_sec.push(t);
        raw.values.push(v);
    }
    if raw.t_sec.is_empty() {
        return Err(Error::format(path, "no samples"));
    }
    Ok(raw)
}

/// Writes `t_sec,value` rows with `t = i / rate`; gaps are written as `nan`.
pub fn write_signal_csv(signal: &PpgSignal, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "t_sec,value").map_err(io)?;
    let mask = signal.gap_mask();
    for (i, &v) in signal.samples().iter().enumerate() {
        let gap = mask.is_some_and(|m| m[i]);
        let value = if gap {
            "nan".to_string()
        } else {
            format_sig(v)
        };
        writeln!(
            w,
            "{},{}",
            format_sig(i as f64 / signal.sample_rate_hz()),
            value
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a signal CSV onto a uniform grid (gaps still flagged).
pub fn read_signal(path: &Path) -> Result<PpgSignal> {
    read_signal_csv(path)?
        .to_signal()
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Face boxes from a sidecar: one box for the whole video or one per frame.
#[derive(Debug, Clone, PartialEq)]
pub enum BoxTrack {
    Static(BoundingBox),
    PerFrame(Vec<BoundingBox>),
}

impl BoxTrack {
    /// One box per frame for a `frames`-long video.
    pub fn boxes_for(&self, frames: usize) -> Result<Vec<BoundingBox>> {
        match self {
            BoxTrack::Static(b) => Ok(vec![*b; frames]),
            BoxTrack::PerFrame(v) if v.len() == frames => Ok(v.clone()),
            BoxTrack::PerFrame(v) => Err(Error::shape(format!(
                "{} boxes for {frames} frames",
                v.len()
            ))),
        }
    }
}

pub fn read_bbox_csv(path: &Path) -> Result<BoxTrack> {
    let mut r = open_csv(path)?;
    let headers = r
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["frame", "x", "y", "w", "h"] {
        return Err(Error::format(path, "expected header frame,x,y,w,h"));
    }
    let mut rows: Vec<(i64, BoundingBox)> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let bad = || Error::format(path, format!("row {}: malformed box", i + 2));
        let num = |k: usize| -> Result<i64> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(bad)
        };
        let (frame, x, y, w, h) = (num(0)?, num(1)?, num(2)?, num(3)?, num(4)?);
        if w <= 0 || h <= 0 {
            return Err(bad());
        }
        rows.push((
            frame,
            BoundingBox {
                x,
                y,
                w: w as u32,
                h: h as u32,
            },
        ));
    }
    match rows.as_slice() {
        [] => Err(Error::format(path, "no boxes")),
        [(-1, b)] => Ok(BoxTrack::Static(*b)),
        _ => {
            for (k, (frame, _)) in rows.iter().enumerate() {
                if *frame != k as i64 {
                    return Err(Error::format(
                        path,
                        format!("per-frame boxes must list frames 0, 1, 2, ... in order; row {} has {frame}", k + 2),
                    ));
                }
            }
            Ok(BoxTrack::PerFrame(
                rows.into_iter().map(|(_, b)| b).collect(),
            ))
        }
    }
}

pub fn write_bbox_csv(track: &BoxTrack, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "frame,x,y,w,h").map_err(io)?;
    match track {
        BoxTrack::Static(b) => writeln!(w, "-1,{},{},{},{}", b.x, b.y, b.w, b.h).map_err(io)?,
        BoxTrack::PerFrame(v) => {
            for (i, b) in v.iter().enumerate() {
                writeln!(w, "{i},{},{},{},{}", b.x, b.y, b.w, b.h).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(f64::NAN), "nan");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(0.123456789123), "0.123456789");
        assert_eq!(format_sig(123.456789123), "123.456789");
        assert_eq!(format_sig(-2.5), "-2.5");
        assert_eq!(format_sig(1.5e-9).parse::<f64>().unwrap(), 1.5e-9);
        assert_eq!(format_sig(3.0e20).parse::<f64>().unwrap(), 3.0e20);
    }

    #[test]
    fn video_header_layout() {
        let seq = FrameSequence::new(vec![0.0, 0.5, 1.0, 0.25], 2, 1, 2, 30.0).unwrap();
        let bytes = video_to_bytes(&seq);
        assert_eq!(&bytes[..5], b"NIRV\x01");
        assert_eq!(&bytes[5..9], &2u32.to_le_bytes());
        assert_eq!(&bytes[9..13], &1u32.to_le_bytes());
        assert_eq!(&bytes[13..17], &2u32.to_le_bytes());
        assert_eq!(&bytes[17..21], &30.0f32.to_le_bytes());
        assert_eq!(&bytes[25..29], &0.5f32.to_le_bytes());
        assert_eq!(bytes.len(), 21 + 16);
    }

    #[test]
    fn video_errors_name_the_file() {
        let seq = FrameSequence::new(vec![0.5; 8], 2, 2, 2, 30.0).unwrap();
        let mut bytes = video_to_bytes(&seq);
        let p = Path::new("clip.nirv");
        assert!(video_from_bytes(&bytes[..bytes.len() - 1], p).is_err());
        bytes[0] = b'X';
        let err = video_from_bytes(&bytes, p).unwrap_err();
        assert!(err.to_string().contains("clip.nirv"), "{err}");
    }

    #[test]
    fn raw_signal_inserts_timestamp_gaps() {
        let raw = RawSignal {
            t_sec: vec![0.0, 0.1, 0.2, 0.5, 0.6],
            values: vec![1.0, 2.0, 3.0, 6.0, 7.0],
        };
        let s = raw.to_signal().unwrap();
        assert_eq!(s.len(), 7);
        assert!((s.sample_rate_hz() - 10.0).abs() < 1e-9);
        assert_eq!(
            s.gap_mask().unwrap(),
            &[false, false, false, true, true, false, false]
        );
    }

    #[test]
    fn bbox_sidecar_variants() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        let b = BoundingBox {
            x: -3,
            y: 4,
            w: 10,
            h: 12,
        };
        write_bbox_csv(&BoxTrack::Static(b), &p).unwrap();
        assert_eq!(read_bbox_csv(&p).unwrap(), BoxTrack::Static(b));
        assert_eq!(BoxTrack::Static(b).boxes_for(3).unwrap(), vec![b; 3]);

        let track = BoxTrack::PerFrame(vec![b, BoundingBox { x: 1, ..b }]);
        write_bbox_csv(&track, &p).unwrap();
        assert_eq!(read_bbox_csv(&p).unwrap(), track);
        assert!(track.boxes_for(3).is_err());

        fs::write(&p, "frame,x,y,w,h\n1,0,0,4,4\n").unwrap();
        assert!(read_bbox_csv(&p).is_err());
        fs::write(&p, "frame,x,y,w,h\n-1,0,0,0,4\n").unwrap();
        assert!(read_bbox_csv(&p).is_err());
    }

    #[test]
    fn signal_csv_rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "t,value\n0,1\n").unwrap();
        assert!(read_signal_csv(&p).is_err());
        fs::write(&p, "t_sec,value\n0,1\n0,2\n").unwrap();
        assert!(read_signal_csv(&p).is_err());
        fs::write(&p, "t_sec,value\n0,abc\n").unwrap();
        assert!(read_signal_csv(&p).is_err());
        fs::write(&p, "t_sec,value\n0,1\n0.1,nan\n0.2,3\n").unwrap();
        let s = read_signal(&p).unwrap();
        assert!(s.has_gaps());
    }
}
