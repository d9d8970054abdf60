//! Dataset manifest: one CSV row per video/signal pair, paths relative to
//! the manifest file.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::formats::{read_bbox_csv, read_signal, read_video, BoxTrack};
use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::signal::{fill_dropped_samples, resample_linear, PpgSignal, TARGET_RATE_HZ};

pub const MANIFEST_HEADER: [&str; 11] = [
    "video_id",
    "subject_id",
    "video_path",
    "signal_path",
    "bbox_path",
    "fps",
    "split",
    "scenario",
    "motion",
    "wavelength_nm",
    "provenance",
];

macro_rules! text_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self {
                    $($name::$variant => $text),+
                })
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!("unknown {} '{other}'", stringify!($name).to_lowercase())),
                }
            }
        }
    };
}

text_enum!(Split { Train => "train", Test => "test" });
text_enum!(Scenario {
    Indoor => "indoor",
    Garage => "garage",
    Driving => "driving",
    Synthetic => "synthetic",
});
text_enum!(MotionLevel { Still => "still", Small => "small", Large => "large" });

/// Whether a record is a recording or an augmented copy of one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Original,
    Augmented { target_hr: f64 },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Original => f.write_str("original"),
            Provenance::Augmented { target_hr } => write!(f, "augmented({target_hr})"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "original" {
            return Ok(Provenance::Original);
        }
        s.strip_prefix("augmented(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|v| v.parse().ok())
            .map(|target_hr| Provenance::Augmented { target_hr })
            .ok_or_else(|| format!("unknown provenance '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub video_id: String,
    pub subject_id: String,
    pub video_path: PathBuf,
    pub signal_path: PathBuf,
    /// Empty when no face box is available.
    pub bbox_path: Option<PathBuf>,
    pub fps: f64,
    pub split: Split,
    pub scenario: Scenario,
    pub motion: MotionLevel,
    pub wavelength_nm: u32,
    pub provenance: Provenance,
}

impl ManifestRecord {
    pub fn is_original(&self) -> bool {
        self.provenance == Provenance::Original
    }
}

/// Records plus the directory their relative paths resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub records: Vec<ManifestRecord>,
}

fn path_text(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

impl Manifest {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            records: Vec::new(),
        }
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        if rel.is_absolute() {
            rel.to_path_buf()
        } else {
            self.root.join(rel)
        }
    }

    /// Reads a manifest; its directory becomes the root.
    pub fn load(path: &Path) -> Result<Self> {
        let mut r = super::formats::open_csv(path)?;
        let headers = r
            .headers()
            .map_err(|e| Error::format(path, e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
            return Err(Error::format(
                path,
                format!("expected header {}", MANIFEST_HEADER.join(",")),
            ));
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut manifest = Manifest::new(root);
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
            let row = i + 2;
            let bad = |what: &str, detail: String| {
                Error::format(path, format!("row {row}: {what}: {detail}"))
            };
            let f = |k: usize| rec.get(k).unwrap_or("");
            let parse_enum = |k: usize| f(k).to_string();
            let bbox = f(4);
            manifest.records.push(ManifestRecord {
                video_id: f(0).to_string(),
                subject_id: f(1).to_string(),
                video_path: PathBuf::from(f(2)),
                signal_path: PathBuf::from(f(3)),
                bbox_path: (!bbox.is_empty()).then(|| PathBuf::from(bbox)),
                fps: f(5).parse().map_err(|_| bad("fps", f(5).into()))?,
                split: parse_enum(6).parse().map_err(|e| bad("split", e))?,
                scenario: parse_enum(7).parse().map_err(|e| bad("scenario", e))?,
                motion: parse_enum(8).parse().map_err(|e| bad("motion", e))?,
                wavelength_nm: f(9)
                    .parse()
                    .map_err(|_| bad("wavelength_nm", f(9).into()))?,
                provenance: parse_enum(10).parse().map_err(|e| bad("provenance", e))?,
            });
        }
        manifest
            .validate()
            .map_err(|e| Error::format(path, e.to_string()))?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
        let err = |e: csv::Error| Error::format(path, e.to_string());
        w.write_record(MANIFEST_HEADER).map_err(err)?;
        for r in &self.records {
            w.write_record([
                r.video_id.clone(),
                r.subject_id.clone(),
                path_text(&r.video_path),
                path_text(&r.signal_path),
                r.bbox_path.as_deref().map(path_text).unwrap_or_default(),
                r.fps.to_string(),
                r.split.to_string(),
                r.scenario.to_string(),
                r.motion.to_string(),
                r.wavelength_nm.to_string(),
                r.provenance.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Unique ids, subjects confined to one split, augmented rows only in
    /// the train split.
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        let mut subject_split = std::collections::BTreeMap::new();
        for r in &self.records {
            if r.video_id.is_empty() || r.subject_id.is_empty() {
                return Err(Error::invalid("video_id and subject_id must be non-empty"));
            }
            if !ids.insert(r.video_id.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate video_id '{}'",
                    r.video_id
                )));
            }
            if let Some(prev) = subject_split.insert(r.subject_id.as_str(), r.split) {
                if prev != r.split {
                    return Err(Error::invalid(format!(
                        "subject '{}' appears in both train and test",
                        r.subject_id
                    )));
                }
            }
            if !r.is_original() && r.split != Split::Train {
                return Err(Error::invalid(format!(
                    "augmented record '{}' is outside the train split",
                    r.video_id
                )));
            }
            if !(r.fps > 0.0) {
                return Err(Error::invalid(format!(
                    "record '{}' has fps {}",
                    r.video_id, r.fps
                )));
            }
        }
        Ok(())
    }

    /// Subject ids per split, as recorded in the `split` column.
    pub fn subjects(&self, split: Split) -> BTreeSet<String> {
        self.records
            .iter()
            .filter(|r| r.split == split)
            .map(|r| r.subject_id.clone())
            .collect()
    }

    pub fn find(&self, video_id: &str) -> Option<&ManifestRecord> {
        self.records.iter().find(|r| r.video_id == video_id)
    }

    /// Reads a record's video.
    pub fn load_video(&self, record: &ManifestRecord) -> Result<FrameSequence> {
        let path = self.resolve(&record.video_path);
        let seq = read_video(&path)?;
        if (seq.fps() - record.fps).abs() > 1e-3 * record.fps {
            return Err(Error::format(
                &path,
                format!("file says {} fps, manifest says {}", seq.fps(), record.fps),
            ));
        }
        Ok(seq)
    }

    /// Reads a record's ground truth and applies the ingest corrections:
    /// dropped samples are interpolated and the signal is resampled to 30 Hz.
    pub fn load_signal(&self, record: &ManifestRecord) -> Result<PpgSignal> {
        let path = self.resolve(&record.signal_path);
        correct_signal(&read_signal(&path)?)
    }

    pub fn load_boxes(&self, record: &ManifestRecord) -> Result<Option<BoxTrack>> {
        record
            .bbox_path
            .as_ref()
            .map(|p| read_bbox_csv(&self.resolve(p)))
            .transpose()
    }

    /// Loads video and corrected signal, rejecting pairs whose durations
    /// differ by more than one sample.
    pub fn load_pair(&self, record: &ManifestRecord) -> Result<(FrameSequence, PpgSignal)> {
        let seq = self.load_video(record)?;
        let signal = self.load_signal(record)?;
        check_alignment(&seq, &signal).map_err(|e| match e {
            Error::Rejected(reason) => Error::Rejected(format!("{}: {reason}", record.video_id)),
            other => other,
        })?;
        Ok((seq, signal))
    }
}

/// Gap filling followed by resampling to the nominal rate.
pub fn correct_signal(raw: &PpgSignal) -> Result<PpgSignal> {
    let filled = fill_dropped_samples(raw)?;
    resample_linear(&filled, TARGET_RATE_HZ)
}

pub fn check_alignment(seq: &FrameSequence, signal: &PpgSignal) -> Result<()> {
    let diff = (seq.duration_s() - signal.duration_s()).abs();
    let one_sample = 1.0 / signal.sample_rate_hz();
    if diff > one_sample + 1e-9 {
        return Err(Error::Rejected(format!(
            "misaligned: video lasts {:.3} s, signal {:.3} s",
            seq.duration_s(),
            signal.duration_s()
        )));
    }
    Ok(())
}

/// Splits by subject: train gets every record of the train subjects, test
/// only the original recordings of the test subjects.
pub fn split_manifest(
    manifest: &Manifest,
    train_subjects: &BTreeSet<String>,
    test_subjects: &BTreeSet<String>,
) -> Result<(Vec<ManifestRecord>, Vec<ManifestRecord>)> {
    if let Some(s) = train_subjects.intersection(test_subjects).next() {
        return Err(Error::invalid(format!(
            "subject '{s}' is in both train and test sets"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for r in &manifest.records {
        if train_subjects.contains(&r.subject_id) {
            train.push(r.clone());
        } else if test_subjects.contains(&r.subject_id) {
            if r.is_original() {
                test.push(r.clone());
            }
        } else {
            return Err(Error::invalid(format!(
                "subject '{}' of record '{}' is in neither set",
                r.subject_id, r.video_id
            )));
        }
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, subject: &str, split: Split, provenance: Provenance) -> ManifestRecord {
        ManifestRecord {
            video_id: id.into(),
            subject_id: subject.into(),
            video_path: format!("videos/{id}.nirv").into(),
            signal_path: format!("signals/{id}.csv").into(),
            bbox_path: None,
            fps: 30.0,
            split,
            scenario: Scenario::Synthetic,
            motion: MotionLevel::Still,
            wavelength_nm: 940,
            provenance,
        }
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn provenance_text() {
        assert_eq!(Provenance::Original.to_string(), "original");
        let p = Provenance::Augmented { target_hr: 87.25 };
        assert_eq!(p.to_string(), "augmented(87.25)");
        assert_eq!("augmented(87.25)".parse::<Provenance>().unwrap(), p);
        assert!("augmented(x)".parse::<Provenance>().is_err());
        assert!("copy".parse::<Provenance>().is_err());
    }

    #[test]
    fn split_examples() {
        let mut m = Manifest::new(".");
        m.records = vec![
            record("a", "s1", Split::Train, Provenance::Original),
            record(
                "a_hr50",
                "s1",
                Split::Train,
                Provenance::Augmented { target_hr: 50.0 },
            ),
            record("b", "s2", Split::Test, Provenance::Original),
            record(
                "b_hr60",
                "s2",
                Split::Test,
                Provenance::Augmented { target_hr: 60.0 },
            ),
        ];
        let (train, test) = split_manifest(&m, &set(&["s1"]), &set(&["s2"])).unwrap();
        assert_eq!(train.len(), 2);
        assert_eq!(
            test.iter().map(|r| r.video_id.as_str()).collect::<Vec<_>>(),
            ["b"]
        );
        assert!(split_manifest(&m, &set(&["s1", "s2"]), &set(&["s2"])).is_err());
        assert!(split_manifest(&m, &set(&["s1"]), &set(&[])).is_err());
    }

    #[test]
    fn validation_catches_leaks() {
        let mut m = Manifest::new(".");
        m.records = vec![
            record("a", "s1", Split::Train, Provenance::Original),
            record("b", "s1", Split::Test, Provenance::Original),
        ];
        assert!(m.validate().is_err());
        m.records = vec![record(
            "b",
            "s2",
            Split::Test,
            Provenance::Augmented { target_hr: 70.0 },
        )];
        assert!(m.validate().is_err());
        m.records = vec![
            record("a", "s1", Split::Train, Provenance::Original),
            record("a", "s1", Split::Train, Provenance::Original),
        ];
        assert!(m.validate().is_err());
    }

    #[test]
    fn alignment_rule() {
        let seq = FrameSequence::new(vec![0.5; 300], 300, 1, 1, 30.0).unwrap();
        let ok = PpgSignal::new(vec![0.0; 301], 30.0).unwrap();
        assert!(check_alignment(&seq, &ok).is_ok());
        let off = PpgSignal::new(vec![0.0; 240], 30.0).unwrap();
        assert!(
            matches!(check_alignment(&seq, &off), Err(Error::Rejected(r)) if r.contains("misaligned"))
        );
    }
}
