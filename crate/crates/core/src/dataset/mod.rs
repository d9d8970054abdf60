//! File formats, the dataset manifest and the synthetic data generator.

pub mod formats;
pub mod manifest;
pub mod synth;

pub use formats::{
    format_sig, read_bbox_csv, read_signal, read_signal_csv, read_video, write_bbox_csv,
    write_signal_csv, write_video, BoxTrack, RawSignal,
};
pub use manifest::{
    check_alignment, correct_signal, split_manifest, Manifest, ManifestRecord, MotionLevel,
    Provenance, Scenario, Split,
};
pub use synth::{generate_synthetic, pulse_waveform, SynthSpec};
