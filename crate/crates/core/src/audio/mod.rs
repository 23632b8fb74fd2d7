//! Audio ingestion, snore-event segmentation, frame-level descriptors,
//! statistical functionals, bag-of-audio-words and fixed-window slicing.

mod boaw;
mod codebook;
mod events;
mod functionals;
mod llds;
mod manifest;
mod wav;
mod window;

pub use boaw::{boaw, nearest_codewords};
pub use codebook::{build_codebook, kmeans, read_codebook_csv, write_codebook_csv, Codebook, CodebookMethod, KMeansFit};
pub use events::{detect_events, detect_events_report, envelope, EventParams, EventReport, EventSegment};
pub use functionals::{functionals, FUNCTIONAL_NAMES};
pub use llds::{extract_llds, FrameSequence, FRAME_HOP, FRAME_LEN, LLD_DIM, LLD_NAMES, LOG_FLOOR};
pub use manifest::{read_manifest, write_manifest, ManifestEntry};
pub use wav::{read_wav, write_wav, AudioClip};
pub use window::{window_sequence, Window, STEP_FRAMES, WINDOW_FRAMES};

pub const SAMPLE_RATE: u32 = 16_000;
