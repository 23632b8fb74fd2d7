use serde::{Deserialize, Serialize};

use super::wav::AudioClip;

/// Segmentation parameters, in milliseconds unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventParams {
    pub envelope_ms: f64,
    /// Length of the block each noise-floor histogram is built over.
    pub block_secs: f64,
    pub histogram_bins: usize,
    /// An envelope frame is active when it exceeds `factor × floor`.
    pub factor: f64,
    pub min_event_ms: f64,
    pub padding_ms: f64,
}

impl Default for EventParams {
    fn default() -> Self {
        Self {
            envelope_ms: 10.0,
            block_secs: 10.0,
            histogram_bins: 1024,
            factor: 2.0,
            min_event_ms: 300.0,
            padding_ms: 100.0,
        }
    }
}

/// Detected event `[start, end)` in samples, after padding and merging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSegment {
    pub start: usize,
    pub end: usize,
    /// False when the leading padding was clamped at the clip start.
    pub padded_start: bool,
    /// False when the trailing padding was clamped at the clip end.
    pub padded_end: bool,
}

impl EventSegment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventReport {
    pub events: Vec<EventSegment>,
    /// Noise floor per histogram block.
    pub noise_floors: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Mean absolute amplitude over consecutive `frame`-sample segments. A trailing
/// partial segment is dropped.
pub fn envelope(samples: &[f64], frame: usize) -> Vec<f64> {
    samples
        .chunks_exact(frame)
        .map(|c| c.iter().map(|s| s.abs()).sum::<f64>() / frame as f64)
        .collect()
}

fn peak_bin_center(values: &[f64], bins: usize) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return lo;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    lo + (best as f64 + 0.5) * width
}

pub fn detect_events(clip: &AudioClip, params: &EventParams) -> Vec<EventSegment> {
    detect_events_report(clip, params).events
}

/// Envelope thresholding against a per-block histogram noise floor.
///
/// The floor is the centre of the most populated of `histogram_bins` equal-width
/// bins spanning the block's envelope range. A trailing block shorter than
/// `block_secs` is merged into its predecessor; clips shorter than one block use
/// a single global estimate.
pub fn detect_events_report(clip: &AudioClip, params: &EventParams) -> EventReport {
    let sr = clip.sample_rate() as f64;
    let frame = ((params.envelope_ms * sr / 1000.0).round() as usize).max(1);
    let env = envelope(clip.samples(), frame);
    let mut warnings = Vec::new();
    if env.is_empty() {
        warnings.push("clip shorter than one envelope frame".to_string());
        return EventReport {
            events: Vec::new(),
            noise_floors: Vec::new(),
            warnings,
        };
    }

    let frames_per_ms = sr / 1000.0 / frame as f64;
    let block = ((params.block_secs * 1000.0 * frames_per_ms).round() as usize).max(1);
    let mut bounds: Vec<(usize, usize)> = Vec::new();
    if env.len() < block {
        warnings.push(format!(
            "clip shorter than {} s, using a global noise-floor estimate",
            params.block_secs
        ));
        bounds.push((0, env.len()));
    } else {
        let full = env.len() / block;
        for b in 0..full {
            bounds.push((b * block, (b + 1) * block));
        }
        if let Some(last) = bounds.last_mut() {
            last.1 = env.len();
        }
    }

    let mut floors = Vec::with_capacity(bounds.len());
    let mut threshold = vec![0.0; env.len()];
    for &(a, b) in &bounds {
        let floor = peak_bin_center(&env[a..b], params.histogram_bins.max(1));
        floors.push(floor);
        threshold[a..b].fill(params.factor * floor);
    }
    if env.iter().all(|&e| e == 0.0) {
        warnings.push("silent clip, no events".to_string());
        return EventReport {
            events: Vec::new(),
            noise_floors: floors,
            warnings,
        };
    }

    let min_frames = (params.min_event_ms * frames_per_ms).round() as usize;
    let pad = (params.padding_ms * sr / 1000.0).round() as usize;
    let n = clip.len();
    let mut events: Vec<EventSegment> = Vec::new();
    let mut t = 0;
    while t < env.len() {
        if env[t] <= threshold[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < env.len() && env[t] > threshold[t] {
            t += 1;
        }
        if t - start < min_frames.max(1) {
            continue;
        }
        let s = start * frame;
        let e = t * frame;
        let seg = EventSegment {
            start: s.saturating_sub(pad),
            end: (e + pad).min(n),
            padded_start: s >= pad,
            padded_end: e + pad <= n,
        };
        match events.last_mut() {
            Some(prev) if seg.start <= prev.end => {
                prev.end = seg.end;
                prev.padded_end = seg.padded_end;
            }
            _ => events.push(seg),
        }
    }
    EventReport {
        events,
        noise_floors: floors,
        warnings,
    }
}
