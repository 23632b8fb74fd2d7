use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use crate::audio::{
    detect_events_report, read_manifest, read_wav, write_manifest, write_wav, AudioClip, EventParams, ManifestEntry,
    SAMPLE_RATE,
};
use crate::data::Partition;
use crate::error::{Error, Result};

/// Acoustic recipe for one synthetic class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub name: String,
    /// Fundamental frequency range in Hz.
    pub f0_band: (f64, f64),
    /// Centre of the resonant formant filter in Hz.
    pub formant_hz: f64,
    /// Relative spread of the per-clip formant centre.
    pub formant_jitter: f64,
    /// Burst duration range in milliseconds.
    pub burst_ms: (f64, f64),
    /// Peak burst amplitude range.
    pub amplitude: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticCorpusSpec {
    pub classes: Vec<ClassSpec>,
    /// Per class: train, devel and test counts.
    pub counts: Vec<[usize; 3]>,
    /// Amplitude of the uniform background noise.
    pub noise_floor: f64,
    /// Upper gain of a class-independent second resonance (random centre in
    /// 300-3000 Hz) mixed into every burst.
    pub nuisance: f64,
    pub clip_secs: f64,
    pub seed: u64,
}

/// Train/devel/test counts of the four snore classes in the reference corpus.
pub const REFERENCE_COUNTS: [[usize; 3]; 4] = [[161, 168, 155], [75, 76, 65], [15, 8, 16], [32, 30, 27]];

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        let class = |name: &str, f0: (f64, f64), formant: f64| ClassSpec {
            name: name.to_string(),
            f0_band: f0,
            formant_hz: formant,
            formant_jitter: 0.15,
            burst_ms: (450.0, 800.0),
            amplitude: (0.1, 0.4),
        };
        Self {
            classes: vec![
                class("V", (70.0, 110.0), 450.0),
                class("O", (90.0, 130.0), 750.0),
                class("T", (110.0, 150.0), 1100.0),
                class("E", (130.0, 170.0), 1500.0),
            ],
            counts: REFERENCE_COUNTS.to_vec(),
            noise_floor: 0.005,
            nuisance: 1.0,
            clip_secs: 2.5,
            seed: 0,
        }
    }
}

impl SyntheticCorpusSpec {
    /// Same `per_partition` counts for every class: train, devel, test.
    pub fn balanced(per_partition: [usize; 3], seed: u64) -> Self {
        let base = Self::default();
        Self {
            counts: vec![per_partition; base.classes.len()],
            seed,
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.len() < 2 {
            return Err(Error::config("corpus needs at least two classes"));
        }
        if self.counts.len() != self.classes.len() {
            return Err(Error::config(format!(
                "{} count rows for {} classes",
                self.counts.len(),
                self.classes.len()
            )));
        }
        if self.counts.iter().flatten().any(|&c| c == 0) {
            return Err(Error::config("every class needs examples in every partition"));
        }
        if !(self.nuisance >= 0.0) {
            return Err(Error::config("nuisance gain must be non-negative"));
        }
        if !(self.noise_floor > 0.0) {
            return Err(Error::config("noise floor must be positive"));
        }
        for c in &self.classes {
            let ok = c.f0_band.0 > 0.0
                && c.f0_band.0 <= c.f0_band.1
                && c.formant_hz > 0.0
                && c.formant_hz < f64::from(SAMPLE_RATE) / 2.0
                && c.formant_jitter >= 0.0
                && c.burst_ms.0 >= 300.0
                && c.burst_ms.0 <= c.burst_ms.1
                && c.amplitude.0 > 0.0
                && c.amplitude.0 <= c.amplitude.1
                && c.amplitude.1 < 1.0;
            if !ok {
                return Err(Error::config(format!("class {:?} has an invalid recipe", c.name)));
            }
            if c.burst_ms.1 / 1000.0 + 0.5 > self.clip_secs {
                return Err(Error::config(format!("bursts of class {:?} do not fit the clip", c.name)));
            }
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

/// One labeled clip of the in-memory synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticClip {
    pub audio: AudioClip,
    pub label: usize,
    pub partition: Partition,
    /// Burst position `[start, end)` in samples.
    pub burst: (usize, usize),
}

/// Two-pole resonator with unit gain at its centre frequency.
struct Resonator {
    gain: f64,
    a1: f64,
    a2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(centre: f64, bandwidth: f64, sr: f64) -> Self {
        let r = (-PI * bandwidth / sr).exp();
        let theta = 2.0 * PI * centre / sr;
        Self {
            gain: (1.0 - r) * (1.0 - 2.0 * r * (2.0 * theta).cos() + r * r).sqrt(),
            a1: 2.0 * r * theta.cos(),
            a2: -r * r,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let v = x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = v;
        v * self.gain
    }
}

/// Harmonic pulse train below 4 kHz, shaped by the class formant plus a
/// random nuisance resonance.
fn burst_signal<R: Rng + ?Sized>(class: &ClassSpec, nuisance: f64, len: usize, rng: &mut R) -> Vec<f64> {
    let sr = f64::from(SAMPLE_RATE);
    let f0 = rng.random_range(class.f0_band.0..=class.f0_band.1);
    let jitter = 1.0 + class.formant_jitter * (2.0 * rng.random::<f64>() - 1.0);
    let formant = (class.formant_hz * jitter).min(sr / 2.0 - 200.0);
    let harmonics = ((4000.0 / f0) as usize).max(1);
    let phases: Vec<f64> = (0..harmonics).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let mut main = Resonator::new(formant, 150.0, sr);
    let mut extra = Resonator::new(rng.random_range(300.0..3000.0), 150.0, sr);
    let extra_gain = nuisance * rng.random::<f64>();
    let mut y = vec![0.0; len];
    for (n, out) in y.iter_mut().enumerate() {
        let t = n as f64 / sr;
        let x: f64 = phases
            .iter()
            .enumerate()
            .map(|(h, p)| (2.0 * PI * (h + 1) as f64 * f0 * t + p).cos())
            .sum();
        *out = main.step(x) + extra_gain * extra.step(x);
    }
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let amp = rng.random_range(class.amplitude.0..=class.amplitude.1);
    let ramp = (0.02 * sr) as usize;
    for (n, v) in y.iter_mut().enumerate() {
        let edge = n.min(len - 1 - n);
        let gain = if edge < ramp {
            0.5 - 0.5 * (PI * edge as f64 / ramp as f64).cos()
        } else {
            1.0
        };
        *v *= amp * gain / peak.max(f64::MIN_POSITIVE);
    }
    y
}

fn synth_clip(spec: &SyntheticCorpusSpec, label: usize, partition: Partition, seed: u64) -> Result<SyntheticClip> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = f64::from(SAMPLE_RATE);
    let n = (spec.clip_secs * sr) as usize;
    let mut samples: Vec<f64> = (0..n).map(|_| rng.random_range(-spec.noise_floor..spec.noise_floor)).collect();
    let class = &spec.classes[label];
    let dur = (rng.random_range(class.burst_ms.0..=class.burst_ms.1) / 1000.0 * sr) as usize;
    let margin = (0.25 * sr) as usize;
    let start = rng.random_range(margin..=n - dur - margin);
    for (s, b) in samples[start..start + dur].iter_mut().zip(burst_signal(class, spec.nuisance, dur, &mut rng)) {
        *s += b;
    }
    Ok(SyntheticClip {
        audio: AudioClip::new(samples, SAMPLE_RATE)?,
        label,
        partition,
        burst: (start, start + dur),
    })
}

/// Clips in class-major, then partition, then index order; each clip has its
/// own seed derived from the spec seed and its position.
pub fn synth_corpus(spec: &SyntheticCorpusSpec) -> Result<Vec<SyntheticClip>> {
    spec.validate()?;
    let mut jobs = Vec::with_capacity(spec.total());
    for (label, counts) in spec.counts.iter().enumerate() {
        for (p, &count) in Partition::ALL.iter().zip(counts) {
            for _ in 0..count {
                jobs.push((label, *p));
            }
        }
    }
    jobs.into_par_iter()
        .enumerate()
        .map(|(i, (label, p))| synth_clip(spec, label, p, derive_seed(spec.seed, i as u64)))
        .collect()
}

/// Writes `clip_NNNNN.wav` files and `manifest.csv` into `out_dir`.
pub fn gen_synthetic_corpus(spec: &SyntheticCorpusSpec, out_dir: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let out_dir = out_dir.as_ref();
    let clips = synth_corpus(spec)?;
    fs::create_dir_all(out_dir)?;
    let names = spec.class_names();
    let entries: Vec<ManifestEntry> = clips
        .iter()
        .enumerate()
        .map(|(i, c)| ManifestEntry {
            file: format!("clip_{i:05}.wav"),
            label: names[c.label].clone(),
            partition: c.partition,
        })
        .collect();
    clips
        .par_iter()
        .zip(&entries)
        .try_for_each(|(c, e)| write_wav(out_dir.join(&e.file), &c.audio))?;
    write_manifest(out_dir.join("manifest.csv"), &entries)?;
    Ok(entries)
}

/// A segmented, labeled recording ready for feature extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub audio: AudioClip,
    pub label: usize,
    pub partition: Partition,
    /// Position in the manifest.
    pub id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub items: Vec<CorpusItem>,
    pub class_names: Vec<String>,
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn partition(&self, p: Partition) -> impl Iterator<Item = &CorpusItem> {
        self.items.iter().filter(move |i| i.partition == p)
    }

    pub fn class_counts(&self, p: Partition) -> Vec<usize> {
        let mut c = vec![0; self.num_classes()];
        for i in self.partition(p) {
            c[i.label] += 1;
        }
        c
    }

    /// Cuts the longest detected event out of every clip. Clips without an event
    /// are kept whole and reported in `warnings`.
    pub fn from_clips(clips: Vec<(AudioClip, usize, Partition)>, class_names: Vec<String>, params: &EventParams) -> Result<Self> {
        let results: Vec<(CorpusItem, Option<String>)> = clips
            .into_par_iter()
            .enumerate()
            .map(|(id, (audio, label, partition))| {
                let report = detect_events_report(&audio, params);
                let longest = report.events.iter().max_by_key(|e| (e.len(), std::cmp::Reverse(e.start)));
                let (audio, warning) = match longest {
                    Some(e) => (audio.slice(e.start, e.end)?, None),
                    None => (audio, Some(format!("clip {id}: no event detected, kept whole"))),
                };
                Ok((
                    CorpusItem {
                        audio,
                        label,
                        partition,
                        id,
                    },
                    warning,
                ))
            })
            .collect::<Result<_>>()?;
        let mut items = Vec::with_capacity(results.len());
        let mut warnings = Vec::new();
        for (item, w) in results {
            items.push(item);
            warnings.extend(w);
        }
        Ok(Self {
            items,
            class_names,
            warnings,
        })
    }

    pub fn from_synthetic(spec: &SyntheticCorpusSpec, params: &EventParams) -> Result<Self> {
        let clips = synth_corpus(spec)?
            .into_iter()
            .map(|c| (c.audio, c.label, c.partition))
            .collect();
        Self::from_clips(clips, spec.class_names(), params)
    }

    /// Reads a manifest and its WAV files (paths relative to the manifest).
    /// Labels are indexed in `class_names` order when given, otherwise in order
    /// of first appearance.
    pub fn load(manifest: impl AsRef<Path>, class_names: Option<Vec<String>>, params: &EventParams) -> Result<Self> {
        let manifest = manifest.as_ref();
        let entries = read_manifest(manifest)?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let mut names = class_names.unwrap_or_default();
        let fixed = !names.is_empty();
        let mut clips = Vec::with_capacity(entries.len());
        for e in &entries {
            let label = match names.iter().position(|n| *n == e.label) {
                Some(i) => i,
                None if !fixed => {
                    names.push(e.label.clone());
                    names.len() - 1
                }
                None => {
                    return Err(Error::Malformed {
                        path: manifest.to_path_buf(),
                        reason: format!("unknown label {:?}", e.label),
                    })
                }
            };
            clips.push((read_wav(base.join(&e.file))?, label, e.partition));
        }
        Self::from_clips(clips, names, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::detect_events;

    #[test]
    fn counts_and_single_events() {
        let spec = SyntheticCorpusSpec::balanced([3, 2, 2], 4);
        let clips = synth_corpus(&spec).unwrap();
        assert_eq!(clips.len(), 28);
        for c in &clips {
            let ev = detect_events(&c.audio, &EventParams::default());
            assert_eq!(ev.len(), 1);
            let pad = 1600;
            assert!(ev[0].start.abs_diff(c.burst.0.saturating_sub(pad)) <= 480, "{:?} {:?}", ev[0], c.burst);
            assert!(ev[0].end.abs_diff(c.burst.1 + pad) <= 480, "{:?} {:?}", ev[0], c.burst);
        }
    }

    #[test]
    fn files_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticCorpusSpec::balanced([10, 10, 10], 1);
        let entries = gen_synthetic_corpus(&spec, dir.path()).unwrap();
        assert_eq!(entries.len(), 120);
        assert_eq!(read_manifest(dir.path().join("manifest.csv")).unwrap(), entries);
        let corpus = Corpus::load(dir.path().join("manifest.csv"), None, &EventParams::default()).unwrap();
        assert_eq!(corpus.class_names, vec!["V", "O", "T", "E"]);
        assert_eq!(corpus.class_counts(Partition::Devel), vec![10; 4]);
        assert!(corpus.warnings.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticCorpusSpec::balanced([1, 1, 1], 9);
        assert_eq!(synth_corpus(&spec).unwrap(), synth_corpus(&spec).unwrap());
        let other = SyntheticCorpusSpec { seed: 10, ..spec.clone() };
        assert_ne!(synth_corpus(&spec).unwrap()[0].audio, synth_corpus(&other).unwrap()[0].audio);
    }

    #[test]
    fn invalid_specs() {
        let mut spec = SyntheticCorpusSpec::default();
        spec.counts.pop();
        assert!(spec.validate().is_err());
        let mut spec = SyntheticCorpusSpec::default();
        spec.classes[0].burst_ms = (100.0, 200.0);
        assert!(spec.validate().is_err());
    }
}
