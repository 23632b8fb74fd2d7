use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::wav::AudioClip;
use super::SAMPLE_RATE;
use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

/// 25 ms at 16 kHz.
pub const FRAME_LEN: usize = 400;
/// 10 ms at 16 kHz.
pub const FRAME_HOP: usize = 160;
pub const FFT_LEN: usize = 512;
pub const MEL_BANDS: usize = 26;
pub const NUM_MFCC: usize = 14;
/// Floor applied before every logarithm.
pub const LOG_FLOOR: f64 = 1e-10;
const BASE_LLDS: usize = 25;
pub const LLD_DIM: usize = 2 * BASE_LLDS;

/// Descriptor names, base set first, then their deltas in the same order.
pub const LLD_NAMES: [&str; LLD_DIM] = [
    "rms_energy",
    "zcr",
    "spectral_centroid",
    "spectral_flux",
    "rolloff_25",
    "rolloff_50",
    "rolloff_75",
    "rolloff_90",
    "spectral_variance",
    "spectral_skewness",
    "spectral_kurtosis",
    "mfcc_1",
    "mfcc_2",
    "mfcc_3",
    "mfcc_4",
    "mfcc_5",
    "mfcc_6",
    "mfcc_7",
    "mfcc_8",
    "mfcc_9",
    "mfcc_10",
    "mfcc_11",
    "mfcc_12",
    "mfcc_13",
    "mfcc_14",
    "rms_energy_de",
    "zcr_de",
    "spectral_centroid_de",
    "spectral_flux_de",
    "rolloff_25_de",
    "rolloff_50_de",
    "rolloff_75_de",
    "rolloff_90_de",
    "spectral_variance_de",
    "spectral_skewness_de",
    "spectral_kurtosis_de",
    "mfcc_1_de",
    "mfcc_2_de",
    "mfcc_3_de",
    "mfcc_4_de",
    "mfcc_5_de",
    "mfcc_6_de",
    "mfcc_7_de",
    "mfcc_8_de",
    "mfcc_9_de",
    "mfcc_10_de",
    "mfcc_11_de",
    "mfcc_12_de",
    "mfcc_13_de",
    "mfcc_14_de",
];

/// Frame-level descriptor contours, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: DenseMatrix,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters on the power-spectrum bins, each normalized to unit sum.
fn mel_filterbank(sample_rate: f64) -> Vec<Vec<f64>> {
    let bins = FFT_LEN / 2 + 1;
    let top = hz_to_mel(sample_rate / 2.0);
    let edges: Vec<f64> = (0..MEL_BANDS + 2)
        .map(|i| mel_to_hz(top * i as f64 / (MEL_BANDS + 1) as f64))
        .collect();
    (0..MEL_BANDS)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let mut w: Vec<f64> = (0..bins)
                .map(|k| {
                    let f = k as f64 * sample_rate / FFT_LEN as f64;
                    if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    }
                })
                .collect();
            let sum: f64 = w.iter().sum();
            if sum > 0.0 {
                w.iter_mut().for_each(|x| *x /= sum);
            }
            w
        })
        .collect()
}

struct Extractor {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    mel: Vec<Vec<f64>>,
    freqs: Vec<f64>,
    sample_rate: f64,
}

impl Extractor {
    fn new(sample_rate: f64) -> Self {
        let window = (0..FRAME_LEN)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / (FRAME_LEN - 1) as f64).cos())
            .collect();
        Self {
            fft: FftPlanner::new().plan_fft_forward(FFT_LEN),
            window,
            mel: mel_filterbank(sample_rate),
            freqs: (0..=FFT_LEN / 2)
                .map(|k| k as f64 * sample_rate / FFT_LEN as f64)
                .collect(),
            sample_rate,
        }
    }

    fn magnitude(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .zip(&self.window)
            .map(|(x, w)| Complex::new(x * w, 0.0))
            .collect();
        buf.resize(FFT_LEN, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        buf[..=FFT_LEN / 2].iter().map(|c| c.norm()).collect()
    }

    fn base(&self, frame: &[f64], mag: &[f64], prev: Option<&[f64]>, out: &mut [f64]) {
        let n = frame.len() as f64;
        out[0] = (frame.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        let crossings = frame.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
        out[1] = crossings as f64 * self.sample_rate / (n - 1.0);

        let power: Vec<f64> = mag.iter().map(|m| m * m).collect();
        let total: f64 = power.iter().sum();
        out[3] = prev.map_or(0.0, |p| mag.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum());
        if total > 0.0 {
            let centroid = power.iter().zip(&self.freqs).map(|(p, f)| p * f).sum::<f64>() / total;
            out[2] = centroid;
            for (slot, frac) in [0.25, 0.5, 0.75, 0.9].iter().enumerate() {
                let target = frac * total;
                let mut acc = 0.0;
                let mut k = 0;
                while k < power.len() - 1 {
                    acc += power[k];
                    if acc >= target {
                        break;
                    }
                    k += 1;
                }
                out[4 + slot] = self.freqs[k];
            }
            let moment = |r: i32| {
                power
                    .iter()
                    .zip(&self.freqs)
                    .map(|(p, f)| p * (f - centroid).powi(r))
                    .sum::<f64>()
                    / total
            };
            let var = moment(2);
            out[8] = var;
            if var > 0.0 {
                out[9] = moment(3) / var.powf(1.5);
                out[10] = moment(4) / (var * var);
            } else {
                out[9] = 0.0;
                out[10] = 0.0;
            }
        } else {
            out[2] = 0.0;
            out[4..11].fill(0.0);
        }

        let log_mel: Vec<f64> = self
            .mel
            .iter()
            .map(|w| w.iter().zip(&power).map(|(a, b)| a * b).sum::<f64>().max(LOG_FLOOR).ln())
            .collect();
        let scale = (2.0 / MEL_BANDS as f64).sqrt();
        for c in 1..=NUM_MFCC {
            let v: f64 = log_mel
                .iter()
                .enumerate()
                .map(|(m, e)| e * (PI * c as f64 * (m as f64 + 0.5) / MEL_BANDS as f64).cos())
                .sum();
            out[10 + c] = scale * v;
        }
    }
}

/// Width-2 regression deltas with edge replication.
fn deltas(base: &[Vec<f64>], col: usize) -> Vec<f64> {
    let t = base.len() as isize;
    let at = |i: isize| base[i.clamp(0, t - 1) as usize][col];
    (0..t)
        .map(|i| ((at(i + 1) - at(i - 1)) + 2.0 * (at(i + 2) - at(i - 2))) / 10.0)
        .collect()
}

/// 25 ms Hann frames at a 10 ms hop, 25 descriptors per frame plus their deltas.
///
/// Descriptor order is [`LLD_NAMES`]. Spectral descriptors use the 512-point power
/// spectrum; MFCCs use a 26-band unit-sum mel bank over 0 to 8 kHz, natural-log
/// energies floored at [`LOG_FLOOR`], and an orthonormal DCT-II. Flux is the squared
/// magnitude-spectrum difference to the previous frame (0 for the first frame).
pub fn extract_llds(clip: &AudioClip) -> Result<FrameSequence> {
    if clip.sample_rate() != SAMPLE_RATE {
        return Err(Error::UnsupportedAudio(format!(
            "sample rate {} Hz, expected {SAMPLE_RATE}",
            clip.sample_rate()
        )));
    }
    let samples = clip.samples();
    if samples.len() < FRAME_LEN {
        return Err(Error::TooShort {
            len: samples.len(),
            required: FRAME_LEN,
        });
    }
    let count = 1 + (samples.len() - FRAME_LEN) / FRAME_HOP;
    let ex = Extractor::new(f64::from(clip.sample_rate()));
    let mut base = vec![vec![0.0; BASE_LLDS]; count];
    let mut prev: Option<Vec<f64>> = None;
    for (t, row) in base.iter_mut().enumerate() {
        let frame = &samples[t * FRAME_HOP..t * FRAME_HOP + FRAME_LEN];
        let mag = ex.magnitude(frame);
        ex.base(frame, &mag, prev.as_deref(), row);
        prev = Some(mag);
    }
    let mut values = Vec::with_capacity(count * LLD_DIM);
    let delta_cols: Vec<Vec<f64>> = (0..BASE_LLDS).map(|c| deltas(&base, c)).collect();
    for (t, row) in base.iter().enumerate() {
        values.extend_from_slice(row);
        values.extend(delta_cols.iter().map(|d| d[t]));
    }
    Ok(FrameSequence {
        frames: DenseMatrix::from_vec(count, LLD_DIM, values)?,
        frame_len: FRAME_LEN,
        hop: FRAME_HOP,
        sample_rate: clip.sample_rate(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, secs: f64) -> AudioClip {
        let n = (secs * 16_000.0) as usize;
        AudioClip::new(
            (0..n).map(|i| (2.0 * PI * freq * i as f64 / 16_000.0).sin()).collect(),
            16_000,
        )
        .unwrap()
    }

    #[test]
    fn frame_count_and_width() {
        let seq = extract_llds(&sine(440.0, 1.0)).unwrap();
        assert_eq!(seq.len(), 1 + (16_000 - 400) / 160);
        assert_eq!(seq.dim(), 50);
        assert!(seq.frames.is_finite());
    }

    #[test]
    fn sine_centroid_and_zcr() {
        let seq = extract_llds(&sine(1000.0, 0.5)).unwrap();
        for t in 0..seq.len() {
            let row = seq.frames.row(t);
            assert!((row[2] - 1000.0).abs() < 20.0, "centroid {}", row[2]);
            assert!((row[1] - 2000.0).abs() < 100.0, "zcr {}", row[1]);
            assert!((row[0] - 0.5f64.sqrt()).abs() < 0.01);
        }
    }

    #[test]
    fn silence_is_degenerate_but_finite() {
        let seq = extract_llds(&AudioClip::new(vec![0.0; 4000], 16_000).unwrap()).unwrap();
        let floor_mfcc: Vec<f64> = (1..=NUM_MFCC)
            .map(|c| {
                let s: f64 = (0..MEL_BANDS)
                    .map(|m| (PI * c as f64 * (m as f64 + 0.5) / MEL_BANDS as f64).cos())
                    .sum();
                (2.0 / MEL_BANDS as f64).sqrt() * LOG_FLOOR.ln() * s
            })
            .collect();
        for t in 0..seq.len() {
            let row = seq.frames.row(t);
            assert_eq!(row[0], 0.0);
            assert_eq!(row[3], 0.0);
            for c in 0..NUM_MFCC {
                assert!((row[11 + c] - floor_mfcc[c]).abs() < 1e-9);
            }
            assert!(row[25..].iter().all(|&d| d.abs() < 1e-9));
        }
    }

    #[test]
    fn constant_contours_have_zero_deltas() {
        let base = vec![vec![3.0, -1.0]; 7];
        assert!(deltas(&base, 0).iter().all(|&d| d == 0.0));
        let ramp: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64]).collect();
        assert!((deltas(&ramp, 0)[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn filterbank_rows_sum_to_one() {
        for w in mel_filterbank(16_000.0) {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_short_and_wrong_rate() {
        assert!(matches!(
            extract_llds(&AudioClip::new(vec![0.0; 399], 16_000).unwrap()),
            Err(Error::TooShort { .. })
        ));
        assert!(extract_llds(&AudioClip::new(vec![0.0; 1000], 8_000).unwrap()).is_err());
    }
}
