use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// Degraded copies per original in the transformation baseline.
pub const TRANSFORM_COPIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    /// Leaky-integrated white noise, a low-frequency heavy stand-in for
    /// recorded ambient noise.
    Brown,
}

/// Unit-power noise of the given colour.
pub fn synth_noise<R: Rng + ?Sized>(kind: NoiseKind, len: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
    if kind == NoiseKind::Brown {
        let mut acc = 0.0;
        for x in &mut v {
            acc = 0.98 * acc + *x;
            *x = acc;
        }
    }
    let p = power(&v);
    if p > 0.0 {
        let g = p.sqrt().recip();
        v.iter_mut().for_each(|x| *x *= g);
    }
    v
}

/// The (noise, SNR) grid behind the ten degraded copies: two noise kinds at five
/// SNRs evenly spaced over 10 to 25 dB.
pub fn transform_grid() -> Vec<(NoiseKind, f64)> {
    let snrs = [10.0, 13.75, 17.5, 21.25, 25.0];
    [NoiseKind::White, NoiseKind::Brown]
        .iter()
        .flat_map(|&k| snrs.iter().map(move |&s| (k, s)))
        .collect()
}

fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseOutcome {
    pub clip: AudioClip,
    /// Gain applied to the noise crop.
    pub noise_gain: f64,
    /// Set when the mix peaked above full scale and was scaled down by this factor.
    pub headroom_gain: Option<f64>,
}

/// Adds `noise` at `snr_db` relative to the signal power. Longer noise is cropped
/// at a random offset, shorter noise is tiled. `f64::INFINITY` passes the signal
/// through untouched.
pub fn noise_transform<R: Rng + ?Sized>(
    audio: &AudioClip,
    noise: &AudioClip,
    snr_db: f64,
    rng: &mut R,
) -> Result<NoiseOutcome> {
    if audio.sample_rate() != noise.sample_rate() {
        return Err(Error::UnsupportedAudio(format!(
            "noise at {} Hz, signal at {} Hz",
            noise.sample_rate(),
            audio.sample_rate()
        )));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::config(format!("SNR {snr_db} dB")));
    }
    let ps = power(audio.samples());
    if ps == 0.0 {
        return Err(Error::SilentSignal);
    }
    if snr_db == f64::INFINITY {
        return Ok(NoiseOutcome {
            clip: audio.clone(),
            noise_gain: 0.0,
            headroom_gain: None,
        });
    }
    let n = audio.len();
    let src = noise.samples();
    let crop: Vec<f64> = if src.len() >= n {
        let start = rng.random_range(0..=src.len() - n);
        src[start..start + n].to_vec()
    } else {
        src.iter().copied().cycle().take(n).collect()
    };
    let pn = power(&crop);
    if pn == 0.0 {
        return Err(Error::SilentSignal);
    }
    let gain = (ps / (pn * 10f64.powf(snr_db / 10.0))).sqrt();
    let mut mixed: Vec<f64> = audio.samples().iter().zip(&crop).map(|(s, v)| s + gain * v).collect();
    let peak = mixed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let headroom_gain = (peak > 1.0).then(|| {
        let h = 1.0 / peak;
        mixed.iter_mut().for_each(|v| *v *= h);
        h
    });
    Ok(NoiseOutcome {
        clip: AudioClip::new(mixed, audio.sample_rate())?,
        noise_gain: gain,
        headroom_gain,
    })
}
