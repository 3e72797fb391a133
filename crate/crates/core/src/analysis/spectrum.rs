//! Welch power spectral density and out-of-band power.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::ComplexEnvelope;

/// Two-sided PSD, frequencies in cycles per symbol, ascending from `-S/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub frequencies: Vec<f64>,
    pub density: Vec<f64>,
    /// Bin width in cycles per symbol.
    pub resolution: f64,
}

impl PsdEstimate {
    /// `Σ density · resolution`, which equals the average signal power.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution
    }

    pub fn density_db(&self) -> impl Iterator<Item = f64> + '_ {
        self.density.iter().map(|d| 10.0 * d.log10())
    }

    pub fn peak_frequency(&self) -> f64 {
        let (k, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &d)| if d > best.1 { (k, d) } else { best });
        self.frequencies[k]
    }
}

/// Averaged Hann-windowed periodogram.
///
/// `overlap` is the fraction of `segment` shared by consecutive segments.
pub fn psd_welch(env: &ComplexEnvelope, segment: usize, overlap: f64) -> Result<PsdEstimate> {
    if segment < 2 {
        return Err(Error::invalid(format!("segment length must be >= 2, got {segment}")));
    }
    if segment > env.len() {
        return Err(Error::invalid(format!(
            "segment of {segment} samples is longer than the {}-sample signal",
            env.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid(format!("overlap must lie in [0, 1), got {overlap}")));
    }
    let hop = (segment - (overlap * segment as f64).round() as usize).max(1);
    let fs = env.samples_per_symbol() as f64;

    // periodic Hann
    let window: Vec<f64> = (0..segment)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / segment as f64).cos())
        .collect();
    let window_energy: f64 = window.iter().map(|w| w * w).sum();

    let fft = FftPlanner::new().plan_fft_forward(segment);
    let mut acc = vec![0.0; segment];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment];
    let x = env.samples();
    let mut count = 0usize;
    let mut start = 0;
    while start + segment <= x.len() {
        for ((b, &s), &w) in buf.iter_mut().zip(&x[start..start + segment]).zip(&window) {
            *b = s * w;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        count += 1;
        start += hop;
    }

    let scale = 1.0 / (count as f64 * fs * window_energy);
    let half = segment / 2;
    let resolution = fs / segment as f64;
    // fftshift: bin (k + half) mod n lands at index k
    let (frequencies, density) = (0..segment)
        .map(|k| {
            let bin = (k + segment - half) % segment;
            ((k as f64 - half as f64) * resolution, acc[bin] * scale)
        })
        .unzip();
    Ok(PsdEstimate {
        frequencies,
        density,
        resolution,
    })
}

/// `10 log10(P(|f| >= band_edge) / P_total)` in dB.
pub fn oob_power_ratio(psd: &PsdEstimate, band_edge: f64) -> Result<f64> {
    let span = psd.frequencies.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    if !(band_edge >= 0.0) || band_edge > span {
        return Err(Error::invalid(format!(
            "band edge {band_edge} lies outside the spectrum span [0, {span}]"
        )));
    }
    let total: f64 = psd.density.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("spectrum carries no power"));
    }
    let outside: f64 = psd
        .frequencies
        .iter()
        .zip(&psd.density)
        .filter(|(f, _)| f.abs() >= band_edge)
        .map(|(_, d)| d)
        .sum();
    Ok(10.0 * (outside / total).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::measure_power;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn tone(f0: f64, sps: usize, n: usize, amp: f64) -> ComplexEnvelope {
        ComplexEnvelope::new(
            (0..n)
                .map(|k| Complex64::from_polar(amp, 2.0 * PI * f0 * k as f64 / sps as f64))
                .collect(),
            sps,
        )
        .unwrap()
    }

    #[test]
    fn tone_lands_in_its_bin() {
        for f0 in [-2.5, 0.0, 0.75, 1.3] {
            let psd = psd_welch(&tone(f0, 8, 8192, 1.0), 512, 0.5).unwrap();
            assert!((psd.peak_frequency() - f0).abs() <= psd.resolution / 2.0 + 1e-12, "f0={f0}");
        }
    }

    #[test]
    fn parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples = (0..16_384)
            .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * 0.7)
            .collect();
        let env = ComplexEnvelope::new(samples, 8).unwrap();
        let psd = psd_welch(&env, 256, 0.5).unwrap();
        let p = measure_power(&env).unwrap().average_power;
        assert!((psd.total_power() - p).abs() < 0.01 * p);
        let t = tone(0.4, 8, 4096, 2.0);
        let psd = psd_welch(&t, 512, 0.5).unwrap();
        assert!((psd.total_power() - 4.0).abs() < 0.04);
    }

    #[test]
    fn rotation_does_not_change_the_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples = (0..8192)
            .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let env = ComplexEnvelope::new(samples, 4).unwrap();
        let a = psd_welch(&env, 256, 0.5).unwrap();
        let b = psd_welch(&env.rotate(1.1), 256, 0.5).unwrap();
        for (x, y) in a.density.iter().zip(&b.density) {
            assert!((x - y).abs() <= 0.01 * x);
        }
    }

    #[test]
    fn in_band_tone_has_negligible_leakage() {
        let psd = psd_welch(&tone(0.5, 16, 16_384, 1.0), 1024, 0.5).unwrap();
        assert!(oob_power_ratio(&psd, 2.0).unwrap() <= -40.0);
        assert_eq!(oob_power_ratio(&psd, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_arguments() {
        let env = tone(0.5, 4, 256, 1.0);
        assert!(psd_welch(&env, 512, 0.5).is_err());
        assert!(psd_welch(&env, 64, 1.0).is_err());
        let psd = psd_welch(&env, 64, 0.5).unwrap();
        assert!(oob_power_ratio(&psd, -1.0).is_err());
        assert!(oob_power_ratio(&psd, 3.0).is_err());
        assert!(oob_power_ratio(&psd, f64::NAN).is_err());
        let silent = psd_welch(&ComplexEnvelope::zeros(256, 4).unwrap(), 64, 0.5).unwrap();
        assert!(oob_power_ratio(&silent, 1.0).is_err());
    }
}
