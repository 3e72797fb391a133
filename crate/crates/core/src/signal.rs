//! Discrete complex baseband signals.
//!
//! Time is normalized to the symbol period (T = 1) and amplitudes are
//! dimensionless, so `|x|²` of a sample is its instantaneous power in the
//! normalized units used by the amplifier model.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable block of complex envelope samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexEnvelope {
    samples: Vec<Complex64>,
    samples_per_symbol: usize,
    symbol_period: f64,
}

/// Average and peak power of an envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub average_power: f64,
    pub peak_power: f64,
    pub papr_db: f64,
}

impl ComplexEnvelope {
    pub fn new(samples: Vec<Complex64>, samples_per_symbol: usize) -> Result<Self> {
        if samples_per_symbol < 2 {
            return Err(Error::invalid(format!(
                "samples_per_symbol must be at least 2, got {samples_per_symbol}"
            )));
        }
        if samples.len() % samples_per_symbol != 0 {
            return Err(Error::invalid(format!(
                "{} samples is not a whole number of {samples_per_symbol}-sample symbols",
                samples.len()
            )));
        }
        Ok(Self {
            samples,
            samples_per_symbol,
            symbol_period: 1.0,
        })
    }

    pub fn zeros(len: usize, samples_per_symbol: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], samples_per_symbol)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    /// Symbol period in seconds. Informational only; all processing uses T = 1.
    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    pub fn with_symbol_period(mut self, seconds: f64) -> Self {
        self.symbol_period = seconds;
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn symbol_count(&self) -> usize {
        self.samples.len() / self.samples_per_symbol
    }

    /// Per-sample modulus `U = |x|`.
    pub fn moduli(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.norm())
    }

    pub fn max_modulus(&self) -> f64 {
        self.moduli().fold(0.0, f64::max)
    }

    /// New envelope with the same metadata and `f` applied to every sample.
    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|&s| f(s)).collect(),
            samples_per_symbol: self.samples_per_symbol,
            symbol_period: self.symbol_period,
        }
    }

    /// Fallible per-sample map; stops at the first error.
    pub fn try_map(&self, mut f: impl FnMut(Complex64) -> Result<Complex64>) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|&s| f(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            samples,
            samples_per_symbol: self.samples_per_symbol,
            symbol_period: self.symbol_period,
        })
    }

    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        Self {
            samples,
            samples_per_symbol: self.samples_per_symbol,
            symbol_period: self.symbol_period,
        }
    }

    pub fn scale(&self, gain: f64) -> Self {
        self.map(|s| s * gain)
    }

    /// Rotate every sample by `phase` radians.
    pub fn rotate(&self, phase: f64) -> Self {
        let r = Complex64::from_polar(1.0, phase);
        self.map(|s| s * r)
    }

    /// Debug dump, one `index,re,im` row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * self.samples.len() + 16);
        out.push_str("index,re,im\n");
        for (i, s) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{}", s.re, s.im);
        }
        out
    }

    pub fn from_csv(text: &str, samples_per_symbol: usize) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some("index,re,im") => {}
            other => {
                return Err(Error::invalid(format!(
                    "expected header `index,re,im`, found {other:?}"
                )))
            }
        }
        let mut samples = Vec::new();
        for (row, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |k: usize| -> Result<f64> {
                fields
                    .get(k)
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| Error::invalid(format!("bad CSV row {}: {line}", row + 2)))
            };
            if fields.len() != 3 || parse(0)? as usize != samples.len() {
                return Err(Error::invalid(format!("bad CSV row {}: {line}", row + 2)));
            }
            samples.push(Complex64::new(parse(1)?, parse(2)?));
        }
        Self::new(samples, samples_per_symbol)
    }
}

/// Mean and peak of `|x|²`.
pub fn measure_power(env: &ComplexEnvelope) -> Result<PowerReport> {
    if env.is_empty() {
        return Err(Error::invalid("cannot measure the power of an empty envelope"));
    }
    let (sum, peak) = env
        .samples
        .iter()
        .map(|s| s.norm_sqr())
        .fold((0.0, 0.0f64), |(sum, peak), p| (sum + p, peak.max(p)));
    // mean of equal values can round above the max
    let average_power = (sum / env.len() as f64).min(peak);
    let papr_db = if average_power > 0.0 {
        10.0 * (peak / average_power).log10()
    } else {
        0.0
    };
    Ok(PowerReport {
        average_power,
        peak_power: peak,
        papr_db,
    })
}

/// Scale `env` so its average power equals `target`; phases are untouched.
pub fn scale_to_power(env: &ComplexEnvelope, target: f64) -> Result<ComplexEnvelope> {
    if !(target >= 0.0) || !target.is_finite() {
        return Err(Error::invalid(format!("target power must be finite and >= 0, got {target}")));
    }
    let current = measure_power(env)?.average_power;
    if current == 0.0 {
        if target == 0.0 {
            return Ok(env.clone());
        }
        return Err(Error::invalid("cannot scale a zero-power envelope to nonzero power"));
    }
    if current == target {
        return Ok(env.clone());
    }
    Ok(env.scale((target / current).sqrt()))
}

/// Linear-phase windowed-sinc lowpass (Blackman window), applied with the
/// group delay removed so the output stays aligned with the input.
///
/// `cutoff` is in cycles per symbol, `taps` must be odd.
pub fn band_limit(env: &ComplexEnvelope, cutoff: f64, taps: usize) -> Result<ComplexEnvelope> {
    let nyquist = env.samples_per_symbol as f64 / 2.0;
    if !(cutoff > 0.0 && cutoff < nyquist) {
        return Err(Error::invalid(format!(
            "cutoff {cutoff} must lie in (0, {nyquist}) cycles per symbol"
        )));
    }
    if taps % 2 == 0 || taps < 3 {
        return Err(Error::invalid(format!("tap count must be odd and >= 3, got {taps}")));
    }
    let fc = cutoff / env.samples_per_symbol as f64;
    let mid = (taps / 2) as isize;
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let n = (i as isize - mid) as f64;
            let sinc = if n == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * n).sin() / (PI * n)
            };
            let w = 2.0 * PI * i as f64 / (taps - 1) as f64;
            sinc * (0.42 - 0.5 * w.cos() + 0.08 * (2.0 * w).cos())
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|c| *c /= dc);

    let x = &env.samples;
    let len = x.len() as isize;
    let out = (0..len)
        .map(|n| {
            h.iter()
                .enumerate()
                .filter_map(|(k, &c)| {
                    let idx = n + mid - k as isize;
                    (0..len).contains(&idx).then(|| x[idx as usize] * c)
                })
                .sum()
        })
        .collect();
    Ok(env.with_samples(out))
}
