//! Inverse-Saleh linearization.
//!
//! The analytic inverse of the AM/AM curve is the smaller root of
//! `U (A_s² + x²) = A_s² alpha_a x`, written here in the cancellation-free form
//!
//! ```text
//! A⁻¹(U) = 2U / (alpha_a (1 + sqrt(1 - (U / U_max)²)))
//! ```
//!
//! which equals `(A_s² alpha_a / 2U) [1 - sqrt(1 - (2U / A_s alpha_a)²)]` for
//! `0 < U <= U_max`. Phase is corrected with `ψ(U) = -Φ(A⁻¹(U))`. Amplitudes
//! above `U_max` have no inverse and are handled by [`ClampPolicy`].

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::saleh::{apply_hpa, OperatingPoint, SalehParams};
use crate::signal::ComplexEnvelope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampPolicy {
    /// Map every modulus above `U_max` to the saturation input `A_s`.
    #[default]
    ClampToSaturation,
    /// Fail with [`Error::OutOfRange`].
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdMode {
    #[default]
    Analytic,
    Lut,
}

/// Complex correction gains on a uniform modulus grid `u_k = k u_top / (n - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LutTable {
    u_top: f64,
    gains: Vec<Complex64>,
}

impl LutTable {
    pub fn new(u_top: f64, gains: Vec<Complex64>) -> Result<Self> {
        if gains.len() < 2 {
            return Err(Error::invalid(format!("LUT needs at least 2 entries, got {}", gains.len())));
        }
        if !(u_top > 0.0) || !u_top.is_finite() {
            return Err(Error::invalid(format!("LUT range must be finite and > 0, got {u_top}")));
        }
        if gains.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::invalid("LUT gains must be finite"));
        }
        Ok(Self { u_top, gains })
    }

    /// Table of identical gains.
    pub fn constant(u_top: f64, size: usize, gain: Complex64) -> Result<Self> {
        Self::new(u_top, vec![gain; size])
    }

    pub fn size(&self) -> usize {
        self.gains.len()
    }

    pub fn u_top(&self) -> f64 {
        self.u_top
    }

    pub fn spacing(&self) -> f64 {
        self.u_top / (self.gains.len() - 1) as f64
    }

    pub fn grid_point(&self, k: usize) -> f64 {
        if k == self.gains.len() - 1 {
            self.u_top
        } else {
            k as f64 * self.spacing()
        }
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn entries(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.gains.iter().enumerate().map(|(k, &g)| (self.grid_point(k), g))
    }

    /// Piecewise-linear gain at `u`, `None` outside `[0, u_top]`.
    pub fn gain_at(&self, u: f64) -> Option<Complex64> {
        if !(0.0..=self.u_top).contains(&u) {
            return None;
        }
        let pos = u / self.spacing();
        let last = self.gains.len() - 1;
        let k = (pos.floor() as usize).min(last - 1);
        let t = (pos - k as f64).clamp(0.0, 1.0);
        Some(self.gains[k] * (1.0 - t) + self.gains[k + 1] * t)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,re,im\n");
        for (u, g) in self.entries() {
            let _ = writeln!(out, "{u},{},{}", g.re, g.im);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("u,re,im") {
            return Err(Error::invalid("expected LUT header `u,re,im`"));
        }
        let mut grid = Vec::new();
        let mut gains = Vec::new();
        for line in lines {
            let f: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::invalid(format!("bad LUT row `{line}`: {e}")))?;
            if f.len() != 3 {
                return Err(Error::invalid(format!("bad LUT row `{line}`")));
            }
            grid.push(f[0]);
            gains.push(Complex64::new(f[1], f[2]));
        }
        let top = *grid.last().ok_or_else(|| Error::invalid("empty LUT"))?;
        let table = Self::new(top, gains)?;
        let uniform = grid
            .iter()
            .enumerate()
            .all(|(k, &u)| (u - table.grid_point(k)).abs() <= 1e-12 * top.max(1.0));
        if !uniform {
            return Err(Error::invalid("LUT grid must be uniform and start at 0"));
        }
        Ok(table)
    }
}

/// Inverse of the HPA being linearized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredistorterSpec {
    pub params: SalehParams,
    pub mode: PdMode,
    pub clamp_policy: ClampPolicy,
    pub lut: Option<LutTable>,
}

impl PredistorterSpec {
    pub fn analytic(params: SalehParams, clamp_policy: ClampPolicy) -> Self {
        Self {
            params,
            mode: PdMode::Analytic,
            clamp_policy,
            lut: None,
        }
    }

    pub fn with_lut(params: SalehParams, lut: LutTable, clamp_policy: ClampPolicy) -> Self {
        Self {
            params,
            mode: PdMode::Lut,
            clamp_policy,
            lut: Some(lut),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        match (self.mode, &self.lut) {
            (PdMode::Analytic, None) | (PdMode::Lut, Some(_)) => Ok(()),
            (PdMode::Analytic, Some(_)) => Err(Error::invalid("analytic mode must not carry a LUT")),
            (PdMode::Lut, None) => Err(Error::invalid("lut mode requires a LUT")),
        }
    }

    /// Correct a single sample (no HPA input gain compensation).
    fn correct(&self, x: Complex64) -> Result<Complex64> {
        let r = x.norm();
        if r == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        match (&self.mode, &self.lut) {
            (PdMode::Lut, Some(lut)) => match lut.gain_at(r) {
                Some(g) => Ok(x * g),
                None => match self.clamp_policy {
                    ClampPolicy::Reject => Err(Error::OutOfRange {
                        value: r,
                        limit: lut.u_top(),
                    }),
                    ClampPolicy::ClampToSaturation => {
                        let top = lut.gains[lut.size() - 1];
                        Ok(x / r * lut.u_top() * top)
                    }
                },
            },
            _ => {
                let a = am_am_inverse(r, &self.params, self.clamp_policy)?;
                let psi = -self.params.phase_pm(a);
                Ok(x / r * Complex64::from_polar(a, psi))
            }
        }
    }
}

/// Smaller-root inverse of the AM/AM curve.
pub fn am_am_inverse(u: f64, p: &SalehParams, clamp: ClampPolicy) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::invalid(format!("modulus must be >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let u_max = p.output_max();
    if u > u_max {
        return match clamp {
            ClampPolicy::ClampToSaturation => Ok(p.input_sat()),
            ClampPolicy::Reject => Err(Error::OutOfRange {
                value: u,
                limit: u_max,
            }),
        };
    }
    let r = u / u_max;
    let disc = (1.0 - r * r).max(0.0).sqrt();
    Ok(2.0 * u / (p.alpha_a * (1.0 + disc)))
}

/// `ψ(U) = -Φ(A⁻¹(U))`.
pub fn pm_correction(u: f64, p: &SalehParams, clamp: ClampPolicy) -> Result<f64> {
    let a = am_am_inverse(u, p, clamp)?;
    Ok(-p.phase_pm(a))
}

/// `x → A⁻¹(|x|) exp(j(arg x + ψ(|x|)))`, or the LUT gain times `x`.
pub fn apply_predistorter(env: &ComplexEnvelope, spec: &PredistorterSpec) -> Result<ComplexEnvelope> {
    spec.validate()?;
    env.try_map(|x| spec.correct(x))
}

/// Predistorter followed by the amplifier at `op`.
///
/// The predistorter output is divided by the amplifier's input gain so the
/// whole amplifier, back-off included, is inverted: below saturation the
/// cascade returns its input unchanged.
pub fn cascade_pd_hpa(
    env: &ComplexEnvelope,
    spec: &PredistorterSpec,
    op: &OperatingPoint,
) -> Result<ComplexEnvelope> {
    let corrected = apply_predistorter(env, spec)?.scale(op.input_gain().recip());
    Ok(apply_hpa(&corrected, op))
}

/// Inverse applied after the amplifier: `y → A⁻¹(|y|) exp(j(arg y + ψ(|y|)))`.
///
/// For an amplifier with unit input gain, `apply_postdistorter(apply_hpa(x))`
/// recovers `x` below saturation; otherwise the result is `g x`.
pub fn apply_postdistorter(env: &ComplexEnvelope, spec: &PredistorterSpec) -> Result<ComplexEnvelope> {
    // the pre- and post-distorter apply the same modulus map
    apply_predistorter(env, spec)
}

/// Analytic gains `A⁻¹(u_k)/u_k · exp(jψ(u_k))` over `[0, U_max]`.
pub fn build_lut(p: &SalehParams, size: usize) -> Result<LutTable> {
    build_lut_over(p, size, p.output_max())
}

/// Analytic table on `[0, u_top]`, `u_top <= U_max`.
pub fn build_lut_over(p: &SalehParams, size: usize, u_top: f64) -> Result<LutTable> {
    p.validate()?;
    if size < 2 {
        return Err(Error::invalid(format!("LUT needs at least 2 entries, got {size}")));
    }
    if u_top > p.output_max() {
        return Err(Error::invalid(format!(
            "LUT range {u_top} exceeds the invertible range {}",
            p.output_max()
        )));
    }
    let spacing = u_top / (size - 1) as f64;
    let gains = (0..size)
        .map(|k| {
            if k == 0 {
                // lim u→0 of A⁻¹(u)/u
                return Ok(Complex64::new(p.alpha_a.recip(), 0.0));
            }
            let u = if k == size - 1 { u_top } else { k as f64 * spacing };
            let a = am_am_inverse(u, p, ClampPolicy::Reject)?;
            Ok(Complex64::from_polar(a / u, -p.phase_pm(a)))
        })
        .collect::<Result<Vec<_>>>()?;
    LutTable::new(u_top, gains)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptReport {
    pub table: LutTable,
    /// `max_k |cascade(u_k) - u_k|` with the returned table.
    pub residual: f64,
    /// Residual observed at the start of each iteration.
    pub history: Vec<f64>,
}

/// Error-driven LUT refinement.
///
/// Each grid point is pushed through the cascade (table gain, then `hpa`),
/// compared with the linear target `u_k`, and the entry is moved by
/// `step · (u_k - y_k) / u_k`. Grid point 0 is probed at a small amplitude
/// since the cascade output is identically zero there.
///
/// `hpa` maps a real input amplitude to the complex amplifier response.
pub fn adapt_lut(
    lut: &LutTable,
    hpa: impl Fn(f64) -> Complex64,
    iterations: usize,
    step: f64,
) -> Result<AdaptReport> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid(format!("step must lie in (0, 1], got {step}")));
    }
    let probes: Vec<f64> = (0..lut.size())
        .map(|k| match k {
            0 => 1e-6 * lut.spacing(),
            _ => lut.grid_point(k),
        })
        .collect();
    let floor = 1e-12 * lut.u_top();

    let errors = |gains: &[Complex64]| -> Vec<Complex64> {
        gains
            .iter()
            .zip(&probes)
            .map(|(&g, &u)| {
                let z = g * u;
                let r = z.norm();
                let y = if r == 0.0 { z } else { z / r * hpa(r) };
                u - y
            })
            .collect()
    };
    let max_norm = |e: &[Complex64]| e.iter().map(|v| v.norm()).fold(0.0, f64::max);

    let mut gains = lut.gains.clone();
    let mut history = Vec::with_capacity(iterations);
    let mut growth = 0;
    for it in 0..iterations {
        let e = errors(&gains);
        let residual = max_norm(&e);
        if !residual.is_finite() {
            return Err(Error::AdaptationFailed { iteration: it, residual });
        }
        if let Some(&prev) = history.last() {
            growth = if residual > prev && residual > floor { growth + 1 } else { 0 };
            if growth >= 3 {
                return Err(Error::AdaptationFailed { iteration: it, residual });
            }
        }
        history.push(residual);
        for ((g, e), &u) in gains.iter_mut().zip(&e).zip(&probes) {
            *g += step * e / u;
        }
    }
    let residual = max_norm(&errors(&gains));
    Ok(AdaptReport {
        table: LutTable::new(lut.u_top, gains)?,
        residual,
        history,
    })
}
