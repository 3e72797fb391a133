//! Memoryless Saleh model of a travelling-wave-tube amplifier.
//!
//! ```text
//! A(u) = alpha_a u / (1 + beta_a u²)            AM/AM
//! Φ(u) = alpha_phi u² / (1 + beta_phi u²)       AM/PM (canonical)
//! ```
//!
//! The operating point is set by input back-off: a pure linear gain ahead of
//! the nonlinearity chosen so that the average input power sits `ibo_db`
//! below the saturation input power `A_s²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{measure_power, ComplexEnvelope};

/// Numerator power of the AM/PM characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmForm {
    /// `alpha_phi u² / (1 + beta_phi u²)`, the usual TWTA fit.
    #[default]
    CanonicalQuadratic,
    /// `alpha_phi u / (1 + beta_phi u²)`.
    PaperLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SalehParams {
    pub alpha_a: f64,
    pub beta_a: f64,
    pub alpha_phi: f64,
    pub beta_phi: f64,
    pub pm_form: PmForm,
}

impl Default for SalehParams {
    /// The classic TWTA coefficient set.
    fn default() -> Self {
        Self {
            alpha_a: 2.1587,
            beta_a: 1.1517,
            alpha_phi: 4.0033,
            beta_phi: 9.1040,
            pm_form: PmForm::CanonicalQuadratic,
        }
    }
}

impl SalehParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("alpha_a", self.alpha_a)?;
        positive("beta_a", self.beta_a)?;
        positive("beta_phi", self.beta_phi)?;
        if !self.alpha_phi.is_finite() {
            return Err(Error::invalid("alpha_phi must be finite"));
        }
        Ok(())
    }

    /// Saturation input amplitude `A_s = 1/sqrt(beta_a)`.
    pub fn input_sat(&self) -> f64 {
        self.beta_a.sqrt().recip()
    }

    /// Peak output amplitude `alpha_a A_s / 2`, reached at `u = A_s`.
    pub fn output_max(&self) -> f64 {
        0.5 * self.alpha_a * self.input_sat()
    }

    #[inline]
    pub(crate) fn gain_am(&self, u: f64) -> f64 {
        self.alpha_a * u / (1.0 + self.beta_a * u * u)
    }

    #[inline]
    pub(crate) fn phase_pm(&self, u: f64) -> f64 {
        let den = 1.0 + self.beta_phi * u * u;
        match self.pm_form {
            PmForm::CanonicalQuadratic => self.alpha_phi * u * u / den,
            PmForm::PaperLinear => self.alpha_phi * u / den,
        }
    }

    /// Complex response to a real, nonnegative input amplitude.
    #[inline]
    pub fn response(&self, u: f64) -> Complex64 {
        Complex64::from_polar(self.gain_am(u), self.phase_pm(u))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationPoint {
    pub input_sat: f64,
    pub output_max: f64,
}

/// Amplifier coefficients plus the input gain that realizes a back-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    params: SalehParams,
    ibo_db: f64,
    input_gain: f64,
}

impl OperatingPoint {
    /// Operating point for a source of known average power.
    pub fn from_ibo(params: SalehParams, ibo_db: f64, source_power: f64) -> Result<Self> {
        params.validate()?;
        if !(ibo_db >= 0.0) || !ibo_db.is_finite() {
            return Err(Error::invalid(format!("IBO must be finite and >= 0 dB, got {ibo_db}")));
        }
        let input_gain = input_gain_for_ibo(ibo_db, &params, source_power)?;
        Ok(Self {
            params,
            ibo_db,
            input_gain,
        })
    }

    /// Operating point for a unit-power source.
    pub fn unit_source(params: SalehParams, ibo_db: f64) -> Result<Self> {
        Self::from_ibo(params, ibo_db, 1.0)
    }

    /// Operating point with an explicit gain; the back-off it implies for a
    /// source of `source_power` is recorded and may be negative (overdrive).
    pub fn with_gain(params: SalehParams, input_gain: f64, source_power: f64) -> Result<Self> {
        params.validate()?;
        if !(input_gain > 0.0) || !input_gain.is_finite() {
            return Err(Error::invalid(format!("input gain must be > 0, got {input_gain}")));
        }
        if !(source_power > 0.0) {
            return Err(Error::invalid(format!("source power must be > 0, got {source_power}")));
        }
        let p_in = input_gain * input_gain * source_power;
        Ok(Self {
            params,
            ibo_db: 10.0 * (params.input_sat().powi(2) / p_in).log10(),
            input_gain,
        })
    }

    pub fn params(&self) -> &SalehParams {
        &self.params
    }

    pub fn ibo_db(&self) -> f64 {
        self.ibo_db
    }

    pub fn input_gain(&self) -> f64 {
        self.input_gain
    }
}

fn check_modulus(u: f64) -> Result<()> {
    if u >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("modulus must be >= 0, got {u}")))
    }
}

pub fn am_am(u: f64, p: &SalehParams) -> Result<f64> {
    check_modulus(u)?;
    Ok(p.gain_am(u))
}

pub fn am_pm(u: f64, p: &SalehParams) -> Result<f64> {
    check_modulus(u)?;
    Ok(p.phase_pm(u))
}

pub fn saturation(p: &SalehParams) -> SaturationPoint {
    SaturationPoint {
        input_sat: p.input_sat(),
        output_max: p.output_max(),
    }
}

/// Gain that brings a source of average power `source_power` to
/// `P_in = A_s² / 10^(ibo/10)`.
pub fn input_gain_for_ibo(ibo_db: f64, p: &SalehParams, source_power: f64) -> Result<f64> {
    if !(source_power > 0.0) || !source_power.is_finite() {
        return Err(Error::invalid(format!(
            "source power must be finite and > 0, got {source_power}"
        )));
    }
    let p_in = p.input_sat().powi(2) / 10f64.powf(ibo_db / 10.0);
    Ok((p_in / source_power).sqrt())
}

/// `y = A(g|x|) exp(j(arg x + Φ(g|x|)))` per sample.
pub fn apply_hpa(env: &ComplexEnvelope, op: &OperatingPoint) -> ComplexEnvelope {
    let p = op.params;
    let g = op.input_gain;
    env.map(|x| {
        let r = x.norm();
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let u = g * r;
        x / r * p.response(u)
    })
}

/// Measured average power of `env`, as needed by [`OperatingPoint::from_ibo`].
pub fn source_power(env: &ComplexEnvelope) -> Result<f64> {
    Ok(measure_power(env)?.average_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn defaults() -> SalehParams {
        SalehParams::default()
    }

    // Values below were evaluated with 40-digit arithmetic.
    const A_S: f64 = 0.931_816_328_776_188_7;
    const U_MAX: f64 = 1.005_755_954_464_579_3;

    #[test]
    fn am_am_reference_points() {
        let p = defaults();
        assert_eq!(am_am(0.0, &p).unwrap(), 0.0);
        assert!((am_am(1.0, &p).unwrap() - 1.003_253_241_622_902_8).abs() < 1e-14);
        assert!((am_am(1.0, &p).unwrap() - 1.003_254).abs() < 1e-6);
        assert!((am_am(A_S, &p).unwrap() - U_MAX).abs() < 1e-14);
        assert!((am_am(0.5, &p).unwrap() - 0.838_053_458_081_798_2).abs() < 1e-14);
        assert!(am_am(-1e-9, &p).is_err());
    }

    #[test]
    fn am_pm_reference_points() {
        let p = defaults();
        assert_eq!(am_pm(0.0, &p).unwrap(), 0.0);
        assert!((am_pm(1.0, &p).unwrap() - 0.396_209_422_011_084_7).abs() < 1e-14);
        assert!((am_pm(1e6, &p).unwrap() - 0.439_729_789_103_690_7).abs() < 1e-12);
        assert!((am_pm(0.5, &p).unwrap() - 0.305_502_136_752_136_8).abs() < 1e-14);
        let lin = SalehParams {
            pm_form: PmForm::PaperLinear,
            ..p
        };
        assert_eq!(am_pm(0.0, &lin).unwrap(), 0.0);
        assert!((am_pm(1.0, &lin).unwrap() - 4.0033 / 10.104).abs() < 1e-15);
        assert!(am_pm(-1.0, &lin).is_err());
    }

    #[test]
    fn saturation_geometry() {
        let unit = SalehParams {
            beta_a: 1.0,
            ..defaults()
        };
        assert_eq!(saturation(&unit).input_sat, 1.0);
        let s = saturation(&defaults());
        assert!((s.input_sat - A_S).abs() < 1e-15);
        assert!((s.output_max - U_MAX).abs() < 1e-15);
        let p = defaults();
        for eps in [1e-3, -1e-3] {
            assert!(am_am(s.input_sat * (1.0 + eps), &p).unwrap() < s.output_max);
        }
    }

    #[test]
    fn ibo_gain() {
        let p = defaults();
        assert!((input_gain_for_ibo(0.0, &p, 1.0).unwrap() - A_S).abs() < 1e-15);
        let g5 = input_gain_for_ibo(5.0, &p, 1.0).unwrap();
        assert!((g5 - 0.523_998_829_158_008).abs() < 1e-14);
        assert!((g5 - 0.524_02).abs() < 1e-4);
        let mut last = f64::INFINITY;
        for ibo in (0..60).map(|k| k as f64) {
            let g = input_gain_for_ibo(ibo, &p, 1.0).unwrap();
            assert!(g < last);
            last = g;
        }
        assert!(last < 1e-2);
        assert!(input_gain_for_ibo(3.0, &p, 0.0).is_err());
        assert!(input_gain_for_ibo(3.0, &p, -1.0).is_err());
    }

    #[test]
    fn operating_point_hits_the_requested_backoff() {
        let p = defaults();
        let op = OperatingPoint::from_ibo(p, 7.0, 2.5).unwrap();
        let p_in = op.input_gain().powi(2) * 2.5;
        assert!((10.0 * (A_S * A_S / p_in).log10() - 7.0).abs() < 1e-12);
        assert!(OperatingPoint::from_ibo(p, -1.0, 1.0).is_err());
        let bad = SalehParams { beta_a: -1.0, ..p };
        assert!(OperatingPoint::from_ibo(bad, 5.0, 1.0).is_err());
        let w = OperatingPoint::with_gain(p, op.input_gain(), 2.5).unwrap();
        assert!((w.ibo_db() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn hpa_on_constant_modulus_tone() {
        let p = defaults();
        let op = OperatingPoint::with_gain(p, 1.0, 0.25).unwrap();
        let x = ComplexEnvelope::new(
            (0..64).map(|k| Complex64::from_polar(0.5, 0.1 * k as f64)).collect(),
            8,
        )
        .unwrap();
        let y = apply_hpa(&x, &op);
        let a = 0.838_053_458_081_798_2;
        let phi = 0.305_502_136_752_136_8;
        for (yi, xi) in y.samples().iter().zip(x.samples()) {
            assert!((yi.norm() - a).abs() < 1e-12);
            let d = (yi / xi).arg();
            assert!((d - phi).abs() < 1e-12);
        }
        assert!(measure_power(&y).unwrap().papr_db.abs() < 1e-12);
        let z = apply_hpa(&ComplexEnvelope::zeros(16, 8).unwrap(), &op);
        assert!(z.samples().iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn hpa_is_phase_covariant() {
        let op = OperatingPoint::with_gain(defaults(), 1.3, 1.0).unwrap();
        let x = ComplexEnvelope::new(
            (0..32)
                .map(|k| Complex64::new(0.05 * k as f64, (k as f64).sin()))
                .collect(),
            4,
        )
        .unwrap();
        let phi = 0.7 * PI;
        let a = apply_hpa(&x.rotate(phi), &op);
        let b = apply_hpa(&x, &op).rotate(phi);
        for (u, v) in a.samples().iter().zip(b.samples()) {
            assert!((u - v).norm() < 1e-12);
        }
    }
}
