//! Gaussian tail function and MF-MSK union bounds.
//!
//! For M = 4N the symbol- and bit-error bounds share the argument
//! `sqrt(d² · Eb/N0 · (2 + log2 N))`, i.e. `sqrt(d² Es/N0)`:
//!
//! ```text
//! Pes <= (M - 2)  Q(sqrt(d² Es/N0))
//! Peb <= (2N - 1) Q(sqrt(d² Eb/N0 (2 + log2 N)))
//! ```
//!
//! Both are clipped to valid probabilities where they exceed them at low SNR.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};

/// How `Q(x)` is evaluated inside the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QForm {
    #[default]
    Exact,
    /// `exp(-x²/2) / 2`.
    ExpBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BerBoundParams {
    /// Number of frequencies; M = 4N.
    pub n: usize,
    pub d_min_sq: f64,
    pub ebno_db: Vec<f64>,
    pub q_form: QForm,
}

impl Default for BerBoundParams {
    fn default() -> Self {
        Self {
            n: 4,
            d_min_sq: 2.0,
            ebno_db: (0..=14).map(f64::from).collect(),
            q_form: QForm::Exact,
        }
    }
}

impl BerBoundParams {
    pub fn new(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !self.n.is_power_of_two() {
            return Err(Error::invalid(format!("N must be a power of two >= 1, got {}", self.n)));
        }
        if !(self.d_min_sq > 0.0) || !self.d_min_sq.is_finite() {
            return Err(Error::invalid(format!("d_min_sq must be > 0, got {}", self.d_min_sq)));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        4 * self.n
    }

    fn q(&self, x: f64) -> f64 {
        match self.q_form {
            QForm::Exact => q_exact(x),
            QForm::ExpBound => 0.5 * (-0.5 * x * x).exp(),
        }
    }
}

/// Gaussian tail probability `P(Z > x)`.
pub fn q_exact(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Chernoff-style bound `exp(-x²/2)/2 >= Q(x)` for `x >= 0`.
pub fn q_exp_bound(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("the exponential Q bound needs x >= 0, got {x}")));
    }
    Ok(0.5 * (-0.5 * x * x).exp())
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `sqrt(d² · Eb/N0 · (2 + log2 N))`, the argument shared by both bounds.
pub fn q_argument(p: &BerBoundParams, ebno_db: f64) -> f64 {
    let es_over_eb = 2.0 + (p.n as f64).log2();
    (p.d_min_sq * db_to_linear(ebno_db) * es_over_eb).sqrt()
}

pub fn ser_bound(p: &BerBoundParams, ebno_db: f64) -> Result<f64> {
    p.validate()?;
    let bound = (p.m() - 2) as f64 * p.q(q_argument(p, ebno_db));
    Ok(bound.clamp(0.0, 1.0))
}

pub fn ber_bound(p: &BerBoundParams, ebno_db: f64) -> Result<f64> {
    p.validate()?;
    let bound = (2 * p.n - 1) as f64 * p.q(q_argument(p, ebno_db));
    Ok(bound.clamp(0.0, 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineScheme {
    Mpsk,
    Mqam,
}

/// Gray-coded high-SNR approximations for M-PSK and square M-QAM.
pub fn baseline_ber(scheme: BaselineScheme, m: usize, ebno_db: f64) -> Result<f64> {
    if m < 4 || !m.is_power_of_two() {
        return Err(Error::invalid(format!("baseline M must be a power of two >= 4, got {m}")));
    }
    let k = m.trailing_zeros() as f64;
    let ebno = db_to_linear(ebno_db);
    match scheme {
        BaselineScheme::Mpsk => {
            Ok((2.0 / k) * q_exact((2.0 * k * ebno).sqrt() * (PI / m as f64).sin()))
        }
        BaselineScheme::Mqam => {
            if m.trailing_zeros() % 2 != 0 {
                return Err(Error::invalid(format!("square QAM needs an even power of two, got M = {m}")));
            }
            let root = (m as f64).sqrt();
            Ok((4.0 / k) * (1.0 - 1.0 / root) * q_exact((3.0 * k * ebno / (m as f64 - 1.0)).sqrt()))
        }
    }
}
