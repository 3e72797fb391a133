//! Closed-form error performance and spectral measurements.

mod bounds;
mod spectrum;

pub use bounds::{
    baseline_ber, ber_bound, q_argument, q_exact, q_exp_bound, ser_bound, BaselineScheme,
    BerBoundParams, QForm,
};
pub use spectrum::{oob_power_ratio, psd_welch, PsdEstimate};
