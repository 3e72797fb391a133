//! Baseband simulation of M-ary MF-MSK through a Saleh TWT amplifier.
//!
//! The crate is organized along the transmit chain:
//!
//! * [`signal`]: complex envelopes and power metrics shared by everything else.
//! * [`modem`]: M-ary full-response CPFSK with h = 1/2 (MF-MSK), Gray mapping
//!   and a four-state Viterbi detector.
//! * [`saleh`]: memoryless AM/AM and AM/PM amplifier model with input back-off.
//! * [`predistort`]: analytic inverse, pre-/post-distortion and an adaptive
//!   look-up table predistorter.
//! * [`analysis`]: Q-function, union bounds, baseline PSK/QAM curves and
//!   Welch spectra.
//! * [`sim`]: seeded, parallel Monte Carlo link simulation.
//! * [`trace`]: tabulated characteristics for plotting.

pub mod analysis;
pub mod error;
pub mod modem;
pub mod predistort;
pub mod saleh;
pub mod signal;
pub mod sim;
pub mod trace;

pub use num_complex::Complex64;

pub use analysis::{
    baseline_ber, ber_bound, oob_power_ratio, psd_welch, q_exact, q_exp_bound, ser_bound,
    BaselineScheme, BerBoundParams, PsdEstimate, QForm,
};
pub use error::{Error, Result};
pub use modem::{ModemConfig, PhaseState, SymbolSequence};
pub use predistort::{ClampPolicy, LutTable, PdMode, PredistorterSpec};
pub use saleh::{OperatingPoint, PmForm, SalehParams, SaturationPoint};
pub use signal::{ComplexEnvelope, PowerReport};
pub use sim::{AmplifierSetting, BerCurve, BerPoint, Counts, LinkConfig, SweepVariable};
pub use trace::{HpaRow, PdRow, Peak};
