//! Seeded Monte Carlo link simulation.
//!
//! A trial runs `bits → map → modulate → drive scaling → [PD] → [HPA] → AWGN
//! → Viterbi → unmap` and counts bit and symbol errors. Every point of a
//! sweep is split into fixed-size blocks; each block draws its bits and noise
//! from its own ChaCha stream keyed on `(seed, point index, block index)`, so
//! results do not depend on how blocks are scheduled across threads.
//!
//! Eb/N0 is referenced to the power of the signal entering the channel (after
//! the amplifier). Back-off comparisons therefore measure distortion only, not
//! the output power lost to back-off.

use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{ber_bound, BerBoundParams};
use crate::error::{Error, Result};
use crate::modem::{demodulate, map_bits, modulate, unmap_bits, ModemConfig, PhaseState, SymbolSequence};
use crate::predistort::{cascade_pd_hpa, PredistorterSpec};
use crate::saleh::{apply_hpa, OperatingPoint, SalehParams};
use crate::signal::{band_limit, measure_power, ComplexEnvelope};

/// Amplifier coefficients and back-off; the input gain is derived per block
/// from the measured power of the signal that reaches it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifierSetting {
    #[serde(default)]
    pub params: SalehParams,
    pub ibo_db: f64,
}

impl AmplifierSetting {
    pub fn operating_point(&self, source_power: f64) -> Result<OperatingPoint> {
        OperatingPoint::from_ibo(self.params, self.ibo_db, source_power)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub modem: ModemConfig,
    pub hpa: Option<AmplifierSetting>,
    pub pd: Option<PredistorterSpec>,
    pub ebno_db_grid: Vec<f64>,
    pub symbols_per_point: usize,
    /// Symbols per independently seeded block.
    pub block_symbols: usize,
    pub seed: u64,
    /// Peak modulus entering the PD/HPA chain, as a fraction of `U_max`.
    pub drive_level: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            modem: ModemConfig::default(),
            hpa: None,
            pd: None,
            ebno_db_grid: (0..=12).map(f64::from).collect(),
            symbols_per_point: 100_000,
            block_symbols: 10_000,
            seed: 1,
            drive_level: 0.9,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        self.modem.validate()?;
        if self.symbols_per_point == 0 {
            return Err(Error::invalid("symbols_per_point must be >= 1"));
        }
        if self.block_symbols == 0 {
            return Err(Error::invalid("block_symbols must be >= 1"));
        }
        if !(self.drive_level > 0.0 && self.drive_level <= 1.0) {
            return Err(Error::invalid(format!("drive_level must lie in (0, 1], got {}", self.drive_level)));
        }
        if let Some(hpa) = &self.hpa {
            hpa.params.validate()?;
            if !(hpa.ibo_db >= 0.0) || !hpa.ibo_db.is_finite() {
                return Err(Error::invalid(format!("ibo_db must be finite and >= 0, got {}", hpa.ibo_db)));
            }
        }
        if let Some(pd) = &self.pd {
            if self.hpa.is_none() {
                return Err(Error::invalid("a predistorter requires an amplifier"));
            }
            pd.validate()?;
        }
        if self.ebno_db_grid.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("Eb/N0 grid contains NaN"));
        }
        Ok(())
    }

    /// Saleh coefficients that define `U_max` for the drive level.
    fn reference_params(&self) -> SalehParams {
        self.hpa.map(|h| h.params).unwrap_or_default()
    }

    fn blocks(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        let n = self.symbols_per_point.div_ceil(self.block_symbols);
        (0..n).map(move |b| {
            let done = b * self.block_symbols;
            (b as u64, self.block_symbols.min(self.symbols_per_point - done))
        })
    }
}

/// Error counts of one or more trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub bits: u64,
    pub bit_errors: u64,
    pub symbols: u64,
    pub symbol_errors: u64,
}

impl Add for Counts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            bits: self.bits + o.bits,
            bit_errors: self.bit_errors + o.bit_errors,
            symbols: self.symbols + o.symbols,
            symbol_errors: self.symbol_errors + o.symbol_errors,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Counts {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    pub fn ser(&self) -> f64 {
        self.symbol_errors as f64 / self.symbols as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub ebno_db: f64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub symbols: u64,
    pub symbol_errors: u64,
    pub ser: f64,
    /// Bit-error union bound at this point, when M = 4N.
    pub bound: Option<f64>,
}

impl BerPoint {
    fn new(ebno_db: f64, c: Counts, m: usize) -> Self {
        let bound = (m >= 4)
            .then(|| ber_bound(&BerBoundParams::new(m / 4), ebno_db).ok())
            .flatten();
        Self {
            ebno_db,
            bits: c.bits,
            bit_errors: c.bit_errors,
            ber: c.ber(),
            symbols: c.symbols,
            symbol_errors: c.symbol_errors,
            ser: c.ser(),
            bound,
        }
    }

    pub fn counts(&self) -> Counts {
        Counts {
            bits: self.bits,
            bit_errors: self.bit_errors,
            symbols: self.symbols,
            symbol_errors: self.symbol_errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub label: String,
    pub config: LinkConfig,
    pub points: Vec<BerPoint>,
    /// Set when a point failed; `points` then holds the completed prefix.
    pub aborted: Option<String>,
}

impl BerCurve {
    pub const CSV_HEADER: &'static str = "ebno_db,bits,bit_errors,ber,symbols,symbol_errors,ser,bound";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for p in &self.points {
            let bound = p.bound.map(|b| b.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.ebno_db, p.bits, p.bit_errors, p.ber, p.symbols, p.symbol_errors, p.ser, bound
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Ebno,
    Ibo,
}

/// Stream layout: point index in the top 24 bits, block index below, and a
/// final bit separating the data stream from the noise stream.
fn stream_id(point: u64, block: u64, noise: bool) -> u64 {
    debug_assert!(point < 1 << 24 && block < 1 << 39);
    point << 40 | block << 1 | noise as u64
}

fn stream(seed: u64, point: u64, block: u64, noise: bool) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(point, block, noise));
    rng
}

/// Adds circular Gaussian noise of variance `P S / (Es/N0)` per sample, where
/// `P` is the measured power of `env`. `esno_db = +inf` adds nothing.
pub fn add_awgn<R: RngCore + ?Sized>(env: &ComplexEnvelope, esno_db: f64, rng: &mut R) -> Result<ComplexEnvelope> {
    let power = measure_power(env)?.average_power;
    if esno_db == f64::INFINITY {
        return Ok(env.clone());
    }
    if esno_db.is_nan() {
        return Err(Error::invalid("Es/N0 is NaN"));
    }
    let variance = power * env.samples_per_symbol() as f64 / 10f64.powf(esno_db / 10.0);
    let sigma = (0.5 * variance).sqrt();
    Ok(env.map(|s| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        s + Complex64::new(re, im) * sigma
    }))
}

/// Transmit chain up to the channel input.
pub fn transmit(cfg: &LinkConfig, symbols: &SymbolSequence) -> Result<ComplexEnvelope> {
    let env = modulate(symbols, &cfg.modem, PhaseState::ZERO)?;
    let peak = cfg.drive_level * cfg.reference_params().output_max();
    let driven = env.scale(peak / cfg.modem.amplitude());
    let Some(hpa) = &cfg.hpa else {
        return Ok(driven);
    };
    let op = hpa.operating_point(measure_power(&driven)?.average_power)?;
    match &cfg.pd {
        Some(pd) => cascade_pd_hpa(&driven, pd, &op),
        None => Ok(apply_hpa(&driven, &op)),
    }
}

/// One independently seeded block of `n_symbols` symbols.
pub fn run_block(cfg: &LinkConfig, ebno_db: f64, point: u64, block: u64, n_symbols: usize) -> Result<Counts> {
    if n_symbols == 0 {
        return Err(Error::invalid("a block needs at least one symbol"));
    }
    let k = cfg.modem.bits_per_symbol();
    let mut data = stream(cfg.seed, point, block, false);
    let bits: Vec<u8> = (0..n_symbols * k).map(|_| data.random_range(0..2u8)).collect();
    let symbols = map_bits(&bits, &cfg.modem)?;
    let tx = transmit(cfg, &symbols)?;

    let esno_db = ebno_db + 10.0 * (k as f64).log10();
    let rx = add_awgn(&tx, esno_db, &mut stream(cfg.seed, point, block, true))?;
    let detected = demodulate(&rx, &cfg.modem, PhaseState::ZERO)?;
    let rx_bits = unmap_bits(&detected, &cfg.modem)?;

    Ok(Counts {
        bits: bits.len() as u64,
        bit_errors: bits.iter().zip(&rx_bits).filter(|(a, b)| a != b).count() as u64,
        symbols: n_symbols as u64,
        symbol_errors: symbols
            .as_slice()
            .iter()
            .zip(detected.as_slice())
            .filter(|(a, b)| a != b)
            .count() as u64,
    })
}

/// All blocks of one grid point, run in parallel.
pub fn run_point_at(cfg: &LinkConfig, ebno_db: f64, point: u64) -> Result<Counts> {
    cfg.validate()?;
    let blocks: Vec<_> = cfg.blocks().collect();
    blocks
        .par_iter()
        .map(|&(b, n)| run_block(cfg, ebno_db, point, b, n))
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().fold(Counts::default(), Add::add))
}

/// [`run_point_at`] for point index 0.
pub fn run_point(cfg: &LinkConfig, ebno_db: f64) -> Result<Counts> {
    run_point_at(cfg, ebno_db, 0)
}

fn run_curve(cfg: &LinkConfig, label: String) -> BerCurve {
    let results: Vec<Result<Counts>> = cfg
        .ebno_db_grid
        .par_iter()
        .enumerate()
        .map(|(i, &db)| run_point_at(cfg, db, i as u64))
        .collect();
    let mut points = Vec::with_capacity(results.len());
    let mut aborted = None;
    for (r, &db) in results.into_iter().zip(&cfg.ebno_db_grid) {
        match r {
            Ok(c) => points.push(BerPoint::new(db, c, cfg.modem.m)),
            Err(e) => {
                aborted = Some(format!("Eb/N0 = {db} dB: {e}"));
                break;
            }
        }
    }
    BerCurve {
        label,
        config: cfg.clone(),
        points,
        aborted,
    }
}

/// Eb/N0 sweep: one curve over `values`. IBO sweep: one curve per back-off,
/// each over the configured Eb/N0 grid with the same per-point seeds.
pub fn sweep(cfg: &LinkConfig, variable: SweepVariable, values: &[f64]) -> Result<Vec<BerCurve>> {
    cfg.validate()?;
    if values.is_empty() {
        return Err(Error::invalid("sweep values must not be empty"));
    }
    match variable {
        SweepVariable::Ebno => {
            let c = LinkConfig {
                ebno_db_grid: values.to_vec(),
                ..cfg.clone()
            };
            c.validate()?;
            Ok(vec![run_curve(&c, "ebno".into())])
        }
        SweepVariable::Ibo => {
            let Some(hpa) = cfg.hpa else {
                return Err(Error::invalid("an IBO sweep requires an amplifier"));
            };
            if cfg.ebno_db_grid.is_empty() {
                return Err(Error::invalid("Eb/N0 grid must not be empty"));
            }
            values
                .iter()
                .map(|&ibo| {
                    let c = LinkConfig {
                        hpa: Some(AmplifierSetting { ibo_db: ibo, ..hpa }),
                        ..cfg.clone()
                    };
                    c.validate()?;
                    Ok(run_curve(&c, format!("ibo={ibo}")))
                })
                .collect()
        }
    }
}

/// Band-limited MF-MSK for spectral-regrowth measurements.
///
/// Constant-envelope MF-MSK passes a memoryless amplifier with nothing more
/// than a complex gain, so regrowth needs envelope fluctuation; a lowpass
/// transmit filter provides it. Returned at the modem's native amplitude.
pub fn band_limited_mfmsk(
    modem: &ModemConfig,
    n_symbols: usize,
    seed: u64,
    cutoff: f64,
    taps: usize,
) -> Result<ComplexEnvelope> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..n_symbols * modem.bits_per_symbol())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let env = modulate(&map_bits(&bits, modem)?, modem, PhaseState::ZERO)?;
    band_limit(&env, cutoff, taps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predistort::ClampPolicy;

    fn linear(m: usize, symbols: usize) -> LinkConfig {
        LinkConfig {
            modem: ModemConfig::new(m),
            symbols_per_point: symbols,
            block_symbols: 2_000,
            seed: 42,
            ..LinkConfig::default()
        }
    }

    fn with_pd(cfg: &LinkConfig, ibo: f64) -> LinkConfig {
        let params = SalehParams::default();
        LinkConfig {
            hpa: Some(AmplifierSetting { params, ibo_db: ibo }),
            pd: Some(PredistorterSpec::analytic(params, ClampPolicy::ClampToSaturation)),
            ..cfg.clone()
        }
    }

    #[test]
    fn infinite_snr_adds_nothing() {
        let env = ComplexEnvelope::new(vec![Complex64::new(1.0, -1.0); 8], 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(add_awgn(&env, f64::INFINITY, &mut rng).unwrap(), env);
    }

    #[test]
    fn noise_power_matches_requested_snr() {
        let sps = 4;
        let env = ComplexEnvelope::new(vec![Complex64::new(0.6, 0.8); 1_000_000], sps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noisy = add_awgn(&env, 10.0, &mut rng).unwrap();
        let noise: f64 = noisy
            .samples()
            .iter()
            .zip(env.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / env.len() as f64;
        // Es/N0 = P S / σ²
        let measured = 10.0 * (1.0 * sps as f64 / noise).log10();
        assert!((measured - 10.0).abs() < 0.1, "{measured}");
    }

    #[test]
    fn noise_is_reproducible() {
        let env = ComplexEnvelope::new(vec![Complex64::new(1.0, 0.0); 64], 4).unwrap();
        let a = add_awgn(&env, 3.0, &mut stream(5, 1, 2, true)).unwrap();
        let b = add_awgn(&env, 3.0, &mut stream(5, 1, 2, true)).unwrap();
        let c = add_awgn(&env, 3.0, &mut stream(5, 1, 3, true)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_link_is_error_free() {
        for m in [2, 4, 16] {
            let cfg = linear(m, 3_000);
            let c = run_point(&cfg, f64::INFINITY).unwrap();
            assert_eq!(c.bit_errors, 0);
            assert_eq!(c.symbol_errors, 0);
            assert_eq!(c.symbols, 3_000);
            assert_eq!(c.bits, 3_000 * cfg.modem.bits_per_symbol() as u64);
        }
    }

    #[test]
    fn predistorted_link_matches_linear_link() {
        let lin = linear(4, 20_000);
        let pd = with_pd(&lin, 5.0);
        for db in [0.0, 4.0] {
            let a = run_point(&lin, db).unwrap();
            let b = run_point(&pd, db).unwrap();
            assert!(a.bit_errors > 0);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn block_counts_merge_exactly() {
        let mut cfg = linear(4, 10_000);
        cfg.block_symbols = 1_000;
        let whole = run_point_at(&cfg, 2.0, 3).unwrap();
        let merged = (0..10)
            .map(|b| run_block(&cfg, 2.0, 3, b, 1_000).unwrap())
            .fold(Counts::default(), Add::add);
        assert_eq!(whole, merged);
    }

    #[test]
    fn uneven_last_block() {
        let mut cfg = linear(4, 2_500);
        cfg.block_symbols = 1_000;
        let blocks: Vec<_> = cfg.blocks().collect();
        assert_eq!(blocks, vec![(0, 1_000), (1, 1_000), (2, 500)]);
        assert_eq!(run_point(&cfg, 6.0).unwrap().symbols, 2_500);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = linear(4, 0);
        assert!(run_point(&cfg, 0.0).is_err());
        cfg.symbols_per_point = 10;
        cfg.pd = Some(PredistorterSpec::analytic(SalehParams::default(), ClampPolicy::Reject));
        assert!(cfg.validate().is_err());
        let mut cfg = linear(4, 10);
        cfg.drive_level = 1.5;
        assert!(cfg.validate().is_err());
        assert!(sweep(&linear(4, 10), SweepVariable::Ibo, &[5.0]).is_err());
        assert!(sweep(&linear(4, 10), SweepVariable::Ebno, &[]).is_err());
    }

    #[test]
    fn rejecting_predistorter_aborts_the_sweep() {
        let mut cfg = with_pd(&linear(4, 100), 5.0);
        // predistorter built for a weaker amplifier cannot invert the drive
        let weak = SalehParams { alpha_a: 1.0, ..SalehParams::default() };
        cfg.pd = Some(PredistorterSpec::analytic(weak, ClampPolicy::Reject));
        let curves = sweep(&cfg, SweepVariable::Ebno, &[5.0, 6.0]).unwrap();
        assert!(curves[0].aborted.is_some());
        assert!(curves[0].points.is_empty());
    }

    #[test]
    fn more_backoff_fewer_errors_without_pd() {
        let params = SalehParams::default();
        let cfg = LinkConfig {
            hpa: Some(AmplifierSetting { params, ibo_db: 5.0 }),
            ebno_db_grid: vec![4.0],
            ..linear(16, 20_000)
        };
        let curves = sweep(&cfg, SweepVariable::Ibo, &[5.0, 7.0, 9.0]).unwrap();
        let ber: Vec<f64> = curves.iter().map(|c| c.points[0].ber).collect();
        assert!(ber[0] > ber[1] && ber[1] > ber[2], "{ber:?}");
        let pd = with_pd(&cfg, 5.0);
        let with = sweep(&pd, SweepVariable::Ebno, &[4.0]).unwrap();
        assert!(with[0].points[0].ber < ber[0]);
    }

    #[test]
    fn csv_layout() {
        let cfg = linear(4, 500);
        let curve = &sweep(&cfg, SweepVariable::Ebno, &[3.0]).unwrap()[0];
        let text = curve.to_csv();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(BerCurve::CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("3,1000,"));
    }
}
