//! MF-MSK as M-ary full-response CPFSK with modulation index 1/2.
//!
//! Within symbol interval `i` the phase is
//!
//! ```text
//! Φ(t) = θ_i + 2π h α_i q(t - iT),   q(t) = t / 2T on [0, T]
//! ```
//!
//! so each symbol advances the phase by `π h α_i = α_i π/2`. With odd
//! symbols the accumulated phase `θ_i` only ever takes the four values
//! `{0, π/2, π, 3π/2}`, which is the state space of the Viterbi detector.
//! Sample `k` of an interval sits at `t = kT/S`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::ComplexEnvelope;

/// The only modulation index this modem implements.
pub const MODULATION_INDEX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModemConfig {
    /// Alphabet size M (power of two). M = 4N for N frequencies.
    pub m: usize,
    #[serde(default = "default_h")]
    pub h: f64,
    pub samples_per_symbol: usize,
    #[serde(default = "default_energy")]
    pub energy_per_symbol: f64,
}

fn default_h() -> f64 {
    MODULATION_INDEX
}

fn default_energy() -> f64 {
    1.0
}

impl Default for ModemConfig {
    fn default() -> Self {
        Self::new(16)
    }
}

impl ModemConfig {
    /// Config for alphabet size `m` with the default oversampling.
    pub fn new(m: usize) -> Self {
        Self {
            m,
            h: MODULATION_INDEX,
            samples_per_symbol: Self::default_samples_per_symbol(m),
            energy_per_symbol: 1.0,
        }
    }

    /// 8 samples per symbol up to M = 16 and 16 above, raised where needed
    /// to satisfy [`Self::min_samples_per_symbol`].
    pub fn default_samples_per_symbol(m: usize) -> usize {
        let base = if m <= 16 { 8 } else { 16 };
        base.max(Self::min_samples_per_symbol(m))
    }

    /// Sampling guard `2 ceil((M - 1) h)` for the outermost tone.
    pub fn min_samples_per_symbol(m: usize) -> usize {
        let guard = (m.saturating_sub(1) as f64 * MODULATION_INDEX).ceil() as usize * 2;
        guard.max(2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || !self.m.is_power_of_two() {
            return Err(Error::invalid(format!("M must be a power of two >= 2, got {}", self.m)));
        }
        if self.h != MODULATION_INDEX {
            return Err(Error::invalid(format!("only h = 0.5 is supported, got {}", self.h)));
        }
        let min = Self::min_samples_per_symbol(self.m);
        if self.samples_per_symbol < min {
            return Err(Error::invalid(format!(
                "M = {} needs at least {min} samples per symbol, got {}",
                self.m, self.samples_per_symbol
            )));
        }
        if !(self.energy_per_symbol > 0.0) || !self.energy_per_symbol.is_finite() {
            return Err(Error::invalid("energy_per_symbol must be finite and > 0"));
        }
        Ok(())
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m.trailing_zeros() as usize
    }

    /// Constant envelope `sqrt(2E/T)` with T = 1.
    pub fn amplitude(&self) -> f64 {
        (2.0 * self.energy_per_symbol).sqrt()
    }

    /// Number of frequencies N = M/4 (0 for M = 2).
    pub fn frequencies(&self) -> usize {
        self.m / 4
    }

    fn level(&self, index: usize) -> i32 {
        2 * index as i32 - (self.m as i32 - 1)
    }

    fn level_index(&self, symbol: i32) -> usize {
        ((symbol + self.m as i32 - 1) / 2) as usize
    }

    /// `exp(jπhαk/S)` for every level α (row) and sample k (column).
    fn waveforms(&self) -> Vec<Vec<Complex64>> {
        let s = self.samples_per_symbol as f64;
        (0..self.m)
            .map(|a| {
                let alpha = self.level(a) as f64;
                (0..self.samples_per_symbol)
                    .map(|k| Complex64::from_polar(1.0, PI * self.h * alpha * k as f64 / s))
                    .collect()
            })
            .collect()
    }
}

/// Odd integer symbols in `{±1, ±3, …, ±(M-1)}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolSequence(Vec<i32>);

impl SymbolSequence {
    pub fn new(symbols: Vec<i32>, cfg: &ModemConfig) -> Result<Self> {
        let seq = Self(symbols);
        seq.check(cfg)?;
        Ok(seq)
    }

    fn check(&self, cfg: &ModemConfig) -> Result<()> {
        let max = cfg.m as i32 - 1;
        match self.0.iter().find(|&&a| a % 2 == 0 || a.abs() > max) {
            Some(bad) => Err(Error::invalid(format!("symbol {bad} is not an odd level within ±{max}"))),
            None => Ok(()),
        }
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Accumulated phase θ as a number of quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PhaseState(u8);

impl PhaseState {
    pub const ZERO: Self = Self(0);

    pub fn from_quarters(q: i64) -> Self {
        Self(q.rem_euclid(4) as u8)
    }

    pub fn quarters(self) -> u8 {
        self.0
    }

    pub fn theta(self) -> f64 {
        self.0 as f64 * PI / 2.0
    }

    /// State after a symbol: `θ + π h α`.
    pub fn advance(self, symbol: i32) -> Self {
        Self::from_quarters(self.0 as i64 + symbol as i64)
    }

    /// Exact multiplication by `exp(jθ)`.
    #[inline]
    fn rotate(self, z: Complex64) -> Complex64 {
        match self.0 {
            0 => z,
            1 => Complex64::new(-z.im, z.re),
            2 => -z,
            _ => Complex64::new(z.im, -z.re),
        }
    }

    /// `Re(z exp(-jθ))`.
    #[inline]
    fn project(self, z: Complex64) -> f64 {
        match self.0 {
            0 => z.re,
            1 => z.im,
            2 => -z.re,
            _ => -z.im,
        }
    }
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = 0;
    while g != 0 {
        b ^= g;
        g >>= 1;
    }
    b
}

/// Groups of log2(M) bits (MSB first) → levels, via the Gray sequence position.
pub fn map_bits(bits: &[u8], cfg: &ModemConfig) -> Result<SymbolSequence> {
    cfg.validate()?;
    let k = cfg.bits_per_symbol();
    if bits.len() % k != 0 {
        return Err(Error::invalid(format!("{} bits do not split into {k}-bit groups", bits.len())));
    }
    let symbols = bits
        .chunks(k)
        .map(|group| {
            let word = group.iter().try_fold(0usize, |acc, &b| match b {
                0 | 1 => Ok(acc << 1 | b as usize),
                _ => Err(Error::invalid(format!("bit value {b} is not 0 or 1"))),
            })?;
            Ok(cfg.level(gray_decode(word)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SymbolSequence(symbols))
}

pub fn unmap_bits(symbols: &SymbolSequence, cfg: &ModemConfig) -> Result<Vec<u8>> {
    cfg.validate()?;
    symbols.check(cfg)?;
    let k = cfg.bits_per_symbol();
    let mut bits = Vec::with_capacity(symbols.len() * k);
    for &a in &symbols.0 {
        let g = cfg.level_index(a);
        let word = g ^ (g >> 1);
        bits.extend((0..k).rev().map(|j| (word >> j & 1) as u8));
    }
    Ok(bits)
}

pub fn modulate(symbols: &SymbolSequence, cfg: &ModemConfig, initial: PhaseState) -> Result<ComplexEnvelope> {
    cfg.validate()?;
    symbols.check(cfg)?;
    let amp = cfg.amplitude();
    let waves = cfg.waveforms();
    let mut state = initial;
    let mut out = Vec::with_capacity(symbols.len() * cfg.samples_per_symbol);
    for &a in &symbols.0 {
        let w = &waves[cfg.level_index(a)];
        out.extend(w.iter().map(|&z| state.rotate(z * amp)));
        state = state.advance(a);
    }
    ComplexEnvelope::new(out, cfg.samples_per_symbol)
}

/// Phase state after the whole sequence.
pub fn final_state(symbols: &SymbolSequence, initial: PhaseState) -> PhaseState {
    symbols.0.iter().fold(initial, |s, &a| s.advance(a))
}

#[derive(Clone, Copy)]
struct Survivor {
    prev: u8,
    level: u16,
}

/// Maximum-likelihood sequence detection over the four phase states.
///
/// Branch metric is `Re⟨r_i, exp(j(θ + πhαk/S))⟩`, which for the equal-energy
/// branch set is equivalent to minimum Euclidean distance.
pub fn demodulate(env: &ComplexEnvelope, cfg: &ModemConfig, initial: PhaseState) -> Result<SymbolSequence> {
    cfg.validate()?;
    if env.samples_per_symbol() != cfg.samples_per_symbol {
        return Err(Error::invalid(format!(
            "envelope has {} samples per symbol, modem expects {}",
            env.samples_per_symbol(),
            cfg.samples_per_symbol
        )));
    }
    let s = cfg.samples_per_symbol;
    if env.len() % s != 0 {
        return Err(Error::invalid("envelope length is not a whole number of symbols"));
    }
    let n = env.len() / s;
    let waves = cfg.waveforms();

    let mut metric = [f64::NEG_INFINITY; 4];
    metric[initial.quarters() as usize] = 0.0;
    let mut survivors = vec![Survivor { prev: 0, level: 0 }; 4 * n];
    let mut corr = vec![Complex64::new(0.0, 0.0); cfg.m];

    for (i, segment) in env.samples().chunks_exact(s).enumerate() {
        for (c, w) in corr.iter_mut().zip(&waves) {
            *c = segment.iter().zip(w).map(|(r, w)| r * w.conj()).sum();
        }
        let mut next = [f64::NEG_INFINITY; 4];
        let slot = &mut survivors[4 * i..4 * i + 4];
        for q in 0..4u8 {
            let base = metric[q as usize];
            if base == f64::NEG_INFINITY {
                continue;
            }
            let from = PhaseState(q);
            for (a, &c) in corr.iter().enumerate() {
                let m = base + from.project(c);
                let to = from.advance(cfg.level(a)).quarters() as usize;
                if m > next[to] {
                    next[to] = m;
                    slot[to] = Survivor { prev: q, level: a as u16 };
                }
            }
        }
        metric = next;
    }

    let mut state = (0..4)
        .max_by(|&a, &b| metric[a].total_cmp(&metric[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    let mut symbols = vec![0i32; n];
    for i in (0..n).rev() {
        let sv = survivors[4 * i + state];
        symbols[i] = cfg.level(sv.level as usize);
        state = sv.prev as usize;
    }
    Ok(SymbolSequence(symbols))
}
