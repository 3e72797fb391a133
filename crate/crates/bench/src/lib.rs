//! Fixtures shared by the criterion benchmarks under `benches/`.

use padlin_core::modem::{map_bits, modulate};
use padlin_core::{ComplexEnvelope, ModemConfig, PhaseState, SymbolSequence};

/// Pseudo-random symbols from a multiplicative hash; stable across runs.
pub fn symbols(cfg: &ModemConfig, n: usize) -> SymbolSequence {
    let bits: Vec<u8> = (0..n * cfg.bits_per_symbol())
        .map(|k| ((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 63) as u8)
        .collect();
    map_bits(&bits, cfg).expect("valid bit count")
}

/// MF-MSK envelope of `n` symbols at the modem's native amplitude.
pub fn envelope(cfg: &ModemConfig, n: usize) -> ComplexEnvelope {
    modulate(&symbols(cfg, n), cfg, PhaseState::ZERO).expect("valid config")
}
