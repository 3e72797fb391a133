//! Experiment configuration: JSON document, defaults and `--set` overrides.

use std::fmt;
use std::path::PathBuf;

use padlin_core::predistort::build_lut;
use padlin_core::sim::AmplifierSetting;
use padlin_core::{
    BerBoundParams, ClampPolicy, LinkConfig, ModemConfig, PdMode, PredistorterSpec, QForm, SalehParams,
    SweepVariable,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A configuration problem, located by its dotted path in the document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModemSection {
    pub m: usize,
    /// `null` picks the modem's default for `m`.
    pub samples_per_symbol: Option<usize>,
}

impl Default for ModemSection {
    fn default() -> Self {
        Self {
            m: 16,
            samples_per_symbol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplifierSection {
    pub enabled: bool,
    pub ibo_db: f64,
}

impl Default for AmplifierSection {
    fn default() -> Self {
        Self {
            enabled: true,
            ibo_db: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredistorterSection {
    pub enabled: bool,
    pub mode: PdMode,
    pub clamp_policy: ClampPolicy,
    pub lut_size: usize,
}

impl Default for PredistorterSection {
    fn default() -> Self {
        Self {
            enabled: false,
            mode: PdMode::Analytic,
            clamp_policy: ClampPolicy::ClampToSaturation,
            lut_size: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSection {
    pub ebno_db_grid: Vec<f64>,
    pub symbols_per_point: usize,
    pub block_symbols: usize,
    pub seed: u64,
    pub drive_level: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        let d = LinkConfig::default();
        Self {
            ebno_db_grid: d.ebno_db_grid,
            symbols_per_point: d.symbols_per_point,
            block_symbols: d.block_symbols,
            seed: d.seed,
            drive_level: d.drive_level,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub variable: SweepVariable,
    /// Swept values; `null` means the link's Eb/N0 grid (Eb/N0 sweep) or
    /// 5, 7 and 9 dB (IBO sweep).
    pub values: Option<Vec<f64>>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            variable: SweepVariable::Ebno,
            values: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSection {
    pub u_end: f64,
    pub rows: usize,
    /// End of the predistorter trace; `null` means `U_max`.
    pub pd_u_end: Option<f64>,
}

impl Default for TraceSection {
    fn default() -> Self {
        Self {
            u_end: 2.0,
            rows: 1001,
            pd_u_end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    pub n: Vec<usize>,
    pub d_min_sq: f64,
    pub ebno_db: Vec<f64>,
    pub q_form: QForm,
}

impl Default for BoundsSection {
    fn default() -> Self {
        let d = BerBoundParams::default();
        Self {
            n: vec![1, 4, 16],
            d_min_sq: d.d_min_sq,
            ebno_db: d.ebno_db,
            q_form: d.q_form,
        }
    }
}

impl BoundsSection {
    pub fn params(&self, n: usize) -> BerBoundParams {
        BerBoundParams {
            n,
            d_min_sq: self.d_min_sq,
            ebno_db: self.ebno_db.clone(),
            q_form: self.q_form,
        }
    }
}

/// Band-limited test signal for spectral measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsdSection {
    pub m: usize,
    pub samples_per_symbol: usize,
    pub symbols: usize,
    pub seed: u64,
    /// Lowpass cutoff in cycles per symbol.
    pub cutoff: f64,
    pub taps: usize,
    /// Peak modulus as a multiple of `U_max`.
    pub drive: f64,
    pub segment: usize,
    pub overlap: f64,
    /// `null` means `M/2` cycles per symbol.
    pub band_edge: Option<f64>,
}

impl Default for PsdSection {
    fn default() -> Self {
        Self {
            m: 4,
            samples_per_symbol: 16,
            symbols: 4096,
            seed: 7,
            cutoff: 0.75,
            taps: 129,
            drive: 1.2,
            segment: 512,
            overlap: 0.5,
            band_edge: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Used when `--out` is not given.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub saleh: SalehParams,
    pub modem: ModemSection,
    pub amplifier: AmplifierSection,
    pub predistorter: PredistorterSection,
    pub link: LinkSection,
    pub sweep: SweepSection,
    pub trace: TraceSection,
    pub bounds: BoundsSection,
    pub psd: PsdSection,
    pub output: OutputSection,
}

/// Parse and validate a configuration document. Blank text gives the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value = parse_value(text)?;
    from_value(value)
}

/// Parse `text`, apply `key=value` overrides in order, then validate.
pub fn load_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut value = parse_value(text)?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    from_value(value)
}

fn parse_value(text: &str) -> Result<Value, ConfigError> {
    if text.trim().is_empty() {
        return Ok(Value::Object(Default::default()));
    }
    serde_json::from_str(text).map_err(|e| err("", format!("invalid JSON: {e}")))
}

fn from_value(value: Value) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        err(&path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// `a.b.c=value`; the value is read as JSON, falling back to a plain string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let Some((key, raw)) = assignment.split_once('=') else {
        return Err(err("", format!("override `{assignment}` is not of the form key=value")));
    };
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(err("", format!("override key `{key}` is malformed")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    for part in key.split('.') {
        if !node.is_object() {
            return Err(err(key, "cannot set a field inside a non-object value"));
        }
        node = node
            .as_object_mut()
            .unwrap()
            .entry(part)
            .or_insert_with(|| Value::Object(Default::default()));
    }
    *node = value;
    Ok(())
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(err(path, format!("must be finite and > 0, got {v}")))
    }
}

fn finite_grid(path: &str, grid: &[f64]) -> Result<(), ConfigError> {
    if grid.is_empty() {
        return Err(err(path, "must not be empty"));
    }
    match grid.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(err(&format!("{path}[{i}]"), "must be finite")),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.saleh;
        positive("saleh.alpha_a", s.alpha_a)?;
        positive("saleh.beta_a", s.beta_a)?;
        positive("saleh.beta_phi", s.beta_phi)?;
        if !s.alpha_phi.is_finite() {
            return Err(err("saleh.alpha_phi", "must be finite"));
        }
        s.validate().map_err(|e| err("saleh", e.to_string()))?;

        let modem = self.modem_config();
        if self.modem.m < 2 || !self.modem.m.is_power_of_two() {
            return Err(err("modem.m", format!("must be a power of two >= 2, got {}", self.modem.m)));
        }
        modem
            .validate()
            .map_err(|e| err("modem.samples_per_symbol", e.to_string()))?;

        let ibo = self.amplifier.ibo_db;
        if !(ibo >= 0.0) || !ibo.is_finite() {
            return Err(err("amplifier.ibo_db", format!("must be finite and >= 0, got {ibo}")));
        }
        if self.predistorter.lut_size < 2 {
            return Err(err("predistorter.lut_size", "must be >= 2"));
        }

        let l = &self.link;
        finite_grid("link.ebno_db_grid", &l.ebno_db_grid)?;
        if l.symbols_per_point == 0 {
            return Err(err("link.symbols_per_point", "must be >= 1"));
        }
        if l.block_symbols == 0 {
            return Err(err("link.block_symbols", "must be >= 1"));
        }
        if !(l.drive_level > 0.0 && l.drive_level <= 1.0) {
            return Err(err("link.drive_level", format!("must lie in (0, 1], got {}", l.drive_level)));
        }
        if let Some(v) = &self.sweep.values {
            finite_grid("sweep.values", v)?;
            if self.sweep.variable == SweepVariable::Ibo {
                if let Some(i) = v.iter().position(|x| *x < 0.0) {
                    return Err(err(&format!("sweep.values[{i}]"), "IBO must be >= 0"));
                }
            }
        }

        positive("trace.u_end", self.trace.u_end)?;
        if self.trace.rows < 2 {
            return Err(err("trace.rows", "must be >= 2"));
        }
        if let Some(u) = self.trace.pd_u_end {
            positive("trace.pd_u_end", u)?;
        }

        let b = &self.bounds;
        if b.n.is_empty() {
            return Err(err("bounds.n", "must not be empty"));
        }
        if let Some(i) = b.n.iter().position(|n| *n == 0 || !n.is_power_of_two()) {
            return Err(err(&format!("bounds.n[{i}]"), "must be a power of two >= 1"));
        }
        positive("bounds.d_min_sq", b.d_min_sq)?;
        finite_grid("bounds.ebno_db", &b.ebno_db)?;

        let p = &self.psd;
        let psd_modem = self.psd_modem();
        psd_modem
            .validate()
            .map_err(|e| err("psd", e.to_string()))?;
        if p.symbols == 0 {
            return Err(err("psd.symbols", "must be >= 1"));
        }
        positive("psd.cutoff", p.cutoff)?;
        if p.taps % 2 == 0 {
            return Err(err("psd.taps", "must be odd"));
        }
        positive("psd.drive", p.drive)?;
        if p.segment < 2 || p.segment > p.symbols * p.samples_per_symbol {
            return Err(err("psd.segment", "must lie between 2 and the signal length"));
        }
        if !(0.0..1.0).contains(&p.overlap) {
            return Err(err("psd.overlap", "must lie in [0, 1)"));
        }
        if let Some(e) = p.band_edge {
            if !(e >= 0.0) || e > p.samples_per_symbol as f64 / 2.0 {
                return Err(err("psd.band_edge", "must lie in [0, samples_per_symbol / 2]"));
            }
        }
        Ok(())
    }

    pub fn modem_config(&self) -> ModemConfig {
        let mut m = ModemConfig::new(self.modem.m);
        if let Some(s) = self.modem.samples_per_symbol {
            m.samples_per_symbol = s;
        }
        m
    }

    pub fn psd_modem(&self) -> ModemConfig {
        ModemConfig {
            samples_per_symbol: self.psd.samples_per_symbol,
            ..ModemConfig::new(self.psd.m)
        }
    }

    pub fn predistorter_spec(&self) -> padlin_core::Result<PredistorterSpec> {
        let pd = &self.predistorter;
        Ok(match pd.mode {
            PdMode::Analytic => PredistorterSpec::analytic(self.saleh, pd.clamp_policy),
            PdMode::Lut => PredistorterSpec::with_lut(self.saleh, build_lut(&self.saleh, pd.lut_size)?, pd.clamp_policy),
        })
    }

    pub fn link_config(&self) -> padlin_core::Result<LinkConfig> {
        let amp = self.amplifier.enabled.then_some(AmplifierSetting {
            params: self.saleh,
            ibo_db: self.amplifier.ibo_db,
        });
        let pd = match (amp.is_some(), self.predistorter.enabled) {
            (true, true) => Some(self.predistorter_spec()?),
            _ => None,
        };
        Ok(LinkConfig {
            modem: self.modem_config(),
            hpa: amp,
            pd,
            ebno_db_grid: self.link.ebno_db_grid.clone(),
            symbols_per_point: self.link.symbols_per_point,
            block_symbols: self.link.block_symbols,
            seed: self.link.seed,
            drive_level: self.link.drive_level,
        })
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        match (&self.sweep.values, self.sweep.variable) {
            (Some(v), _) => v.clone(),
            (None, SweepVariable::Ebno) => self.link.ebno_db_grid.clone(),
            (None, SweepVariable::Ibo) => vec![5.0, 7.0, 9.0],
        }
    }

    /// Canonical JSON text of the resolved configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
