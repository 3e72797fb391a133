//! One function per subcommand. Each writes `<out>/<command>.csv` and
//! `<out>/<command>.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use padlin_core::predistort::cascade_pd_hpa;
use padlin_core::saleh::{apply_hpa, saturation, source_power};
use padlin_core::sim::{band_limited_mfmsk, sweep, BerCurve};
use padlin_core::trace::{hpa_csv, hpa_trace, pd_csv, pd_trace, trace_peak};
use padlin_core::{
    baseline_ber, ber_bound, oob_power_ratio, psd_welch, ser_bound, BaselineScheme, ComplexEnvelope,
    OperatingPoint,
};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// AM/AM and AM/PM of the amplifier
    TraceHpa,
    /// Inverse amplitude and phase correction
    TracePd,
    /// Union bounds for each N
    Bounds,
    /// Bounds against PSK and QAM baselines
    Compare,
    /// Monte Carlo BER sweep
    Simulate,
    /// Spectra and out-of-band power with and without predistortion
    Psd,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::TraceHpa => "trace-hpa",
            Command::TracePd => "trace-pd",
            Command::Bounds => "bounds",
            Command::Compare => "compare",
            Command::Simulate => "simulate",
            Command::Psd => "psd",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Model(padlin_core::Error),
    Io(PathBuf, std::io::Error),
    /// Outputs were written but the run did not complete.
    Incomplete(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Model(e) => write!(f, "{e}"),
            RunError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            RunError::Incomplete(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<padlin_core::Error> for RunError {
    fn from(e: padlin_core::Error) -> Self {
        RunError::Model(e)
    }
}

/// SHA-256 of the canonical JSON of the resolved configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_json().as_bytes()))
}

/// Files written by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub csv: PathBuf,
    pub metadata: PathBuf,
}

struct Artifact {
    csv: String,
    results: Value,
    seed: Option<u64>,
    incomplete: Option<String>,
}

pub fn run(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Outputs, RunError> {
    let artifact = match command {
        Command::TraceHpa => trace_hpa_cmd(cfg)?,
        Command::TracePd => trace_pd_cmd(cfg)?,
        Command::Bounds => bounds_cmd(cfg)?,
        Command::Compare => compare_cmd(cfg)?,
        Command::Simulate => simulate_cmd(cfg)?,
        Command::Psd => psd_cmd(cfg)?,
    };
    let metadata = json!({
        "tool": "padlin",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command.name(),
        "config_sha256": config_hash(cfg),
        "seed": artifact.seed,
        "complete": artifact.incomplete.is_none(),
        "results": artifact.results,
        "config": cfg,
    });
    fs::create_dir_all(out).map_err(|e| RunError::Io(out.to_path_buf(), e))?;
    let outputs = Outputs {
        csv: out.join(format!("{}.csv", command.name())),
        metadata: out.join(format!("{}.json", command.name())),
    };
    let write = |p: &Path, text: String| fs::write(p, text).map_err(|e| RunError::Io(p.to_path_buf(), e));
    write(&outputs.csv, artifact.csv)?;
    write(
        &outputs.metadata,
        serde_json::to_string_pretty(&metadata).expect("metadata serializes") + "\n",
    )?;
    match artifact.incomplete {
        Some(m) => Err(RunError::Incomplete(m)),
        None => Ok(outputs),
    }
}

fn trace_hpa_cmd(cfg: &ExperimentConfig) -> Result<Artifact, RunError> {
    let rows = hpa_trace(&cfg.saleh, cfg.trace.u_end, cfg.trace.rows)?;
    let peak = trace_peak(&rows);
    Ok(Artifact {
        csv: hpa_csv(&rows),
        results: json!({ "saturation": saturation(&cfg.saleh), "trace_peak": peak }),
        seed: None,
        incomplete: None,
    })
}

fn trace_pd_cmd(cfg: &ExperimentConfig) -> Result<Artifact, RunError> {
    let end = cfg.trace.pd_u_end.unwrap_or_else(|| cfg.saleh.output_max());
    let rows = pd_trace(&cfg.saleh, end, cfg.trace.rows, cfg.predistorter.clamp_policy)?;
    Ok(Artifact {
        csv: pd_csv(&rows),
        results: json!({ "saturation": saturation(&cfg.saleh), "u_end": end }),
        seed: None,
        incomplete: None,
    })
}

fn bounds_cmd(cfg: &ExperimentConfig) -> Result<Artifact, RunError> {
    let mut csv = String::from("ebno_db,n,ber_bound,ser_bound\n");
    for &n in &cfg.bounds.n {
        let p = cfg.bounds.params(n);
        for &db in &cfg.bounds.ebno_db {
            writeln!(csv, "{db},{n},{},{}", ber_bound(&p, db)?, ser_bound(&p, db)?).unwrap();
        }
    }
    Ok(Artifact {
        csv,
        results: json!({ "rows": cfg.bounds.n.len() * cfg.bounds.ebno_db.len() }),
        seed: None,
        incomplete: None,
    })
}

fn compare_cmd(cfg: &ExperimentConfig) -> Result<Artifact, RunError> {
    let mut csv = String::from("ebno_db,n,m,ber_bound,ser_bound,mpsk_ber,mqam_ber\n");
    let mut non_square = Vec::new();
    for &n in &cfg.bounds.n {
        let p = cfg.bounds.params(n);
        let m = p.m();
        for &db in &cfg.bounds.ebno_db {
            let psk = baseline_ber(BaselineScheme::Mpsk, m, db)?;
            // QAM is only defined here for square constellations
            let qam = match baseline_ber(BaselineScheme::Mqam, m, db) {
                Ok(v) => v.to_string(),
                Err(_) => {
                    if !non_square.contains(&m) {
                        non_square.push(m);
                    }
                    String::new()
                }
            };
            writeln!(csv, "{db},{n},{m},{},{},{psk},{qam}", ber_bound(&p, db)?, ser_bound(&p, db)?).unwrap();
        }
    }
    Ok(Artifact {
        csv,
        results: json!({ "mqam_omitted_for_m": non_square }),
        seed: None,
        incomplete: None,
    })
}

fn simulate_cmd(cfg: &ExperimentConfig) -> Result<Artifact, RunError> {
    let link = cfg.link_config()?;
    let curves = sweep(&link, cfg.sweep.variable, &cfg.sweep_values())?;
    let mut csv = format!("curve,{}\n", BerCurve::CSV_HEADER);
    for c in &curves {
        for line in c.to_csv().lines().skip(1) {
            writeln!(csv, "{},{line}", c.label).unwrap();
        }
    }
    let incomplete = curves
        .iter()
        .find_map(|c| c.aborted.as_ref().map(|a| format!("curve {} aborted at {a}", c.label)));
    let summary: Vec<Value> = curves
        .iter()
        .map(|c| json!({ "label": c.label, "link": c.config, "points": c.points.len(), "aborted": c.aborted }))
        .collect();
    Ok(Artifact {
        csv,
        results: json!({ "sweep": cfg.sweep.variable, "values": cfg.sweep_values(), "curves": summary }),
        seed: Some(link.seed),
        incomplete,
    })
}

fn psd_cmd(cfg: &ExperimentConfig) -> Result<Artifact, RunError> {
    let p = &cfg.psd;
    let modem = cfg.psd_modem();
    let x = band_limited_mfmsk(&modem, p.symbols, p.seed, p.cutoff, p.taps)?;
    let x = x.scale(p.drive * cfg.saleh.output_max() / x.max_modulus());
    // unit input gain: the drive level alone sets how hard the amplifier is pushed
    let op = OperatingPoint::with_gain(cfg.saleh, 1.0, source_power(&x)?)?;
    let spec = cfg.predistorter_spec()?;
    let off = apply_hpa(&x, &op);
    let on = cascade_pd_hpa(&x, &spec, &op)?;

    let edge = p.band_edge.unwrap_or(p.m as f64 / 2.0);
    let estimate = |e: &ComplexEnvelope| psd_welch(e, p.segment, p.overlap);
    let (s_in, s_off, s_on) = (estimate(&x)?, estimate(&off)?, estimate(&on)?);
    let (r_in, r_off, r_on) = (
        oob_power_ratio(&s_in, edge)?,
        oob_power_ratio(&s_off, edge)?,
        oob_power_ratio(&s_on, edge)?,
    );

    let mut csv = String::from("freq,input_db,hpa_db,pd_hpa_db\n");
    let rows = s_in
        .frequencies
        .iter()
        .zip(s_in.density_db())
        .zip(s_off.density_db())
        .zip(s_on.density_db());
    for (((f, a), b), c) in rows {
        writeln!(csv, "{f},{a},{b},{c}").unwrap();
    }
    Ok(Artifact {
        csv,
        results: json!({
            "band_edge": edge,
            "implied_ibo_db": op.ibo_db(),
            "oob_db": { "input": r_in, "hpa": r_off, "pd_hpa": r_on },
            "regrowth_reduction_db": r_off - r_on,
        }),
        seed: Some(p.seed),
        incomplete: None,
    })
}
