//! Tabulated amplifier and predistorter characteristics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predistort::{am_am_inverse, ClampPolicy};
use crate::saleh::SalehParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpaRow {
    pub u: f64,
    pub am_am: f64,
    pub am_pm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdRow {
    pub u: f64,
    pub a_inv: f64,
    pub psi: f64,
}

/// Location and height of the AM/AM maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub u: f64,
    pub value: f64,
}

fn grid(u_end: f64, rows: usize) -> Result<impl Iterator<Item = f64>> {
    if rows < 2 {
        return Err(Error::invalid(format!("a trace needs at least 2 rows, got {rows}")));
    }
    if !(u_end > 0.0) || !u_end.is_finite() {
        return Err(Error::invalid(format!("trace end must be finite and > 0, got {u_end}")));
    }
    let step = u_end / (rows - 1) as f64;
    Ok((0..rows).map(move |k| if k == rows - 1 { u_end } else { k as f64 * step }))
}

/// AM/AM and AM/PM on `rows` evenly spaced inputs over `[0, u_end]`.
pub fn hpa_trace(p: &SalehParams, u_end: f64, rows: usize) -> Result<Vec<HpaRow>> {
    p.validate()?;
    Ok(grid(u_end, rows)?
        .map(|u| HpaRow {
            u,
            am_am: p.gain_am(u),
            am_pm: p.phase_pm(u),
        })
        .collect())
}

/// Inverse amplitude and phase correction over `[0, u_end]`.
pub fn pd_trace(p: &SalehParams, u_end: f64, rows: usize, clamp: ClampPolicy) -> Result<Vec<PdRow>> {
    p.validate()?;
    grid(u_end, rows)?
        .map(|u| {
            let a = am_am_inverse(u, p, clamp)?;
            Ok(PdRow {
                u,
                a_inv: a,
                // 0.0 - x keeps u = 0 from printing as -0
                psi: 0.0 - p.phase_pm(a),
            })
        })
        .collect()
}

/// Largest AM/AM sample, refined by a parabola through it and its neighbours.
pub fn trace_peak(rows: &[HpaRow]) -> Option<Peak> {
    let k = (0..rows.len()).max_by(|&a, &b| rows[a].am_am.total_cmp(&rows[b].am_am))?;
    if k == 0 || k + 1 == rows.len() {
        return Some(Peak {
            u: rows[k].u,
            value: rows[k].am_am,
        });
    }
    let (a, b, c) = (rows[k - 1], rows[k], rows[k + 1]);
    let h = 0.5 * (c.u - a.u);
    let curv = a.am_am - 2.0 * b.am_am + c.am_am;
    if curv >= 0.0 {
        return Some(Peak { u: b.u, value: b.am_am });
    }
    let d = 0.5 * (a.am_am - c.am_am) / curv;
    Some(Peak {
        u: b.u + d * h,
        value: b.am_am - 0.25 * (a.am_am - c.am_am) * d,
    })
}

pub fn hpa_csv(rows: &[HpaRow]) -> String {
    let mut out = String::from("u,am_am,am_pm\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.u, r.am_am, r.am_pm).unwrap();
    }
    out
}

pub fn pd_csv(rows: &[PdRow]) -> String {
    let mut out = String::from("u,a_inv,psi\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.u, r.a_inv, r.psi).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let rows = hpa_trace(&SalehParams::default(), 2.0, 1001).unwrap();
        assert_eq!(rows.len(), 1001);
        assert_eq!(rows[0].u, 0.0);
        assert_eq!(rows[1000].u, 2.0);
        assert!((rows[500].u - 1.0).abs() < 1e-15);
        assert!(hpa_trace(&SalehParams::default(), 2.0, 1).is_err());
        assert!(hpa_trace(&SalehParams::default(), 0.0, 10).is_err());
    }

    #[test]
    fn refined_peak_is_the_saturation_point() {
        let p = SalehParams::default();
        let peak = trace_peak(&hpa_trace(&p, 2.0, 1001).unwrap()).unwrap();
        assert!((peak.u - p.input_sat()).abs() < 1e-5, "{peak:?}");
        assert!((peak.value - p.output_max()).abs() < 1e-8, "{peak:?}");
    }

    #[test]
    fn peak_on_the_boundary() {
        let rows = hpa_trace(&SalehParams::default(), 0.5, 11).unwrap();
        let peak = trace_peak(&rows).unwrap();
        assert_eq!(peak.u, 0.5);
        assert!(trace_peak(&[]).is_none());
    }

    #[test]
    fn pd_trace_clamps_past_saturation() {
        let p = SalehParams::default();
        let rows = pd_trace(&p, 2.0, 101, ClampPolicy::ClampToSaturation).unwrap();
        assert_eq!(rows.last().unwrap().a_inv, p.input_sat());
        assert!(pd_trace(&p, 2.0, 101, ClampPolicy::Reject).is_err());
        assert!(pd_trace(&p, 1.0, 101, ClampPolicy::Reject).is_ok());
    }

    #[test]
    fn csv_headers() {
        let p = SalehParams::default();
        let h = hpa_csv(&hpa_trace(&p, 1.0, 3).unwrap());
        assert!(h.starts_with("u,am_am,am_pm\n"));
        assert_eq!(h.lines().count(), 4);
        let d = pd_csv(&pd_trace(&p, 1.0, 3, ClampPolicy::Reject).unwrap());
        assert!(d.starts_with("u,a_inv,psi\n"));
    }
}
