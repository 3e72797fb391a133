use padlin_core::predistort::{adapt_lut, am_am_inverse, build_lut_over, cascade_pd_hpa};
use padlin_core::saleh::{am_am, apply_hpa};
use padlin_core::*;
use proptest::prelude::*;

fn both_forms() -> [SalehParams; 2] {
    let c = SalehParams::default();
    [
        c,
        SalehParams {
            pm_form: PmForm::PaperLinear,
            ..c
        },
    ]
}

#[test]
fn saturation_form_matches_rational_form() {
    let p = SalehParams::default();
    let a_s2 = p.input_sat().powi(2);
    let n = 10_000;
    for k in 0..n {
        let u = 4.0 * p.input_sat() * k as f64 / (n - 1) as f64;
        let direct = am_am(u, &p).unwrap();
        let alt = a_s2 * p.alpha_a * u / (a_s2 + u * u);
        assert!((direct - alt).abs() <= 1e-14 * direct.abs().max(f64::MIN_POSITIVE), "u={u}");
    }
}

#[test]
fn am_am_rises_then_falls() {
    let p = SalehParams::default();
    let a_s = p.input_sat();
    let n = 20_000;
    let grid: Vec<f64> = (0..=n).map(|k| 3.0 * a_s * k as f64 / n as f64).collect();
    for w in grid.windows(2) {
        let (a, b) = (am_am(w[0], &p).unwrap(), am_am(w[1], &p).unwrap());
        if w[1] <= a_s {
            assert!(b > a, "not increasing at {}", w[0]);
        } else if w[0] >= a_s {
            assert!(b < a, "not decreasing at {}", w[0]);
        }
    }
}

#[test]
fn round_trip_below_saturation() {
    for p in both_forms() {
        let top = 0.999 * p.input_sat();
        for k in 0..=10_000 {
            let x = top * k as f64 / 10_000.0;
            let back = am_am_inverse(am_am(x, &p).unwrap(), &p, ClampPolicy::Reject).unwrap();
            assert!((back - x).abs() <= 1e-10, "x={x}");
        }
    }
}

#[test]
fn inverse_identity_is_relative() {
    let p = SalehParams::default();
    let top = 0.999 * p.output_max();
    for k in 0..10_000 {
        let u = 1e-6 + (top - 1e-6) * k as f64 / 9_999.0;
        let y = am_am(am_am_inverse(u, &p, ClampPolicy::Reject).unwrap(), &p).unwrap();
        assert!((y - u).abs() <= 1e-10 * u, "u={u}");
    }
}

#[test]
fn adapted_table_matches_analytic_table() {
    let p = SalehParams::default();
    let top = 0.95 * p.output_max();
    let start = LutTable::constant(top, 512, Complex64::new(1.0, 0.0)).unwrap();
    let r = adapt_lut(&start, |u| p.response(u), 200, 0.3).unwrap();
    let exact = build_lut_over(&p, 512, top).unwrap();
    for (k, (a, b)) in r.table.gains().iter().zip(exact.gains()).enumerate() {
        assert!((a - b).norm() < 1e-5, "entry {k}: {a} vs {b}");
    }
}

fn envelope(moduli: &[f64], phases: &[f64]) -> ComplexEnvelope {
    let mut samples: Vec<Complex64> = moduli
        .iter()
        .zip(phases)
        .map(|(&r, &t)| Complex64::from_polar(r, t))
        .collect();
    samples.truncate(samples.len() / 2 * 2);
    ComplexEnvelope::new(samples, 2).unwrap()
}

proptest! {
    #[test]
    fn hpa_is_phase_covariant(
        moduli in prop::collection::vec(0.0f64..3.0, 2..64),
        phases in prop::collection::vec(-3.2f64..3.2, 64),
        phi in -3.2f64..3.2,
        ibo in 0.0f64..12.0,
    ) {
        let x = envelope(&moduli, &phases);
        let op = OperatingPoint::unit_source(SalehParams::default(), ibo).unwrap();
        let a = apply_hpa(&x.rotate(phi), &op);
        let b = apply_hpa(&x, &op).rotate(phi);
        for (u, v) in a.samples().iter().zip(b.samples()) {
            prop_assert!((u - v).norm() <= 1e-12 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn output_never_exceeds_ceiling(
        moduli in prop::collection::vec(0.0f64..100.0, 2..64),
        phases in prop::collection::vec(-3.2f64..3.2, 64),
        gain in 0.01f64..50.0,
    ) {
        let p = SalehParams::default();
        let x = envelope(&moduli, &phases);
        let op = OperatingPoint::with_gain(p, gain, 1.0).unwrap();
        prop_assert!(apply_hpa(&x, &op).max_modulus() <= p.output_max() * (1.0 + 1e-15));
    }

    #[test]
    fn constant_modulus_stays_constant(r in 0.0f64..3.0, phases in prop::collection::vec(-3.2f64..3.2, 64), ibo in 0.0f64..12.0) {
        let x = envelope(&[r; 64], &phases);
        let op = OperatingPoint::unit_source(SalehParams::default(), ibo).unwrap();
        let y: Vec<f64> = apply_hpa(&x, &op).moduli().collect();
        for m in &y {
            prop_assert!((m - y[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn cascade_is_flat_below_saturation(
        frac in prop::collection::vec(0.0f64..0.999, 2..64),
        phases in prop::collection::vec(-3.2f64..3.2, 64),
        ibo in 0.0f64..12.0,
        linear_pm in any::<bool>(),
    ) {
        let p = both_forms()[linear_pm as usize];
        let moduli: Vec<f64> = frac.iter().map(|f| f * p.output_max()).collect();
        let x = envelope(&moduli, &phases);
        let op = OperatingPoint::from_ibo(p, ibo, 0.5).unwrap();
        let y = cascade_pd_hpa(&x, &PredistorterSpec::analytic(p, ClampPolicy::Reject), &op).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-9);
            if a.norm() > 1e-9 {
                prop_assert!((b / a).arg().abs() <= 1e-9);
            }
        }
    }
}
