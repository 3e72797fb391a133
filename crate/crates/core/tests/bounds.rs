use padlin_core::analysis::q_argument;
use padlin_core::*;

fn grid() -> impl Iterator<Item = f64> {
    (0..=140).map(|k| k as f64 / 10.0)
}

#[test]
fn bounds_decrease_outside_the_clipped_region() {
    for n in [1, 2, 4, 8, 16, 32] {
        let p = BerBoundParams::new(n);
        let ber: Vec<f64> = grid().map(|db| ber_bound(&p, db).unwrap()).collect();
        let ser: Vec<f64> = grid().map(|db| ser_bound(&p, db).unwrap()).collect();
        for (curve, ceiling) in [(&ber, 0.5), (&ser, 1.0)] {
            for w in curve.windows(2) {
                assert!(w[1] < w[0] || w[0] == ceiling, "N={n}: {} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn exponential_form_dominates() {
    for k in 0..=20_000 {
        let x = k as f64 * 1e-3;
        assert!(q_exp_bound(x).unwrap() >= q_exact(x), "x={x}");
    }
}

#[test]
fn symbol_and_bit_bounds_share_an_argument() {
    for n in [1, 2, 4, 8, 16] {
        let p = BerBoundParams::new(n);
        for db in grid() {
            let ebno = 10f64.powf(db / 10.0);
            let esno = ebno * (2.0 + (n as f64).log2());
            let from_es = (p.d_min_sq * esno).sqrt();
            let a = q_argument(&p, db);
            assert!((a - from_es).abs() <= 1e-14 * a, "N={n}, {db} dB");
        }
    }
}

#[test]
fn clipping_limits() {
    for n in [4, 16, 64] {
        let p = BerBoundParams::new(n);
        assert!(ber_bound(&p, -10.0).unwrap() <= 0.5);
        assert!(ser_bound(&p, -10.0).unwrap() <= 1.0);
    }
}
