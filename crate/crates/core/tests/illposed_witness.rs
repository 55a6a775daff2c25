use kawahara_core::evolution::picard_term;
use kawahara_core::illposed::{a2_closed, a3_closed, calibrate, inflation_scan, phi_n, WitnessSpec};
use kawahara_core::{Beta, Exec};

const NS: [i64; 6] = [8, 16, 32, 64, 128, 256];

fn slope(s: f64) -> f64 {
    inflation_scan(&WitnessSpec::new(s, 0.1, NS.to_vec()), Exec::Parallel)
        .unwrap()
        .slope
}

#[test]
fn slope_increases_as_s_decreases() {
    let slopes: Vec<f64> = [-1.2, -1.5, -1.8, -2.1].iter().map(|&s| slope(s)).collect();
    assert!(slopes.windows(2).all(|w| w[1] > w[0]), "{slopes:?}");
    assert!(slopes[1].abs() < 0.1, "critical slope {}", slopes[1]);
}

#[test]
fn closed_forms_match_quadrature_on_phi4() {
    let u = phi_n(4, -2.0, 12, Beta::Plus).unwrap();
    let cal = calibrate(&u, 0.1, 1 << 16).unwrap();
    assert!(!cal.discrepancy, "{cal:?}");
    assert!(cal.rel_err2 <= 1e-6 && cal.rel_err3 <= 1e-6, "{cal:?}");
}

#[test]
fn coarse_quadrature_is_reported_not_trusted() {
    // Phases near 2.5·10⁴ rad make 256 Simpson panels far too coarse.
    let u = phi_n(4, -2.0, 12, Beta::Plus).unwrap();
    let closed = a2_closed(&u, 0.1).unwrap();
    let coarse = picard_term(&u, 2, 0.1, 256).unwrap();
    let rel = (&closed - &coarse).l2_norm() / closed.l2_norm();
    eprintln!("A2 relative error at 256 panels: {rel:e}");
    assert!(rel > 1e-6);
}

#[test]
fn witness_reality_on_generic_data() {
    let u = phi_n(3, -1.5, 10, Beta::Minus).unwrap();
    let w = &u + &phi_n(1, 0.0, 10, Beta::Minus).unwrap();
    assert!(a2_closed(&w, 0.2).unwrap().is_real());
    assert!(a3_closed(&w, 0.2).unwrap().is_real());
}
