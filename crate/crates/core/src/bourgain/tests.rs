use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::evolution::{integrate, EvolutionParams};
use crate::rng::CounterRng;
use crate::spectral::{Beta, SpectralField};

const SEQ: Exec = Exec::Sequential;

fn unit(k: usize) -> TorusSpec {
    TorusSpec::unit(k, Beta::Plus)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Random sparse field with a few bands per column.
fn random_field(spec: TorusSpec, t_window: f64, seed: u64, band: i64) -> SpaceTimeField {
    let mut rng = CounterRng::new(seed);
    let dtau = TAU / t_window;
    let mut e = Vec::new();
    for n in spec.indices() {
        if rng.uniform() < 0.4 {
            continue;
        }
        let m0 = (spec.dispersion_at(n) / dtau).round() as i64 + rng.int_in(-3 * band, 3 * band);
        for m in m0 - band..=m0 + band {
            e.push((n, m, Complex64::new(rng.normal(), rng.normal())));
        }
    }
    SpaceTimeField::from_entries(spec, t_window, e).unwrap()
}

/// `O(nnz²)` product straight from the definition.
fn brute_product(u: &SpaceTimeField, v: &SpaceTimeField) -> SpaceTimeField {
    let spec = u.spec().with_k_max(2 * u.spec().k_max);
    let scale = u.delta_tau() / (TAU * u.spec().lambda);
    let mut e = Vec::new();
    for (m1, n1, a) in u.entries() {
        for (m2, n2, b) in v.entries() {
            if n1 + n2 != 0 {
                e.push((n1 + n2, m1 + m2, a * b * scale));
            }
        }
    }
    SpaceTimeField::from_entries(spec, u.t_window(), e).unwrap()
}

fn max_diff(a: &SpaceTimeField, b: &SpaceTimeField) -> f64 {
    let mut worst: f64 = 0.0;
    for (m, n, x) in a.entries() {
        let y = b
            .column(n)
            .iter()
            .find(|e| e.0 == m)
            .map_or(Complex64::new(0.0, 0.0), |e| e.1);
        worst = worst.max((x - y).norm());
    }
    for (m, n, y) in b.entries() {
        if !a.column(n).iter().any(|e| e.0 == m) {
            worst = worst.max(y.norm());
        }
    }
    worst
}

#[test]
fn zero_trajectory_gives_zero_field() {
    let spec = unit(8);
    let traj = integrate(&SpectralField::zeros(spec), &EvolutionParams::new(spec, 1e-3, 0.05)).unwrap();
    let f = to_spacetime(&traj, Taper::Hann, SEQ).unwrap();
    assert!(f.is_zero());
    assert_eq!(xsb_norm(&f, -1.0, 0.5, SEQ), 0.0);
    assert_eq!(zs_norm(&f, -1.0, SEQ).unwrap(), 0.0);
}

#[test]
fn linear_mode_lands_in_one_bin() {
    // p(1) = 2 with β = 1; a window of length 2π makes Δτ = 1 and p(1) a bin
    let spec = unit(4);
    let j = 64;
    let h = TAU / j as f64;
    let u0 = SpectralField::from_fn(spec, |n| {
        if n == 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let params = EvolutionParams::new(spec, h, h * (j - 1) as f64).linear_only();
    let traj = integrate(&u0, &params).unwrap();
    assert_eq!(traj.len(), j);
    let f = to_spacetime(&traj, Taper::None, SEQ).unwrap();
    assert!((f.t_window() - TAU).abs() < 1e-12);
    let col = f.column(1);
    let total: f64 = col.iter().map(|e| e.1.norm_sqr()).sum();
    let at_p: f64 = col.iter().filter(|e| e.0 == 2).map(|e| e.1.norm_sqr()).sum();
    assert!(at_p / total >= 0.99, "fraction {}", at_p / total);
    // and the value is λ T_w exactly
    let v = col.iter().find(|e| e.0 == 2).unwrap().1;
    assert!((v - Complex64::new(TAU, 0.0)).norm() < 1e-9, "{v}");
}

#[test]
fn parseval_with_and_without_taper() {
    let spec = TorusSpec::new(2.0, 8, Beta::Minus).unwrap();
    let u0 = SpectralField::cosines(spec, &[(1, 1.0), (3, 0.4)]);
    let params = EvolutionParams::new(spec, 1e-3, 0.2).with_record_every(4);
    let traj = integrate(&u0, &params).unwrap();
    for taper in [Taper::None, Taper::Hann] {
        let f = to_spacetime(&traj, taper, SEQ).unwrap();
        let expect = tapered_time_mass(&traj, taper).unwrap();
        assert!(rel(f.mass(), expect) < 1e-10, "{taper:?}: {} vs {}", f.mass(), expect);
    }
    // Hann keeps 3/8 of the untapered mass for slowly varying amplitudes
    let plain = tapered_time_mass(&traj, Taper::None).unwrap();
    let hann = tapered_time_mass(&traj, Taper::Hann).unwrap();
    assert!((hann / plain - 0.375).abs() < 0.02, "{}", hann / plain);
}

#[test]
fn rejects_non_uniform_sampling() {
    let spec = unit(4);
    let u0 = SpectralField::cosines(spec, &[(1, 1.0)]);
    let mut traj = integrate(&u0, &EvolutionParams::new(spec, 1e-2, 0.1)).unwrap();
    traj.times[3] += 1e-4;
    assert!(to_spacetime(&traj, Taper::Hann, SEQ).is_err());
}

#[test]
fn single_delta_norms() {
    let spec = TorusSpec::new(2.0, 8, Beta::Plus).unwrap();
    let tw = 3.0;
    let (n, m) = (5, 40);
    let f = SpaceTimeField::from_entries(spec, tw, [(n, m, Complex64::new(1.0, 0.0))]).unwrap();
    let dtau = TAU / tw;
    let k = 2.5;
    let mu = m as f64 * dtau - spec.dispersion(k);
    for (s, b) in [(0.0, 0.0), (-1.0, 0.5), (-1.5, 0.75), (2.0, -0.3)] {
        let expect = bracket(k).powf(s) * bracket(mu).powf(b) * (dtau / 2.0).sqrt();
        assert!(rel(xsb_norm(&f, s, b, SEQ), expect) < 1e-13);
    }
    let y = ys_norm(&f, -1.0, SEQ);
    assert!(rel(y, bracket(k).powf(-1.0) * dtau / 2f64.sqrt()) < 1e-13);
}

#[test]
fn zs_range_is_enforced() {
    let f = random_field(unit(8), 2.0, 1, 2);
    assert!(zs_norm(&f, -0.9, SEQ).is_err());
    assert!(zs_norm(&f, -1.6, SEQ).is_err());
    assert!(zs_norm(&f, -1.5, SEQ).is_ok());
    assert!(zs_norm(&f, -1.0, SEQ).is_ok());
}

#[test]
fn region_boundaries() {
    // k = 2: D1 up to 1.6, D2 up to 3.2
    assert_eq!(region(1.0, 2.0, 1.6), RegionId::D1);
    assert_eq!(region(1.0, 2.0, -1.6), RegionId::D1);
    assert_eq!(region(1.0, 2.0, 1.61), RegionId::D2);
    assert_eq!(region(1.0, 2.0, 3.2), RegionId::D2);
    assert_eq!(region(1.0, 2.0, 3.21), RegionId::Other);
    // k = 1: D2 is empty, the boundary 0.1 goes to D1 and beyond it to D3
    assert_eq!(region(1.0, 1.0, 0.1), RegionId::D1);
    assert_eq!(region(1.0, 1.0, 0.2), RegionId::D3);
    // low frequencies exist only for λ > 1
    assert_eq!(region(2.0, 0.5, 0.5f64.powi(5) / 10.0), RegionId::D3);
    assert_eq!(region(2.0, 0.5, 0.001), RegionId::Other);
    assert_eq!(region(4.0, 0.25, 1.0), RegionId::D3);
}

proptest! {
    #[test]
    fn regions_partition(n in 1i64..200, lam in 1u32..5, mu in -1e6f64..1e6) {
        let lam = f64::from(lam);
        let k = n as f64 / lam;
        let r = region(lam, k, mu);
        let a = k.abs();
        let m = mu.abs();
        let in1 = a >= 1.0 && m <= a.powi(4) / 10.0;
        let in2 = a >= 1.0 && m >= a.powi(4) / 10.0 && m <= a.powi(5) / 10.0;
        let in3 = m >= a.powi(5) / 10.0 && a >= 1.0 / lam && a <= 1.0;
        let expect = if in1 { RegionId::D1 } else if in2 { RegionId::D2 } else if in3 { RegionId::D3 } else { RegionId::Other };
        prop_assert_eq!(r, expect);
        prop_assert_eq!(region(lam, -k, -mu), r);
    }

    #[test]
    fn xsb_increases_in_b(seed in 0u64..1000, b in -1.0f64..1.0, db in 0.01f64..1.0) {
        let spec = unit(6);
        let f = random_field(spec, 1.0, seed, 3);
        // keep only bins with modulation at least 1
        let f = SpaceTimeField::from_entries(spec, 1.0,
            f.entries().filter(|&(m, n, _)| f.modulation(m, n).abs() >= 1.0).map(|(m, n, v)| (n, m, v))).unwrap();
        prop_assume!(!f.is_zero());
        prop_assert!(xsb_norm(&f, -1.0, b + db, SEQ) > xsb_norm(&f, -1.0, b, SEQ));
    }
}

#[test]
fn policies_agree() {
    let f = random_field(TorusSpec::new(3.0, 12, Beta::Minus).unwrap(), 0.7, 5, 4);
    let g = random_field(TorusSpec::new(3.0, 12, Beta::Minus).unwrap(), 0.7, 6, 4);
    assert_eq!(xsb_norm(&f, -1.2, 0.6, SEQ), xsb_norm(&f, -1.2, 0.6, Exec::Parallel));
    assert_eq!(
        zs_norm(&f, -1.2, SEQ).unwrap(),
        zs_norm(&f, -1.2, Exec::Parallel).unwrap()
    );
    assert_eq!(
        bilinear_ratio(&f, &g, -1.2, SEQ).unwrap(),
        bilinear_ratio(&f, &g, -1.2, Exec::Parallel).unwrap()
    );
}

#[test]
fn embedding_spot_check() {
    // the constants are not pinned; record them and require finiteness
    let mut lower: f64 = 0.0;
    let mut upper: f64 = 0.0;
    for seed in 0..100 {
        let f = random_field(TorusSpec::new(2.0, 16, Beta::Plus).unwrap(), 0.5, seed, 8);
        let z = zs_norm(&f, -1.25, SEQ).unwrap();
        upper = upper.max(z / xsb_norm(&f, -1.25, 0.75, SEQ));
        lower = lower.max(xsb_norm(&f, -1.25, 0.25, SEQ) / z);
    }
    eprintln!("embedding constants over 100 draws: X^(s,1/4)/Z^s <= {lower:.3}, Z^s/X^(s,3/4) <= {upper:.3}");
    assert!(lower.is_finite() && upper.is_finite() && lower > 0.0 && upper > 0.0);
}

#[test]
fn d1_packet_sees_only_its_pieces() {
    let spec = unit(16);
    let mut rng = CounterRng::new(3);
    let pp = PacketParams {
        shell: 2,
        block: 1,
        width: 3,
        delta_tau: 0.25,
    };
    let f = dyadic_packet(&spec, &pp, &mut rng).unwrap();
    assert!(f.region_map().iter().all(|r| r.2 == RegionId::D1));
    let parts = zs_parts(&f, -1.5, SEQ).unwrap();
    assert_eq!(parts.d2, 0.0);
    assert_eq!(parts.d3, 0.0);
    let expect = xsb_norm(&f, -1.5, 0.75, SEQ) + ys_norm(&f, -1.5, SEQ);
    assert!(rel(parts.total(), expect) < 1e-14);
}

#[test]
fn packets_respect_shell_and_block() {
    let spec = TorusSpec::new(2.0, 32, Beta::Minus).unwrap();
    assert_eq!(max_shell(&spec), Some(3));
    let mut rng = CounterRng::new(11);
    for shell in 0..=3 {
        for block in 0..=4 {
            let pp = PacketParams {
                shell,
                block,
                width: 4,
                delta_tau: 0.5,
            };
            let f = dyadic_packet(&spec, &pp, &mut rng).unwrap();
            assert!(!f.is_zero());
            let m_big = f64::from(1u32 << block);
            for (m, n, _) in f.entries() {
                let k = spec.freq(n).abs();
                assert!(k >= f64::from(1u32 << shell) && k < f64::from(2u32 << shell));
                let w = bracket(f.modulation(m, n));
                assert!(w >= m_big && w < 2.0 * m_big);
            }
        }
    }
    let bad = PacketParams {
        shell: 4,
        block: 0,
        width: 1,
        delta_tau: 1.0,
    };
    assert!(dyadic_packet(&spec, &bad, &mut rng).is_err());
}

#[test]
fn product_matches_definition() {
    let spec = TorusSpec::new(2.0, 6, Beta::Plus).unwrap();
    let u = random_field(spec, 1.5, 21, 3);
    let v = random_field(spec, 1.5, 22, 2);
    let fast = product(&u, &v, SEQ).unwrap();
    let slow = brute_product(&u, &v);
    assert!(max_diff(&fast, &slow) < 1e-12);
}

#[test]
fn fft_convolution_path_matches_definition() {
    // bands of 161 points push every run pair through the FFT branch
    let spec = unit(3);
    let u = random_field(spec, 0.9, 31, 80);
    let v = random_field(spec, 0.9, 32, 80);
    let fast = product(&u, &v, SEQ).unwrap();
    let slow = brute_product(&u, &v);
    let scale = slow.entries().map(|e| e.2.norm()).fold(0.0, f64::max);
    assert!(max_diff(&fast, &slow) < 1e-12 * scale);
}

#[test]
fn product_of_exponentials() {
    // û = δ at (m1, n1), v̂ = δ at (m2, n2) ⇒ uv has one entry of size Δτ/(2πλ)
    let spec = TorusSpec::new(2.0, 4, Beta::Plus).unwrap();
    let one = Complex64::new(1.0, 0.0);
    let u = SpaceTimeField::from_entries(spec, 2.0, [(1, 7, one)]).unwrap();
    let v = SpaceTimeField::from_entries(spec, 2.0, [(3, -2, one)]).unwrap();
    let w = product(&u, &v, SEQ).unwrap();
    assert_eq!(w.nnz(), 1);
    let (m, n, z) = w.entries().next().unwrap();
    assert_eq!((m, n), (5, 4));
    assert!((z.re - PI / (TAU * 2.0)).abs() < 1e-15 && z.im == 0.0);
}

#[test]
fn bilinear_ratio_edge_cases() {
    let spec = unit(8);
    let u = random_field(spec, 1.0, 41, 3);
    let zero = SpaceTimeField::zeros(spec, 1.0).unwrap();
    assert!(matches!(
        bilinear_ratio(&u, &zero, -1.5, SEQ),
        Err(Error::ZeroDenominator(_))
    ));
    assert!(bilinear_ratio(&u, &u, -0.5, SEQ).is_err());
    let other = random_field(unit(8), 2.0, 41, 3);
    assert!(bilinear_ratio(&u, &other, -1.5, SEQ).is_err());
    assert!(bilinear_ratio(&u, &u, -1.5, SEQ).unwrap().is_finite());
}

#[test]
fn ratios_are_invariant_under_time_translation() {
    let spec = TorusSpec::new(2.0, 8, Beta::Minus).unwrap();
    let u = random_field(spec, 0.8, 51, 4);
    let v = random_field(spec, 0.8, 52, 4);
    let r0 = bilinear_ratio(&u, &v, -1.5, SEQ).unwrap();
    let s0 = strichartz_ratio(&u, &v, 0.5, 0.5, SEQ).unwrap();
    for t0 in [0.3, -2.7, 11.0] {
        let (us, vs) = (u.time_shift(t0), v.time_shift(t0));
        assert!(rel(bilinear_ratio(&us, &vs, -1.5, SEQ).unwrap(), r0) < 1e-10);
        assert!(rel(strichartz_ratio(&us, &vs, 0.5, 0.5, SEQ).unwrap(), s0) < 1e-10);
    }
}

#[test]
fn linear_solutions_have_finite_bilinear_ratio() {
    let spec = unit(32);
    let params = EvolutionParams::new(spec, 1e-3, 0.256)
        .with_record_every(2)
        .linear_only();
    let u = to_spacetime(
        &integrate(&SpectralField::cosines(spec, &[(1, 1.0), (5, 0.5), (20, 0.1)]), &params).unwrap(),
        Taper::Hann,
        SEQ,
    )
    .unwrap();
    let v = to_spacetime(
        &integrate(&SpectralField::cosines(spec, &[(2, 1.0), (9, 0.3), (31, 0.2)]), &params).unwrap(),
        Taper::Hann,
        SEQ,
    )
    .unwrap();
    let r = bilinear_ratio(&u, &v, -1.5, Exec::Parallel).unwrap();
    eprintln!("bilinear ratio, linear data K=32: {r:.6e}");
    assert!(r.is_finite() && r > 0.0);
}

#[test]
fn strichartz_parameters_and_zero() {
    let spec = unit(8);
    let u = random_field(spec, 1.0, 61, 3);
    let zero = SpaceTimeField::zeros(spec, 1.0).unwrap();
    assert_eq!(strichartz_ratio(&zero, &u, 0.5, 0.5, SEQ).ok(), None);
    assert!(strichartz_ratio(&u, &u, 0.2, 0.6, SEQ).is_err());
    assert!(strichartz_ratio(&u, &u, 0.3, 0.4, SEQ).is_err());
    assert!(strichartz_ratio(&u, &u, 0.3625, 0.3625, SEQ).is_ok());
}

/// Index-level identity behind the enumeration: with `d = k1 − k2`,
/// `p(k1) + p(k2) − 2p(k/2) = (5/16) k d² (d² + 2k² + 12β/(5λ²))`.
#[test]
fn pair_phase_factorization() {
    for (lam, beta) in [(1.0, Beta::Plus), (4.0, Beta::Minus), (3.0, Beta::Plus)] {
        for n in [-9i64, -4, 3, 7, 12] {
            for n1 in -15i64..=15 {
                let k = n as f64 / lam;
                let d = (2 * n1 - n) as f64 / lam;
                let lhs = dispersion(lam, beta, n1 as f64 / lam) + dispersion(lam, beta, (n - n1) as f64 / lam)
                    - 2.0 * dispersion(lam, beta, k / 2.0);
                let rhs = 5.0 / 16.0 * k * d * d * (d * d + 2.0 * k * k + 12.0 * beta.value() / (5.0 * lam * lam));
                assert!(
                    (lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()),
                    "{lam} {n} {n1}: {lhs} vs {rhs}"
                );
            }
        }
    }
}

use crate::spectral::dispersion;

#[test]
fn counting_measure_matches_wide_enumeration() {
    for (lam, beta) in [(1.0, Beta::Minus), (4.0, Beta::Minus), (2.0, Beta::Plus)] {
        for n in [-8i64, -4, 4, 5, 11] {
            if (n as f64 / lam).abs() < 1.0 {
                continue;
            }
            for off in [-40.0, -3.0, 0.0, 0.7, 5.0, 300.0] {
                let tau = 2.0 * dispersion(lam, beta, n as f64 / (2.0 * lam)) + off;
                for (m1, m2) in [(1.0, 1.0), (8.0, 2.0), (64.0, 64.0), (256.0, 1.0)] {
                    let fast = counting_measure(lam, beta, n, tau, m1, m2).unwrap();
                    let mut slow = 0.0;
                    for n1 in -400i64..=400 {
                        let p1 = dispersion(lam, beta, n1 as f64 / lam);
                        let p2 = dispersion(lam, beta, (n - n1) as f64 / lam);
                        let lo = (p1 - m1).max(tau - p2 - m2);
                        let hi = (p1 + m1).min(tau - p2 + m2);
                        slow += (hi - lo).max(0.0);
                    }
                    assert!(
                        (fast - slow).abs() < 1e-9 * (1.0 + slow),
                        "{lam} {n} {off} {m1} {m2}: {fast} vs {slow}"
                    );
                }
            }
        }
    }
}

#[test]
fn counting_rejects_low_frequency() {
    assert!(counting_measure(4.0, Beta::Plus, 3, 0.0, 1.0, 1.0).is_err());
    assert!(counting_measure(1.0, Beta::Plus, 3, 0.0, 0.0, 1.0).is_err());
}
