//! Space-time products and the bilinear and Strichartz probes.
//!
//! `(uv)^(τ, k) = (2π)⁻¹ λ⁻¹ Δτ Σ_{k1} Σ_{τ1} û(τ1, k1) v̂(τ − τ1, k − k1)`. The
//! product of two fields on `|n| ≤ K` lives on `|n| ≤ 2K`; the zero mode is
//! dropped, which is exact after `∂_x`.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{check_zs_range, column_xsb_sq, column_zs_sq, Column, SpaceTimeField, ZsParts};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::spectral::{bracket, TorusSpec};

/// Direct cost above which run convolutions go through the FFT.
const FFT_THRESHOLD: usize = 64 * 64;

/// Maximal stretch of consecutive `τ` indices.
struct Run {
    start: i64,
    vals: Vec<Complex64>,
}

fn runs(col: &[(i64, Complex64)]) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    for &(m, v) in col {
        match out.last_mut() {
            Some(r) if r.start + r.vals.len() as i64 == m => r.vals.push(v),
            _ => out.push(Run {
                start: m,
                vals: vec![v],
            }),
        }
    }
    out
}

struct FftConvolver {
    planner: FftPlanner<f64>,
}

impl FftConvolver {
    fn new() -> Self {
        FftConvolver {
            planner: FftPlanner::new(),
        }
    }

    fn plans(&mut self, len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        (self.planner.plan_fft_forward(len), self.planner.plan_fft_inverse(len))
    }

    /// Linear convolution of two dense sequences.
    fn convolve(&mut self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let out_len = a.len() + b.len() - 1;
        if a.len() * b.len() <= FFT_THRESHOLD {
            let mut out = vec![Complex64::new(0.0, 0.0); out_len];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            return out;
        }
        let len = out_len.next_power_of_two();
        let (fwd, inv) = self.plans(len);
        let mut fa = a.to_vec();
        fa.resize(len, Complex64::new(0.0, 0.0));
        let mut fb = b.to_vec();
        fb.resize(len, Complex64::new(0.0, 0.0));
        fwd.process(&mut fa);
        fwd.process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= y;
        }
        inv.process(&mut fa);
        let norm = 1.0 / len as f64;
        fa.truncate(out_len);
        fa.iter_mut().for_each(|z| *z *= norm);
        fa
    }
}

fn check_compatible(u: &SpaceTimeField, v: &SpaceTimeField) -> Result<()> {
    if u.spec != v.spec {
        return Err(Error::SpecMismatch);
    }
    let rel = (u.t_window - v.t_window).abs() / u.t_window;
    if rel > 1e-12 {
        return Err(Error::invalid("t_window", "factors use different temporal grids"));
    }
    Ok(())
}

/// Output lattice of a product.
fn product_spec(spec: &TorusSpec) -> TorusSpec {
    spec.with_k_max(2 * spec.k_max)
}

/// Column `n` of `uv` on the doubled lattice.
fn product_column(
    u_runs: &[Vec<Run>],
    v_runs: &[Vec<Run>],
    spec: &TorusSpec,
    n: i64,
    scale: f64,
    conv: &mut FftConvolver,
) -> Column {
    let k = spec.k_max as i64;
    let mut pieces: Column = Vec::new();
    let lo = (n - k).max(-k);
    let hi = (n + k).min(k);
    for n1 in lo..=hi {
        let n2 = n - n1;
        if n1 == 0 || n2 == 0 {
            continue;
        }
        for a in &u_runs[spec.pos(n1)] {
            for b in &v_runs[spec.pos(n2)] {
                let c = conv.convolve(&a.vals, &b.vals);
                let start = a.start + b.start;
                pieces.extend(c.into_iter().enumerate().map(|(i, z)| (start + i as i64, z * scale)));
            }
        }
    }
    super::normalize(pieces)
}

struct Prepared {
    spec: TorusSpec,
    out_spec: TorusSpec,
    u_runs: Vec<Vec<Run>>,
    v_runs: Vec<Vec<Run>>,
    scale: f64,
    dtau: f64,
}

fn prepare(u: &SpaceTimeField, v: &SpaceTimeField) -> Result<Prepared> {
    check_compatible(u, v)?;
    let dtau = u.delta_tau();
    Ok(Prepared {
        spec: u.spec,
        out_spec: product_spec(&u.spec),
        u_runs: u.columns.iter().map(|c| runs(c)).collect(),
        v_runs: v.columns.iter().map(|c| runs(c)).collect(),
        scale: dtau / (TAU * u.spec.lambda),
        dtau,
    })
}

/// Space-time product `uv` on the lattice `|n| ≤ 2K`.
pub fn product(u: &SpaceTimeField, v: &SpaceTimeField, exec: Exec) -> Result<SpaceTimeField> {
    let pr = prepare(u, v)?;
    let columns = exec.map(0..pr.out_spec.len(), |p| {
        let mut conv = FftConvolver::new();
        let n = pr.out_spec.index(p);
        product_column(&pr.u_runs, &pr.v_runs, &pr.spec, n, pr.scale, &mut conv)
    });
    Ok(SpaceTimeField::from_columns(pr.out_spec, u.t_window, columns))
}

/// `‖Λ⁻¹∂_x(uv)‖_{Z^s} / (‖u‖_{Z^s} ‖v‖_{Z^s})`, with `Λ⁻¹∂_x` the
/// multiplier `ik ⟨τ − p(k)⟩⁻¹`. Output columns are reduced as they are
/// formed, so the product is never held in full.
pub fn bilinear_ratio(u: &SpaceTimeField, v: &SpaceTimeField, s: f64, exec: Exec) -> Result<f64> {
    check_zs_range(s)?;
    let nu = super::zs_norm(u, s, exec)?;
    let nv = super::zs_norm(v, s, exec)?;
    let denom = nu * nv;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::ZeroDenominator("bilinear ratio: factor with zero modified norm"));
    }
    let pr = prepare(u, v)?;
    let os = pr.out_spec;
    let cols = exec.map(0..os.len(), |p| {
        let mut conv = FftConvolver::new();
        let n = os.index(p);
        let mut col = product_column(&pr.u_runs, &pr.v_runs, &pr.spec, n, pr.scale, &mut conv);
        let k = os.freq(n);
        let pk = os.dispersion_at(n);
        for (m, z) in col.iter_mut() {
            let mu = *m as f64 * pr.dtau - pk;
            *z *= Complex64::new(0.0, k / bracket(mu));
        }
        column_zs_sq(&os, pr.dtau, n, &col, s)
    });
    let num = ZsParts::from_column_sums(os.lambda, cols).total();
    Ok(num / denom)
}

/// `‖P_{|k|≥1}(uv)‖_{L²} / (‖u‖_{X^{0,b}} ‖v‖_{X^{0,b'}})` for
/// `b + b' ≥ 29/40` and `b, b' > 9/40`.
pub fn strichartz_ratio(u: &SpaceTimeField, v: &SpaceTimeField, b: f64, b_prime: f64, exec: Exec) -> Result<f64> {
    if !(b > 9.0 / 40.0 && b_prime > 9.0 / 40.0) {
        return Err(Error::invalid("b", "both exponents must exceed 9/40"));
    }
    if b + b_prime < 29.0 / 40.0 - 1e-15 {
        return Err(Error::invalid("b", "b + b' must be at least 29/40"));
    }
    let denom = super::xsb_norm(u, 0.0, b, exec) * super::xsb_norm(v, 0.0, b_prime, exec);
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::ZeroDenominator("strichartz ratio: factor with zero norm"));
    }
    let pr = prepare(u, v)?;
    let os = pr.out_spec;
    let sum = exec.sum(0..os.len(), 0.0, |p| {
        let n = os.index(p);
        if os.freq(n).abs() < 1.0 {
            return 0.0;
        }
        let mut conv = FftConvolver::new();
        let col = product_column(&pr.u_runs, &pr.v_runs, &pr.spec, n, pr.scale, &mut conv);
        column_xsb_sq(&os, pr.dtau, n, &col, 0.0, 0.0, None)
    });
    Ok((sum / os.lambda).sqrt() / denom)
}
