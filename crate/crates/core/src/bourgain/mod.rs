//! Discrete Fourier restriction norms on `R × Ż_λ`.
//!
//! A [`SpaceTimeField`] stores `û(τ_m, k_n)` on the grid `τ_m = m Δτ`,
//! `Δτ = 2π / T_w`, with the transform convention
//! `û(τ, k) = (2π)⁻¹ ∫∫ e^{−ikx − iτt} u dx dt`. Each spatial column is a
//! sorted sparse list of `(m, value)` pairs, so data concentrated near the
//! dispersion curve `τ ≈ p_λ(k) ~ k⁵` costs nothing for the empty bins in
//! between. Sums over the grid use the Riemann weights `Δτ` in `τ` and
//! `1/λ` in `k`.

mod counting;
mod packets;
mod product;

pub use counting::{counting_measure, counting_scan, CountingReport, CountingSample, CountingScan};
pub use packets::{dyadic_packet, max_shell, packet_ensemble, EnsembleRow, PacketParams};
pub use product::{bilinear_ratio, product, strichartz_ratio};

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::exec::Exec;
use crate::spectral::{bracket, TorusSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    None,
    #[default]
    Hann,
}

impl Taper {
    /// Weight of sample `j` of `len` (periodic window).
    pub fn weight(self, j: usize, len: usize) -> f64 {
        match self {
            Taper::None => 1.0,
            Taper::Hann => 0.5 * (1.0 - (TAU * j as f64 / len as f64).cos()),
        }
    }
}

/// Sparse column: strictly increasing `τ` indices.
pub type Column = Vec<(i64, Complex64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    spec: TorusSpec,
    t_window: f64,
    taper: Taper,
    columns: Vec<Column>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionId {
    D1,
    D2,
    D3,
    Other,
}

impl RegionId {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionId::D1 => "D1",
            RegionId::D2 => "D2",
            RegionId::D3 => "D3",
            RegionId::Other => "OTHER",
        }
    }
}

/// Region of a point with frequency `k` and modulation `τ − p_λ(k)`.
/// Boundary points go to the first listed region that contains them.
pub fn region(lambda: f64, k: f64, modulation: f64) -> RegionId {
    let a = k.abs();
    let mu = modulation.abs();
    let a4 = a.powi(4) / 10.0;
    let a5 = a.powi(5) / 10.0;
    if a >= 1.0 && mu <= a4 {
        RegionId::D1
    } else if a >= 1.0 && mu <= a5 {
        RegionId::D2
    } else if mu >= a5 && a * lambda >= 1.0 - 1e-12 && a <= 1.0 {
        RegionId::D3
    } else {
        RegionId::Other
    }
}

fn normalize(mut col: Column) -> Column {
    col.sort_by_key(|e| e.0);
    let mut out: Column = Vec::with_capacity(col.len());
    for (m, v) in col {
        match out.last_mut() {
            Some(last) if last.0 == m => last.1 += v,
            _ => out.push((m, v)),
        }
    }
    out.retain(|e| e.1.norm_sqr() > 0.0);
    out
}

impl SpaceTimeField {
    pub fn zeros(spec: TorusSpec, t_window: f64) -> Result<Self> {
        if !(t_window > 0.0 && t_window.is_finite()) {
            return Err(Error::invalid("t_window", "must be positive"));
        }
        Ok(SpaceTimeField {
            spec,
            t_window,
            taper: Taper::None,
            columns: vec![Vec::new(); spec.len()],
        })
    }

    /// Field from `(n, m, value)` triples; repeated points accumulate.
    pub fn from_entries(
        spec: TorusSpec,
        t_window: f64,
        entries: impl IntoIterator<Item = (i64, i64, Complex64)>,
    ) -> Result<Self> {
        let mut f = Self::zeros(spec, t_window)?;
        for (n, m, v) in entries {
            if !spec.contains(n) {
                return Err(Error::invalid("n", format!("index {n} outside the lattice")));
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::invalid("value", "non-finite coefficient"));
            }
            f.columns[spec.pos(n)].push((m, v));
        }
        for c in &mut f.columns {
            *c = normalize(std::mem::take(c));
        }
        Ok(f)
    }

    pub(crate) fn from_columns(spec: TorusSpec, t_window: f64, columns: Vec<Column>) -> Self {
        debug_assert_eq!(columns.len(), spec.len());
        SpaceTimeField {
            spec,
            t_window,
            taper: Taper::None,
            columns: columns.into_iter().map(normalize).collect(),
        }
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn t_window(&self) -> f64 {
        self.t_window
    }

    pub fn taper(&self) -> Taper {
        self.taper
    }

    pub fn delta_tau(&self) -> f64 {
        TAU / self.t_window
    }

    pub fn column(&self, n: i64) -> &[(i64, Complex64)] {
        if self.spec.contains(n) {
            &self.columns[self.spec.pos(n)]
        } else {
            &[]
        }
    }

    /// Stored points as `(m, n, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        self.columns.iter().enumerate().flat_map(move |(p, col)| {
            let n = self.spec.index(p);
            col.iter().map(move |&(m, v)| (m, n, v))
        })
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(|c| c.is_empty())
    }

    pub fn tau(&self, m: i64) -> f64 {
        m as f64 * self.delta_tau()
    }

    /// `τ_m − p_λ(k_n)`.
    pub fn modulation(&self, m: i64, n: i64) -> f64 {
        self.tau(m) - self.spec.dispersion_at(n)
    }

    pub fn region_of(&self, m: i64, n: i64) -> RegionId {
        region(self.spec.lambda, self.spec.freq(n), self.modulation(m, n))
    }

    /// Region of every stored point, as `(m, n, region)`.
    pub fn region_map(&self) -> Vec<(i64, i64, RegionId)> {
        self.entries().map(|(m, n, _)| (m, n, self.region_of(m, n))).collect()
    }

    /// Pointwise map `value ↦ f(m, n, value)`.
    pub fn map_entries(&self, f: impl Fn(i64, i64, Complex64) -> Complex64) -> SpaceTimeField {
        let columns = self
            .columns
            .iter()
            .enumerate()
            .map(|(p, col)| {
                let n = self.spec.index(p);
                col.iter().map(|&(m, v)| (m, f(m, n, v))).collect()
            })
            .collect();
        SpaceTimeField {
            columns,
            ..self.clone()
        }
    }

    /// Restriction to one region (sharp projection).
    pub fn project(&self, r: RegionId) -> SpaceTimeField {
        let columns = self
            .columns
            .iter()
            .enumerate()
            .map(|(p, col)| {
                let n = self.spec.index(p);
                col.iter()
                    .copied()
                    .filter(|&(m, _)| self.region_of(m, n) == r)
                    .collect()
            })
            .collect();
        SpaceTimeField {
            columns,
            ..self.clone()
        }
    }

    /// Restriction to `|k| ≥ 1`.
    pub fn high_pass(&self) -> SpaceTimeField {
        let columns = self
            .columns
            .iter()
            .enumerate()
            .map(|(p, col)| {
                if self.spec.freq(self.spec.index(p)).abs() >= 1.0 {
                    col.clone()
                } else {
                    Vec::new()
                }
            })
            .collect();
        SpaceTimeField {
            columns,
            ..self.clone()
        }
    }

    /// Time translation `u(t) ↦ u(t + t0)`: multiplies by `e^{iτ t0}`.
    pub fn time_shift(&self, t0: f64) -> SpaceTimeField {
        let dt = self.delta_tau();
        self.map_entries(|m, _, v| v * Complex64::from_polar(1.0, m as f64 * dt * t0))
    }

    /// `Δτ Σ_m Σ_n |û|²` (unweighted `k` sum).
    pub fn mass(&self) -> f64 {
        self.delta_tau()
            * self
                .columns
                .iter()
                .flat_map(|c| c.iter().map(|e| e.1.norm_sqr()))
                .sum::<f64>()
    }
}

/// Tapered temporal transform of a uniformly sampled trajectory.
///
/// The window is `T_w = J h` for `J` samples of spacing `h`. For each mode
/// the transform is taken of the profile `e^{−ip t} c_n(t)` after shifting
/// by the grid point nearest `p`, so column `n` holds the `J` bins centered
/// on the dispersion curve: `û(τ_m, k) = λ h Σ_j w_j c_n(t_j) e^{−iτ_m t_j}`.
pub fn to_spacetime(traj: &Trajectory, taper: Taper, exec: Exec) -> Result<SpaceTimeField> {
    let h = traj.uniform_step()?;
    let spec = traj.params.spec;
    let j_len = traj.len();
    let t_window = j_len as f64 * h;
    let dtau = TAU / t_window;
    let t0 = traj.times[0];
    let weights: Vec<f64> = (0..j_len).map(|j| taper.weight(j, j_len)).collect();
    let half = (j_len / 2) as i64;
    let columns = exec.map(0..spec.len(), |p| {
        let n = spec.index(p);
        let pk = spec.dispersion_at(n);
        let m0 = (pk / dtau).round() as i64;
        let delta = pk - m0 as f64 * dtau;
        let mut buf: Vec<Complex64> = (0..j_len)
            .map(|j| {
                let t = traj.times[j];
                let c = traj.states[j].get(n);
                // c e^{−i m0 Δτ t}, written through the slowly varying profile
                let prof = c * Complex64::from_polar(1.0, -pk * t);
                prof * Complex64::from_polar(weights[j], delta * t)
            })
            .collect();
        if buf.iter().all(|z| z.norm_sqr() == 0.0) {
            return Vec::new();
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(j_len).process(&mut buf);
        let scale = spec.lambda * h;
        let mut col: Column = Vec::with_capacity(j_len);
        for r in -half..(j_len as i64 - half) {
            let v = buf[r.rem_euclid(j_len as i64) as usize];
            // sample times start at t0: e^{−iτ t0} phase for the bin offset r
            let shift = Complex64::from_polar(1.0, -(r as f64) * dtau * t0);
            col.push((m0 + r, v * shift * scale));
        }
        col
    });
    let mut f = SpaceTimeField::from_columns(spec, t_window, columns);
    f.taper = taper;
    Ok(f)
}

/// Per-column `Δτ ⟨k⟩^{2s} Σ_m ⟨τ_m − p⟩^{2b} |û|²`, optionally restricted to one region.
pub(crate) fn column_xsb_sq(
    spec: &TorusSpec,
    dtau: f64,
    n: i64,
    col: &[(i64, Complex64)],
    s: f64,
    b: f64,
    only: Option<RegionId>,
) -> f64 {
    let k = spec.freq(n);
    let pk = spec.dispersion_at(n);
    let acc: f64 = col
        .iter()
        .filter_map(|&(m, v)| {
            let mu = m as f64 * dtau - pk;
            match only {
                Some(r) if region(spec.lambda, k, mu) != r => None,
                _ => Some(bracket(mu).powf(2.0 * b) * v.norm_sqr()),
            }
        })
        .sum();
    if acc == 0.0 {
        0.0
    } else {
        dtau * bracket(k).powf(2.0 * s) * acc
    }
}

/// Per-column `⟨k⟩^{2s} (Δτ Σ_m |û|)²`.
pub(crate) fn column_y_sq(spec: &TorusSpec, dtau: f64, n: i64, col: &[(i64, Complex64)], s: f64) -> f64 {
    let l1: f64 = dtau * col.iter().map(|e| e.1.norm()).sum::<f64>();
    bracket(spec.freq(n)).powf(2.0 * s) * l1 * l1
}

/// Squared column contributions to the four pieces of the modified norm.
pub(crate) fn column_zs_sq(spec: &TorusSpec, dtau: f64, n: i64, col: &[(i64, Complex64)], s: f64) -> [f64; 4] {
    [
        column_xsb_sq(spec, dtau, n, col, s, 0.75, Some(RegionId::D1)),
        column_xsb_sq(spec, dtau, n, col, -3.0 * s - 1.0, s + 1.0, Some(RegionId::D2)),
        column_xsb_sq(spec, dtau, n, col, -s / 2.0 - 1.0, s / 2.0 + 1.0, Some(RegionId::D3)),
        column_y_sq(spec, dtau, n, col, s),
    ]
}

pub(crate) fn check_zs_range(s: f64) -> Result<()> {
    if (-1.5..=-1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::invalid("s", "the modified norm is defined for -3/2 <= s <= -1"))
    }
}

/// `‖⟨k⟩^s ⟨τ − p(k)⟩^b û‖_{l²_k L²_τ}` with Riemann weights.
pub fn xsb_norm(f: &SpaceTimeField, s: f64, b: f64, exec: Exec) -> f64 {
    let dtau = f.delta_tau();
    let spec = f.spec;
    let sum = exec.sum(0..spec.len(), 0.0, |p| {
        column_xsb_sq(&spec, dtau, spec.index(p), &f.columns[p], s, b, None)
    });
    (sum / spec.lambda).sqrt()
}

/// `‖⟨k⟩^s û‖_{l²_k L¹_τ}`.
pub fn ys_norm(f: &SpaceTimeField, s: f64, exec: Exec) -> f64 {
    let dtau = f.delta_tau();
    let spec = f.spec;
    let sum = exec.sum(0..spec.len(), 0.0, |p| {
        column_y_sq(&spec, dtau, spec.index(p), &f.columns[p], s)
    });
    (sum / spec.lambda).sqrt()
}

/// Pieces of the modified norm, kept apart for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZsParts {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub y: f64,
}

impl ZsParts {
    pub fn total(&self) -> f64 {
        self.d1 + self.d2 + self.d3 + self.y
    }

    pub(crate) fn from_column_sums(lambda: f64, sq: impl IntoIterator<Item = [f64; 4]>) -> Self {
        let mut acc = [0.0; 4];
        for c in sq {
            for (a, v) in acc.iter_mut().zip(c) {
                *a += v;
            }
        }
        let r = |x: f64| (x / lambda).sqrt();
        ZsParts {
            d1: r(acc[0]),
            d2: r(acc[1]),
            d3: r(acc[2]),
            y: r(acc[3]),
        }
    }
}

pub fn zs_parts(f: &SpaceTimeField, s: f64, exec: Exec) -> Result<ZsParts> {
    check_zs_range(s)?;
    let dtau = f.delta_tau();
    let spec = f.spec;
    let cols = exec.map(0..spec.len(), |p| {
        column_zs_sq(&spec, dtau, spec.index(p), &f.columns[p], s)
    });
    Ok(ZsParts::from_column_sums(spec.lambda, cols))
}

/// `‖P_{D1}u‖_{X^{s,3/4}} + ‖P_{D2}u‖_{X^{−3s−1,s+1}} + ‖P_{D3}u‖_{X^{−s/2−1,s/2+1}} + ‖u‖_{Y^s}`.
pub fn zs_norm(f: &SpaceTimeField, s: f64, exec: Exec) -> Result<f64> {
    Ok(zs_parts(f, s, exec)?.total())
}

/// `2π h Σ_j w_j² Σ_n |c_n(t_j)|² λ²`, the value `mass()` takes by Parseval.
pub fn tapered_time_mass(traj: &Trajectory, taper: Taper) -> Result<f64> {
    let h = traj.uniform_step()?;
    let len = traj.len();
    let lam = traj.params.spec.lambda;
    Ok(2.0
        * PI
        * h
        * lam
        * lam
        * traj
            .states
            .iter()
            .enumerate()
            .map(|(j, u)| {
                let w = taper.weight(j, len);
                w * w * u.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()
            })
            .sum::<f64>())
}

#[cfg(test)]
mod tests;
