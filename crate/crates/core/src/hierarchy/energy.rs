use std::f64::consts::TAU;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::Serialize;

use super::{Exclusion, ExclusionLog, ExclusionReason, Guarded, HierarchyContext, MultiplierGrid};
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::exec::Exec;
use crate::spectral::{Convolver, SpectralField};

/// Largest `K` accepted by the level-3 derivative check.
pub const LEVEL3_K_CAP: usize = 48;
/// Largest `K` accepted by the level-4 derivative check.
pub const LEVEL4_K_CAP: usize = 16;

/// Relative tolerance on the imaginary part of an energy of real data.
const IMAG_TOL: f64 = 1e-10;

/// Precomputed `σ_3` / `σ_4` tables and the functionals built on them.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    ctx: HierarchyContext,
    exec: Exec,
    max_level: u8,
    sigma3: Option<MultiplierGrid>,
    sigma4: Option<MultiplierGrid>,
    exclusions: ExclusionLog,
}

fn guarded_grid(
    l: usize,
    ctx: &HierarchyContext,
    exec: Exec,
    f: impl Fn(&[i64]) -> Guarded + Sync + Send,
    log: &Mutex<Vec<Exclusion>>,
) -> MultiplierGrid {
    let numerator_floor = 1e-12;
    MultiplierGrid::build(l, ctx.spec.k_max, exec, |idx| {
        let g = f(idx);
        if g.resonant {
            let reason = if g.numerator.norm() <= numerator_floor {
                ExclusionReason::ResonantZeroNumerator
            } else {
                ExclusionReason::ResonantNonzeroNumerator
            };
            log.lock().expect("exclusion log").push(Exclusion {
                idx: idx.to_vec(),
                reason,
            });
        }
        g.value
    })
}

impl Hierarchy {
    /// Tables needed for energies up to `max_level` (2, 3 or 4).
    pub fn new(ctx: HierarchyContext, max_level: u8, exec: Exec) -> Result<Self> {
        if !(2..=4).contains(&max_level) {
            return Err(Error::invalid("level", "must be 2, 3 or 4"));
        }
        // Pair sums must stay inside the tables.
        if ctx.pair_cap.is_none_or(|c| c > ctx.spec.k_max as i64) {
            return Err(Error::invalid("pair_cap", "tables need a cap of at most K"));
        }
        let log = Mutex::new(Vec::new());
        let sigma3 = (max_level >= 3).then(|| guarded_grid(3, &ctx, exec, |i| ctx.sigma3(i), &log));
        let sigma4 = if max_level >= 4 {
            let s3 = sigma3.as_ref().expect("σ_3 table");
            // M_4 from the σ_3 table; identical to ctx.m4 on the lattice.
            let m4 = |idx: &[i64]| m4_from_table(&ctx, s3, idx);
            Some(guarded_grid(4, &ctx, exec, |idx| ctx.guarded(idx, m4(idx)), &log))
        } else {
            None
        };
        let exclusions = ExclusionLog::from_raw(log.into_inner().expect("exclusion log"));
        for grid in sigma3.iter().chain(sigma4.iter()) {
            if !grid.all_finite() {
                return Err(Error::Invariant {
                    name: "finite_multiplier",
                    detail: format!("non-finite entry in the arity-{} table", grid.arity()),
                });
            }
        }
        Ok(Hierarchy {
            ctx,
            exec,
            max_level,
            sigma3,
            sigma4,
            exclusions,
        })
    }

    pub fn context(&self) -> &HierarchyContext {
        &self.ctx
    }

    pub fn max_level(&self) -> u8 {
        self.max_level
    }

    pub fn exclusions(&self) -> &ExclusionLog {
        &self.exclusions
    }

    pub fn sigma3_grid(&self) -> Option<&MultiplierGrid> {
        self.sigma3.as_ref()
    }

    pub fn sigma4_grid(&self) -> Option<&MultiplierGrid> {
        self.sigma4.as_ref()
    }

    fn check_field(&self, u: &SpectralField) -> Result<()> {
        if u.spec() != &self.ctx.spec {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    fn need(&self, level: u8) -> Result<()> {
        if level > self.max_level {
            return Err(Error::invalid(
                "level",
                format!("tables built only up to level {}", self.max_level),
            ));
        }
        Ok(())
    }

    fn norm_factor(&self) -> f64 {
        TAU * self.ctx.spec.lambda
    }

    fn square(&self, u: &SpectralField) -> SpectralField {
        Convolver::new(self.ctx.spec).square(u)
    }

    /// `E^(2) = ‖Iu‖²_{L²}`.
    pub fn e2(&self, u: &SpectralField) -> Result<f64> {
        self.check_field(u)?;
        Ok(u.i_norm_sq(&self.ctx.im))
    }

    /// `Λ_3(σ_3; u, u, u)`.
    pub fn lambda3_sigma3(&self, u: &SpectralField) -> Result<Complex64> {
        self.check_field(u)?;
        self.need(3)?;
        let grid = self.sigma3.as_ref().expect("σ_3 table");
        let spec = self.ctx.spec;
        let k = spec.k_max as i64;
        let width = 2 * spec.k_max + 1;
        let sum = self.exec.sum(0..width, Complex64::default(), |p| {
            let n1 = p as i64 - k;
            if n1 == 0 {
                return Complex64::default();
            }
            let c1 = u.get(n1);
            let mut acc = Complex64::default();
            for n2 in -k..=k {
                let n3 = -n1 - n2;
                if n2 == 0 || !spec.contains(n3) {
                    continue;
                }
                acc += grid.get(&[n1, n2]) * u.get(n2) * u.get(n3);
            }
            acc * c1
        });
        Ok(sum * self.norm_factor())
    }

    /// `Λ_4(σ_4; u, u, u, u)`.
    pub fn lambda4_sigma4(&self, u: &SpectralField) -> Result<Complex64> {
        self.check_field(u)?;
        self.need(4)?;
        let grid = self.sigma4.as_ref().expect("σ_4 table");
        let spec = self.ctx.spec;
        let k = spec.k_max as i64;
        let width = 2 * spec.k_max + 1;
        let sum = self.exec.sum(0..width, Complex64::default(), |p| {
            let n1 = p as i64 - k;
            if n1 == 0 {
                return Complex64::default();
            }
            let mut acc = Complex64::default();
            for n2 in -k..=k {
                if n2 == 0 {
                    continue;
                }
                let c12 = u.get(n2);
                for n3 in -k..=k {
                    let n4 = -n1 - n2 - n3;
                    if n3 == 0 || !spec.contains(n4) {
                        continue;
                    }
                    acc += grid.get(&[n1, n2, n3]) * c12 * u.get(n3) * u.get(n4);
                }
            }
            acc * u.get(n1)
        });
        Ok(sum * self.norm_factor())
    }

    /// `Λ_3(M_3) = 2πλ (−2i) Σ_n m(k_n)² (−k_n) c_n P_K(u²)_{−n}`.
    pub fn lambda3_m3(&self, u: &SpectralField) -> Result<Complex64> {
        self.check_field(u)?;
        let w = self.square(u);
        let sum: Complex64 = u
            .modes()
            .map(|(n, c)| {
                let m = self.ctx.m(n);
                c * w.get(-n) * (-m * m * self.ctx.k(n))
            })
            .sum();
        Ok(sum * Complex64::new(0.0, -2.0) * self.norm_factor())
    }

    /// `Λ_4(M_4) = 2πλ (−3i) Σ σ_3(n_1, n_2, m) k_m c_{n_1} c_{n_2} P_K(u²)_m`.
    pub fn lambda4_m4(&self, u: &SpectralField) -> Result<Complex64> {
        self.check_field(u)?;
        self.need(3)?;
        let grid = self.sigma3.as_ref().expect("σ_3 table");
        let w = self.square(u);
        let spec = self.ctx.spec;
        let k = spec.k_max as i64;
        let width = 2 * spec.k_max + 1;
        let sum = self.exec.sum(0..width, Complex64::default(), |p| {
            let n1 = p as i64 - k;
            if n1 == 0 {
                return Complex64::default();
            }
            let mut acc = Complex64::default();
            for n2 in -k..=k {
                let m = -n1 - n2;
                if n2 == 0 || !spec.contains(m) {
                    continue;
                }
                acc += grid.get(&[n1, n2]) * self.ctx.k(m) * u.get(n2) * w.get(m);
            }
            acc * u.get(n1)
        });
        Ok(sum * Complex64::new(0.0, -3.0) * self.norm_factor())
    }

    /// `Λ_5(M_5) = 2πλ (−4i) Σ σ_4(n_1, n_2, n_3, m) k_m c c c P_K(u²)_m`.
    pub fn lambda5_m5(&self, u: &SpectralField) -> Result<Complex64> {
        self.check_field(u)?;
        self.need(4)?;
        let grid = self.sigma4.as_ref().expect("σ_4 table");
        let w = self.square(u);
        let spec = self.ctx.spec;
        let k = spec.k_max as i64;
        let width = 2 * spec.k_max + 1;
        let sum = self.exec.sum(0..width, Complex64::default(), |p| {
            let n1 = p as i64 - k;
            if n1 == 0 {
                return Complex64::default();
            }
            let mut acc = Complex64::default();
            for n2 in -k..=k {
                if n2 == 0 {
                    continue;
                }
                let c2 = u.get(n2);
                for n3 in -k..=k {
                    let m = -n1 - n2 - n3;
                    if n3 == 0 || !spec.contains(m) {
                        continue;
                    }
                    acc += grid.get(&[n1, n2, n3]) * self.ctx.k(m) * c2 * u.get(n3) * w.get(m);
                }
            }
            acc * u.get(n1)
        });
        Ok(sum * Complex64::new(0.0, -4.0) * self.norm_factor())
    }

    fn real_part(&self, z: Complex64, scale: f64, what: &str) -> Result<f64> {
        if z.im.abs() > IMAG_TOL * scale.max(z.re.abs()).max(1e-300) && z.im.abs() > 1e-300 {
            return Err(Error::Invariant {
                name: "real_energy",
                detail: format!("{what} has imaginary part {:e} against {:e}", z.im, z.re),
            });
        }
        Ok(z.re)
    }

    /// `E^(level)` of real data.
    pub fn energy(&self, u: &SpectralField, level: u8) -> Result<f64> {
        self.need(level)?;
        if !u.is_real() {
            return Err(Error::invalid("u", "modified energies need real data"));
        }
        let e2 = self.e2(u)?;
        if level == 2 {
            return Ok(e2);
        }
        let scale = e2.max(u.l2_norm().powi(3));
        let l3 = self.real_part(self.lambda3_sigma3(u)?, scale, "Λ_3(σ_3)")?;
        let e3 = e2 + l3;
        if level == 3 {
            return Ok(e3);
        }
        let scale = scale.max(u.l2_norm().powi(4));
        let l4 = self.real_part(self.lambda4_sigma4(u)?, scale, "Λ_4(σ_4)")?;
        Ok(e3 + l4)
    }

    /// All energies up to the table level: `[E2, E3?, E4?]`.
    pub fn energies(&self, u: &SpectralField) -> Result<[Option<f64>; 3]> {
        let mut out = [None; 3];
        for level in 2..=self.max_level {
            out[(level - 2) as usize] = Some(self.energy(u, level)?);
        }
        Ok(out)
    }

    /// `Λ_{level+1}(M_{level+1})`, the predicted `dE^(level)/dt`.
    pub fn derivative(&self, u: &SpectralField, level: u8) -> Result<f64> {
        let z = match level {
            2 => self.lambda3_m3(u)?,
            3 => self.lambda4_m4(u)?,
            4 => self.lambda5_m5(u)?,
            _ => return Err(Error::invalid("level", "must be 2, 3 or 4")),
        };
        let scale = u.l2_norm().powi(level as i32 + 1);
        self.real_part(z, scale, "Λ(M)")
    }
}

/// `M_4` with `σ_3` read from its table.
pub(crate) fn m4_from_table(ctx: &HierarchyContext, s3: &MultiplierGrid, idx: &[i64]) -> Complex64 {
    let mut acc = Complex64::default();
    for (i, j, rest) in super::PAIRS4 {
        let s = idx[i] + idx[j];
        if !ctx.pair_ok(s) {
            continue;
        }
        acc += s3.get(&[idx[rest[0]], idx[rest[1]]]) * ctx.k(s);
    }
    acc * Complex64::new(0.0, -0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheckOptions {
    pub level: u8,
    /// Compare at every `stride`-th interior sample.
    pub stride: usize,
}

impl DerivativeCheckOptions {
    pub fn new(level: u8) -> Self {
        DerivativeCheckOptions { level, stride: 1 }
    }
}

/// One trajectory sample of the energy report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRow {
    pub t: f64,
    pub e2: f64,
    pub e3: Option<f64>,
    pub e4: Option<f64>,
    /// Five-point centered difference of `E^(level)`.
    pub lhs: Option<f64>,
    /// `Λ_{level+1}(M_{level+1})`.
    pub rhs: Option<f64>,
    /// `|lhs − rhs| / scale`.
    pub mismatch: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeReport {
    pub level: u8,
    pub rows: Vec<EnergyRow>,
    /// Normalization of the mismatch: `max |rhs|` over compared samples.
    pub scale: f64,
    pub max_mismatch: Option<f64>,
    /// Set when the trajectory follows the linear flow only.
    pub skipped: bool,
}

/// Compares the centered difference of `E^(level)` along `traj` with
/// `Λ_{level+1}(M_{level+1})` evaluated on the samples.
pub fn energy_derivative_check(
    hier: &Hierarchy,
    traj: &Trajectory,
    opts: DerivativeCheckOptions,
) -> Result<DerivativeReport> {
    let level = opts.level;
    if !(2..=4).contains(&level) {
        return Err(Error::invalid("level", "must be 2, 3 or 4"));
    }
    if opts.stride == 0 {
        return Err(Error::invalid("stride", "must be >= 1"));
    }
    let k = hier.ctx.spec.k_max;
    let cap = match level {
        3 => Some(LEVEL3_K_CAP),
        4 => Some(LEVEL4_K_CAP),
        _ => None,
    };
    if let Some(cap) = cap {
        if k > cap {
            return Err(Error::CostCap {
                what: if level == 3 {
                    "level-3 derivative check"
                } else {
                    "level-4 derivative check"
                },
                cap,
                k,
            });
        }
    }
    hier.need(level)?;
    let h = traj.uniform_step()?;
    let n = traj.len();
    if n < 5 {
        return Err(Error::invalid("trajectory", "needs at least five samples"));
    }
    let energies: Vec<[Option<f64>; 3]> = traj.states.iter().map(|u| hier.energies(u)).collect::<Result<_>>()?;
    let e = |i: usize| energies[i][(level - 2) as usize].expect("energy level");
    let mut rows: Vec<EnergyRow> = traj
        .times
        .iter()
        .zip(&energies)
        .map(|(&t, en)| EnergyRow {
            t,
            e2: en[0].expect("E2"),
            e3: en[1],
            e4: en[2],
            lhs: None,
            rhs: None,
            mismatch: None,
        })
        .collect();
    let skipped = !traj.params.nonlinear;
    if skipped {
        return Ok(DerivativeReport {
            level,
            rows,
            scale: 0.0,
            max_mismatch: None,
            skipped,
        });
    }
    let points: Vec<usize> = (2..n - 2).step_by(opts.stride).collect();
    for &i in &points {
        let lhs = (e(i - 2) - 8.0 * e(i - 1) + 8.0 * e(i + 1) - e(i + 2)) / (12.0 * h);
        rows[i].lhs = Some(lhs);
        rows[i].rhs = Some(hier.derivative(&traj.states[i], level)?);
    }
    let scale = points
        .iter()
        .map(|&i| rows[i].rhs.unwrap_or(0.0).abs())
        .fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for &i in &points {
        let diff = (rows[i].lhs.unwrap_or(0.0) - rows[i].rhs.unwrap_or(0.0)).abs();
        let mm = if scale > 0.0 { diff / scale } else { diff };
        rows[i].mismatch = Some(mm);
        worst = worst.max(mm);
    }
    Ok(DerivativeReport {
        level,
        rows,
        scale,
        max_mismatch: Some(worst),
        skipped,
    })
}
