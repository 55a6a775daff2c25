//! The named experiments. Each one parses its params, reports the resolved
//! values for the manifest, then computes and writes its artifacts.

use std::path::Path;

use kawahara_core::bourgain::{
    bilinear_ratio, counting_scan, dyadic_packet, packet_ensemble, strichartz_ratio, CountingScan, PacketParams,
};
use kawahara_core::evolution::{integrate, EvolutionParams, Scheme};
use kawahara_core::hierarchy::{
    acl_scan, energy_derivative_check, ftd_check, power_law_data, random_field_with_inorm, AclScan,
    DerivativeCheckOptions, FtdCheck, Hierarchy, HierarchyContext, DEFAULT_GUARD_EPS,
};
use kawahara_core::illposed::{inflation_scan, WitnessSpec};
use kawahara_core::io;
use kawahara_core::rng::CounterRng;
use kawahara_core::{Beta, Exec, IMultiplier, MultiplierVariant, SpectralField, TorusSpec};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{typed, ExperimentConfig, ExperimentName};
use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    /// `Σ a cos(nx/λ)` over `(n, a)` pairs.
    Cosines {
        terms: Vec<(i64, f64)>,
    },
    /// `Σ_{n ≤ K} a n^{−decay} cos(nx/λ)`.
    PowerLaw {
        amplitude: f64,
        decay: f64,
    },
    /// Seeded Gaussian coefficients weighted by `⟨k⟩⁻¹`, scaled to this L² norm.
    Random {
        l2_norm: f64,
    },
    /// Field CSV with its JSON sidecar; must match the configured lattice.
    File {
        path: String,
    },
}

impl InitialData {
    fn build(&self, spec: TorusSpec, seed: u64) -> Result<SpectralField, Failure> {
        Ok(match self {
            InitialData::Zero => SpectralField::zeros(spec),
            InitialData::Cosines { terms } => {
                if let Some((n, _)) = terms.iter().find(|(n, _)| *n <= 0 || *n > spec.k_max as i64) {
                    return Err(Failure::Config(format!(
                        "params.initial.terms: index {n} outside 1..=K"
                    )));
                }
                SpectralField::cosines(spec, terms)
            }
            InitialData::PowerLaw { amplitude, decay } => power_law_data(spec, *amplitude, *decay),
            InitialData::Random { l2_norm } => {
                // a threshold above every retained frequency makes I the identity
                let id = IMultiplier::kink(-1.0, spec.k_max as f64 / spec.lambda + 1.0);
                random_field_with_inorm(spec, &id, &mut CounterRng::new(seed), *l2_norm)?
            }
            InitialData::File { path } => {
                let u = io::read_field(Path::new(path))?;
                if u.spec() != &spec {
                    return Err(Failure::Config(format!(
                        "params.initial.path: field lattice {:?} differs from the configured one",
                        u.spec()
                    )));
                }
                u
            }
        })
    }
}

fn default_cosines() -> InitialData {
    InitialData::Cosines {
        terms: vec![(1, 1.0), (2, 0.5)],
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveParams {
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k_max: usize,
    pub beta: Beta,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub scheme: Scheme,
    pub record_every: usize,
    pub blowup_factor: f64,
    pub initial: InitialData,
    /// Allowed relative drift of `‖u‖²` for real data.
    pub l2_tolerance: f64,
}

impl Default for EvolveParams {
    fn default() -> Self {
        EvolveParams {
            lambda: 1.0,
            k_max: 64,
            beta: Beta::Plus,
            dt: 1e-3,
            t_final: 1.0,
            scheme: Scheme::IfRk4,
            record_every: 10,
            blowup_factor: 1e6,
            initial: default_cosines(),
            l2_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyTrackParams {
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k_max: usize,
    pub beta: Beta,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub scheme: Scheme,
    pub s: f64,
    #[serde(rename = "N")]
    pub n_threshold: f64,
    pub variant: MultiplierVariant,
    pub level: u8,
    pub stride: usize,
    pub guard_eps: f64,
    pub initial: InitialData,
    /// Largest accepted relative mismatch; defaults by level.
    pub tolerance: Option<f64>,
}

impl Default for EnergyTrackParams {
    fn default() -> Self {
        EnergyTrackParams {
            lambda: 1.0,
            k_max: 32,
            beta: Beta::Plus,
            dt: 1e-5,
            t_final: 2e-3,
            scheme: Scheme::IfRk4,
            s: -1.0,
            n_threshold: 2.0,
            variant: MultiplierVariant::Kink,
            level: 2,
            stride: 1,
            guard_eps: DEFAULT_GUARD_EPS,
            initial: InitialData::Cosines {
                terms: vec![(1, 1.0), (2, 0.5), (3, 0.3), (4, 0.2)],
            },
            tolerance: None,
        }
    }
}

macro_rules! ensemble_params {
    ($(#[$m:meta])* $name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty = $default:expr),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $($(#[$fm])* pub $field: $ty,)*
            pub lambda: f64,
            #[serde(rename = "K")]
            pub k_max: usize,
            pub beta: Beta,
            pub trials: u64,
            /// Frequencies per packet.
            pub width: usize,
            /// Modulation blocks `2^0 .. 2^max_block`.
            pub max_block: u32,
            pub delta_tau: f64,
        }

        impl Default for $name {
            fn default() -> Self {
                $name {
                    $($field: $default,)*
                    lambda: 1.0,
                    k_max: 32,
                    beta: Beta::Plus,
                    trials: 200,
                    width: 4,
                    max_block: 4,
                    delta_tau: 1.0,
                }
            }
        }

        impl $name {
            fn spec(&self) -> Result<TorusSpec, Failure> {
                Ok(TorusSpec::new(self.lambda, self.k_max, self.beta)?)
            }
        }
    };
}

ensemble_params!(BilinearParams { s: f64 = -1.5 });

ensemble_params!(StrichartzParams {
    b: f64 = 0.5,
    b_prime: f64 = 0.5,
    counting: CountingScan = CountingScan::default(),
});

fn default_witness() -> WitnessSpec {
    WitnessSpec::new(-1.8, 0.1, (3..=8).map(|e| 1i64 << e).collect())
}

pub struct Outcome {
    pub summary: Value,
    /// `name: detail` of a failed invariant check.
    pub violation: Option<String>,
}

/// A parsed experiment, ready to run.
pub enum Prepared {
    Evolve(EvolveParams),
    EnergyTrack(EnergyTrackParams),
    AclScan(AclScan),
    FtdCheck(FtdCheck),
    BilinearProbe(BilinearParams),
    StrichartzProbe(StrichartzParams),
    IllposeScan(WitnessSpec),
}

fn with_defaults(params: &Value, defaults: Value) -> Value {
    // the witness scan has required fields; start from a complete default
    let mut out = defaults;
    if let (Some(o), Some(p)) = (out.as_object_mut(), params.as_object()) {
        for (k, v) in p {
            o.insert(k.clone(), v.clone());
        }
    }
    out
}

impl Prepared {
    pub fn parse(cfg: &ExperimentConfig) -> Result<Self, Failure> {
        let p = &cfg.params;
        Ok(match cfg.name {
            ExperimentName::Evolve => Prepared::Evolve(typed(p, "params")?),
            ExperimentName::EnergyTrack => Prepared::EnergyTrack(typed(p, "params")?),
            ExperimentName::AclScan => Prepared::AclScan(typed(p, "params")?),
            ExperimentName::FtdCheck => Prepared::FtdCheck(typed(p, "params")?),
            ExperimentName::BilinearProbe => Prepared::BilinearProbe(typed(p, "params")?),
            ExperimentName::StrichartzProbe => Prepared::StrichartzProbe(typed(p, "params")?),
            ExperimentName::IllposeScan => {
                let full = with_defaults(p, serde_json::to_value(default_witness()).expect("serializable"));
                Prepared::IllposeScan(typed(&full, "params")?)
            }
        })
    }

    /// Params with every default filled in, for the manifest.
    pub fn resolved(&self) -> Value {
        let v = match self {
            Prepared::Evolve(p) => serde_json::to_value(p),
            Prepared::EnergyTrack(p) => serde_json::to_value(p),
            Prepared::AclScan(p) => serde_json::to_value(p),
            Prepared::FtdCheck(p) => serde_json::to_value(p),
            Prepared::BilinearProbe(p) => serde_json::to_value(p),
            Prepared::StrichartzProbe(p) => serde_json::to_value(p),
            Prepared::IllposeScan(p) => serde_json::to_value(p),
        };
        v.expect("params serialize")
    }

    /// Runs the experiment; returns its summary and the violated invariant, if any.
    pub fn run(&self, seed: u64, out: &Path, exec: Exec) -> Result<Outcome, Failure> {
        let ok = |summary| {
            Ok(Outcome {
                summary,
                violation: None,
            })
        };
        match self {
            Prepared::Evolve(p) => evolve(p, seed, out),
            Prepared::EnergyTrack(p) => energy_track(p, seed, out, exec),
            Prepared::AclScan(p) => {
                let rep = acl_scan(p, exec)?;
                io::write_csv(
                    &out.join("acl.csv"),
                    "N,deltaE4,proxy_norm5",
                    rep.rows
                        .iter()
                        .map(|r| format!("{},{},{}", r.n, r.delta_e4, r.proxy_norm5)),
                )?;
                ok(json!({
                    "slope": rep.slope,
                    "slope_first_pair": rep.slope_first_pair,
                    "non_increasing": rep.non_increasing,
                }))
            }
            Prepared::FtdCheck(p) => {
                let rep = ftd_check(p, seed, exec)?;
                io::write_csv(
                    &out.join("ftd.csv"),
                    "K,trial,seed,inorm,ratio",
                    rep.rows
                        .iter()
                        .map(|r| format!("{},{},{},{},{}", r.k_max, r.trial, r.seed, r.inorm, r.ratio)),
                )?;
                ok(json!({ "max_by_K": rep.max_by_k }))
            }
            Prepared::BilinearProbe(p) => bilinear(p, seed, out, exec),
            Prepared::StrichartzProbe(p) => strichartz(p, seed, out, exec),
            Prepared::IllposeScan(ws) => {
                let rep = inflation_scan(ws, exec)?;
                io::write_inflation(&out.join("illpose.csv"), &rep)?;
                ok(json!({
                    "slope": rep.slope,
                    "expected_slope": rep.expected_slope,
                    "residual": rep.residual,
                }))
            }
        }
    }
}

fn evolve(p: &EvolveParams, seed: u64, out: &Path) -> Result<Outcome, Failure> {
    let spec = TorusSpec::new(p.lambda, p.k_max, p.beta)?;
    let u0 = p.initial.build(spec, seed)?;
    let mut params = EvolutionParams::new(spec, p.dt, p.t_final)
        .with_scheme(p.scheme)
        .with_record_every(p.record_every);
    params.blowup_factor = p.blowup_factor;
    let traj = integrate(&u0, &params)?;
    io::write_field(&out.join("initial.csv"), &u0)?;
    io::write_field(&out.join("final.csv"), traj.last())?;
    io::write_trajectory(&out.join("trajectory.csv"), &traj)?;
    let m0 = u0.l2_norm().powi(2);
    let m1 = traj.last().l2_norm().powi(2);
    let drift = if m0 > 0.0 { (m1 - m0).abs() / m0 } else { m1 };
    let violation = (u0.is_real() && drift > p.l2_tolerance)
        .then(|| format!("l2_conservation: relative drift {drift:e} exceeds {:e}", p.l2_tolerance));
    Ok(Outcome {
        summary: json!({
            "samples": traj.len(),
            "l2_sq_initial": m0,
            "l2_sq_final": m1,
            "l2_relative_drift": drift,
        }),
        violation,
    })
}

fn energy_track(p: &EnergyTrackParams, seed: u64, out: &Path, exec: Exec) -> Result<Outcome, Failure> {
    let spec = TorusSpec::new(p.lambda, p.k_max, p.beta)?;
    let im = IMultiplier::new(p.s, p.n_threshold, p.variant)?;
    let ctx = HierarchyContext::new(im, spec).with_guard(p.guard_eps)?;
    // level-l identities need the tables for E^(l)
    let hier = Hierarchy::new(ctx, p.level.max(2), exec)?;
    let u0 = p.initial.build(spec, seed)?;
    let params = EvolutionParams::new(spec, p.dt, p.t_final).with_scheme(p.scheme);
    let traj = integrate(&u0, &params)?;
    let opts = DerivativeCheckOptions {
        level: p.level,
        stride: p.stride,
    };
    let rep = energy_derivative_check(&hier, &traj, opts)?;
    io::write_energy_rows(&out.join("hierarchy.csv"), &rep.rows)?;
    io::write_exclusions(&out.join("exclusions.csv"), hier.exclusions())?;
    let tol = p.tolerance.unwrap_or(match p.level {
        2 => 1e-4,
        3 => 1e-3,
        _ => 1e-2,
    });
    let summary = json!({
        "level": rep.level,
        "scale": rep.scale,
        "max_mismatch": rep.max_mismatch,
        "skipped": rep.skipped,
        "tolerance": tol,
        "exclusions": hier.exclusions().len(),
    });
    let violation = rep
        .max_mismatch
        .filter(|&m| m > tol)
        .map(|m| format!("telescoping_identity: level-{} mismatch {m:e} exceeds {tol:e}", p.level));
    Ok(Outcome { summary, violation })
}

fn ensemble_summary(rows: &[kawahara_core::bourgain::EnsembleRow]) -> Value {
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let mean = rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len().max(1) as f64;
    let argmax = rows.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio));
    json!({ "trials": rows.len(), "max": max, "mean": mean, "argmax": argmax })
}

fn bilinear(p: &BilinearParams, seed: u64, out: &Path, exec: Exec) -> Result<Outcome, Failure> {
    let (e, spec) = (p, p.spec()?);
    let rows = packet_ensemble(&spec, e.trials, seed, e.width, e.max_block, e.delta_tau, |u, v| {
        bilinear_ratio(u, v, p.s, exec)
    })?;
    io::write_ensemble(&out.join("bilinear.csv"), &rows)?;
    // region map of one representative packet, for plotting
    let sample = dyadic_packet(
        &spec,
        &PacketParams {
            shell: 0,
            block: e.max_block,
            width: e.width,
            delta_tau: e.delta_tau,
        },
        &mut CounterRng::new(seed),
    )?;
    io::write_region_map(&out.join("regions.csv"), &sample)?;
    Ok(Outcome {
        summary: ensemble_summary(&rows),
        violation: None,
    })
}

fn strichartz(p: &StrichartzParams, seed: u64, out: &Path, exec: Exec) -> Result<Outcome, Failure> {
    let (e, spec) = (p, p.spec()?);
    let rows = packet_ensemble(&spec, e.trials, seed, e.width, e.max_block, e.delta_tau, |u, v| {
        strichartz_ratio(u, v, p.b, p.b_prime, exec)
    })?;
    io::write_ensemble(&out.join("strichartz.csv"), &rows)?;
    let rep = counting_scan(&p.counting, exec)?;
    io::write_csv(
        &out.join("counting.csv"),
        "lambda,n,tau,M1,M2,measure,normalized",
        rep.samples.iter().map(|s| {
            format!(
                "{},{},{},{},{},{},{}",
                s.lambda, s.n, s.tau, s.m1, s.m2, s.measure, s.normalized
            )
        }),
    )?;
    let mut summary = ensemble_summary(&rows);
    summary["counting"] = json!({
        "fitted_c": rep.fitted_c,
        "max_normalized": rep.max_normalized,
        "violations": rep.violations,
        "samples": rep.samples.len(),
    });
    let violation = (rep.violations > 0).then(|| {
        format!(
            "counting_bound: {} samples exceed the constant fitted at lambda = {}",
            rep.violations, p.counting.fit_lambda
        )
    });
    Ok(Outcome { summary, violation })
}
