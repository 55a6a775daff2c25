//! Plain-text artifacts: CSV tables and JSON sidecars.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! value read back is bit-identical and reruns produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::bourgain::{EnsembleRow, SpaceTimeField};
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::hierarchy::{EnergyRow, ExclusionLog};
use crate::illposed::InflationReport;
use crate::spectral::{Beta, Sidecar, SpectralField, TorusSpec};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `header` and one line per row.
pub fn write_csv<I, R>(path: &Path, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<str>,
{
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{}", r.as_ref())?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// `foo.csv` ↦ `foo.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Field as `n,re,im` plus the `{lambda, K, beta}` sidecar.
pub fn write_field(csv: &Path, u: &SpectralField) -> Result<()> {
    write_csv(csv, "n,re,im", u.modes().map(|(n, c)| format!("{n},{},{}", c.re, c.im)))?;
    write_json(&sidecar_path(csv), &u.sidecar())
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad number `{s}`")))
}

/// Inverse of [`write_field`]. Indices missing from the CSV are zero.
pub fn read_field(csv: &Path) -> Result<SpectralField> {
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(csv))?)?;
    let beta = Beta::try_from(side.beta).map_err(Error::Parse)?;
    let spec = TorusSpec::new(side.lambda, side.k_max, beta)?;
    let text = fs::read_to_string(csv)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "n,re,im" => {}
        _ => return Err(Error::Parse("expected header `n,re,im`".into())),
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); spec.len()];
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected 3 columns", i + 1)));
        }
        let n: i64 = cols[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad index `{}`", i + 1, cols[0])))?;
        if !spec.contains(n) {
            return Err(Error::Parse(format!("line {}: index {n} outside the lattice", i + 1)));
        }
        coeffs[spec.pos(n)] = Complex64::new(parse_f64(cols[1], i + 1)?, parse_f64(cols[2], i + 1)?);
    }
    SpectralField::from_coeffs(spec, coeffs)
}

#[derive(Serialize)]
struct TrajectoryMeta<'a> {
    params: &'a crate::evolution::EvolutionParams,
    samples: usize,
    wall_time: f64,
}

/// Trajectory as `t,n,re,im` plus JSON metadata. The wall time lives only in
/// the metadata so the CSV is reproducible byte for byte.
pub fn write_trajectory(csv: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(csv)?);
    writeln!(w, "t,n,re,im")?;
    let mut line = String::new();
    for (t, u) in traj.times.iter().zip(&traj.states) {
        for (n, c) in u.modes() {
            line.clear();
            let _ = write!(line, "{t},{n},{},{}", c.re, c.im);
            writeln!(w, "{line}")?;
        }
    }
    w.flush()?;
    write_json(
        &sidecar_path(csv),
        &TrajectoryMeta {
            params: &traj.params,
            samples: traj.len(),
            wall_time: traj.wall_time,
        },
    )
}

pub fn write_energy_rows(csv: &Path, rows: &[EnergyRow]) -> Result<()> {
    write_csv(
        csv,
        "t,E2,E3,E4,lhs_rhs_mismatch",
        rows.iter()
            .map(|r| format!("{},{},{},{},{}", r.t, r.e2, opt(r.e3), opt(r.e4), opt(r.mismatch))),
    )
}

/// `k1,k2,k3[,k4],reason` in index units; the header follows the widest tuple.
pub fn write_exclusions(csv: &Path, log: &ExclusionLog) -> Result<()> {
    let arity = log.entries.iter().map(|e| e.idx.len()).max().unwrap_or(4).max(3);
    let mut header: Vec<String> = (1..=arity).map(|i| format!("k{i}")).collect();
    header.push("reason".into());
    write_csv(
        csv,
        &header.join(","),
        log.entries.iter().map(|e| {
            let mut cols: Vec<String> = e.idx.iter().map(i64::to_string).collect();
            cols.resize(arity, String::new());
            cols.push(e.reason.as_str().into());
            cols.join(",")
        }),
    )
}

pub fn write_ensemble(csv: &Path, rows: &[EnsembleRow]) -> Result<()> {
    write_csv(
        csv,
        "trial,seed,ratio",
        rows.iter().map(|r| format!("{},{},{}", r.trial, r.seed, r.ratio)),
    )
}

pub fn write_region_map(csv: &Path, f: &SpaceTimeField) -> Result<()> {
    write_csv(
        csv,
        "m,n,region",
        f.region_map()
            .into_iter()
            .map(|(m, n, r)| format!("{m},{n},{}", r.as_str())),
    )
}

#[derive(Serialize)]
struct InflationSummary {
    s: f64,
    t: f64,
    #[serde(rename = "K")]
    k_max: usize,
    slope: f64,
    expected_slope: f64,
    residual: f64,
}

/// `N,norm,slope_running` plus the slope summary in the sidecar.
pub fn write_inflation(csv: &Path, rep: &InflationReport) -> Result<()> {
    write_csv(
        csv,
        "N,norm,slope_running",
        rep.rows
            .iter()
            .map(|r| format!("{},{},{}", r.n, r.norm, opt(r.slope_running))),
    )?;
    write_json(
        &sidecar_path(csv),
        &InflationSummary {
            s: rep.s,
            t: rep.t,
            k_max: rep.k_max,
            slope: rep.slope,
            expected_slope: rep.expected_slope,
            residual: rep.residual,
        },
    )
}
