//! Seeded dyadic test packets.
//!
//! A packet lives on frequencies `2^j ≤ |k| < 2^{j+1}` and modulations
//! `⟨τ − p(k)⟩ ∈ [M, 2M)` with `M = 2^i`, with independent complex Gaussian
//! amplitudes, mirrored so the packet is real-valued. Such packets probe one dyadic block of a bilinear estimate at
//! a time.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SpaceTimeField;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::spectral::{bracket, TorusSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketParams {
    /// Spatial shell exponent `j`.
    pub shell: u32,
    /// Modulation block exponent `i`.
    pub block: u32,
    /// Number of distinct frequencies drawn from the shell.
    pub width: usize,
    pub delta_tau: f64,
}

/// Largest shell exponent with `2^{j+1} ≤ K/λ`, if any.
pub fn max_shell(spec: &TorusSpec) -> Option<u32> {
    let top = spec.k_max as f64 / spec.lambda;
    (top >= 2.0).then(|| (top.log2().floor() as u32) - 1)
}

pub fn dyadic_packet(spec: &TorusSpec, pp: &PacketParams, rng: &mut CounterRng) -> Result<SpaceTimeField> {
    if !(pp.delta_tau > 0.0 && pp.delta_tau.is_finite()) {
        return Err(Error::invalid("delta_tau", "must be positive"));
    }
    if pp.width == 0 {
        return Err(Error::invalid("width", "must be >= 1"));
    }
    let lo = (spec.lambda * f64::from(1u32 << pp.shell)).ceil() as i64;
    let hi = (spec.lambda * f64::from(1u32 << (pp.shell + 1))).ceil() as i64 - 1;
    if hi > spec.k_max as i64 || hi < lo {
        return Err(Error::invalid(
            "shell",
            format!("shell {} does not fit in K = {}", pp.shell, spec.k_max),
        ));
    }
    let mut pool: Vec<i64> = (lo..=hi).collect();
    let width = pp.width.min(pool.len());
    // partial Fisher-Yates
    for i in 0..width {
        let j = rng.int_in(i as i64, pool.len() as i64 - 1) as usize;
        pool.swap(i, j);
    }
    let big_m = f64::from(1u32 << pp.block);
    let hi_mu = (4.0 * big_m * big_m - 1.0).sqrt();
    let mut entries = Vec::new();
    for &a in &pool[..width] {
        // real data: û(−τ, −k) = conj û(τ, k), and p is odd
        let pk = spec.dispersion_at(a);
        let m_lo = ((pk - hi_mu) / pp.delta_tau).floor() as i64;
        let m_hi = ((pk + hi_mu) / pp.delta_tau).ceil() as i64;
        for m in m_lo..=m_hi {
            let w = bracket(m as f64 * pp.delta_tau - pk);
            if w >= big_m && w < 2.0 * big_m {
                let z = Complex64::new(rng.normal(), rng.normal());
                entries.push((a, m, z));
                entries.push((-a, -m, z.conj()));
            }
        }
    }
    SpaceTimeField::from_entries(*spec, TAU / pp.delta_tau, entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleRow {
    pub trial: u64,
    pub seed: u64,
    pub ratio: f64,
    pub shells: [u32; 2],
    pub blocks: [u32; 2],
}

/// `trials` seeded packet pairs with shells and blocks drawn uniformly
/// (blocks `0..=max_block`), each evaluated by `probe`.
pub fn packet_ensemble(
    spec: &TorusSpec,
    trials: u64,
    seed: u64,
    width: usize,
    max_block: u32,
    delta_tau: f64,
    probe: impl Fn(&SpaceTimeField, &SpaceTimeField) -> Result<f64>,
) -> Result<Vec<EnsembleRow>> {
    let j_max = max_shell(spec).ok_or_else(|| Error::invalid("K", "no dyadic shell with 2^(j+1) <= K/lambda"))?;
    let mut rows = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut rng = CounterRng::for_trial(seed, trial);
        let shells = [rng.int_in(0, j_max as i64) as u32, rng.int_in(0, j_max as i64) as u32];
        let blocks = [
            rng.int_in(0, max_block as i64) as u32,
            rng.int_in(0, max_block as i64) as u32,
        ];
        let mk = |k: usize, rng: &mut CounterRng| {
            dyadic_packet(
                spec,
                &PacketParams {
                    shell: shells[k],
                    block: blocks[k],
                    width,
                    delta_tau,
                },
                rng,
            )
        };
        let u = mk(0, &mut rng)?;
        let v = mk(1, &mut rng)?;
        rows.push(EnsembleRow {
            trial,
            seed,
            ratio: probe(&u, &v)?,
            shells,
            blocks,
        });
    }
    Ok(rows)
}
