use num_complex::Complex64;
use serde::Serialize;

use super::HierarchyContext;
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Worst ratio of `|M_4|` to the weight
/// `|Σp| m(k*) / ((N+|k_1|)²(N+|k_2|)²(N+|k_3|)³(N+|k_4|))`
/// over canonically sorted 4-tuples with `|n_i| ≤ grid`, where
/// `k* = min(|k_l|, |k_i + k_j|)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSample {
    pub n_threshold: f64,
    pub grid: usize,
    pub max_ratio: f64,
    pub argmax: Vec<i64>,
    pub tuples: usize,
    /// Resonant tuples with vanishing `M_4`, left out of the maximum.
    pub skipped_resonant: usize,
    /// Resonant tuples with nonzero `M_4` (infinite ratio).
    pub unbounded: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BoundReport {
    pub samples: Vec<BoundSample>,
}

impl BoundReport {
    pub fn max_ratio(&self, n_threshold: f64, grid: usize) -> Option<f64> {
        self.samples
            .iter()
            .find(|s| s.n_threshold == n_threshold && s.grid == grid)
            .map(|s| s.max_ratio)
    }
}

/// `|a| > |b|`, or equal moduli with `a > b`.
#[inline]
fn precedes_or_eq(a: i64, b: i64) -> bool {
    a.abs() > b.abs() || (a.abs() == b.abs() && a >= b)
}

struct Partial {
    max_ratio: f64,
    argmax: Vec<i64>,
    tuples: usize,
    skipped: usize,
    unbounded: usize,
}

/// Scans every canonical 4-tuple with `|n_i| ≤ grid` using `ctx` without a
/// pair cap (continuum multipliers).
pub fn lemma_bound_scan(ctx: &HierarchyContext, grid: usize, exec: Exec) -> Result<BoundSample> {
    if grid == 0 {
        return Err(Error::invalid("grid", "must be >= 1"));
    }
    let ctx = ctx.continuum();
    let n_thr = ctx.im.n_threshold;
    let g = grid as i64;
    let width = 2 * grid + 1;
    let parts = exec.map(0..width, |p| {
        let n1 = p as i64 - g;
        let mut part = Partial {
            max_ratio: 0.0,
            argmax: Vec::new(),
            tuples: 0,
            skipped: 0,
            unbounded: 0,
        };
        if n1 == 0 {
            return part;
        }
        for n2 in -g..=g {
            if n2 == 0 || !precedes_or_eq(n1, n2) {
                continue;
            }
            for n3 in -g..=g {
                let n4 = -n1 - n2 - n3;
                if n3 == 0 || n4 == 0 || n4.abs() > g {
                    continue;
                }
                if !precedes_or_eq(n2, n3) || !precedes_or_eq(n3, n4) {
                    continue;
                }
                let idx = [n1, n2, n3, n4];
                part.tuples += 1;
                let m4: Complex64 = ctx.m4(&idx);
                let d = ctx.divisor(&idx).abs();
                if d < ctx.guard_eps * ctx.divisor_scale(&idx) {
                    if m4.norm() <= 1e-12 {
                        part.skipped += 1;
                    } else {
                        part.unbounded += 1;
                    }
                    continue;
                }
                let mut k_star = f64::INFINITY;
                for (i, &a) in idx.iter().enumerate() {
                    k_star = k_star.min(ctx.k(a).abs());
                    for &b in &idx[i + 1..] {
                        k_star = k_star.min(ctx.k(a + b).abs());
                    }
                }
                let w = |n: i64, e: i32| (n_thr + ctx.k(n).abs()).powi(e);
                let weight = d * ctx.im.value(k_star) / (w(n1, 2) * w(n2, 2) * w(n3, 3) * w(n4, 1));
                let ratio = m4.norm() / weight;
                if ratio > part.max_ratio {
                    part.max_ratio = ratio;
                    part.argmax = idx.to_vec();
                }
            }
        }
        part
    });
    let mut out = BoundSample {
        n_threshold: n_thr,
        grid,
        max_ratio: 0.0,
        argmax: Vec::new(),
        tuples: 0,
        skipped_resonant: 0,
        unbounded: 0,
    };
    for p in parts {
        out.tuples += p.tuples;
        out.skipped_resonant += p.skipped;
        out.unbounded += p.unbounded;
        if p.max_ratio > out.max_ratio {
            out.max_ratio = p.max_ratio;
            out.argmax = p.argmax;
        }
    }
    Ok(out)
}
