//! Symmetrized multipliers, the multilinear functionals `Λ_l`, the
//! correction hierarchy `M_3, σ_3, M_4, σ_4, M_5` and the modified energies.
//!
//! Multipliers are evaluated on integer index tuples `n` with `Σ n = 0`;
//! the frequency of an index is `n / λ`. On that hyperplane the recursive
//! definitions reduce to sums over index pairs:
//!
//! * `M_3 = (2i/3) Σ_j m(k_j)² k_j`
//! * `σ_3 = −M_3 / (i Σ_j p(k_j))`
//! * `M_4 = (−3i/6) Σ_{i<j} χ(n_i + n_j) σ_3(rest, k_ij) k_ij`
//! * `σ_4 = −M_4 / (i Σ_j p(k_j))`
//! * `M_5 = (−4i/10) Σ_{i<j} χ(n_i + n_j) σ_4(rest, k_ij) k_ij`
//!
//! where `χ` is zero on a vanishing pair sum (the zero mode does not exist)
//! and, when a lattice cap `K` is set, on `|n_i + n_j| > K`. With the cap
//! the telescoping identities `d/dt E^(l) = Λ_{l+1}(M_{l+1})` hold exactly
//! for the Galerkin-truncated flow; without it the multipliers are the
//! continuum ones restricted to the lattice.

mod bound;
mod energy;
mod grid;
mod scans;

pub use bound::{lemma_bound_scan, BoundReport, BoundSample};
pub use energy::{
    energy_derivative_check, DerivativeCheckOptions, DerivativeReport, EnergyRow, Hierarchy, LEVEL3_K_CAP, LEVEL4_K_CAP,
};
pub use grid::MultiplierGrid;
pub use scans::{
    acl_scan, ftd_check, power_law_data, random_field_with_inorm, AclReport, AclRow, AclScan, FtdCheck, FtdReport,
    FtdRow,
};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::spectral::{IMultiplier, SpectralField, TorusSpec};

/// Default relative floor of resonance divisors.
pub const DEFAULT_GUARD_EPS: f64 = 1e-9;

/// A zero-sum tuple of nonzero lattice indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FreqTuple {
    idx: Vec<i64>,
}

impl FreqTuple {
    pub fn new(idx: Vec<i64>) -> Result<Self> {
        if idx.len() < 2 {
            return Err(Error::invalid("tuple", "needs at least two entries"));
        }
        if idx.contains(&0) {
            return Err(Error::invalid("tuple", "zero index"));
        }
        if idx.iter().sum::<i64>() != 0 {
            return Err(Error::invalid("tuple", "indices must sum to zero"));
        }
        Ok(FreqTuple { idx })
    }

    pub fn indices(&self) -> &[i64] {
        &self.idx
    }

    pub fn freqs(&self, lambda: f64) -> Vec<f64> {
        self.idx.iter().map(|&n| n as f64 / lambda).collect()
    }

    /// Entries sorted by decreasing modulus, ties by sign then value.
    pub fn canonical(&self) -> Vec<i64> {
        let mut v = self.idx.clone();
        v.sort_by(|a, b| b.abs().cmp(&a.abs()).then(b.cmp(a)));
        v
    }
}

/// A multiplier value together with its resonance tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guarded {
    pub value: Complex64,
    /// The divisor fell below the guard; `value` is set to zero.
    pub resonant: bool,
    /// The numerator at a resonant tuple, kept for the exclusion log.
    pub numerator: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// Divisor and numerator both vanish (pair-cancelling tuple).
    ResonantZeroNumerator,
    /// Divisor vanishes with a numerator that does not.
    ResonantNonzeroNumerator,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::ResonantZeroNumerator => "resonant_zero_numerator",
            ExclusionReason::ResonantNonzeroNumerator => "resonant_nonzero_numerator",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub idx: Vec<i64>,
    pub reason: ExclusionReason,
}

/// Canonically ordered, deduplicated resonant tuples.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExclusionLog {
    pub entries: Vec<Exclusion>,
}

impl ExclusionLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, reason: ExclusionReason) -> usize {
        self.entries.iter().filter(|e| e.reason == reason).count()
    }

    pub(crate) fn from_raw(mut raw: Vec<Exclusion>) -> Self {
        for e in &mut raw {
            e.idx = FreqTuple { idx: e.idx.clone() }.canonical();
        }
        raw.sort_by(|a, b| a.idx.cmp(&b.idx));
        raw.dedup_by(|a, b| a.idx == b.idx);
        ExclusionLog { entries: raw }
    }
}

/// Parameters shared by every multiplier evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyContext {
    pub im: IMultiplier,
    pub spec: TorusSpec,
    pub guard_eps: f64,
    /// Drop pair sums with `|n_i + n_j|` above this index.
    pub pair_cap: Option<i64>,
}

impl HierarchyContext {
    /// Context matched to the Galerkin system on `spec`.
    pub fn new(im: IMultiplier, spec: TorusSpec) -> Self {
        HierarchyContext {
            im,
            spec,
            guard_eps: DEFAULT_GUARD_EPS,
            pair_cap: Some(spec.k_max as i64),
        }
    }

    /// Same context without the lattice cap on pair sums.
    pub fn continuum(self) -> Self {
        HierarchyContext { pair_cap: None, ..self }
    }

    pub fn with_guard(self, guard_eps: f64) -> Result<Self> {
        if !(guard_eps > 0.0 && guard_eps.is_finite()) {
            return Err(Error::invalid("guard_eps", "must be positive"));
        }
        Ok(HierarchyContext { guard_eps, ..self })
    }

    #[inline]
    pub fn k(&self, n: i64) -> f64 {
        n as f64 / self.spec.lambda
    }

    #[inline]
    pub fn m(&self, n: i64) -> f64 {
        self.im.value(self.k(n))
    }

    /// `Σ_j p_λ(k_j)`, so that `a_l + λ⁻²β b_l = i·divisor`.
    pub fn divisor(&self, idx: &[i64]) -> f64 {
        idx.iter().map(|&n| self.spec.dispersion_at(n)).sum()
    }

    /// Magnitude scale `Σ |k|⁵ + λ⁻² Σ |k|³` of the divisor terms.
    pub fn divisor_scale(&self, idx: &[i64]) -> f64 {
        let l2 = self.spec.lambda * self.spec.lambda;
        idx.iter()
            .map(|&n| {
                let k = self.k(n).abs();
                k.powi(5) + k.powi(3) / l2
            })
            .sum()
    }

    #[inline]
    fn pair_ok(&self, s: i64) -> bool {
        s != 0 && self.pair_cap.is_none_or(|cap| s.abs() <= cap)
    }

    fn guarded(&self, idx: &[i64], numerator: Complex64) -> Guarded {
        let d = self.divisor(idx);
        if d.abs() < self.guard_eps * self.divisor_scale(idx) {
            Guarded {
                value: Complex64::default(),
                resonant: true,
                numerator,
            }
        } else {
            Guarded {
                value: -numerator / Complex64::new(0.0, d),
                resonant: false,
                numerator,
            }
        }
    }

    pub fn m3(&self, idx: &[i64]) -> Complex64 {
        debug_assert_eq!(idx.len(), 3);
        let s: f64 = idx
            .iter()
            .map(|&n| {
                let m = self.m(n);
                m * m * self.k(n)
            })
            .sum();
        Complex64::new(0.0, 2.0 * s / 3.0)
    }

    pub fn sigma3(&self, idx: &[i64]) -> Guarded {
        self.guarded(idx, self.m3(idx))
    }

    pub fn m4(&self, idx: &[i64]) -> Complex64 {
        debug_assert_eq!(idx.len(), 4);
        let mut acc = Complex64::default();
        for (i, j, rest) in PAIRS4 {
            let s = idx[i] + idx[j];
            if !self.pair_ok(s) {
                continue;
            }
            let t = [idx[rest[0]], idx[rest[1]], s];
            acc += self.sigma3(&t).value * self.k(s);
        }
        acc * Complex64::new(0.0, -3.0 / 6.0)
    }

    pub fn sigma4(&self, idx: &[i64]) -> Guarded {
        self.guarded(idx, self.m4(idx))
    }

    /// `M_5`, with `σ_4` supplied so callers can substitute a precomputed grid.
    pub fn m5_with(&self, idx: &[i64], sigma4: impl Fn(&[i64]) -> Complex64) -> Complex64 {
        debug_assert_eq!(idx.len(), 5);
        let mut acc = Complex64::default();
        for i in 0..5 {
            for j in i + 1..5 {
                let s = idx[i] + idx[j];
                if !self.pair_ok(s) {
                    continue;
                }
                let mut t = [0i64; 4];
                let mut p = 0;
                for (q, &n) in idx.iter().enumerate() {
                    if q != i && q != j {
                        t[p] = n;
                        p += 1;
                    }
                }
                t[3] = s;
                acc += sigma4(&t) * self.k(s);
            }
        }
        acc * Complex64::new(0.0, -4.0 / 10.0)
    }

    pub fn m5(&self, idx: &[i64]) -> Complex64 {
        self.m5_with(idx, |t| self.sigma4(t).value)
    }
}

const PAIRS4: [(usize, usize, [usize; 2]); 6] = [
    (0, 1, [2, 3]),
    (0, 2, [1, 3]),
    (0, 3, [1, 2]),
    (1, 2, [0, 3]),
    (1, 3, [0, 2]),
    (2, 3, [0, 1]),
];

/// `[M]_sym`: average of `f` over all orderings of `args`.
pub fn symmetrize<T: Copy>(f: impl Fn(&[T]) -> Complex64, args: &[T]) -> Complex64 {
    let mut a = args.to_vec();
    let n = a.len();
    let mut acc = Complex64::default();
    let mut count = 0usize;
    // Heap's algorithm, iterative form.
    let mut c = vec![0usize; n];
    acc += f(&a);
    count += 1;
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            acc += f(&a);
            count += 1;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    acc / count as f64
}

/// Cost threshold above which five-linear direct sums log a warning.
pub const LAMBDA5_WARN_K: usize = 48;

/// `Λ_l(M; u_1, …, u_l) = 2πλ Σ_{n_1+…+n_l=0} M(n) Π c_i(n_i)` by direct
/// enumeration of the first `l − 1` indices, the last one closing the sum.
pub fn lambda_l(
    spec: &TorusSpec,
    mult: impl Fn(&[i64]) -> Complex64 + Sync,
    us: &[&SpectralField],
    exec: Exec,
) -> Result<Complex64> {
    let l = us.len();
    if l < 2 {
        return Err(Error::invalid("l", "needs at least two fields"));
    }
    if us.iter().any(|u| u.spec() != spec) {
        return Err(Error::SpecMismatch);
    }
    if l >= 5 && spec.k_max > LAMBDA5_WARN_K {
        log::warn!("direct {l}-linear sum at K = {} costs O(K^{})", spec.k_max, l - 1);
    }
    let k = spec.k_max as i64;
    let width = 2 * spec.k_max + 1;
    let total = exec.sum(0..width, Complex64::default(), |p0| {
        let n0 = p0 as i64 - k;
        if n0 == 0 {
            return Complex64::default();
        }
        let mut idx = vec![0i64; l];
        idx[0] = n0;
        let mut acc = Complex64::default();
        enumerate_rest(spec, &mult, us, &mut idx, 1, n0, us[0].get(n0), &mut acc);
        acc
    });
    Ok(total * (std::f64::consts::TAU * spec.lambda))
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rest(
    spec: &TorusSpec,
    mult: &impl Fn(&[i64]) -> Complex64,
    us: &[&SpectralField],
    idx: &mut [i64],
    depth: usize,
    partial: i64,
    prod: Complex64,
    acc: &mut Complex64,
) {
    let l = idx.len();
    if prod == Complex64::default() {
        return;
    }
    if depth == l - 1 {
        let last = -partial;
        if !spec.contains(last) {
            return;
        }
        idx[depth] = last;
        *acc += mult(idx) * prod * us[depth].get(last);
        return;
    }
    let k = spec.k_max as i64;
    for n in -k..=k {
        if n == 0 {
            continue;
        }
        idx[depth] = n;
        enumerate_rest(
            spec,
            mult,
            us,
            idx,
            depth + 1,
            partial + n,
            prod * us[depth].get(n),
            acc,
        );
    }
}
