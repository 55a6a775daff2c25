//! Mean-zero functions on the torus `T_λ = R / 2πλZ`.
//!
//! A field is stored by its series coefficients `c_n`, `u(x) = Σ c_n e^{i k x}`
//! with `k = n / λ` and `0 < |n| ≤ K`. The zero mode is never represented,
//! which is how the mean-zero reduction is enforced everywhere downstream.
//! The transform `û(k) = (2π)^{-1/2} ∫ e^{-ikx} u dx` used by the Sobolev and
//! Bourgain norms is the derived view `û(k) = √(2π) λ c_n`.

mod conv;
mod field;
mod imult;

pub use conv::{product_direct, Convolver};
pub use field::{Sidecar, SpectralField};
pub use imult::{IMultiplier, MultiplierVariant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient of the third-order term after normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Beta {
    Minus,
    Zero,
    Plus,
}

impl Beta {
    pub fn value(self) -> f64 {
        i8::from(self) as f64
    }

    pub fn as_int(self) -> i64 {
        i8::from(self) as i64
    }
}

impl From<Beta> for i8 {
    fn from(b: Beta) -> i8 {
        match b {
            Beta::Minus => -1,
            Beta::Zero => 0,
            Beta::Plus => 1,
        }
    }
}

impl TryFrom<i8> for Beta {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            -1 => Ok(Beta::Minus),
            0 => Ok(Beta::Zero),
            1 => Ok(Beta::Plus),
            _ => Err(format!("beta must be -1, 0 or 1, got {v}")),
        }
    }
}

/// Torus size, truncation and dispersion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k_max: usize,
    pub beta: Beta,
}

impl TorusSpec {
    pub fn new(lambda: f64, k_max: usize, beta: Beta) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 1.0) {
            return Err(Error::invalid("lambda", format!("must be >= 1, got {lambda}")));
        }
        if k_max == 0 {
            return Err(Error::invalid("K", "must be >= 1"));
        }
        Ok(TorusSpec { lambda, k_max, beta })
    }

    /// The unit torus `T = R / 2πZ`.
    pub fn unit(k_max: usize, beta: Beta) -> Self {
        TorusSpec {
            lambda: 1.0,
            k_max,
            beta,
        }
    }

    pub fn with_k_max(self, k_max: usize) -> Self {
        TorusSpec { k_max, ..self }
    }

    /// Number of stored modes, `2K`.
    pub fn len(&self) -> usize {
        2 * self.k_max
    }

    pub fn is_empty(&self) -> bool {
        self.k_max == 0
    }

    /// Frequency `k = n / λ` of index `n`.
    pub fn freq(&self, n: i64) -> f64 {
        n as f64 / self.lambda
    }

    /// Storage position of index `n` (`n ≠ 0`, `|n| ≤ K`).
    #[inline]
    pub fn pos(&self, n: i64) -> usize {
        let k = self.k_max as i64;
        debug_assert!(n != 0 && n.abs() <= k, "index {n} outside lattice");
        if n < 0 {
            (n + k) as usize
        } else {
            (n + k - 1) as usize
        }
    }

    /// Index `n` stored at position `p`.
    #[inline]
    pub fn index(&self, p: usize) -> i64 {
        let k = self.k_max as i64;
        let p = p as i64;
        if p < k {
            p - k
        } else {
            p - k + 1
        }
    }

    #[inline]
    pub fn contains(&self, n: i64) -> bool {
        n != 0 && n.unsigned_abs() as usize <= self.k_max
    }

    /// All admissible indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len()).map(|p| self.index(p))
    }

    /// `p_λ(k) = k⁵ + β λ⁻² k³`.
    pub fn dispersion(&self, k: f64) -> f64 {
        dispersion(self.lambda, self.beta, k)
    }

    pub fn dispersion_at(&self, n: i64) -> f64 {
        self.dispersion(self.freq(n))
    }

    pub fn same_torus(&self, other: &TorusSpec) -> bool {
        self.lambda == other.lambda && self.beta == other.beta
    }

    /// `λ` as an integer when it is one.
    pub fn integer_lambda(&self) -> Option<u64> {
        (self.lambda.fract() == 0.0).then_some(self.lambda as u64)
    }
}

/// Dispersion relation `p_λ(k) = k⁵ + β λ⁻² k³`.
pub fn dispersion(lambda: f64, beta: Beta, k: f64) -> f64 {
    let k3 = k * k * k;
    k3 * k * k + beta.value() * k3 / (lambda * lambda)
}

/// Japanese bracket `⟨k⟩ = (1 + k²)^{1/2}`.
#[inline]
pub fn bracket(k: f64) -> f64 {
    (1.0 + k * k).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion(1.0, Beta::Plus, 1.0), 2.0);
        assert_eq!(dispersion(1.0, Beta::Minus, 2.0), 24.0);
        assert_eq!(dispersion(2.0, Beta::Plus, 0.5), 0.0625);
    }

    #[test]
    fn dispersion_is_odd() {
        for &b in &[Beta::Minus, Beta::Zero, Beta::Plus] {
            for n in 1..40 {
                let k = n as f64 / 3.0;
                assert_eq!(dispersion(3.0, b, -k), -dispersion(3.0, b, k));
            }
        }
    }

    #[test]
    fn index_roundtrip_skips_zero() {
        let spec = TorusSpec::unit(5, Beta::Zero);
        let idx: Vec<i64> = spec.indices().collect();
        assert_eq!(idx, vec![-5, -4, -3, -2, -1, 1, 2, 3, 4, 5]);
        for (p, n) in idx.iter().enumerate() {
            assert_eq!(spec.pos(*n), p);
        }
        assert!(!spec.contains(0));
        assert!(!spec.contains(6));
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(TorusSpec::new(0.5, 4, Beta::Zero).is_err());
        assert!(TorusSpec::new(2.0, 0, Beta::Zero).is_err());
        assert!(TorusSpec::new(f64::NAN, 4, Beta::Zero).is_err());
    }

    #[test]
    fn beta_serde() {
        let spec = TorusSpec::unit(3, Beta::Minus);
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"lambda":1.0,"K":3,"beta":-1}"#);
        let back: TorusSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<TorusSpec>(r#"{"lambda":1.0,"K":3,"beta":2}"#).is_err());
    }
}
