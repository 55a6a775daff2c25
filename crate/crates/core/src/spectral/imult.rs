use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierVariant {
    /// `m(ξ) = min(1, (|ξ|/N)^s)`.
    #[default]
    Kink,
    /// Cubic Hermite bridge on `N < |ξ| < 2N`, C¹ at both ends.
    Smooth,
}

/// The I-method weight `m(ξ)`: 1 for `|ξ| ≤ N`, `|ξ|^s N^{-s}` for `|ξ| ≥ 2N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IMultiplier {
    pub s: f64,
    #[serde(rename = "N")]
    pub n_threshold: f64,
    #[serde(default)]
    pub variant: MultiplierVariant,
}

impl IMultiplier {
    pub fn new(s: f64, n_threshold: f64, variant: MultiplierVariant) -> Result<Self> {
        if !(s < 0.0 && s.is_finite()) {
            return Err(Error::invalid("s", format!("must be negative, got {s}")));
        }
        if !(n_threshold >= 1.0 && n_threshold.is_finite()) {
            return Err(Error::invalid("N", format!("must be >= 1, got {n_threshold}")));
        }
        Ok(IMultiplier {
            s,
            n_threshold,
            variant,
        })
    }

    pub fn kink(s: f64, n_threshold: f64) -> Self {
        IMultiplier::new(s, n_threshold, MultiplierVariant::Kink).expect("valid I-multiplier")
    }

    pub fn value(&self, xi: f64) -> f64 {
        let a = xi.abs();
        let n = self.n_threshold;
        if a <= n {
            return 1.0;
        }
        match self.variant {
            MultiplierVariant::Kink => (a / n).powf(self.s),
            MultiplierVariant::Smooth => {
                if a >= 2.0 * n {
                    return (a / n).powf(self.s);
                }
                // Hermite data on t ∈ [0,1]: values 1 → 2^s, slopes 0 → s 2^{s-1}.
                let t = (a - n) / n;
                let y1 = 2f64.powf(self.s);
                let d1 = self.s * 2f64.powf(self.s - 1.0);
                let h00 = 2.0 * t * t * t - 3.0 * t * t + 1.0;
                let h01 = -2.0 * t * t * t + 3.0 * t * t;
                let h11 = t * t * t - t * t;
                h00 + h01 * y1 + h11 * d1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mandated_branches() {
        for variant in [MultiplierVariant::Kink, MultiplierVariant::Smooth] {
            let m = IMultiplier::new(-1.0, 8.0, variant).unwrap();
            assert_eq!(m.value(4.0), 1.0);
            assert_eq!(m.value(8.0), 1.0);
            assert_eq!(m.value(16.0), 0.5);
            assert_eq!(m.value(40.0), 0.2);
            assert_eq!(m.value(-40.0), 0.2);
        }
    }

    #[test]
    fn kink_interpolation_value() {
        let m = IMultiplier::kink(-1.0, 10.0);
        assert!((m.value(15.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_even_and_bounded() {
        for variant in [MultiplierVariant::Kink, MultiplierVariant::Smooth] {
            for s in [-0.1, -0.5, -1.0, -1.5, -3.0] {
                let m = IMultiplier::new(s, 7.0, variant).unwrap();
                let mut prev = 1.0;
                for j in 0..4000 {
                    let xi = j as f64 * 0.01;
                    let v = m.value(xi);
                    assert!(v > 0.0 && v <= 1.0);
                    assert!(v <= prev + 1e-15, "not monotone at {xi} ({variant:?}, s={s})");
                    assert_eq!(v, m.value(-xi));
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn smooth_variant_is_c1_at_joins() {
        let m = IMultiplier::new(-1.3, 5.0, MultiplierVariant::Smooth).unwrap();
        let h = 1e-6;
        let d_left_n = (m.value(5.0) - m.value(5.0 - h)) / h;
        let d_right_n = (m.value(5.0 + h) - m.value(5.0)) / h;
        assert!((d_left_n - d_right_n).abs() < 1e-5);
        let d_left_2n = (m.value(10.0) - m.value(10.0 - h)) / h;
        let d_right_2n = (m.value(10.0 + h) - m.value(10.0)) / h;
        assert!((d_left_2n - d_right_2n).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(IMultiplier::new(0.5, 4.0, MultiplierVariant::Kink).is_err());
        assert!(IMultiplier::new(-1.0, 0.5, MultiplierVariant::Kink).is_err());
    }
}
