use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{bracket, IMultiplier, TorusSpec};
use crate::error::{Error, Result};

/// Complex series coefficients of a mean-zero function on `T_λ`.
///
/// Immutable after construction: every operation returns a new field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    spec: TorusSpec,
    coeffs: Vec<Complex64>,
    is_real: bool,
}

/// JSON sidecar accompanying a field CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k_max: usize,
    pub beta: i8,
}

fn hermitian(spec: &TorusSpec, c: &[Complex64]) -> bool {
    (1..=spec.k_max as i64).all(|n| c[spec.pos(-n)] == c[spec.pos(n)].conj())
}

impl SpectralField {
    pub fn zeros(spec: TorusSpec) -> Self {
        SpectralField {
            spec,
            coeffs: vec![Complex64::new(0.0, 0.0); spec.len()],
            is_real: true,
        }
    }

    /// Wraps raw coefficients in storage order (`n = −K … −1, 1 … K`).
    /// The reality flag is set when the data is exactly Hermitian.
    pub fn from_coeffs(spec: TorusSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != spec.len() {
            return Err(Error::invalid(
                "coeffs",
                format!("expected {} coefficients, got {}", spec.len(), coeffs.len()),
            ));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::invalid("coeffs", "non-finite coefficient"));
        }
        let is_real = hermitian(&spec, &coeffs);
        Ok(SpectralField { spec, coeffs, is_real })
    }

    /// Field with `c_n = f(n)` for every admissible `n`.
    pub fn from_fn(spec: TorusSpec, f: impl Fn(i64) -> Complex64) -> Self {
        let coeffs: Vec<Complex64> = spec.indices().map(f).collect();
        let is_real = hermitian(&spec, &coeffs);
        SpectralField { spec, coeffs, is_real }
    }

    /// Real field from its positive-index coefficients; `c_{−n} = conj(c_n)`.
    pub fn real_from_fn(spec: TorusSpec, f: impl Fn(i64) -> Complex64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); spec.len()];
        for n in 1..=spec.k_max as i64 {
            let c = f(n);
            coeffs[spec.pos(n)] = c;
            coeffs[spec.pos(-n)] = c.conj();
        }
        SpectralField {
            spec,
            coeffs,
            is_real: true,
        }
    }

    /// Real field `Σ_j a_j cos(n_j x / λ)`.
    pub fn cosines(spec: TorusSpec, terms: &[(i64, f64)]) -> Self {
        SpectralField::real_from_fn(spec, |n| {
            let a: f64 = terms.iter().filter(|(m, _)| *m == n).map(|(_, a)| a).sum();
            Complex64::new(a / 2.0, 0.0)
        })
    }

    pub(crate) fn from_parts(spec: TorusSpec, coeffs: Vec<Complex64>, is_real: bool) -> Self {
        debug_assert_eq!(coeffs.len(), spec.len());
        let mut f = SpectralField {
            spec,
            coeffs,
            is_real: false,
        };
        if is_real {
            f.make_hermitian();
        }
        f
    }

    /// Projects onto the Hermitian subspace and raises the reality flag.
    fn make_hermitian(&mut self) {
        for n in 1..=self.spec.k_max as i64 {
            let (p, m) = (self.spec.pos(n), self.spec.pos(-n));
            let c = (self.coeffs[p] + self.coeffs[m].conj()) * 0.5;
            self.coeffs[p] = c;
            self.coeffs[m] = c.conj();
        }
        self.is_real = true;
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn get(&self, n: i64) -> Complex64 {
        if self.spec.contains(n) {
            self.coeffs[self.spec.pos(n)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// `(n, c_n)` in storage order.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(p, c)| (self.spec.index(p), *c))
    }

    /// Transform value `û(k) = √(2π) λ c_n`.
    pub fn hat(&self, n: i64) -> Complex64 {
        self.get(n) * ((TAU).sqrt() * self.spec.lambda)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// `‖u‖_{Ḣ^s(T_λ)} = ( λ⁻¹ Σ ⟨k⟩^{2s} |û(k)|² )^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let sum: f64 = self
            .modes()
            .map(|(n, c)| bracket(self.spec.freq(n)).powf(2.0 * s) * c.norm_sqr())
            .sum();
        (TAU * self.spec.lambda * sum).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Coefficient-wise product with `w(k)`.
    ///
    /// Reality survives exactly when `w(−k) = conj(w(k))` on the lattice,
    /// which covers the even-real and odd-imaginary cases.
    pub fn apply_multiplier(&self, w: impl Fn(f64) -> Complex64) -> Result<SpectralField> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        let mut symbol = Vec::with_capacity(self.coeffs.len());
        for (n, c) in self.modes() {
            let k = self.spec.freq(n);
            let wk = w(k);
            if !(wk.re.is_finite() && wk.im.is_finite()) {
                return Err(Error::NonFiniteMultiplier { k });
            }
            symbol.push(wk);
            out.push(c * wk);
        }
        let symbol_hermitian =
            (1..=self.spec.k_max as i64).all(|n| symbol[self.spec.pos(-n)] == symbol[self.spec.pos(n)].conj());
        let is_real = self.is_real && symbol_hermitian;
        Ok(SpectralField {
            spec: self.spec,
            coeffs: out,
            is_real,
        })
    }

    /// `∂_x u`.
    pub fn derivative(&self) -> SpectralField {
        self.map_modes(|n, c| c * Complex64::new(0.0, self.spec.freq(n)), self.is_real)
    }

    /// `J^σ u = F⁻¹ ⟨k⟩^σ F u`.
    pub fn bessel(&self, sigma: f64) -> SpectralField {
        self.map_modes(|n, c| c * bracket(self.spec.freq(n)).powf(sigma), self.is_real)
    }

    /// `I u = F⁻¹ m(k) F u`.
    pub fn i_operator(&self, im: &IMultiplier) -> SpectralField {
        self.map_modes(|n, c| c * im.value(self.spec.freq(n)), self.is_real)
    }

    /// `‖Iu‖²_{L²}` summed directly over the modes.
    pub fn i_norm_sq(&self, im: &IMultiplier) -> f64 {
        let sum: f64 = self
            .modes()
            .map(|(n, c)| im.value(self.spec.freq(n)).powi(2) * c.norm_sqr())
            .sum();
        TAU * self.spec.lambda * sum
    }

    pub(crate) fn map_modes(&self, f: impl Fn(i64, Complex64) -> Complex64, keeps_real: bool) -> SpectralField {
        let coeffs = self.modes().map(|(n, c)| f(n, c)).collect();
        SpectralField {
            spec: self.spec,
            coeffs,
            is_real: keeps_real,
        }
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        self.map_modes(|_, c| c * a, self.is_real)
    }

    pub fn scale_complex(&self, a: Complex64) -> SpectralField {
        self.map_modes(|_, c| c * a, self.is_real && a.im == 0.0)
    }

    /// The same function on a lattice truncated or padded to `K'`.
    pub fn with_k_max(&self, k_max: usize) -> SpectralField {
        let spec = self.spec.with_k_max(k_max);
        let coeffs = spec.indices().map(|n| self.get(n)).collect();
        SpectralField {
            spec,
            coeffs,
            is_real: self.is_real,
        }
    }

    /// Data rescaling `u_{0,λ}(x) = λ⁻⁴ u_0(x/λ)` from `T` onto `T_λ`.
    ///
    /// `e^{inx}` becomes `e^{i(n/λ)x}`, so index `n` is kept and only the
    /// frequency attached to it shrinks. `λ` must be an integer.
    pub fn rescale(&self, lambda_new: f64) -> Result<SpectralField> {
        if self.spec.lambda != 1.0 {
            return Err(Error::invalid("u0", "rescaling starts from the unit torus"));
        }
        if !(lambda_new >= 1.0 && lambda_new.fract() == 0.0) {
            return Err(Error::invalid(
                "lambda_new",
                format!("must be an integer >= 1, got {lambda_new}"),
            ));
        }
        let spec = TorusSpec::new(lambda_new, self.spec.k_max, self.spec.beta)?;
        let factor = lambda_new.powi(-4);
        Ok(SpectralField {
            spec,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            is_real: self.is_real,
        })
    }

    /// Point value `u(x)`.
    pub fn eval(&self, x: f64) -> Complex64 {
        self.modes()
            .map(|(n, c)| c * Complex64::from_polar(1.0, self.spec.freq(n) * x))
            .sum()
    }

    /// `∫_{T_λ} |u|²` by the trapezoid rule on `4K + 1` equispaced nodes.
    /// Exact for the trigonometric polynomials stored here.
    pub fn quadrature_l2_sq(&self) -> f64 {
        let m = 4 * self.spec.k_max + 1;
        let period = 2.0 * PI * self.spec.lambda;
        let h = period / m as f64;
        (0..m).map(|j| self.eval(j as f64 * h).norm_sqr()).sum::<f64>() * h
    }

    pub fn check_finite(&self, t: f64) -> Result<()> {
        if self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { t })
        }
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            lambda: self.spec.lambda,
            k_max: self.spec.k_max,
            beta: self.spec.beta.into(),
        }
    }

    fn zip(&self, other: &SpectralField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert!(self.spec == other.spec, "combining fields on different lattices");
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(*a, *b)).collect();
        SpectralField {
            spec: self.spec,
            coeffs,
            is_real: self.is_real && other.is_real,
        }
    }

    /// `self + a · other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> SpectralField {
        self.zip(other, |x, y| x + y * a)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        self.scale(a)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}
