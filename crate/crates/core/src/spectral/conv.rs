use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{SpectralField, TorusSpec};

/// Exact truncated products `P_K(u v)` by zero-padded FFT.
///
/// The padded length is a power of two at least `2(2K + 1)`, far above the
/// `3K + 1` needed to keep the product of two degree-`K` polynomials free
/// of wrap-around, so the result equals the direct convolution sum up to
/// rounding. Each convolver owns its plans and scratch space; create one per
/// trajectory or per thread.
pub struct Convolver {
    spec: TorusSpec,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("spec", &self.spec)
            .field("len", &self.len)
            .finish()
    }
}

impl Convolver {
    pub fn new(spec: TorusSpec) -> Self {
        let len = (2 * (2 * spec.k_max + 1)).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Convolver {
            spec,
            len,
            forward,
            inverse,
            a: vec![Complex64::default(); len],
            b: vec![Complex64::default(); len],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn padded_len(&self) -> usize {
        self.len
    }

    fn load(spec: &TorusSpec, len: usize, u: &SpectralField, buf: &mut [Complex64]) {
        buf.iter_mut().for_each(|z| *z = Complex64::default());
        for (n, c) in u.modes() {
            buf[n.rem_euclid(len as i64) as usize] = c;
        }
        debug_assert_eq!(spec.k_max, u.spec().k_max);
    }

    /// `P_K(u v)` with the zero mode dropped.
    pub fn product(&mut self, u: &SpectralField, v: &SpectralField) -> SpectralField {
        assert!(
            u.spec() == &self.spec && v.spec() == &self.spec,
            "convolver built for a different lattice"
        );
        Self::load(&self.spec, self.len, u, &mut self.a);
        self.inverse.process_with_scratch(&mut self.a, &mut self.scratch);
        if std::ptr::eq(u, v) {
            self.a.iter_mut().for_each(|z| *z = *z * *z);
        } else {
            Self::load(&self.spec, self.len, v, &mut self.b);
            self.inverse.process_with_scratch(&mut self.b, &mut self.scratch);
            self.a.iter_mut().zip(&self.b).for_each(|(x, y)| *x *= *y);
        }
        self.forward.process_with_scratch(&mut self.a, &mut self.scratch);
        let inv = 1.0 / self.len as f64;
        let len = self.len as i64;
        let coeffs = self
            .spec
            .indices()
            .map(|n| self.a[n.rem_euclid(len) as usize] * inv)
            .collect();
        SpectralField::from_parts(self.spec, coeffs, u.is_real() && v.is_real())
    }

    pub fn square(&mut self, u: &SpectralField) -> SpectralField {
        self.product(u, u)
    }
}

/// `P_K(u v)` by the direct `O(K²)` convolution sum.
pub fn product_direct(u: &SpectralField, v: &SpectralField) -> SpectralField {
    assert!(u.spec() == v.spec(), "fields on different lattices");
    let spec = *u.spec();
    let k = spec.k_max as i64;
    let coeffs = spec
        .indices()
        .map(|n| {
            let lo = (n - k).max(-k);
            let hi = (n + k).min(k);
            (lo..=hi)
                .filter(|&n1| n1 != 0 && n1 != n)
                .map(|n1| u.get(n1) * v.get(n - n1))
                .sum()
        })
        .collect();
    SpectralField::from_parts(spec, coeffs, u.is_real() && v.is_real())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use crate::spectral::Beta;

    fn random_field(spec: TorusSpec, seed: u64) -> SpectralField {
        let mut rng = CounterRng::new(seed);
        let vals: Vec<Complex64> = (0..spec.len())
            .map(|_| Complex64::new(rng.normal(), rng.normal()))
            .collect();
        SpectralField::from_fn(spec, |n| vals[spec.pos(n)])
    }

    #[test]
    fn fft_matches_direct_sum() {
        for k in [1usize, 2, 5, 16, 33] {
            let spec = TorusSpec::unit(k, Beta::Plus);
            let u = random_field(spec, 1 + k as u64);
            let v = random_field(spec, 100 + k as u64);
            let mut conv = Convolver::new(spec);
            let fast = conv.product(&u, &v);
            let slow = product_direct(&u, &v);
            let scale = slow.max_abs();
            for (a, b) in fast.coeffs().iter().zip(slow.coeffs()) {
                assert!((a - b).norm() <= 1e-13 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn cosine_square() {
        // cos² x = 1/2 + cos(2x)/2; the constant is dropped.
        let spec = TorusSpec::unit(4, Beta::Zero);
        let u = SpectralField::cosines(spec, &[(1, 1.0)]);
        let mut conv = Convolver::new(spec);
        let sq = conv.square(&u);
        assert!(sq.is_real());
        assert!((sq.get(2) - Complex64::new(0.25, 0.0)).norm() < 1e-16);
        assert!(sq.get(1).norm() < 1e-16);
        assert!(sq.get(3).norm() < 1e-16);
    }

    #[test]
    fn padded_length() {
        let conv = Convolver::new(TorusSpec::unit(128, Beta::Zero));
        assert!(conv.padded_len() >= 2 * 257);
    }
}
