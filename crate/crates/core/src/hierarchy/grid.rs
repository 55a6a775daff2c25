use num_complex::Complex64;

use crate::exec::Exec;

/// Dense table of an `l`-multiplier over `(n_1, …, n_{l−1}) ∈ [−K, K]^{l−1}`.
///
/// The closing index `n_l = −Σ n_i` is implied. Entries whose tuple has a
/// zero index or a closing index outside the lattice are stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierGrid {
    l: usize,
    k_max: usize,
    values: Vec<Complex64>,
}

impl MultiplierGrid {
    /// Evaluates `f` on every admissible tuple, in parallel over `n_1`.
    pub fn build(l: usize, k_max: usize, exec: Exec, f: impl Fn(&[i64]) -> Complex64 + Sync + Send) -> Self {
        assert!(l >= 2, "grid arity must be at least 2");
        let width = 2 * k_max + 1;
        let k = k_max as i64;
        let slab = width.pow(l as u32 - 2);
        let chunks = exec.map(0..width, |p0| {
            let mut out = vec![Complex64::default(); slab];
            let n0 = p0 as i64 - k;
            if n0 == 0 {
                return out;
            }
            let mut idx = vec![0i64; l];
            idx[0] = n0;
            for (r, slot) in out.iter_mut().enumerate() {
                let mut rem = r;
                let mut sum = n0;
                let mut ok = true;
                for d in (1..l - 1).rev() {
                    let n = (rem % width) as i64 - k;
                    rem /= width;
                    idx[d] = n;
                    sum += n;
                    ok &= n != 0;
                }
                let last = -sum;
                if !ok || last == 0 || last.abs() > k {
                    continue;
                }
                idx[l - 1] = last;
                *slot = f(&idx);
            }
            out
        });
        MultiplierGrid {
            l,
            k_max,
            values: chunks.concat(),
        }
    }

    pub fn arity(&self) -> usize {
        self.l
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a tuple; only the first `l − 1` entries are read.
    #[inline]
    pub fn get(&self, idx: &[i64]) -> Complex64 {
        let width = 2 * self.k_max as i64 + 1;
        let k = self.k_max as i64;
        let mut off = 0i64;
        for &n in &idx[..self.l - 1] {
            off = off * width + (n + k);
        }
        self.values[off as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}
