use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pivots smaller than this fraction of the largest matrix entry are treated
/// as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Dense complex LU factorization with partial (row) pivoting, row-major.
#[derive(Debug, Clone)]
pub struct ComplexLu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    /// max |u_ii| / min |u_ii|, a cheap lower bound on the condition number.
    pub pivot_ratio: f64,
}

impl ComplexLu {
    pub fn factor(n: usize, mut a: Vec<Complex64>) -> Result<Self> {
        assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if n == 0 || scale == 0.0 || !scale.is_finite() {
            return Err(Error::IllConditioned {
                pivot: 0.0,
                condition: f64::INFINITY,
            });
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let (mut pmax, mut pmin) = (0.0f64, f64::INFINITY);
        for k in 0..n {
            let (p, mag) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if mag < PIVOT_TOLERANCE * scale {
                return Err(Error::IllConditioned {
                    pivot: mag,
                    condition: if mag > 0.0 { pmax.max(scale) / mag } else { f64::INFINITY },
                });
            }
            pmax = pmax.max(mag);
            pmin = pmin.min(mag);
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                a[i * n + k] = f;
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self {
            n,
            lu: a,
            perm,
            pivot_ratio: pmax / pmin,
        })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}
