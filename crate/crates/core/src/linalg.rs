//! Dense LU factorization with partial pivoting, shared across several
//! right-hand sides.

use crate::scalar::Scalar;

/// Pivots smaller than this in magnitude mark the matrix as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// `PA = LU` packed in one row-major buffer.
#[derive(Debug, Clone)]
pub struct LuFactors<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

/// The factorization hit a pivot below [`PIVOT_TOLERANCE`] at this column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular {
    pub column: usize,
}

impl<T: Scalar> LuFactors<T> {
    /// Factors the `n x n` row-major matrix `a`.
    pub fn factor(n: usize, mut a: Vec<T>) -> Result<Self, Singular> {
        assert_eq!(a.len(), n * n, "matrix buffer size");
        let mut perm: Vec<usize> = (0..n).collect();
        let tol = T::lit(PIVOT_TOLERANCE);
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].abs();
            for r in k + 1..n {
                let v = a[r * n + k].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if !(best >= tol) {
                return Err(Singular { column: k });
            }
            if piv != k {
                for c in 0..n {
                    a.swap(k * n + c, piv * n + c);
                }
                perm.swap(k, piv);
            }
            let d = a[k * n + k];
            for r in k + 1..n {
                let f = a[r * n + k] / d;
                a[r * n + k] = f;
                if f == T::zero() {
                    continue;
                }
                for c in k + 1..n {
                    a[r * n + c] = a[r * n + c] - f * a[k * n + c];
                }
            }
        }
        Ok(LuFactors { n, lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length");
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut acc = x[r];
            for c in 0..r {
                acc = acc - self.lu[r * n + c] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in r + 1..n {
                acc = acc - self.lu[r * n + c] * x[c];
            }
            x[r] = acc / self.lu[r * n + r];
        }
        x
    }
}
