//! Small dense linear algebra kernels used by the flow solver and the
//! Krylov machinery. Problem sizes here top out around the bus count of a
//! transmission case, so a dense LU with partial pivoting is plenty.

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Matrix-vector product `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for (a, xi) in row.iter().zip(x) {
                acc += a * xi;
            }
            y[i] = acc;
        }
        y
    }

    /// Solves `A x = b` by LU factorization with partial pivoting,
    /// consuming the matrix. Returns `None` when a pivot collapses.
    pub fn solve_into(mut self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        if n == 0 {
            return Some(Vec::new());
        }
        let a = &mut self.data;
        let mut x = b.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();

        for col in 0..n {
            // pivot search
            let mut pivot_row = col;
            let mut pivot_val = a[perm[col] * n + col].abs();
            for row in (col + 1)..n {
                let v = a[perm[row] * n + col].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = row;
                }
            }
            if pivot_val < 1e-12 {
                return None;
            }
            perm.swap(col, pivot_row);
            let prow = perm[col];
            let pivot = a[prow * n + col];
            for row in (col + 1)..n {
                let r = perm[row];
                let factor = a[r * n + col] / pivot;
                if factor != 0.0 {
                    a[r * n + col] = factor;
                    for k in (col + 1)..n {
                        a[r * n + k] -= factor * a[prow * n + k];
                    }
                } else {
                    a[r * n + col] = 0.0;
                }
            }
        }

        // forward substitution on the permuted right-hand side
        let mut y = vec![0.0; n];
        for i in 0..n {
            let r = perm[i];
            let mut acc = x[r];
            for j in 0..i {
                acc -= a[r * n + j] * y[j];
            }
            y[i] = acc;
        }
        // back substitution
        for i in (0..n).rev() {
            let r = perm[i];
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= a[r * n + j] * x[j];
            }
            x[i] = acc / a[r * n + i];
        }
        Some(x)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(y: &mut [f64], alpha: f64) {
    for yi in y.iter_mut() {
        *yi *= alpha;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let mut a = DenseMatrix::zeros(3);
        let rows = [[4.0, -1.0, 0.0], [-1.0, 4.0, -1.0], [0.0, -1.0, 4.0]];
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                a.set(i, j, *v);
            }
        }
        let b = [1.0, 2.0, 3.0];
        let x = a.clone().solve_into(&b).unwrap();
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let mut a = DenseMatrix::zeros(2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 4.0);
        assert!(a.solve_into(&[1.0, 1.0]).is_none());
    }

    #[test]
    fn lu_needs_pivoting() {
        // zero on the leading diagonal forces a row swap
        let mut a = DenseMatrix::zeros(2);
        a.set(0, 0, 0.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 0.0);
        let x = a.solve_into(&[3.0, 7.0]).unwrap();
        assert_eq!(x, vec![7.0, 3.0]);
    }
}
