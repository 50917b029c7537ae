//! GMRES correction for one Newton step, built on a matrix-free Arnoldi
//! process with modified Gram-Schmidt orthogonalization and Givens
//! rotations. The raw power basis `J^j r` is replaced by the span-
//! equivalent orthonormal Arnoldi basis; the minimizer over the subspace
//! is identical and the arithmetic stays well conditioned.

use super::SolverConfig;
use crate::error::{CoreError, Result};
use crate::linalg::{axpy, dot, norm2, scale};

/// Computes the Newton correction `dz` minimizing `||S(z) + J(z) dz||_2`
/// over the Krylov subspace of dimension at most `config.krylov_dim`,
/// using finite-difference Jacobian-vector products, then rescales the
/// result so `||dz|| <= config.step_cap`.
///
/// The initial guess for the correction is zero, so the Krylov seed is
/// `r0 = -S(z)`. A zero residual returns the zero correction.
pub fn gmres_correction<F>(residual: F, z: &[f64], config: &SolverConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let s0 = residual(z)?;
    gmres_correction_with(&residual, z, &s0, config)
}

/// Same as [`gmres_correction`] but reuses a precomputed `S(z)`.
pub(crate) fn gmres_correction_with<F>(
    residual: &F,
    z: &[f64],
    s_at_z: &[f64],
    config: &SolverConfig,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = z.len();
    debug_assert_eq!(s_at_z.len(), n);
    let beta = norm2(s_at_z);
    if !beta.is_finite() {
        return Err(CoreError::NonFinite("gmres seed residual"));
    }
    if beta == 0.0 {
        return Ok(vec![0.0; n]);
    }

    let max_dim = config.krylov_dim.max(1).min(n);
    let z_norm = norm2(z);

    // Arnoldi basis and Hessenberg factors (column-major per iteration).
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_dim + 1);
    let mut h_cols: Vec<Vec<f64>> = Vec::with_capacity(max_dim);
    let mut cs: Vec<f64> = Vec::with_capacity(max_dim);
    let mut sn: Vec<f64> = Vec::with_capacity(max_dim);
    let mut g = vec![0.0; max_dim + 1];
    g[0] = beta;

    let mut v0: Vec<f64> = s_at_z.iter().map(|x| -x / beta).collect();
    scale_guard(&mut v0)?;
    basis.push(v0);

    let mut dims = 0;
    for j in 0..max_dim {
        // w = J(z) v_j by forward difference
        let eps = config.fd_epsilon(z_norm, 1.0);
        let probe: Vec<f64> = z.iter().zip(&basis[j]).map(|(zi, vi)| zi + eps * vi).collect();
        let s_probe = residual(&probe)?;
        let mut w: Vec<f64> = s_probe.iter().zip(s_at_z).map(|(a, b)| (a - b) / eps).collect();

        let mut h = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(&w, v);
            h[i] = hij;
            axpy(&mut w, -hij, v);
        }
        let w_norm = norm2(&w);
        h[j + 1] = w_norm;
        if !w_norm.is_finite() || h.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::NonFinite("gmres Hessenberg entries"));
        }

        // previously accumulated Givens rotations
        for i in 0..j {
            let (c, s) = (cs[i], sn[i]);
            let t = c * h[i] + s * h[i + 1];
            h[i + 1] = -s * h[i] + c * h[i + 1];
            h[i] = t;
        }
        let (c, s) = givens(h[j], h[j + 1]);
        cs.push(c);
        sn.push(s);
        h[j] = c * h[j] + s * h[j + 1];
        h[j + 1] = 0.0;
        let (g_j, g_j1) = (g[j], g[j + 1]);
        g[j] = c * g_j + s * g_j1;
        g[j + 1] = -s * g_j + c * g_j1;

        h_cols.push(h);
        dims = j + 1;

        if w_norm <= 1e-14 * beta {
            break; // invariant subspace found
        }
        let mut v = w;
        scale(&mut v, 1.0 / w_norm);
        basis.push(v);

        if g[j + 1].abs() <= 1e-14 * beta {
            break; // residual already at the floor
        }
    }

    // back-substitute the triangular system for the subspace coefficients
    let mut y = vec![0.0; dims];
    for i in (0..dims).rev() {
        let mut acc = g[i];
        for (k, yk) in y.iter().enumerate().take(dims).skip(i + 1) {
            acc -= h_cols[k][i] * yk;
        }
        let diag = h_cols[i][i];
        if diag.abs() < 1e-300 {
            y[i] = 0.0;
        } else {
            y[i] = acc / diag;
        }
    }

    let mut correction = vec![0.0; n];
    for (j, yj) in y.iter().enumerate() {
        axpy(&mut correction, *yj, &basis[j]);
    }
    if correction.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::NonFinite("gmres correction"));
    }

    let norm = norm2(&correction);
    if norm > config.step_cap {
        scale(&mut correction, config.step_cap / norm);
    }
    Ok(correction)
}

fn scale_guard(v: &mut [f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::NonFinite("gmres basis vector"));
    }
    Ok(())
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else if a.abs() > b.abs() {
        let t = b / a;
        let c = 1.0 / (1.0 + t * t).sqrt();
        (c, c * t)
    } else {
        let t = a / b;
        let s = 1.0 / (1.0 + t * t).sqrt();
        (s * t, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn linear_residual<'a>(
        a: &'a DenseMatrix,
        b: &'a [f64],
    ) -> impl Fn(&[f64]) -> Result<Vec<f64>> + 'a {
        move |z: &[f64]| {
            let mut r = a.matvec(z);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= bi;
            }
            Ok(r)
        }
    }

    #[test]
    fn zero_residual_returns_zero_correction() {
        let config = SolverConfig::default();
        let correction =
            gmres_correction(|_| Ok(vec![0.0, 0.0]), &[1.0, 2.0], &config).unwrap();
        assert_eq!(correction, vec![0.0, 0.0]);
    }

    #[test]
    fn solves_linear_system_in_full_subspace() {
        // S(z) = A z - b; one full-dimension correction from z = 0 lands on
        // the solution of A dz = b.
        let n = 6;
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            a.set(i, i, 3.0 + i as f64);
            if i + 1 < n {
                a.set(i, i + 1, -1.0);
                a.set(i + 1, i, -0.5);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.25).collect();
        let config = SolverConfig { krylov_dim: n, step_cap: 1e6, ..Default::default() };
        let z0 = vec![0.0; n];
        let residual = linear_residual(&a, &b);
        let dz = gmres_correction(residual, &z0, &config).unwrap();
        let r = a.matvec(&dz);
        let rel: f64 = r
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
            / norm2(&b);
        assert!(rel < 1e-8, "relative residual {rel}");
    }

    #[test]
    fn step_cap_rescales_to_exact_length() {
        let n = 4;
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            a.set(i, i, 0.01); // small diagonal forces a long correction
        }
        let b = vec![1.0; n];
        let config = SolverConfig { krylov_dim: n, step_cap: 1.0, ..Default::default() };
        let dz = gmres_correction(linear_residual(&a, &b), &vec![0.0; n], &config).unwrap();
        assert!((norm2(&dz) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_norm_non_increasing_in_subspace_dimension() {
        let n = 12;
        let mut a = DenseMatrix::zeros(n);
        // deterministic well-conditioned non-symmetric matrix
        for i in 0..n {
            for j in 0..n {
                let v = if i == j {
                    6.0 + (i as f64) * 0.3
                } else {
                    ((i * 7 + j * 3) % 5) as f64 * 0.1 - 0.2
                };
                a.set(i, j, v);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| ((i * 13 % 7) as f64) - 3.0).collect();
        let z0 = vec![0.0; n];
        let mut last = f64::INFINITY;
        for dim in 1..=n {
            let config = SolverConfig { krylov_dim: dim, step_cap: 1e9, ..Default::default() };
            let dz = gmres_correction(linear_residual(&a, &b), &z0, &config).unwrap();
            let r = a.matvec(&dz);
            let res: f64 = r.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            assert!(res <= last + 1e-9, "dim {dim}: {res} > {last}");
            last = res;
        }
        assert!(last < 1e-7);
    }
}
