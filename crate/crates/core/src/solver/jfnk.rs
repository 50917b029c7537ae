//! Newton iteration driven by GMRES corrections.

use super::gmres::gmres_correction_with;
use super::SolverConfig;
use crate::error::{CoreError, Result};
use crate::linalg::norm2;

/// Forward-difference Jacobian-vector product `(S(z + eps r) - S(z)) / eps`.
///
/// Exact for affine `S` regardless of `eps`; for twice-differentiable `S`
/// the error is bounded by `(eps ||r||^2 / 2) sup ||S''||` along the probe
/// segment.
pub fn jvp<F>(residual: F, z: &[f64], r: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    debug_assert!(eps > 0.0);
    if r.iter().all(|x| *x == 0.0) {
        return Ok(vec![0.0; z.len()]);
    }
    let base = residual(z)?;
    let probe: Vec<f64> = z.iter().zip(r).map(|(zi, ri)| zi + eps * ri).collect();
    let shifted = residual(&probe)?;
    Ok(shifted.iter().zip(&base).map(|(a, b)| (a - b) / eps).collect())
}

/// Outcome of a Newton-Krylov solve.
#[derive(Debug, Clone)]
pub struct JfnkResult {
    /// Final iterate.
    pub z: Vec<f64>,
    /// Newton steps taken.
    pub steps: usize,
    /// Relative step sizes `eps_{s+1} = ||dz^s|| / ||z^s||` per step.
    pub history: Vec<f64>,
    /// Whether the relative-step tolerance was met within `s_max`.
    pub converged: bool,
    /// The last correction applied (useful for increment-bound checks).
    pub last_increment: Vec<f64>,
}

/// Iterates `z^{s+1} = z^s + dz^s` with GMRES-minimized corrections until
/// the relative step `||dz^s|| / ||z^s||` drops to `eps_min` or `s_max`
/// steps have run. Non-convergence is reported in the result, not as an
/// error; the final iterate is always returned.
pub fn jfnk_solve<F>(residual: F, z0: &[f64], config: &SolverConfig) -> Result<JfnkResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if z0.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::NonFinite("jfnk initial iterate"));
    }
    let mut z = z0.to_vec();
    let mut history = Vec::new();
    let mut last_increment = vec![0.0; z.len()];
    let mut converged = false;
    let mut steps = 0;

    for _ in 0..config.max_newton_steps {
        let s_at_z = residual(&z)?;
        if s_at_z.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::NonFinite("jfnk residual"));
        }
        let correction = gmres_correction_with(&residual, &z, &s_at_z, config)?;
        let z_norm = norm2(&z);
        let step_norm = norm2(&correction);
        for (zi, ci) in z.iter_mut().zip(&correction) {
            *zi += ci;
        }
        steps += 1;
        let relative = if z_norm > 0.0 { step_norm / z_norm } else { step_norm };
        history.push(relative);
        last_increment = correction;
        if relative <= config.eps_min {
            converged = true;
            break;
        }
    }

    Ok(JfnkResult { z, steps, history, converged, last_increment })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jvp_along_zero_direction_is_zero() {
        let out = jvp(|z| Ok(vec![z[0] * z[0]]), &[2.0], &[0.0], 1e-6).unwrap();
        assert_eq!(out, vec![0.0]);
    }

    #[test]
    fn jvp_exact_on_affine_maps() {
        // S(z) = A z + b with A = [[2, -1], [0.5, 3]]. With dyadic inputs
        // and a dyadic eps every operation is exact, so the forward
        // difference reproduces J r bit for bit at any step size.
        let residual = |z: &[f64]| {
            Ok(vec![2.0 * z[0] - z[1] + 0.75, 0.5 * z[0] + 3.0 * z[1] - 1.25])
        };
        for eps in [0.125, 0.5, 1.0, 4.0] {
            let out = jvp(residual, &[0.5, -0.75], &[1.0, 2.0], eps).unwrap();
            assert_eq!(out, vec![0.0, 6.5], "eps {eps}");
        }
        // non-dyadic data still only sees rounding noise, independent of eps
        let noisy = |z: &[f64]| Ok(vec![2.0 * z[0] - z[1] + 0.7, 0.5 * z[0] + 3.0 * z[1] - 1.1]);
        for eps in [1e-6, 1e-3, 0.1] {
            let out = jvp(noisy, &[0.3, -0.8], &[1.0, 2.0], eps).unwrap();
            assert!((out[0] - 0.0).abs() < 1e-8, "eps {eps}: {out:?}");
            assert!((out[1] - 6.5).abs() < 1e-8, "eps {eps}: {out:?}");
        }
    }

    #[test]
    fn jvp_matches_analytic_jacobian_on_quadratic() {
        // S(z) = (z1^2, z1 z2); at z = (1,1) with r = (1,0) the product is
        // J r = (2, 1).
        let residual = |z: &[f64]| Ok(vec![z[0] * z[0], z[0] * z[1]]);
        let out = jvp(residual, &[1.0, 1.0], &[1.0, 0.0], 1e-6).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-5);
        assert!((out[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scalar_root_converges() {
        let config = SolverConfig::default();
        let result = jfnk_solve(|z| Ok(vec![z[0] * z[0] - 4.0]), &[3.0], &config).unwrap();
        assert!(result.converged, "history {:?}", result.history);
        assert!((result.z[0] - 2.0).abs() < 1e-7);
        assert!(result.steps <= 50);
    }

    #[test]
    fn starting_at_root_stops_immediately() {
        let config = SolverConfig::default();
        let result = jfnk_solve(|z| Ok(vec![z[0] * z[0] - 4.0]), &[2.0], &config).unwrap();
        assert!(result.converged);
        assert!(result.steps <= 1);
        assert!(result.history.iter().all(|e| *e <= config.eps_min));
    }

    #[test]
    fn two_dimensional_quadratic_system_converges() {
        // roots of (z1 + z2 - 3, z1 z2 - 2) are (1, 2) and (2, 1)
        let residual = |z: &[f64]| Ok(vec![z[0] + z[1] - 3.0, z[0] * z[1] - 2.0]);
        let config = SolverConfig::default();
        let result = jfnk_solve(residual, &[3.0, 0.5], &config).unwrap();
        assert!(result.converged);
        let (a, b) = (result.z[0], result.z[1]);
        let near = |x: f64, y: f64| (x - y).abs() < 1e-6;
        assert!((near(a, 2.0) && near(b, 1.0)) || (near(a, 1.0) && near(b, 2.0)), "{:?}", result.z);
    }

    #[test]
    fn halts_within_budget_on_rootless_system() {
        // S(z) = z^2 + 1 has no real root; the solver must still halt and
        // report non-convergence.
        let config = SolverConfig { max_newton_steps: 25, ..Default::default() };
        let result = jfnk_solve(|z| Ok(vec![z[0] * z[0] + 1.0]), &[0.7], &config).unwrap();
        assert!(!result.converged);
        assert_eq!(result.steps, 25);
    }
}
