//! Jacobian-free Newton-Krylov machinery and the KKT system it solves.

mod gmres;
mod jfnk;
mod kkt;

pub use gmres::gmres_correction;
pub use jfnk::{jfnk_solve, jvp, JfnkResult};
pub use kkt::{kkt_residual, Constraint, CostGradient, KktProblem, KktResidual, KktVector};

use serde::{Deserialize, Serialize};

/// Tuning parameters for the JFNK solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Floor for the finite-difference epsilon used in Jacobian-vector
    /// products. The effective epsilon for a unit direction is
    /// `max(eps_fd, sqrt(machine eps) * (1 + ||z||))`.
    pub eps_fd: f64,
    /// Relative-step convergence tolerance `eps_min`.
    pub eps_min: f64,
    /// Newton step cap `c`: corrections are rescaled so `||dz|| <= c`.
    pub step_cap: f64,
    /// Maximum Krylov subspace dimension (capped by the problem size).
    pub krylov_dim: usize,
    /// Maximum Newton iterations `s_max`.
    pub max_newton_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_fd: 1e-7,
            eps_min: 1e-8,
            step_cap: 1.0,
            krylov_dim: 30,
            max_newton_steps: 50,
        }
    }
}

impl SolverConfig {
    /// Finite-difference epsilon for a direction of norm `r_norm` at the
    /// current iterate `z`.
    pub(crate) fn fd_epsilon(&self, z_norm: f64, r_norm: f64) -> f64 {
        let machine = (f64::EPSILON).sqrt();
        let adaptive = if r_norm > 0.0 { machine * (1.0 + z_norm) / r_norm } else { machine };
        self.eps_fd.max(adaptive)
    }
}
