//! The first-order optimality system for the bounded contingency search.
//!
//! For `min J(delta)` over `Omega = {delta | v_i(delta) <= 0}` the unknown
//! vector `z = (delta, mu, omega, sigma)` must satisfy
//!
//! ```text
//! grad J(delta) + sum_i mu_i grad v_i(delta) = 0   (stationarity)
//! v_i(delta) + omega_i^2                    = 0   (primal feasibility)
//! mu_i * v_i(delta)                         = 0   (complementarity)
//! mu_i - sigma_i^2                          = 0   (dual feasibility)
//! ```
//!
//! where the squared slacks encode the inequalities as equations.

use crate::error::Result;
use crate::identify::gradient_fd;
use crate::linalg::norm2;

type ValueFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type CostFn = Box<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;
type AnalyticGradFn = Box<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// One inequality constraint `v(delta) <= 0` with its analytic gradient.
pub struct Constraint {
    value: ValueFn,
    gradient: GradFn,
}

impl Constraint {
    pub fn new(value: ValueFn, gradient: GradFn) -> Self {
        Self { value, gradient }
    }

    /// `v(delta) = bound - delta_k <= 0`, gradient `-e_k`.
    pub fn lower_bound(component: usize, bound: f64) -> Self {
        Self {
            value: Box::new(move |delta: &[f64]| bound - delta[component]),
            gradient: Box::new(move |delta: &[f64]| {
                let mut g = vec![0.0; delta.len()];
                g[component] = -1.0;
                g
            }),
        }
    }

    /// `v(delta) = delta_k - bound <= 0`, gradient `+e_k`.
    pub fn upper_bound(component: usize, bound: f64) -> Self {
        Self {
            value: Box::new(move |delta: &[f64]| delta[component] - bound),
            gradient: Box::new(move |delta: &[f64]| {
                let mut g = vec![0.0; delta.len()];
                g[component] = 1.0;
                g
            }),
        }
    }

    pub fn value(&self, delta: &[f64]) -> f64 {
        (self.value)(delta)
    }

    pub fn gradient(&self, delta: &[f64]) -> Vec<f64> {
        (self.gradient)(delta)
    }
}

/// How the cost gradient entering the stationarity block is obtained.
pub enum CostGradient {
    /// Forward differences of the cost map (the default; one extra cost
    /// evaluation per component).
    ForwardDifference { eps: f64 },
    /// Caller-supplied analytic gradient, for costs with known form.
    Analytic(AnalyticGradFn),
}

/// The packed unknown vector `z = (delta, mu, omega, sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktVector {
    pub delta: Vec<f64>,
    pub mu: Vec<f64>,
    pub omega: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl KktVector {
    pub fn dim(&self) -> usize {
        self.delta.len() + self.mu.len() + self.omega.len() + self.sigma.len()
    }

    pub fn pack(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.dim());
        flat.extend_from_slice(&self.delta);
        flat.extend_from_slice(&self.mu);
        flat.extend_from_slice(&self.omega);
        flat.extend_from_slice(&self.sigma);
        flat
    }

    pub fn unpack(flat: &[f64], dim_delta: usize, n_constraints: usize) -> Self {
        debug_assert_eq!(flat.len(), dim_delta + 3 * n_constraints);
        let (delta, rest) = flat.split_at(dim_delta);
        let (mu, rest) = rest.split_at(n_constraints);
        let (omega, sigma) = rest.split_at(n_constraints);
        Self {
            delta: delta.to_vec(),
            mu: mu.to_vec(),
            omega: omega.to_vec(),
            sigma: sigma.to_vec(),
        }
    }
}

/// The four residual blocks of the optimality system.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResidual {
    pub stationarity: Vec<f64>,
    pub primal: Vec<f64>,
    pub complementarity: Vec<f64>,
    pub dual: Vec<f64>,
}

impl KktResidual {
    pub fn pack(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(
            self.stationarity.len() + self.primal.len() + self.complementarity.len() + self.dual.len(),
        );
        flat.extend_from_slice(&self.stationarity);
        flat.extend_from_slice(&self.primal);
        flat.extend_from_slice(&self.complementarity);
        flat.extend_from_slice(&self.dual);
        flat
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.pack())
    }
}

/// A bounded minimization problem in residual form.
pub struct KktProblem {
    pub dim_delta: usize,
    pub cost: CostFn,
    pub cost_gradient: CostGradient,
    pub constraints: Vec<Constraint>,
}

impl KktProblem {
    /// Box-constrained problem over `bounds[k] = (lower_k, upper_k)`.
    pub fn boxed(cost: CostFn, cost_gradient: CostGradient, bounds: &[(f64, f64)]) -> Self {
        let mut constraints = Vec::with_capacity(2 * bounds.len());
        for (k, (lower, upper)) in bounds.iter().enumerate() {
            constraints.push(Constraint::lower_bound(k, *lower));
            constraints.push(Constraint::upper_bound(k, *upper));
        }
        Self { dim_delta: bounds.len(), cost, cost_gradient, constraints }
    }

    pub fn dim(&self) -> usize {
        self.dim_delta + 3 * self.constraints.len()
    }

    /// Initial unknown vector at `delta0`: multipliers and sigma start at
    /// zero and the omega slacks make the primal block exactly feasible
    /// wherever `v_i(delta0) <= 0`.
    pub fn initial_vector(&self, delta0: &[f64]) -> KktVector {
        let n = self.constraints.len();
        let omega = self
            .constraints
            .iter()
            .map(|c| (-c.value(delta0)).max(0.0).sqrt())
            .collect();
        KktVector {
            delta: delta0.to_vec(),
            mu: vec![0.0; n],
            omega,
            sigma: vec![0.0; n],
        }
    }

    /// Residual as a flat vector, for feeding the Newton-Krylov solver.
    pub fn residual_flat(&self, flat: &[f64]) -> Result<Vec<f64>> {
        let z = KktVector::unpack(flat, self.dim_delta, self.constraints.len());
        Ok(kkt_residual(self, &z)?.pack())
    }

    pub fn cost_gradient_at(&self, delta: &[f64]) -> Result<Vec<f64>> {
        match &self.cost_gradient {
            CostGradient::ForwardDifference { eps } => gradient_fd(&self.cost, delta, *eps),
            CostGradient::Analytic(g) => g(delta),
        }
    }
}

/// Evaluates all four blocks of the optimality residual at `z`.
pub fn kkt_residual(problem: &KktProblem, z: &KktVector) -> Result<KktResidual> {
    let mut stationarity = problem.cost_gradient_at(&z.delta)?;
    let n = problem.constraints.len();
    let mut primal = Vec::with_capacity(n);
    let mut complementarity = Vec::with_capacity(n);
    let mut dual = Vec::with_capacity(n);
    for (i, constraint) in problem.constraints.iter().enumerate() {
        let v = constraint.value(&z.delta);
        let grad = constraint.gradient(&z.delta);
        for (s, g) in stationarity.iter_mut().zip(&grad) {
            *s += z.mu[i] * g;
        }
        primal.push(v + z.omega[i] * z.omega[i]);
        complementarity.push(z.mu[i] * v);
        dual.push(z.mu[i] - z.sigma[i] * z.sigma[i]);
    }
    Ok(KktResidual { stationarity, primal, complementarity, dual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_problem(center: f64, gradient: CostGradient) -> KktProblem {
        KktProblem::boxed(
            Box::new(move |d: &[f64]| Ok((d[0] - center) * (d[0] - center))),
            gradient,
            &[(0.0, 10.0)],
        )
    }

    #[test]
    fn residual_zero_at_interior_stationary_point() {
        // J = (d - 3)^2 over [0, 10]: optimum packing d = 3, mu = 0,
        // omega = (sqrt(3), sqrt(7)), sigma = 0 substituted by hand.
        let problem = quadratic_problem(
            3.0,
            CostGradient::Analytic(Box::new(|d: &[f64]| Ok(vec![2.0 * (d[0] - 3.0)]))),
        );
        let z = KktVector {
            delta: vec![3.0],
            mu: vec![0.0, 0.0],
            omega: vec![3.0_f64.sqrt(), 7.0_f64.sqrt()],
            sigma: vec![0.0, 0.0],
        };
        let r = kkt_residual(&problem, &z).unwrap();
        // squaring sqrt(3) and sqrt(7) reintroduces one rounding each
        assert!(r.norm() < 1e-14, "norm {}", r.norm());
        assert_eq!(r.stationarity, vec![0.0]);
        assert_eq!(r.complementarity, vec![0.0, 0.0]);
        assert_eq!(r.dual, vec![0.0, 0.0]);
    }

    #[test]
    fn residual_near_zero_with_forward_difference_gradient() {
        let problem = quadratic_problem(3.0, CostGradient::ForwardDifference { eps: 1e-8 });
        let z = problem.initial_vector(&[3.0]);
        let r = kkt_residual(&problem, &z).unwrap();
        // the forward difference of (d-3)^2 at 3 is exactly eps
        assert!(r.norm() <= 1.1e-8, "norm {}", r.norm());
    }

    #[test]
    fn complementarity_block_is_elementwise_product() {
        let problem = quadratic_problem(3.0, CostGradient::ForwardDifference { eps: 1e-6 });
        let z = KktVector {
            delta: vec![2.0],
            mu: vec![0.5, -1.5],
            omega: vec![0.0, 0.0],
            sigma: vec![0.0, 0.0],
        };
        let r = kkt_residual(&problem, &z).unwrap();
        // v1 = 0 - 2 = -2, v2 = 2 - 10 = -8
        assert_eq!(r.complementarity, vec![0.5 * -2.0, -1.5 * -8.0]);
    }

    #[test]
    fn pack_unpack_round_trips() {
        let z = KktVector {
            delta: vec![1.0, -2.0],
            mu: vec![0.25],
            omega: vec![3.0],
            sigma: vec![-0.5],
        };
        let flat = z.pack();
        assert_eq!(flat.len(), 2 + 3);
        let back = KktVector::unpack(&flat, 2, 1);
        assert_eq!(back, z);
    }

    #[test]
    fn initial_vector_is_primal_feasible_inside_the_box() {
        let problem = quadratic_problem(3.0, CostGradient::ForwardDifference { eps: 1e-6 });
        let z = problem.initial_vector(&[4.0]);
        let r = kkt_residual(&problem, &z).unwrap();
        assert!(r.primal.iter().all(|p| p.abs() < 1e-12));
        assert!(r.complementarity.iter().all(|c| *c == 0.0));
        assert!(r.dual.iter().all(|d| *d == 0.0));
    }
}
