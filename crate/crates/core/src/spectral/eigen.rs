use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{assemble, DiscreteOperator, Generator};
use crate::error::{usage, Error, Result};
use crate::geometry::Domain;

/// Size up to which the dense symmetric eigensolver is the default.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenSolver {
    #[default]
    Auto,
    Dense,
    /// Inverse iteration with a Cholesky factorization of −L + V.
    InverseIteration,
}

/// Richardson extrapolation over h, h/2, h/4 with an estimated order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub value: f64,
    pub err_est: f64,
    /// Observed convergence order p in λ(h) ≈ λ + c·h^p.
    pub order: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Nodal values (over active nodes mapped back to all nodes, 0 on blocked
    /// ones), normalized to Σ e² h^d = 1 and positive.
    pub eigenvector: Vec<f64>,
    pub h: f64,
    pub n: usize,
    /// ‖(−L+V)e − λ₁e‖/‖e‖.
    pub residual: f64,
    pub extrapolated: Option<Extrapolation>,
}

impl EigenResult {
    /// Rayleigh quotient of the stored eigenvector.
    pub fn rayleigh(&self, op: &DiscreteOperator) -> f64 {
        let (a, active) = op.matrix(1.0);
        let e = DVector::from_iterator(active.len(), active.iter().map(|&i| self.eigenvector[i]));
        e.dot(&(&a * &e)) / e.dot(&e)
    }
}

pub fn principal_eigenvalue(op: &DiscreteOperator) -> Result<EigenResult> {
    principal_eigenvalue_with(op, EigenSolver::Auto, 1.0)
}

/// Principal eigenpair of −L + s·V.
pub fn principal_eigenvalue_with(op: &DiscreteOperator, solver: EigenSolver, s: f64) -> Result<EigenResult> {
    let (a, active) = op.matrix(s);
    if active.is_empty() {
        return usage("every node is blocked by an infinite potential");
    }
    let m = active.len();
    let use_dense = match solver {
        EigenSolver::Dense => true,
        EigenSolver::InverseIteration => false,
        EigenSolver::Auto => m <= 400,
    };
    let (lambda, vec) = if use_dense { dense_min(&a) } else { inverse_iteration(&a)? };
    let residual = (&a * &vec - lambda * &vec).norm() / vec.norm();
    if residual > 1e-8 * lambda.abs().max(1.0) {
        return Err(Error::NonConvergence { iterations: 0, residual });
    }
    let scale = (op.cell_volume() * vec.dot(&vec)).sqrt();
    let sign = if vec.sum() < 0.0 { -1.0 } else { 1.0 };
    let mut full = vec![0.0; op.n()];
    for (p, &i) in active.iter().enumerate() {
        full[i] = sign * vec[p] / scale;
    }
    Ok(EigenResult { lambda1: lambda, eigenvector: full, h: op.h, n: m, residual, extrapolated: None })
}

fn dense_min(a: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = a.clone().symmetric_eigen();
    let (k, &lambda) = eig.eigenvalues.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).expect("nonempty matrix");
    (lambda, eig.eigenvectors.column(k).into_owned())
}

fn inverse_iteration(a: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let chol = a.clone().cholesky().ok_or_else(|| Error::Factorization("−L + V is not positive definite".into()))?;
    let m = a.nrows();
    let mut x = DVector::from_element(m, 1.0 / (m as f64).sqrt());
    let mut residual = f64::INFINITY;
    for it in 0..2000 {
        let mut y = chol.solve(&x);
        y /= y.norm();
        let ay = a * &y;
        let lambda = y.dot(&ay);
        residual = (&ay - lambda * &y).norm();
        x = y;
        if residual <= 1e-10 * lambda.max(1.0) {
            return Ok((lambda, x));
        }
        if it > 50 && residual.is_nan() {
            break;
        }
    }
    Err(Error::NonConvergence { iterations: 2000, residual })
}

/// All eigenvalues of −L + V (ascending), k smallest.
pub fn lowest_eigenvalues(op: &DiscreteOperator, k: usize) -> Vec<f64> {
    let (a, _) = op.matrix(1.0);
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.truncate(k);
    ev
}

/// λ(h), λ(h/2), λ(h/4) ↦ extrapolated λ with an order estimate.
/// The order is clamped to [0.25, 4]; when the differences do not contract
/// the error estimate falls back to the last difference.
pub fn richardson(l0: f64, l1: f64, l2: f64) -> Extrapolation {
    let d1 = l0 - l1;
    let d2 = l1 - l2;
    let ratio = d1 / d2;
    if !(ratio.is_finite() && ratio > 1.0) {
        return Extrapolation { value: l2, err_est: d2.abs().max(d1.abs()), order: f64::NAN };
    }
    let order = ratio.log2().clamp(0.25, 4.0);
    let corr = d2 / (2f64.powf(order) - 1.0);
    Extrapolation { value: l2 - corr, err_est: corr.abs(), order }
}

/// One rung of an h-ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderRow {
    pub r: f64,
    pub h: f64,
    pub lambda1: f64,
    pub lambda1_extrap: Option<f64>,
    pub err_est: Option<f64>,
}

/// λ₁ on `domain` for h₀, h₀/2, h₀/4 with V given as a function of position,
/// returning the finest result carrying the extrapolation.
pub fn eigen_ladder<F: Fn(&[f64]) -> f64>(
    generator: &Generator,
    domain: &Domain,
    h0: f64,
    potential: F,
) -> Result<(EigenResult, Vec<LadderRow>)> {
    let mut results = Vec::new();
    for level in 0..3 {
        let h = h0 / f64::from(1u32 << level);
        let op = assemble(generator, domain, h, &[])?;
        let v: Vec<f64> = (0..op.n()).map(|i| potential(op.node(i))).collect();
        let op = op.with_potential(v)?;
        results.push(principal_eigenvalue(&op)?);
    }
    let ex = richardson(results[0].lambda1, results[1].lambda1, results[2].lambda1);
    let r = domain.half_extent();
    let rows = results
        .iter()
        .enumerate()
        .map(|(i, e)| LadderRow {
            r,
            h: e.h,
            lambda1: e.lambda1,
            lambda1_extrap: (i == 2).then_some(ex.value),
            err_est: (i == 2).then_some(ex.err_est),
        })
        .collect();
    let mut best = results.pop().expect("three levels");
    best.extrapolated = Some(ex);
    Ok((best, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevyModel;

    #[test]
    fn richardson_recovers_power_law() {
        let f = |h: f64| 2.0 + 3.0 * h.powf(1.5);
        let e = richardson(f(0.1), f(0.05), f(0.025));
        assert!((e.value - 2.0).abs() < 1e-12);
        assert!((e.order - 1.5).abs() < 1e-9);
    }

    #[test]
    fn laplacian_matches_sine_mode() {
        // discrete −Δ on (−1,1): (4/h²)sin²(πh/4)
        let g = Generator::Laplacian { dim: 1, a: 1.0 };
        let h = 0.05;
        let op = assemble(&g, &Domain::centered_ball(1, 1.0), h, &[]).unwrap();
        let want = 4.0 / (h * h) * (std::f64::consts::PI * h / 4.0).sin().powi(2);
        for solver in [EigenSolver::Dense, EigenSolver::InverseIteration] {
            let e = principal_eigenvalue_with(&op, solver, 1.0).unwrap();
            assert!((e.lambda1 - want).abs() < 1e-9 * want);
            assert!(e.eigenvector.iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn constant_shift() {
        let g = Generator::Levy(LevyModel::stable(1, 1.0).unwrap());
        let op = assemble(&g, &Domain::centered_ball(1, 1.0), 0.1, &[]).unwrap();
        let base = principal_eigenvalue(&op).unwrap().lambda1;
        let n = op.n();
        let shifted = principal_eigenvalue(&op.with_potential(vec![0.7; n]).unwrap()).unwrap().lambda1;
        assert!((shifted - base - 0.7).abs() < 1e-10);
    }
}
