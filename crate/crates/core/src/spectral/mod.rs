//! Lattice discretization of −L + V on balls and boxes with exterior killing,
//! principal eigenvalues, and the studies built on them.

mod eigen;
mod ids;
mod kernel;
pub mod linalg;
mod studies;

use nalgebra::DMatrix;

pub use eigen::{
    eigen_ladder, lowest_eigenvalues, principal_eigenvalue, principal_eigenvalue_with, richardson, EigenResult, EigenSolver,
    Extrapolation, LadderRow, DENSE_LIMIT,
};
pub use ids::{eigenvalue_counts, free_ids, ids_estimate, IdsPoint, IdsReport, IdsSpec};
pub use kernel::{radial_moment, Generator, KernelTable};
pub use studies::{
    eigen_sandwich_check, gaussian_reference, grid_search, grid_search_lambda_at, lower_bound_margin, scaling_check,
    GridSearchReport, GridSearchSpec, LowerBoundMargin, SandwichReport, ScalingRow,
};

use crate::error::{usage, Result};
use crate::geometry::Domain;

/// Assembled −L on the lattice nodes of a domain, plus a nodal potential.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub generator: Generator,
    pub domain: Domain,
    pub h: f64,
    /// Integer lattice offsets of the nodes relative to the domain center.
    pub lattice: Vec<Vec<i64>>,
    /// Node coordinates, row-major `n × d`.
    pub nodes: Vec<f64>,
    /// −L restricted to the nodes (symmetric, weakly diagonally dominant).
    pub generator_matrix: DMatrix<f64>,
    /// Killing rate κ(x): mass sent to the exterior or beyond the lattice.
    pub kappa: Vec<f64>,
    /// V at the nodes; `+∞` removes a node.
    pub potential: Vec<f64>,
}

/// Lattice offsets k with hk inside the domain (h must divide the half-extent).
pub fn domain_lattice(domain: &Domain, h: f64) -> Result<Vec<Vec<i64>>> {
    let ext = domain.half_extent();
    let m_f = ext / h;
    let m = m_f.round();
    if !(h > 0.0) || (m_f - m).abs() > 1e-9 * m_f.max(1.0) {
        return usage(format!("h = {h} does not divide the domain half-extent {ext}"));
    }
    let m = m as i64;
    if 2 * m - 1 < 8 {
        return usage(format!("h = {h} too coarse: fewer than 8 nodes across the domain"));
    }
    let d = domain.dim();
    let mut out = Vec::new();
    let mut k = vec![-(m - 1); d];
    loop {
        let inside = match domain {
            Domain::Ball { .. } => k.iter().map(|v| v * v).sum::<i64>() < m * m,
            Domain::Cube { .. } => true,
        };
        if inside {
            out.push(k.clone());
        }
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            k[i] += 1;
            if k[i] < m {
                break;
            }
            k[i] = -(m - 1);
        }
    }
}

/// Assemble −L on `domain` with spacing h and nodal potential `v`
/// (`v` empty means V ≡ 0).
pub fn assemble(generator: &Generator, domain: &Domain, h: f64, v: &[f64]) -> Result<DiscreteOperator> {
    if domain.dim() != generator.dim() {
        return usage("domain and generator dimensions differ");
    }
    if let Generator::Levy(m) = generator {
        m.validate()?;
    }
    let lattice = domain_lattice(domain, h)?;
    let n = lattice.len();
    if !v.is_empty() && v.len() != n {
        return usage(format!("potential has {} values for {n} nodes", v.len()));
    }
    if v.iter().any(|x| x.is_nan() || *x < 0.0) {
        return usage("potential must be nonnegative");
    }
    let reach = lattice.iter().flat_map(|k| k.iter().map(|v| v.unsigned_abs() as usize)).max().unwrap_or(0) * 2;
    let table = KernelTable::new(generator, h, reach.max(1))?;
    let d = domain.dim();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut kappa = vec![table.total_rate; n];
    let mut off = vec![0i64; d];
    for i in 0..n {
        for j in 0..i {
            for (o, (x, y)) in off.iter_mut().zip(lattice[i].iter().zip(&lattice[j])) {
                *o = x - y;
            }
            let w = table.weight(&off);
            a[(i, j)] = -w;
            a[(j, i)] = -w;
            kappa[i] -= w;
            kappa[j] -= w;
        }
    }
    // roundoff can leave κ at −1e-16 for nodes deep inside large domains
    for (i, k) in kappa.iter_mut().enumerate() {
        *k = k.max(0.0);
        a[(i, i)] = table.total_rate;
    }
    let center = domain.center();
    let nodes = lattice.iter().flat_map(|k| k.iter().zip(center).map(|(ki, c)| c + h * *ki as f64).collect::<Vec<_>>()).collect();
    Ok(DiscreteOperator {
        generator: *generator,
        domain: domain.clone(),
        h,
        lattice,
        nodes,
        generator_matrix: a,
        kappa,
        potential: if v.is_empty() { vec![0.0; n] } else { v.to_vec() },
    })
}

impl DiscreteOperator {
    pub fn n(&self) -> usize {
        self.lattice.len()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.nodes[i * d..(i + 1) * d]
    }

    /// Cell volume h^d (discrete measure of one node).
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    /// |D_h| = n·h^d.
    pub fn discrete_volume(&self) -> f64 {
        self.n() as f64 * self.cell_volume()
    }

    pub fn with_potential(mut self, v: Vec<f64>) -> Result<Self> {
        if v.len() != self.n() {
            return usage("potential length mismatch");
        }
        self.potential = v;
        Ok(self)
    }

    /// Indices of nodes with finite potential.
    pub fn active_nodes(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.potential[i].is_finite()).collect()
    }

    /// −L + s·V on the active nodes.
    pub fn matrix(&self, s: f64) -> (DMatrix<f64>, Vec<usize>) {
        let active = self.active_nodes();
        let m = active.len();
        let mut a = DMatrix::zeros(m, m);
        for (p, &i) in active.iter().enumerate() {
            for (q, &j) in active.iter().enumerate() {
                a[(p, q)] = self.generator_matrix[(i, j)];
            }
            a[(p, p)] += s * self.potential[i];
        }
        (a, active)
    }

    /// Apply −L (V excluded) to nodal values f (f = 0 outside the domain).
    pub fn apply_generator(&self, f: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(f);
        (&self.generator_matrix * v).iter().copied().collect()
    }
}
