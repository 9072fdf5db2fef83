use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use super::eigen::{eigen_ladder, principal_eigenvalue, Extrapolation};
use super::linalg::expm;
use super::{assemble, DiscreteOperator, Generator};
use crate::error::{usage, Result};
use crate::field::{q1_constant, sample_field, PoissonField, ShapeFunction};
use crate::geometry::Domain;

/// First zero of J₀: λ₁ of −Δ on the unit disc is j₀₁².
const J01: f64 = 2.404_825_557_695_773;

/// λ₁ of −aΔ on the unit ball (d ∈ {1, 2, 3}).
pub fn gaussian_reference(d: usize, a: f64) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => a * PI * PI / 4.0,
        2 => a * J01 * J01,
        _ => a * PI * PI,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub r: f64,
    /// Finest spacing used.
    pub h: f64,
    pub lambda1: f64,
    pub lambda1_extrap: f64,
    pub err_est: f64,
    pub order: f64,
    /// λ₁(B(0,r))·r^α with α the scaling index (2 for tempered laws).
    pub scaled: f64,
}

/// λ₁(B(0,r))·r^α over `r_list`, each from an h₀, h₀/2, h₀/4 ladder with the
/// same absolute h₀ (which must divide every r).
pub fn scaling_check(generator: &Generator, r_list: &[f64], h0: f64) -> Result<Vec<ScalingRow>> {
    let d = generator.dim();
    let idx = generator.scaling_index();
    r_list
        .iter()
        .map(|&r| {
            if !(1.0..=50.0).contains(&r) {
                return usage(format!("radius {r} outside [1, 50]"));
            }
            let (res, _) = eigen_ladder(generator, &Domain::centered_ball(d, r), h0, |_| 0.0)?;
            let ex: Extrapolation = res.extrapolated.expect("ladder extrapolates");
            Ok(ScalingRow {
                r,
                h: res.h,
                lambda1: res.lambda1,
                lambda1_extrap: ex.value,
                err_est: ex.err_est,
                order: ex.order,
                scaled: ex.value * r.powf(idx),
            })
        })
        .collect()
}

/// Both sides of the semigroup/eigenvalue sandwich at the discrete level:
/// h^d·1ᵀP_t1 ≤ |D_h|e^{−tλ₁} and e^{−tλ₁} ≤ tr P_t, P_t = e^{−t(−L+V)}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub t: f64,
    pub n: usize,
    pub lambda1: f64,
    /// h^d Σ_{x,y} P_t(x,y): ∫_D∫_D p^D(t,x,y).
    pub column_integral: f64,
    /// |D_h|e^{−tλ₁}.
    pub upper: f64,
    /// e^{−tλ₁}.
    pub lower: f64,
    /// tr P_t from the matrix exponential.
    pub trace: f64,
    /// Σ_k e^{−tλ_k} from the eigenvalues.
    pub spectral_trace: f64,
    pub trace_identity_err: f64,
    pub upper_holds: bool,
    pub lower_holds: bool,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.upper_holds && self.lower_holds
    }
}

pub fn eigen_sandwich_check(op: &DiscreteOperator, t: f64) -> Result<SandwichReport> {
    if !(t > 0.0) {
        return usage("t must be positive");
    }
    let (a, active) = op.matrix(1.0);
    if active.is_empty() {
        return usage("every node is blocked");
    }
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let lambda1 = ev[0];
    let p = expm(&(a * -t));
    let hd = op.cell_volume();
    let n = active.len();
    let column_integral = hd * p.sum();
    let upper = n as f64 * hd * (-t * lambda1).exp();
    let lower = (-t * lambda1).exp();
    let trace = p.trace();
    let spectral_trace: f64 = ev.iter().map(|l| (-t * l).exp()).sum();
    // roundoff slack only: both inequalities are exact for the discrete semigroup
    let slack = 1e-12;
    Ok(SandwichReport {
        t,
        n,
        lambda1,
        column_integral,
        upper,
        lower,
        trace,
        spectral_trace,
        trace_identity_err: (trace - spectral_trace).abs(),
        upper_holds: column_integral <= upper * (1.0 + slack),
        lower_holds: lower <= trace * (1.0 + slack),
    })
}

/// One evaluation of λ_{V,B(0,R)} ≥ (1−ε)(k₀/(d log R))^{γ/d}, γ = α∧β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundMargin {
    pub r: f64,
    pub seed: u64,
    pub lambda: f64,
    pub bound: f64,
    /// λ / bound; below 1 is a violation at this R.
    pub ratio: f64,
}

pub fn lower_bound_margin(lambda: f64, k0: f64, d: usize, r: f64, eps: f64, gamma: f64, seed: u64) -> LowerBoundMargin {
    let bound = (1.0 - eps) * (k0 / (d as f64 * r.ln())).powf(gamma / d as f64);
    LowerBoundMargin { r, seed, lambda, bound, ratio: lambda / bound }
}

/// Grid search for a low-eigenvalue ball in the heavy-tail regime.
#[derive(Debug, Clone)]
pub struct GridSearchSpec {
    pub generator: Generator,
    pub shape: ShapeFunction,
    pub rho: f64,
    pub t: f64,
    /// M: ball radius M(log t)^{β/(dα)}.
    pub m_const: f64,
    /// κ: window half-width t(log t)^{−κ}.
    pub kappa: f64,
    /// N: lattice spacing 2(log t)^N.
    pub n_exp: f64,
    pub seed: u64,
    /// Nodes per radius for the coarse solve (≥ 5).
    pub coarse_m: usize,
    /// Nodes per radius for refining the best candidates.
    pub refine_m: usize,
    pub refine_top: usize,
    /// Budget on the number of centers scanned.
    pub max_centers: usize,
    /// Extra field beyond window + radius.
    pub field_margin: f64,
}

impl GridSearchSpec {
    pub fn new(generator: Generator, shape: ShapeFunction, rho: f64, t: f64, seed: u64) -> Self {
        Self {
            generator,
            shape,
            rho,
            t,
            m_const: 1.0,
            kappa: 1.0,
            n_exp: 1.0,
            seed,
            coarse_m: 6,
            refine_m: 12,
            refine_top: 5,
            max_centers: 20_000,
            field_margin: 20.0,
        }
    }

    fn alpha(&self) -> f64 {
        match self.generator {
            Generator::Levy(m) => m.alpha(),
            Generator::Laplacian { .. } => 2.0,
        }
    }

    pub fn radius(&self) -> f64 {
        let d = self.generator.dim() as f64;
        self.m_const * self.t.ln().powf(self.shape.beta / (d * self.alpha()))
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.t.ln().powf(self.n_exp)
    }

    pub fn window(&self) -> f64 {
        self.t * self.t.ln().powf(-self.kappa)
    }

    /// λ(t) = q₁(log t)^{−β/d}.
    pub fn lambda_t(&self) -> f64 {
        let d = self.generator.dim();
        q1_constant(d, self.shape.beta, self.rho, self.shape.k) * self.t.ln().powf(-self.shape.beta / d as f64)
    }

    /// Lattice centers in lexicographic order.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        let d = self.generator.dim();
        let s = self.spacing();
        let m = (self.window() / s).floor() as i64;
        let mut out = Vec::new();
        let mut k = vec![-m; d];
        loop {
            out.push(k.iter().map(|&v| v as f64 * s).collect());
            let mut i = d;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                k[i] += 1;
                if k[i] <= m {
                    break;
                }
                k[i] = -m;
            }
        }
    }

    pub fn sample_field(&self) -> Result<PoissonField> {
        sample_field(self.generator.dim(), self.rho, self.window() + self.radius() + self.field_margin, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearchReport {
    pub center: Vec<f64>,
    pub lambda: f64,
    pub lambda_t: f64,
    pub ratio: f64,
    pub radius: f64,
    pub spacing: f64,
    pub window: f64,
    pub centers_total: usize,
    pub centers_scanned: usize,
    pub partial: bool,
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Ball eigenproblem at arbitrary centers on one field, reusing the assembled
/// generator (it is translation invariant).
struct BallSolver<'a> {
    base: DiscreteOperator,
    field: &'a PoissonField,
    shape: &'a ShapeFunction,
}

impl<'a> BallSolver<'a> {
    fn new(spec: &'a GridSearchSpec, field: &'a PoissonField, m: usize) -> Result<Self> {
        let d = spec.generator.dim();
        let r = spec.radius();
        let base = assemble(&spec.generator, &Domain::centered_ball(d, r), r / m as f64, &[])?;
        Ok(Self { base, field, shape: &spec.shape })
    }

    fn lambda_at(&self, z: &[f64]) -> Result<f64> {
        let d = z.len();
        let mut x = vec![0.0; d];
        let v = (0..self.base.n())
            .map(|i| {
                for (k, xk) in x.iter_mut().enumerate() {
                    *xk = self.base.node(i)[k] + z[k];
                }
                self.field.potential_unchecked(self.shape, &x)
            })
            .collect();
        Ok(principal_eigenvalue(&self.base.clone().with_potential(v)?)?.lambda1)
    }
}

pub fn grid_search(spec: &GridSearchSpec) -> Result<GridSearchReport> {
    if !(spec.t > std::f64::consts::E) {
        return usage("t must exceed e");
    }
    if spec.coarse_m < 5 || spec.refine_m < spec.coarse_m {
        return usage("need 5 ≤ coarse_m ≤ refine_m");
    }
    let field = spec.sample_field()?;
    let mut centers = spec.centers();
    let total = centers.len();
    let partial = total > spec.max_centers;
    if partial {
        // keep the centers nearest the origin, still in lexicographic order
        let mut by_dist: Vec<usize> = (0..total).collect();
        by_dist.sort_by(|&i, &j| {
            let (a, b) = (crate::geometry::norm(&centers[i]), crate::geometry::norm(&centers[j]));
            a.total_cmp(&b).then(i.cmp(&j))
        });
        let mut keep: Vec<usize> = by_dist[..spec.max_centers].to_vec();
        keep.sort_unstable();
        centers = keep.into_iter().map(|i| centers[i].clone()).collect();
    }
    let coarse = BallSolver::new(spec, &field, spec.coarse_m)?;
    let coarse_l: Vec<f64> = centers.par_iter().map(|z| coarse.lambda_at(z)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by(|&i, &j| coarse_l[i].total_cmp(&coarse_l[j]).then_with(|| lex_cmp(&centers[i], &centers[j])));
    order.truncate(spec.refine_top.max(1));
    let fine = BallSolver::new(spec, &field, spec.refine_m)?;
    let mut refined: Vec<(f64, usize)> = order.iter().map(|&i| Ok((fine.lambda_at(&centers[i])?, i))).collect::<Result<_>>()?;
    refined.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex_cmp(&centers[a.1], &centers[b.1])));
    let (lambda, best) = refined[0];
    let lambda_t = spec.lambda_t();
    Ok(GridSearchReport {
        center: centers[best].clone(),
        lambda,
        lambda_t,
        ratio: lambda / lambda_t,
        radius: spec.radius(),
        spacing: spec.spacing(),
        window: spec.window(),
        centers_total: total,
        centers_scanned: centers.len(),
        partial,
    })
}

/// λ on the same field and ball radius at given centers, at the refine resolution.
pub fn grid_search_lambda_at(spec: &GridSearchSpec, centers: &[Vec<f64>]) -> Result<Vec<f64>> {
    let field = spec.sample_field()?;
    let solver = BallSolver::new(spec, &field, spec.refine_m)?;
    centers.par_iter().map(|z| solver.lambda_at(z)).collect()
}
