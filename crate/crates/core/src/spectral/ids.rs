use rayon::prelude::*;
use serde::Serialize;

use super::eigen::DENSE_LIMIT;
use super::linalg::count_below;
use super::{assemble, DiscreteOperator, Generator};
use crate::error::{usage, Result};
use crate::field::{sample_field, ShapeFunction};
use crate::geometry::Domain;
use crate::rng;
use crate::stats::MeanVar;

/// Inputs of an integrated-density-of-states estimate on [−R, R]^d.
#[derive(Debug, Clone)]
pub struct IdsSpec {
    pub generator: Generator,
    pub shape: ShapeFunction,
    pub rho: f64,
    pub lambda_grid: Vec<f64>,
    /// R
    pub half_width: f64,
    /// Extra field margin beyond the box (potential tail certificate).
    pub field_margin: f64,
    pub n_fields: usize,
    pub h: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdsPoint {
    pub lambda: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub stderr: f64,
    /// λ^{d/(α∧β)}·log N(λ); NaN when N(λ) = 0.
    pub lifshitz_diag: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdsReport {
    pub points: Vec<IdsPoint>,
    pub fields_used: usize,
    pub skipped: usize,
    pub nodes: usize,
}

/// Eigenvalue counts below each λ (dense spectrum below the dense limit,
/// LDLᵀ inertia above). Blocked nodes (V = ∞) carry no eigenvalue.
pub fn eigenvalue_counts(op: &DiscreteOperator, grid: &[f64]) -> Vec<usize> {
    let (a, active) = op.matrix(1.0);
    if active.is_empty() {
        return vec![0; grid.len()];
    }
    if active.len() <= DENSE_LIMIT {
        let ev = a.symmetric_eigenvalues();
        grid.iter().map(|&l| ev.iter().filter(|&&e| e < l).count()).collect()
    } else {
        grid.iter().map(|&l| count_below(&a, l)).collect()
    }
}

fn lifshitz_exponent(generator: &Generator, shape: &ShapeFunction) -> f64 {
    let d = generator.dim() as f64;
    let alpha = match generator {
        Generator::Levy(m) => m.alpha(),
        Generator::Laplacian { .. } => 2.0,
    };
    d / alpha.min(shape.beta)
}

pub fn ids_estimate(spec: &IdsSpec) -> Result<IdsReport> {
    if spec.n_fields == 0 {
        return usage("n_fields must be positive");
    }
    let d = spec.generator.dim();
    let domain = Domain::cube(&vec![0.0; d], spec.half_width);
    let base = assemble(&spec.generator, &domain, spec.h, &[])?;
    if base.n() < 1000 {
        return usage(format!("box holds {} lattice nodes; at least 1000 required", base.n()));
    }
    let counts: Vec<Option<Vec<usize>>> = (0..spec.n_fields)
        .into_par_iter()
        .map(|i| {
            let seed = rng::derive_seed(spec.seed, i as u64);
            let field = sample_field(d, spec.rho, spec.half_width + spec.field_margin, seed).ok()?;
            let v: Vec<f64> = (0..base.n()).map(|k| field.potential_unchecked(&spec.shape, base.node(k))).collect();
            let op = base.clone().with_potential(v).ok()?;
            Some(eigenvalue_counts(&op, &spec.lambda_grid))
        })
        .collect();
    let ok: Vec<&Vec<usize>> = counts.iter().flatten().collect();
    let skipped = counts.len() - ok.len();
    let vol = (2.0 * spec.half_width).powi(d as i32);
    let expo = lifshitz_exponent(&spec.generator, &spec.shape);
    let points = spec
        .lambda_grid
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let mv = MeanVar::from_slice(&ok.iter().map(|c| c[j] as f64 / vol).collect::<Vec<_>>());
            IdsPoint {
                lambda,
                n: mv.mean,
                stderr: mv.stderr(),
                lifshitz_diag: if mv.mean > 0.0 { lambda.powf(expo) * mv.mean.ln() } else { f64::NAN },
            }
        })
        .collect();
    Ok(IdsReport { points, fields_used: ok.len(), skipped, nodes: base.n() })
}

/// Free (V = 0) counting function on the same box: the ρ → 0 limit.
pub fn free_ids(generator: &Generator, half_width: f64, h: f64, grid: &[f64]) -> Result<Vec<f64>> {
    let d = generator.dim();
    let op = assemble(generator, &Domain::cube(&vec![0.0; d], half_width), h, &[])?;
    let vol = (2.0 * half_width).powi(d as i32);
    Ok(eigenvalue_counts(&op, grid).into_iter().map(|c| c as f64 / vol).collect())
}
