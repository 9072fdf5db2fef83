//! Points, domains and the handful of special functions shared by every module.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Γ(x) to ~15 significant digits (Lanczos, via statrs).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Volume of the unit ball in ℝ^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// Surface area of the unit sphere in ℝ^d (d · w_d).
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Bounded domain with exterior Dirichlet (killing) condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// Open ball B(center, radius).
    Ball { center: Vec<f64>, radius: f64 },
    /// Open cube center + (−half_width, half_width)^d.
    Cube { center: Vec<f64>, half_width: f64 },
}

impl Domain {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        Domain::Ball { center: center.to_vec(), radius }
    }

    pub fn centered_ball(d: usize, radius: f64) -> Self {
        Self::ball(&vec![0.0; d], radius)
    }

    pub fn cube(center: &[f64], half_width: f64) -> Self {
        Domain::Cube { center: center.to_vec(), half_width }
    }

    pub fn dim(&self) -> usize {
        self.center().len()
    }

    pub fn center(&self) -> &[f64] {
        match self {
            Domain::Ball { center, .. } | Domain::Cube { center, .. } => center,
        }
    }

    /// Half-extent along each axis.
    pub fn half_extent(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => *radius,
            Domain::Cube { half_width, .. } => *half_width,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Ball { center, radius } => dist(x, center) < *radius,
            Domain::Cube { center, half_width } => x.iter().zip(center).all(|(a, c)| (a - c).abs() < *half_width),
        }
    }

    pub fn volume(&self) -> f64 {
        let d = self.dim();
        match self {
            Domain::Ball { radius, .. } => unit_ball_volume(d) * radius.powi(d as i32),
            Domain::Cube { half_width, .. } => (2.0 * half_width).powi(d as i32),
        }
    }

    /// Same shape with every length multiplied by `s` (about the origin).
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Domain::Ball { center, radius } => {
                Domain::Ball { center: center.iter().map(|c| c * s).collect(), radius: radius * s }
            }
            Domain::Cube { center, half_width } => {
                Domain::Cube { center: center.iter().map(|c| c * s).collect(), half_width: half_width * s }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn gamma_values() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        // Γ(1/3), 15 digits
        assert!((gamma(1.0 / 3.0) - 2.678_938_534_707_747_6).abs() < 1e-13);
    }

    #[test]
    fn domain_membership() {
        let b = Domain::centered_ball(2, 1.0);
        assert!(b.contains(&[0.5, 0.5]));
        assert!(!b.contains(&[0.8, 0.8]));
        let c = Domain::cube(&[0.0, 0.0], 1.0);
        assert!(c.contains(&[0.8, 0.8]));
        assert!(!c.contains(&[1.0, 0.0]));
        assert_eq!(c.volume(), 4.0);
    }
}
