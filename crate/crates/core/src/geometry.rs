//! The two ambient geometries bodies live in.
//!
//! In the Heisenberg mode a point pairs with a direction through its
//! horizontal log; in the Euclidean mode the point is its own log and the
//! whole machinery reduces to classical convex geometry.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::geodesic::exp_coords;
use crate::group::{self, GroupPoint};
use crate::numeric::{dot, integrate, sinc, tau};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Geometry {
    Heisenberg { n: usize },
    Euclidean { dim: usize },
}

/// Horizontal log of a point.
#[derive(Debug, Clone, PartialEq)]
pub enum Log {
    Vector(Vec<f64>),
    /// A point on the center at CC distance `r`: it pairs to `r` with every direction.
    Center(f64),
}

impl Log {
    pub fn pairing(&self, u: &[f64]) -> f64 {
        match self {
            Log::Vector(v) => dot(v, u),
            Log::Center(r) => *r,
        }
    }
}

impl Geometry {
    pub fn heisenberg(n: usize) -> Self {
        Geometry::Heisenberg { n }
    }

    pub fn euclidean(dim: usize) -> Self {
        Geometry::Euclidean { dim }
    }

    /// Dimension of the point space.
    pub fn point_dim(&self) -> usize {
        match *self {
            Geometry::Heisenberg { n } => 2 * n + 1,
            Geometry::Euclidean { dim } => dim,
        }
    }

    /// Dimension of the direction space.
    pub fn dir_dim(&self) -> usize {
        match *self {
            Geometry::Heisenberg { n } => 2 * n,
            Geometry::Euclidean { dim } => dim,
        }
    }

    /// Volume scaling exponent under the dilations.
    pub fn homogeneous_dim(&self) -> f64 {
        match *self {
            Geometry::Heisenberg { n } => 2.0 * n as f64 + 2.0,
            Geometry::Euclidean { dim } => dim as f64,
        }
    }

    pub fn is_heisenberg(&self) -> bool {
        matches!(self, Geometry::Heisenberg { .. })
    }

    pub fn dilate(&self, lambda: f64, p: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = p.iter().map(|c| lambda * c).collect();
        if self.is_heisenberg() {
            let last = q.len() - 1;
            q[last] *= lambda;
        }
        q
    }

    pub fn log(&self, p: &[f64]) -> Log {
        match *self {
            Geometry::Euclidean { .. } => Log::Vector(p.to_vec()),
            Geometry::Heisenberg { .. } => {
                let g = GroupPoint::from_flat(p).expect("finite point");
                let ec = exp_coords(&g).expect("bracketed twist solve");
                match ec.tangent {
                    Some(t) => Log::Vector(t.iter().map(|c| ec.r * c).collect()),
                    None if ec.r == 0.0 => Log::Vector(vec![0.0; self.dir_dim()]),
                    None => Log::Center(ec.r),
                }
            }
        }
    }

    pub fn pairing(&self, p: &[f64], u: &[f64]) -> f64 {
        self.log(p).pairing(u)
    }

    /// Horizontal frame at `p` as ambient vectors.
    pub fn horizontal_frame(&self, p: &[f64]) -> Vec<Vec<f64>> {
        match *self {
            Geometry::Euclidean { dim } => (0..dim)
                .map(|i| {
                    let mut e = vec![0.0; dim];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            Geometry::Heisenberg { .. } => {
                let g = GroupPoint::from_flat(p).expect("finite point");
                group::frame_at(&g).horizontal().cloned().collect()
            }
        }
    }

    /// Point with log `v` and twist `phi` (the twist is ignored in Euclidean mode).
    pub fn exp(&self, v: &[f64], phi: f64) -> Vec<f64> {
        match self {
            Geometry::Euclidean { .. } => v.to_vec(),
            Geometry::Heisenberg { .. } => crate::geodesic::exp_point(v, phi).to_flat(),
        }
    }

    /// Constant `C` with `Vol(exp(P × [-2π, 2π])) = C ∫_P |v|² dv`, or 1 for
    /// the Euclidean mode where the volume is plain `|P|`.
    pub fn volume_constant(&self) -> f64 {
        match *self {
            Geometry::Euclidean { .. } => 1.0,
            Geometry::Heisenberg { n: 1 } => {
                static C1: OnceLock<f64> = OnceLock::new();
                *C1.get_or_init(|| twist_integral(1))
            }
            Geometry::Heisenberg { n } => twist_integral(n),
        }
    }
}

/// `∫ j_n(φ) dφ` over `[-2π, 2π]`.
pub fn twist_integral(n: usize) -> f64 {
    integrate(|phi| twist_jacobian(n, phi), -2.0 * PI, 2.0 * PI, 64, 16)
}

/// Jacobian factor of `(v, φ) ↦ exp(v, φ)` divided by `|v|²`:
/// `s^{2n-1} |s τ' - 2 s' τ|` with `s = sinc(φ/2)`.
pub fn twist_jacobian(n: usize, phi: f64) -> f64 {
    let s = sinc(0.5 * phi);
    let ds = 0.5 * sinc_prime(0.5 * phi);
    s.powi(2 * n as i32 - 1) * (s * tau_prime(phi) - 2.0 * ds * tau(phi)).abs()
}

fn sinc_prime(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        -x / 3.0 + x * x2 / 30.0 - x * x2 * x2 / 840.0
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

fn tau_prime(phi: f64) -> f64 {
    if phi.abs() < 1e-2 {
        let p2 = phi * phi;
        1.0 / 12.0 - p2 / 80.0 + p2 * p2 / 2016.0
    } else {
        (phi * (1.0 - phi.cos()) - 2.0 * (phi - phi.sin())) / (2.0 * phi * phi * phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_forms_match_difference_quotients() {
        for x in [-5.0, -1.0, -0.011, 0.009, 0.5, 3.0, 6.1] {
            let h = 1e-6;
            let fd = (sinc(x + h) - sinc(x - h)) / (2.0 * h);
            assert!((fd - sinc_prime(x)).abs() < 1e-8, "sinc' at {x}");
            let fd = (tau(x + h) - tau(x - h)) / (2.0 * h);
            assert!((fd - tau_prime(x)).abs() < 1e-8, "tau' at {x}");
        }
    }

    #[test]
    fn jacobian_matches_finite_difference_determinant() {
        // Direct 3x3 determinant of (r, α, φ) ↦ (x, y, t), divided by the polar factor.
        let g = Geometry::heisenberg(1);
        for (r, a, phi) in [(0.7, 0.3, 1.2), (1.5, 2.0, -4.0), (0.2, -1.0, 5.5)] {
            let map = |r: f64, a: f64, phi: f64| g.exp(&[r * f64::cos(a), r * f64::sin(a)], phi);
            let h = 1e-6;
            let cols: Vec<Vec<f64>> = [(h, 0.0, 0.0), (0.0, h, 0.0), (0.0, 0.0, h)]
                .iter()
                .map(|&(dr, da, dp)| {
                    let p = map(r + dr, a + da, phi + dp);
                    let m = map(r - dr, a - da, phi - dp);
                    p.iter().zip(&m).map(|(x, y)| (x - y) / (2.0 * h)).collect()
                })
                .collect();
            let det = cols[0][0] * (cols[1][1] * cols[2][2] - cols[1][2] * cols[2][1])
                - cols[1][0] * (cols[0][1] * cols[2][2] - cols[0][2] * cols[2][1])
                + cols[2][0] * (cols[0][1] * cols[1][2] - cols[0][2] * cols[1][1]);
            // dz dt = J dv dφ and dv = r dr dα
            let expected = r * r * twist_jacobian(1, phi) * r;
            assert!((det.abs() - expected).abs() < 1e-6, "{det} vs {expected}");
        }
    }

    #[test]
    fn volume_constant_is_stable_under_refinement() {
        let coarse = integrate(|p| twist_jacobian(1, p), -2.0 * PI, 2.0 * PI, 32, 8);
        let c1 = Geometry::heisenberg(1).volume_constant();
        assert!((coarse - c1).abs() < 1e-12);
        assert!(c1 > 0.5 && c1 < 0.55);
        assert_eq!(Geometry::euclidean(2).volume_constant(), 1.0);
    }

    #[test]
    fn logs_and_pairings() {
        let h = Geometry::heisenberg(1);
        assert_eq!(h.log(&[0.3, 0.4, 0.0]), Log::Vector(vec![0.3, 0.4]));
        assert!((h.pairing(&[0.0, 0.0, 1.0], &[0.0, 1.0]) - 2.0 * PI.sqrt()).abs() < 1e-12);
        assert_eq!(h.pairing(&[0.0, 0.0, 0.0], &[1.0, 0.0]), 0.0);
        let e = Geometry::euclidean(3);
        assert_eq!(e.pairing(&[1.0, 2.0, 3.0], &[0.0, 0.0, 1.0]), 3.0);
        assert_eq!(h.dilate(2.0, &[1.0, 1.0, 1.0]), vec![2.0, 2.0, 4.0]);
        assert_eq!(e.dilate(2.0, &[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(h.homogeneous_dim(), 4.0);
        assert_eq!(h.horizontal_frame(&[0.0, 2.0, 0.0])[0], vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn geometry_json_is_tagged() {
        let s = serde_json::to_string(&Geometry::heisenberg(1)).unwrap();
        assert_eq!(s, r#"{"mode":"heisenberg","n":1}"#);
        let g: Geometry = serde_json::from_str(r#"{"mode":"euclidean","dim":3}"#).unwrap();
        assert_eq!(g, Geometry::euclidean(3));
    }
}
