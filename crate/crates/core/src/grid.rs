//! Finite sets of unit directions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dot, norm};
use crate::polytope::{nullspace_direction, rank};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionGrid {
    dirs: Vec<Vec<f64>>,
    /// How the grid was built, e.g. `circle:64`.
    pub resolution: String,
}

impl PartialEq for DirectionGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dirs == other.dirs
    }
}

impl DirectionGrid {
    /// Validates unit length and positive spanning.
    pub fn new(dirs: Vec<Vec<f64>>, resolution: impl Into<String>) -> Result<Self> {
        let k = dirs.first().map(Vec::len).ok_or(Error::NotSpanning)?;
        for (index, u) in dirs.iter().enumerate() {
            if u.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: u.len(),
                });
            }
            let nu = norm(u);
            if !nu.is_finite() || (nu - 1.0).abs() > 1e-12 {
                return Err(Error::NotUnit { index, norm: nu });
            }
        }
        if !positively_spans(&dirs) {
            return Err(Error::NotSpanning);
        }
        Ok(Self {
            dirs,
            resolution: resolution.into(),
        })
    }

    /// Normalizes every direction first; unit vectors are kept bit for bit.
    pub fn from_unnormalized(dirs: Vec<Vec<f64>>, resolution: impl Into<String>) -> Result<Self> {
        let dirs = dirs
            .into_iter()
            .map(|u| {
                let s = norm(&u);
                if (s - 1.0).abs() <= 1e-15 {
                    u
                } else {
                    u.into_iter().map(|c| c / s).collect()
                }
            })
            .collect();
        Self::new(dirs, resolution)
    }

    /// `m` equally spaced directions on the circle, starting at angle 0.
    pub fn circle(m: usize) -> Result<Self> {
        Self::circle_offset(m, 0.0)
    }

    pub fn circle_offset(m: usize, offset: f64) -> Result<Self> {
        let dirs = (0..m)
            .map(|i| {
                let a = offset + 2.0 * PI * i as f64 / m as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        Self::new(dirs, format!("circle:{m}"))
    }

    /// `±e_i` in `R^k`.
    pub fn coordinate(k: usize) -> Result<Self> {
        let mut dirs = Vec::with_capacity(2 * k);
        for i in 0..k {
            for s in [1.0, -1.0] {
                let mut u = vec![0.0; k];
                u[i] = s;
                dirs.push(u);
            }
        }
        Self::new(dirs, format!("coordinate:{k}"))
    }

    /// Fibonacci lattice on `S^2`.
    pub fn fibonacci_sphere(m: usize) -> Result<Self> {
        let golden = PI * (3.0 - 5f64.sqrt());
        let dirs = (0..m)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * i as f64;
                vec![r * a.cos(), r * a.sin(), z]
            })
            .collect();
        Self::new(dirs, format!("fibonacci:{m}"))
    }

    pub fn dirs(&self) -> &[Vec<f64>] {
        &self.dirs
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    /// Ambient dimension of the directions.
    pub fn dim(&self) -> usize {
        self.dirs[0].len()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.dirs[i]
    }

    /// Index of the direction closest to `v`.
    pub fn nearest(&self, v: &[f64]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, u) in self.dirs.iter().enumerate() {
            let c = dot(u, v);
            if c > best.1 {
                best = (i, c);
            }
        }
        best.0
    }
}

/// True when no closed half-space through the origin contains every direction.
///
/// Equivalently `{d : <d, u_i> ≤ 0 ∀i} = {0}`. That cone is either not
/// pointed (the directions miss a dimension) or generated by extreme rays,
/// each cut out by `k - 1` independent directions.
pub fn positively_spans(dirs: &[Vec<f64>]) -> bool {
    let Some(k) = dirs.first().map(Vec::len) else {
        return false;
    };
    if rank(dirs, 1e-10) < k {
        return false;
    }
    if k == 1 {
        return dirs.iter().any(|u| u[0] > 0.0) && dirs.iter().any(|u| u[0] < 0.0);
    }
    let tol = 1e-12;
    let mut idx: Vec<usize> = (0..k - 1).collect();
    loop {
        let rows: Vec<&[f64]> = idx.iter().map(|&i| dirs[i].as_slice()).collect();
        if let Some(d) = nullspace_direction(&rows, k) {
            for s in [1.0, -1.0] {
                if dirs.iter().all(|u| s * dot(u, &d) <= tol) {
                    return false;
                }
            }
        }
        if !next_combination(&mut idx, dirs.len()) {
            return true;
        }
    }
}

/// Advances `idx` to the next increasing `idx.len()`-subset of `0..m`.
pub(crate) fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let r = idx.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if idx[i] < m - r + i {
            idx[i] += 1;
            for j in i + 1..r {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_grid_is_unit_and_spanning() {
        let g = DirectionGrid::circle(64).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.dim(), 2);
        assert!(g.dirs().iter().all(|u| (norm(u) - 1.0).abs() < 1e-15));
        assert_eq!(g.resolution, "circle:64");
    }

    #[test]
    fn half_circle_is_rejected() {
        let dirs: Vec<Vec<f64>> = (0..5)
            .map(|i| {
                let a = PI * i as f64 / 4.0 - PI / 2.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        assert_eq!(DirectionGrid::new(dirs, "half"), Err(Error::NotSpanning));
        assert_eq!(DirectionGrid::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], "line"), Err(Error::NotSpanning));
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        let err = DirectionGrid::new(vec![vec![2.0, 0.0], vec![-1.0, 0.0]], "x").unwrap_err();
        assert!(matches!(err, Error::NotUnit { index: 0, .. }));
    }

    #[test]
    fn spanning_in_three_dimensions() {
        assert!(DirectionGrid::coordinate(3).is_ok());
        assert!(DirectionGrid::fibonacci_sphere(40).is_ok());
        // upper hemisphere of a cube's normals plus the equator
        let dirs = vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!(!positively_spans(&dirs));
        // tetrahedron
        let s = 1.0 / 3f64.sqrt();
        let tet = vec![vec![s, s, s], vec![s, -s, -s], vec![-s, s, -s], vec![-s, -s, s]];
        assert!(positively_spans(&tet));
    }

    #[test]
    fn nearest_direction() {
        let g = DirectionGrid::circle(4).unwrap();
        assert_eq!(g.nearest(&[0.1, 0.9]), 1);
        assert_eq!(g.nearest(&[-1.0, -0.2]), 2);
    }

    #[test]
    fn combinations_enumerate_all_subsets() {
        let mut idx = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut idx, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
    }
}
