//! Horizontal Wulff shapes and point-cloud bodies.
//!
//! A Wulff body is `Ω_f = {g : <hlog g, u_i> ≤ f_i ∀i}`. Through the
//! exponential coordinates `(v, φ) ↦ exp(v, φ)` it is the image of the
//! Euclidean polytope `P_f = {v : <v, u_i> ≤ f_i}` times the twist interval,
//! which gives exact support values, bounding boxes and (for `n = 1`) volume.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Log};
use crate::grid::DirectionGrid;
use crate::group::{self, GroupPoint};
use crate::numeric::{dot, ksum};
use crate::polytope::HalfspacePolytope;
use crate::sampling::{chunked, unit_sphere};

pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub grid: DirectionGrid,
    pub values: Vec<f64>,
}

impl SupportVector {
    pub fn new(grid: DirectionGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonPositiveSupport(min));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: DirectionGrid, r: f64) -> Result<Self> {
        let m = grid.len();
        Self::new(grid, vec![r; m])
    }

    pub fn from_fn(grid: DirectionGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = grid.dirs().iter().map(|u| f(u)).collect();
        Self::new(grid, values)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| lambda * v).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `f_i = h(wulff(f), u_i)` for every direction, within `tol`.
    pub fn is_self_consistent(&self, geometry: Geometry, tol: f64) -> Result<bool> {
        let body = wulff_shape(geometry, self.clone())?;
        Ok(self
            .grid
            .dirs()
            .iter()
            .zip(&self.values)
            .all(|(u, f)| (body.h_support(u) - f).abs() <= tol))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect()
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WulffBody {
    geometry: Geometry,
    support: SupportVector,
    polytope: HalfspacePolytope,
    bbox: BoundingBox,
    pub tol: f64,
}

/// Builds `Ω_f`. The grid must live in the direction space of `geometry`.
pub fn wulff_shape(geometry: Geometry, f: SupportVector) -> Result<WulffBody> {
    if f.grid.dim() != geometry.dir_dim() {
        return Err(Error::DimensionMismatch {
            expected: geometry.dir_dim(),
            got: f.grid.dim(),
        });
    }
    let polytope = HalfspacePolytope::new(f.grid.dirs(), &f.values)?;
    let bbox = bounding_box(geometry, &polytope);
    Ok(WulffBody {
        geometry,
        support: f,
        polytope,
        bbox,
        tol: DEFAULT_MEMBERSHIP_TOL,
    })
}

/// Axis box containing `exp(P × [-2π, 2π])`.
///
/// `|z| = |v| sinc(φ/2) ≤ R` and `t = |v|² τ(φ) ≤ R²/(2π)` where `R` is the
/// circumradius of `P`; `τ` peaks at `φ = π`.
fn bounding_box(geometry: Geometry, p: &HalfspacePolytope) -> BoundingBox {
    let pad = 1.0 + 1e-9;
    match geometry {
        Geometry::Heisenberg { n } => {
            let r = p.circumradius() * pad;
            let tmax = r * r / (2.0 * PI);
            let mut lo = vec![-r; 2 * n + 1];
            let mut hi = vec![r; 2 * n + 1];
            lo[2 * n] = -tmax;
            hi[2 * n] = tmax;
            BoundingBox { lo, hi }
        }
        Geometry::Euclidean { dim } => {
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for v in p.vertices() {
                for j in 0..dim {
                    lo[j] = lo[j].min(v[j]);
                    hi[j] = hi[j].max(v[j]);
                }
            }
            let s = p.circumradius() * 1e-9;
            BoundingBox {
                lo: lo.iter().map(|x| x - s).collect(),
                hi: hi.iter().map(|x| x + s).collect(),
            }
        }
    }
}

impl WulffBody {
    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn support_vector(&self) -> &SupportVector {
        &self.support
    }

    pub fn grid(&self) -> &DirectionGrid {
        &self.support.grid
    }

    pub fn polytope(&self) -> &HalfspacePolytope {
        &self.polytope
    }

    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bbox
    }

    /// Minkowski gauge along dilation orbits: `max_i <log p, u_i> / f_i`.
    pub fn gauge(&self, p: &[f64]) -> f64 {
        self.gauge_of(&self.geometry.log(p))
    }

    pub fn gauge_of(&self, log: &Log) -> f64 {
        let f = &self.support.values;
        match log {
            Log::Center(r) => r / f.iter().copied().fold(f64::INFINITY, f64::min),
            Log::Vector(v) => self
                .grid()
                .dirs()
                .iter()
                .zip(f)
                .map(|(u, fi)| dot(v, u) / fi)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// `max_i (<log p, u_i> - f_i)`.
    pub fn margin(&self, p: &[f64]) -> f64 {
        self.margin_of(&self.geometry.log(p))
    }

    pub fn margin_of(&self, log: &Log) -> f64 {
        self.grid()
            .dirs()
            .iter()
            .zip(&self.support.values)
            .map(|(u, f)| log.pairing(u) - f)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.margin(p) <= self.tol
    }

    /// Index of the largest `<log p, u_i> - f_i`, smallest index on ties.
    pub fn active_constraint(&self, p: &[f64]) -> (usize, f64) {
        let log = self.geometry.log(p);
        let mut best = (0, f64::NEG_INFINITY);
        for (i, (u, f)) in self.grid().dirs().iter().zip(&self.support.values).enumerate() {
            let m = log.pairing(u) - f;
            if m > best.1 {
                best = (i, m);
            }
        }
        best
    }

    /// The boundary point on the dilation orbit through `theta ≠ 0`.
    pub fn boundary_point(&self, theta: &[f64]) -> Vec<f64> {
        self.geometry.dilate(1.0 / self.gauge(theta), theta)
    }

    /// `h(Ω, u) = max_{g ∈ Ω} <hlog g, u>`, which equals the Euclidean support
    /// of `P_f` since `hlog(Ω) = P_f` and center points pair below `min f`.
    pub fn h_support(&self, u: &[f64]) -> f64 {
        self.polytope.support(u)
    }

    /// Sampled estimate of `h(Ω, u)`: best of `samples` boundary points, then
    /// `steps` rounds of local hill-climbing on the orbit sphere. Returns the
    /// value and the last accepted improvement as a tolerance.
    pub fn h_support_sampled<R: Rng + ?Sized>(&self, u: &[f64], samples: usize, steps: usize, rng: &mut R) -> (f64, f64) {
        let d = self.geometry.point_dim();
        let value = |theta: &[f64]| self.geometry.pairing(&self.boundary_point(theta), u);
        let mut best_theta = unit_sphere(rng, d);
        let mut best = value(&best_theta);
        for _ in 1..samples {
            let th = unit_sphere(rng, d);
            let v = value(&th);
            if v > best {
                best = v;
                best_theta = th;
            }
        }
        let mut sigma = 0.1;
        let mut last_gain = sigma;
        for _ in 0..steps {
            let mut improved = false;
            for _ in 0..2 * d {
                let step = unit_sphere(rng, d);
                let cand: Vec<f64> = best_theta.iter().zip(&step).map(|(a, b)| a + sigma * b).collect();
                let s = cand.iter().map(|c| c * c).sum::<f64>().sqrt();
                let cand: Vec<f64> = cand.iter().map(|c| c / s).collect();
                let v = value(&cand);
                if v > best {
                    last_gain = v - best;
                    best = v;
                    best_theta = cand;
                    improved = true;
                }
            }
            if !improved {
                sigma *= 0.5;
            }
        }
        (best, last_gain)
    }

    /// Exact Lebesgue volume where available: `C ∫_{P_f} |v|² dv` for `H^1`,
    /// `|P_f|` in the Euclidean plane and space.
    pub fn volume_exact(&self) -> Result<f64> {
        match self.geometry {
            Geometry::Heisenberg { n: 1 } => Ok(self.geometry.volume_constant() * self.polytope.second_moment()?),
            Geometry::Heisenberg { n } => Err(Error::Unsupported(format!("exact volume for n = {n}"))),
            Geometry::Euclidean { .. } => self.polytope.volume(),
        }
    }

    pub fn volume_mc<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<Estimate> {
        volume_mc(|p| self.contains(p), &self.bbox, samples, rng)
    }

    /// `wulff(λ f)`, which is `δ_λ Ω`.
    pub fn dilated(&self, lambda: f64) -> Result<WulffBody> {
        let mut b = wulff_shape(self.geometry, self.support.scaled(lambda)?)?;
        b.tol = self.tol;
        Ok(b)
    }

    /// Latitude-longitude triangulation of the boundary as Wavefront OBJ
    /// (three-dimensional point spaces only).
    pub fn to_obj(&self, lat: usize, lon: usize) -> Result<String> {
        if self.geometry.point_dim() != 3 {
            return Err(Error::Unsupported("mesh export needs a three-dimensional point space".into()));
        }
        if lat < 2 || lon < 3 {
            return Err(Error::InvalidInput("mesh needs lat ≥ 2 and lon ≥ 3".into()));
        }
        let mut out = String::from("# boundary mesh\n");
        let mut push = |theta: [f64; 3]| {
            let p = self.boundary_point(&theta);
            out.push_str(&format!("v {} {} {}\n", p[0], p[1], p[2]));
        };
        push([0.0, 0.0, 1.0]);
        for i in 1..lat {
            let a = PI * i as f64 / lat as f64;
            for j in 0..lon {
                let b = 2.0 * PI * j as f64 / lon as f64;
                push([a.sin() * b.cos(), a.sin() * b.sin(), a.cos()]);
            }
        }
        push([0.0, 0.0, -1.0]);
        let ring = |i: usize, j: usize| 2 + (i - 1) * lon + (j % lon);
        let south = 2 + (lat - 1) * lon;
        for j in 0..lon {
            out.push_str(&format!("f 1 {} {}\n", ring(1, j), ring(1, j + 1)));
        }
        for i in 1..lat - 1 {
            for j in 0..lon {
                let (a, b, c, d) = (ring(i, j), ring(i + 1, j), ring(i + 1, j + 1), ring(i, j + 1));
                out.push_str(&format!("f {a} {b} {c}\nf {a} {c} {d}\n"));
            }
        }
        for j in 0..lon {
            out.push_str(&format!("f {} {} {}\n", ring(lat - 1, j + 1), ring(lat - 1, j), south));
        }
        Ok(out)
    }
}

/// Monte-Carlo volume of `{member}` inside `bbox`.
pub fn volume_mc<M, R>(member: M, bbox: &BoundingBox, samples: usize, rng: &mut R) -> Result<Estimate>
where
    M: Fn(&[f64]) -> bool + Sync,
    R: Rng + ?Sized,
{
    if samples < 1000 {
        return Err(Error::TooFewSamples { got: samples, min: 1000 });
    }
    let box_vol = bbox.volume();
    if !(box_vol > 0.0) || !box_vol.is_finite() {
        return Err(Error::DegenerateBox);
    }
    let hits: usize = chunked(rng, samples, |r, count| (0..count).filter(|_| member(&bbox.sample(r))).count())
        .into_iter()
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(Estimate {
        value: box_vol * p,
        stderr: box_vol * (p * (1.0 - p) / samples as f64).sqrt(),
    })
}

/// Korányi distance in the Heisenberg mode, Euclidean distance otherwise.
pub fn point_distance(geometry: Geometry, p: &[f64], q: &[f64]) -> f64 {
    match geometry {
        Geometry::Heisenberg { .. } => group::koranyi_distance(
            &GroupPoint::from_flat(p).expect("finite point"),
            &GroupPoint::from_flat(q).expect("finite point"),
        ),
        Geometry::Euclidean { .. } => p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
    }
}

/// Orbit-matched boundary distance: the largest distance between the two
/// boundary points on a common dilation orbit, over `samples` random orbits.
/// Every orbit meets each boundary exactly once, so this bounds the Hausdorff
/// distance of the boundaries from above and is symmetric.
pub fn hausdorff_distance<R: Rng + ?Sized>(b1: &WulffBody, b2: &WulffBody, samples: usize, rng: &mut R) -> Result<f64> {
    if b1.geometry != b2.geometry {
        return Err(Error::InvalidInput("bodies live in different geometries".into()));
    }
    let d = b1.geometry.point_dim();
    let parts = chunked(rng, samples, |r, count| {
        (0..count)
            .map(|_| {
                let th = unit_sphere(r, d);
                point_distance(b1.geometry, &b1.boundary_point(&th), &b2.boundary_point(&th))
            })
            .fold(0.0, f64::max)
    });
    Ok(parts.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudBody {
    geometry: Geometry,
    points: Vec<Vec<f64>>,
}

impl PointCloudBody {
    pub fn new(geometry: Geometry, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyBody);
        }
        if let Some(p) = points.iter().find(|p| p.len() != geometry.point_dim()) {
            return Err(Error::DimensionMismatch {
                expected: geometry.point_dim(),
                got: p.len(),
            });
        }
        Ok(Self { geometry, points })
    }

    pub fn from_group_points(points: &[GroupPoint]) -> Result<Self> {
        let n = points.first().ok_or(Error::EmptyBody)?.n();
        Self::new(Geometry::heisenberg(n), points.iter().map(GroupPoint::to_flat).collect())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn h_support(&self, u: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|p| self.geometry.pairing(p, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `<hlog g, u>`, with center points pairing to their CC distance.
pub fn support_pairing(g: &GroupPoint, u: &[f64]) -> f64 {
    Geometry::heisenberg(g.n()).pairing(&g.to_flat(), u)
}

/// Mean of `values` with its standard error.
pub fn mean_estimate(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    let mean = ksum(values.iter().copied()) / n;
    let var = ksum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0).max(1.0);
    Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}
