//! Smooth surface-area densities `det(∇²h + h I + A)` from sampled support functions.
//!
//! Functions live on a uniform circle grid or on a latitude-longitude grid of
//! `S²` whose rows include both poles. Derivatives are centered second-order
//! differences; densities are reported on the circle nodes and on the
//! interior rows of the sphere grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphereGrid {
    /// `θ_b = 2πb/m`.
    Circle { m: usize },
    /// `θ_a = aπ/n_theta` for `a = 0..=n_theta`, `φ_b = 2πb/n_phi`.
    LatLong { n_theta: usize, n_phi: usize },
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        match *self {
            SphereGrid::Circle { m } => m,
            SphereGrid::LatLong { n_theta, n_phi } => (n_theta + 1) * n_phi,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SphereGrid::Circle { m } => m >= 3,
            SphereGrid::LatLong { n_theta, n_phi } => n_theta >= 2 && n_phi >= 4 && n_phi % 2 == 0,
        };
        ok.then_some(()).ok_or(Error::InvalidInput(format!("grid too coarse: {self:?}")))
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        match *self {
            SphereGrid::Circle { m } => {
                let t = 2.0 * PI * idx as f64 / m as f64;
                vec![t.cos(), t.sin()]
            }
            SphereGrid::LatLong { n_theta, n_phi } => {
                let (th, ph) = (PI * (idx / n_phi) as f64 / n_theta as f64, 2.0 * PI * (idx % n_phi) as f64 / n_phi as f64);
                vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
            }
        }
    }

    /// Angular spacing `(Δθ, Δφ)`; equal entries on the circle.
    pub fn spacing(&self) -> (f64, f64) {
        match *self {
            SphereGrid::Circle { m } => (2.0 * PI / m as f64, 2.0 * PI / m as f64),
            SphereGrid::LatLong { n_theta, n_phi } => (PI / n_theta as f64, 2.0 * PI / n_phi as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereFunction {
    pub grid: SphereGrid,
    pub values: Vec<f64>,
}

impl SphereFunction {
    pub fn new(grid: SphereGrid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn sample(grid: SphereGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        grid.validate()?;
        Self::new(grid, (0..grid.len()).map(|i| f(&grid.point(i))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereDensity {
    pub grid: SphereGrid,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub spacing: (f64, f64),
    /// Indices into `values` where the density is negative.
    pub nonconvex: Vec<usize>,
    /// Grid points skipped because the tangent frame degenerates there.
    pub singular: Vec<Vec<f64>>,
    pub experimental: bool,
}

impl SphereDensity {
    fn build(grid: SphereGrid, points: Vec<Vec<f64>>, values: Vec<f64>, singular: Vec<Vec<f64>>, experimental: bool) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let nonconvex = values.iter().enumerate().filter(|(_, v)| **v < 0.0).map(|(i, _)| i).collect();
        Ok(Self {
            grid,
            points,
            values,
            spacing: grid.spacing(),
            nonconvex,
            singular,
            experimental,
        })
    }

    /// Value at the grid point nearest to `v`.
    pub fn at(&self, v: &[f64]) -> f64 {
        let i = (0..self.points.len())
            .max_by(|&a, &b| dot(&self.points[a], v).total_cmp(&dot(&self.points[b], v)))
            .expect("nonempty density");
        self.values[i]
    }
}

/// Coordinate derivatives of a lat-long function at an interior node.
#[derive(Debug, Clone, Copy)]
struct Jet {
    h: f64,
    t: f64,
    p: f64,
    tt: f64,
    pp: f64,
    tp: f64,
}

fn lat_long_jet(f: &SphereFunction, a: usize, b: usize) -> Jet {
    let SphereGrid::LatLong { n_theta, n_phi } = f.grid else { unreachable!() };
    let (dt, dp) = f.grid.spacing();
    let at = |a: usize, b: isize| f.values[a * n_phi + b.rem_euclid(n_phi as isize) as usize];
    let b = b as isize;
    debug_assert!(a >= 1 && a < n_theta);
    let h = at(a, b);
    Jet {
        h,
        t: (at(a + 1, b) - at(a - 1, b)) / (2.0 * dt),
        p: (at(a, b + 1) - at(a, b - 1)) / (2.0 * dp),
        tt: (at(a + 1, b) - 2.0 * h + at(a - 1, b)) / (dt * dt),
        pp: (at(a, b + 1) - 2.0 * h + at(a, b - 1)) / (dp * dp),
        tp: (at(a + 1, b + 1) - at(a + 1, b - 1) - at(a - 1, b + 1) + at(a - 1, b - 1)) / (4.0 * dt * dp),
    }
}

fn interior(f: &SphereFunction) -> impl Iterator<Item = (usize, usize)> {
    let SphereGrid::LatLong { n_theta, n_phi } = f.grid else { unreachable!() };
    (1..n_theta).flat_map(move |a| (0..n_phi).map(move |b| (a, b)))
}

fn poles() -> Vec<Vec<f64>> {
    vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]]
}

/// `det(∇²h + h I)`; `h″ + h` on the circle.
pub fn smooth_density_euclidean(h: &SphereFunction) -> Result<SphereDensity> {
    match h.grid {
        SphereGrid::Circle { m } => {
            let (d, _) = h.grid.spacing();
            let values = (0..m)
                .map(|i| {
                    let (l, c, r) = (h.values[(i + m - 1) % m], h.values[i], h.values[(i + 1) % m]);
                    (l - 2.0 * c + r) / (d * d) + c
                })
                .collect();
            SphereDensity::build(h.grid, (0..m).map(|i| h.grid.point(i)).collect(), values, vec![], false)
        }
        SphereGrid::LatLong { n_phi, .. } => {
            let (mut points, mut values) = (vec![], vec![]);
            for (a, b) in interior(h) {
                let j = lat_long_jet(h, a, b);
                let th = h.grid.spacing().0 * a as f64;
                let (s, cot) = (th.sin(), th.cos() / th.sin());
                let htt = j.tt + j.h;
                let hpp = j.pp / (s * s) + cot * j.t + j.h;
                let htp = (j.tp - cot * j.p) / s;
                points.push(h.grid.point(a * n_phi + b));
                values.push(htt * hpp - htp * htp);
            }
            SphereDensity::build(h.grid, points, values, poles(), false)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameOptions {
    /// Weight of the `t`-components of `X, Y` and of the connection table;
    /// `0` flattens the frame to the Euclidean one.
    pub twist: f64,
    /// Euclidean length of the horizontal tangent direction below which the
    /// frame counts as singular.
    pub singular_tol: f64,
    /// Step for differentiating the frame field.
    pub frame_step: f64,
}

impl FrameOptions {
    pub fn flattened() -> Self {
        Self {
            twist: 0.0,
            ..Self::default()
        }
    }
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            twist: 1.0,
            singular_tol: 1e-9,
            frame_step: 1e-4,
        }
    }
}

/// Left-invariant frame `X, Y, T` of `H^1` at `p`, scaled by `s`.
fn xyt(p: &[f64], s: f64) -> [[f64; 3]; 3] {
    [[1.0, 0.0, s * p[1] / 2.0], [0.0, 1.0, -s * p[0] / 2.0], [0.0, 0.0, 1.0]]
}

/// Coefficients of `w` in the basis `X, Y, T` at `p`.
fn coeffs(p: &[f64], w: &[f64], s: f64) -> [f64; 3] {
    [w[0], w[1], w[2] - s * p[1] / 2.0 * w[0] + s * p[0] / 2.0 * w[1]]
}

fn metric(p: &[f64], u: &[f64], w: &[f64], s: f64) -> f64 {
    let (a, b) = (coeffs(p, u, s), coeffs(p, w, s));
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Orthonormal tangent frame of `S²` at `p/|p|` in the left-invariant metric:
/// `e₁` spans the horizontal tangent line, `e₂` completes it. `None` where
/// the horizontal plane is tangent to the sphere.
fn tangent_frame(p: &[f64], s: f64, tol: f64) -> Option<[[f64; 3]; 2]> {
    let r = dot(p, p).sqrt();
    let v = [p[0] / r, p[1] / r, p[2] / r];
    let [x, y, _] = xyt(&v, s);
    let (xv, yv) = (dot(&x, &v), dot(&y, &v));
    let w: Vec<f64> = (0..3).map(|k| yv * x[k] - xv * y[k]).collect();
    if dot(&w, &w).sqrt() < tol {
        return None;
    }
    let n1 = metric(&v, &w, &w, s).sqrt();
    let e1 = [w[0] / n1, w[1] / n1, w[2] / n1];
    let q = cross(&v, &e1);
    let c = metric(&v, &q, &e1, s);
    let q: Vec<f64> = (0..3).map(|k| q[k] - c * e1[k]).collect();
    let n2 = metric(&v, &q, &q, s).sqrt();
    Some([e1, [q[0] / n2, q[1] / n2, q[2] / n2]])
}

/// `∇_{E_a} E_b` in `X, Y, T` coefficients, as tabulated for the left-invariant metric.
fn connection(a: usize, b: usize, s: f64) -> [f64; 3] {
    let v = match (a, b) {
        (0, 1) => [0.0, 0.0, 1.0],
        (0, 2) => [0.0, -1.0, 0.0],
        (1, 0) => [0.0, 0.0, -1.0],
        (1, 2) => [1.0, 0.0, 0.0],
        (2, 0) => [0.0, -1.0, 0.0],
        (2, 1) => [1.0, 0.0, 0.0],
        _ => [0.0; 3],
    };
    v.map(|c| s * c)
}

/// Spherical coordinate weights of a tangent vector: `w = α ∂_θ + β ∂_φ`.
fn angular(p: &[f64], w: &[f64]) -> [f64; 2] {
    let r = dot(p, p).sqrt();
    let (th, ph) = ((p[2] / r).clamp(-1.0, 1.0).acos(), p[1].atan2(p[0]));
    let d_th = [th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()];
    let d_ph = [-th.sin() * ph.sin(), th.sin() * ph.cos(), 0.0];
    [dot(w, &d_th), dot(w, &d_ph) / (th.sin() * th.sin())]
}

/// `det(∇^H_ij h + h δ_ij + A_ij)` on `S² ⊂ H^1` (experimental).
///
/// The frame is orthonormal for the left-invariant metric, `∇^H_ij` is the
/// symmetrized second frame derivative and
/// `A_ij = ½ Σ_k e_k(h) (Γ^j_ik + Γ^i_jk)` with `Γ^j_ik = ⟨∇_{e_i} e_k, e_j⟩`
/// taken from the tabulated connection; `⟨G, e_k⟩` is realized as `e_k(h)`.
pub fn smooth_density_heisenberg(h: &SphereFunction, opts: &FrameOptions) -> Result<SphereDensity> {
    let SphereGrid::LatLong { n_phi, .. } = h.grid else {
        return Err(Error::Unsupported("the Heisenberg density needs a lat-long grid of S²".into()));
    };
    let s = opts.twist;
    let eps = opts.frame_step;
    let (mut points, mut values, mut singular) = (vec![], vec![], poles());
    for (a, b) in interior(h) {
        let v = h.grid.point(a * n_phi + b);
        let Some(e) = tangent_frame(&v, s, opts.singular_tol) else {
            singular.push(v);
            continue;
        };
        let j = lat_long_jet(h, a, b);
        let ang = [angular(&v, &e[0]), angular(&v, &e[1])];
        // fourth-order differences of frame quantities along e_i
        let sample = |i: usize, d: f64| -> Result<[([f64; 2], [f64; 3]); 2]> {
            let p: Vec<f64> = (0..3).map(|k| v[k] + d * e[i][k]).collect();
            let f = tangent_frame(&p, s, opts.singular_tol).ok_or(Error::InvalidInput("frame step crosses a singular point".into()))?;
            Ok([0, 1].map(|k| (angular(&p, &f[k]), coeffs(&p, &f[k], s))))
        };
        let mut d_ang = [[[0.0; 2]; 2]; 2];
        let mut d_coef = [[[0.0; 3]; 2]; 2];
        for i in 0..2 {
            let st = [sample(i, 2.0 * eps)?, sample(i, eps)?, sample(i, -eps)?, sample(i, -2.0 * eps)?];
            let diff = |f: &dyn Fn(usize) -> f64| (-f(0) + 8.0 * f(1) - 8.0 * f(2) + f(3)) / (12.0 * eps);
            for k in 0..2 {
                for c in 0..2 {
                    d_ang[i][k][c] = diff(&|m| st[m][k].0[c]);
                }
                for c in 0..3 {
                    d_coef[i][k][c] = diff(&|m| st[m][k].1[c]);
                }
            }
        }
        let grad = |k: usize| ang[k][0] * j.t + ang[k][1] * j.p;
        let second = |i: usize, k: usize| {
            let (ai, ak) = (ang[i], ang[k]);
            ai[0] * ak[0] * j.tt + (ai[0] * ak[1] + ai[1] * ak[0]) * j.tp + ai[1] * ak[1] * j.pp + d_ang[i][k][0] * j.t + d_ang[i][k][1] * j.p
        };
        let coef = [coeffs(&v, &e[0], s), coeffs(&v, &e[1], s)];
        // Γ[i][k][j] = ⟨∇_{e_i} e_k, e_j⟩
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                let mut nabla = d_coef[i][k];
                for ea in 0..3 {
                    for eb in 0..3 {
                        let con = connection(ea, eb, s);
                        for c in 0..3 {
                            nabla[c] += coef[i][ea] * coef[k][eb] * con[c];
                        }
                    }
                }
                for jj in 0..2 {
                    gamma[i][k][jj] = (0..3).map(|c| nabla[c] * coef[jj][c]).sum();
                }
            }
        }
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for jj in 0..2 {
                let a_ij: f64 = 0.5 * (0..2).map(|k| grad(k) * (gamma[i][k][jj] + gamma[jj][k][i])).sum::<f64>();
                let delta = if i == jj { j.h } else { 0.0 };
                m[i][jj] = 0.5 * (second(i, jj) + second(jj, i)) + delta + a_ij;
            }
        }
        points.push(v);
        values.push(m[0][0] * m[1][1] - m[0][1] * m[1][0]);
    }
    SphereDensity::build(h.grid, points, values, singular, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ellipse(a: f64, b: f64) -> impl Fn(&[f64]) -> f64 {
        move |u| (a * a * u[0] * u[0] + b * b * u[1] * u[1]).sqrt()
    }

    fn ellipsoid(a: f64, b: f64, c: f64) -> impl Fn(&[f64]) -> f64 {
        move |u| (a * a * u[0] * u[0] + b * b * u[1] * u[1] + c * c * u[2] * u[2]).sqrt()
    }

    fn max_err(d: &SphereDensity, exact: impl Fn(&[f64]) -> f64) -> f64 {
        d.points.iter().zip(&d.values).map(|(p, v)| (v - exact(p)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn circle_constant_and_translation() {
        let g = SphereGrid::Circle { m: 256 };
        let d = smooth_density_euclidean(&SphereFunction::sample(g, |_| 2.5).unwrap()).unwrap();
        assert!(d.values.iter().all(|v| (v - 2.5).abs() < 1e-10));
        let d = smooth_density_euclidean(&SphereFunction::sample(g, |u| 0.3 * u[0] - 1.2 * u[1]).unwrap()).unwrap();
        assert!(d.values.iter().all(|v| v.abs() < 1e-4), "{:?}", d.values[0]);
    }

    #[test]
    fn ellipse_matches_radius_of_curvature() {
        let (a, b) = (2.0f64, 1.0);
        // radius of curvature at normal u is a²b²/h(u)³
        let exact = |u: &[f64]| (a * b).powi(2) / ellipse(a, b)(u).powi(3);
        let errs: Vec<f64> = [128, 256, 512]
            .iter()
            .map(|&m| max_err(&smooth_density_euclidean(&SphereFunction::sample(SphereGrid::Circle { m }, ellipse(a, b)).unwrap()).unwrap(), exact))
            .collect();
        assert!(errs[0] < 1e-2);
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.1, "{order}");
        }
    }

    #[test]
    fn translation_leaves_density_unchanged() {
        let g = SphereGrid::Circle { m: 400 };
        let base = smooth_density_euclidean(&SphereFunction::sample(g, ellipse(1.5, 1.0)).unwrap()).unwrap();
        let moved = smooth_density_euclidean(&SphereFunction::sample(g, |u| ellipse(1.5, 1.0)(u) + 0.4 * u[0] + 0.7 * u[1]).unwrap()).unwrap();
        let (dt, _) = base.spacing;
        for (x, y) in base.values.iter().zip(&moved.values) {
            assert!((x - y).abs() < 2.0 * dt * dt);
        }
    }

    #[test]
    fn nonconvex_support_is_flagged() {
        let g = SphereGrid::Circle { m: 64 };
        let d = smooth_density_euclidean(&SphereFunction::sample(g, |u| 1.0 + 0.2 * (3.0 * u[1].atan2(u[0])).cos()).unwrap()).unwrap();
        assert!(!d.nonconvex.is_empty());
        assert!(d.nonconvex.iter().all(|&i| d.values[i] < 0.0));
    }

    #[test]
    fn sphere_ball_and_ellipsoid() {
        let g = SphereGrid::LatLong { n_theta: 64, n_phi: 128 };
        let d = smooth_density_euclidean(&SphereFunction::sample(g, |_| 1.5).unwrap()).unwrap();
        assert!(d.values.iter().all(|v| (v - 2.25).abs() < 1e-10));
        assert_eq!(d.values.len(), 63 * 128);
        assert_eq!(d.singular.len(), 2);
        // Gauss curvature in terms of the normal: K = h⁴ / (abc)²
        let (a, b, c) = (1.5f64, 1.0, 0.8);
        let exact = |u: &[f64]| (a * b * c).powi(2) / ellipsoid(a, b, c)(u).powi(4);
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let g = SphereGrid::LatLong { n_theta: n, n_phi: 2 * n };
                max_err(&smooth_density_euclidean(&SphereFunction::sample(g, ellipsoid(a, b, c)).unwrap()).unwrap(), exact)
            })
            .collect();
        assert!(errs[2] < 1e-2, "{errs:?}");
        let order = (errs[1] / errs[2]).log2();
        assert!((order - 2.0).abs() < 0.3, "{errs:?}");
    }

    #[test]
    fn flattened_frame_reproduces_the_euclidean_density() {
        let (a, b, c) = (1.5, 1.0, 0.8);
        let g = SphereGrid::LatLong { n_theta: 48, n_phi: 96 };
        let h = SphereFunction::sample(g, |u| ellipsoid(a, b, c)(u) + 0.3 * u[0] - 0.1 * u[2]).unwrap();
        let e = smooth_density_euclidean(&h).unwrap();
        let f = smooth_density_heisenberg(&h, &FrameOptions::flattened()).unwrap();
        assert!(f.experimental && !e.experimental);
        assert_eq!(e.points, f.points);
        let diff = e.values.iter().zip(&f.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn tangent_frame_is_orthonormal_and_tangent() {
        for p in [[0.6, 0.0, 0.8], [0.3, -0.5, 0.2], [-1.0, 0.2, -0.1]] {
            let r = dot(&p, &p).sqrt();
            let v = [p[0] / r, p[1] / r, p[2] / r];
            let e = tangent_frame(&v, 1.0, 1e-9).unwrap();
            for i in 0..2 {
                assert!(dot(&e[i], &v).abs() < 1e-12);
                for j in 0..2 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((metric(&v, &e[i], &e[j], 1.0) - want).abs() < 1e-12);
                }
            }
            // e₁ is horizontal: no T component
            assert!(coeffs(&v, &e[0], 1.0)[2].abs() < 1e-12);
        }
        assert!(tangent_frame(&[0.0, 0.0, 1.0], 1.0, 1e-9).is_none());
    }

    #[test]
    fn connection_table_is_metric_compatible() {
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    // ⟨∇_a E_b, E_c⟩ + ⟨E_b, ∇_a E_c⟩ = 0
                    let s = connection(a, b, 1.0)[c] + connection(a, c, 1.0)[b];
                    assert_eq!(s, 0.0);
                }
            }
        }
    }

    #[test]
    fn constant_support_under_the_twisted_frame() {
        let g = SphereGrid::LatLong { n_theta: 32, n_phi: 64 };
        let d = smooth_density_heisenberg(&SphereFunction::sample(g, |_| 1.0).unwrap(), &FrameOptions::default()).unwrap();
        assert!(d.values.iter().all(|v| v.is_finite()));
        let (lo, hi) = d.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        eprintln!("twisted density of h = 1: min {lo:.6}, max {hi:.6}, nonconvex {}", d.nonconvex.len());
    }

    #[test]
    fn twisted_density_converges_at_second_order() {
        let (a, b, c) = (1.3, 1.0, 0.9);
        let probe = [0.5f64.sqrt() * 0.5f64.sqrt(), 0.5, 0.5f64.sqrt()];
        let at = |n: usize| {
            let g = SphereGrid::LatLong { n_theta: n, n_phi: 2 * n };
            smooth_density_heisenberg(&SphereFunction::sample(g, ellipsoid(a, b, c)).unwrap(), &FrameOptions::default())
                .unwrap()
                .at(&probe)
        };
        let (d1, d2, d3) = (at(16), at(32), at(64));
        let order = ((d1 - d2) / (d2 - d3)).abs().log2();
        eprintln!("twisted density at probe: {d1:.8} {d2:.8} {d3:.8}, observed order {order:.3}");
        assert!((order - 2.0).abs() < 0.3, "{order}");
    }

    #[test]
    fn heisenberg_density_rejects_the_circle() {
        let h = SphereFunction::sample(SphereGrid::Circle { m: 16 }, |_| 1.0).unwrap();
        assert!(smooth_density_heisenberg(&h, &FrameOptions::default()).is_err());
    }
}
