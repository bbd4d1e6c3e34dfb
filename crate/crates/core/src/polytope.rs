//! Bounded polytopes `{v : <v, u_i> ≤ f_i}` in `R^k` with exact vertex sets and,
//! in dimensions 2 and 3, exact facet and moment integrals.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::next_combination;
use crate::numeric::{dot, ksum, norm};

#[derive(Debug, Clone, PartialEq)]
pub struct HalfspacePolytope {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    vertices: Vec<Vec<f64>>,
    /// Vertex indices on each constraint; cyclically ordered when `k ≤ 3`.
    facets: Vec<Vec<usize>>,
}

impl HalfspacePolytope {
    /// The normals must positively span `R^k` and every offset must be positive.
    pub fn new(normals: &[Vec<f64>], offsets: &[f64]) -> Result<Self> {
        if normals.len() != offsets.len() {
            return Err(Error::DimensionMismatch {
                expected: normals.len(),
                got: offsets.len(),
            });
        }
        let min = offsets.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) || offsets.iter().any(|f| !f.is_finite()) {
            return Err(Error::NonPositiveSupport(min));
        }
        let k = normals.first().map(Vec::len).ok_or(Error::NotSpanning)?;
        let (vertices, facets) = match k {
            2 => clip_polygon(normals, offsets)?,
            _ => enumerate_vertices(normals, offsets, k)?,
        };
        Ok(Self {
            normals: normals.to_vec(),
            offsets: offsets.to_vec(),
            vertices,
            facets,
        })
    }

    pub fn dim(&self) -> usize {
        self.normals[0].len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    /// Vertex indices on constraint `i`; empty for redundant constraints.
    pub fn facet(&self, i: usize) -> &[usize] {
        &self.facets[i]
    }

    /// Euclidean support `max_{v ∈ P} <v, u>`.
    pub fn support(&self, u: &[f64]) -> f64 {
        self.vertices.iter().map(|v| dot(v, u)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }

    /// Largest `<v, u_i> - f_i` over the constraints.
    pub fn margin(&self, v: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(u, f)| dot(v, u) - f)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lebesgue volume (`k = 2, 3`).
    pub fn volume(&self) -> Result<f64> {
        match self.dim() {
            2 => Ok(ksum(self.fan().map(|(a, b)| 0.5 * cross(a, b)))),
            3 => Ok(ksum((0..self.normals.len()).map(|i| self.offsets[i] * self.facet_measure(i).unwrap() / 3.0))),
            k => Err(Error::Unsupported(format!("exact volume in dimension {k}"))),
        }
    }

    /// Length (`k = 2`) or area (`k = 3`) of facet `i`.
    pub fn facet_measure(&self, i: usize) -> Result<f64> {
        let f = &self.facets[i];
        match self.dim() {
            2 => Ok(if f.len() == 2 {
                dist(&self.vertices[f[0]], &self.vertices[f[1]])
            } else {
                0.0
            }),
            3 => {
                if f.len() < 3 {
                    return Ok(0.0);
                }
                let p0 = &self.vertices[f[0]];
                let mut acc = [0.0; 3];
                for w in f[1..].windows(2) {
                    let a = sub(&self.vertices[w[0]], p0);
                    let b = sub(&self.vertices[w[1]], p0);
                    let c = cross3(&a, &b);
                    for j in 0..3 {
                        acc[j] += c[j];
                    }
                }
                Ok(0.5 * norm(&acc))
            }
            k => Err(Error::Unsupported(format!("facet measure in dimension {k}"))),
        }
    }

    /// `∫_P |v|² dv` (`k = 2`).
    pub fn second_moment(&self) -> Result<f64> {
        self.require_planar()?;
        Ok(ksum(self.fan().map(|(a, b)| {
            0.5 * cross(a, b) * (dot(a, a) + dot(b, b) + dot(a, b)) / 6.0
        })))
    }

    /// `∫_P v dv` (`k = 2`).
    pub fn first_moment(&self) -> Result<Vec<f64>> {
        self.require_planar()?;
        let mut m = [0.0, 0.0];
        for (a, b) in self.fan() {
            let w = 0.5 * cross(a, b) / 3.0;
            m[0] += w * (a[0] + b[0]);
            m[1] += w * (a[1] + b[1]);
        }
        Ok(m.to_vec())
    }

    /// `∫_{F_i} |v|² dσ` (`k = 2`).
    pub fn facet_second_moment(&self, i: usize) -> Result<f64> {
        self.require_planar()?;
        let f = &self.facets[i];
        if f.len() != 2 {
            return Ok(0.0);
        }
        let (a, b) = (&self.vertices[f[0]], &self.vertices[f[1]]);
        Ok(dist(a, b) * (dot(a, a) + dot(a, b) + dot(b, b)) / 3.0)
    }

    /// Volume centroid (`k = 2, 3`).
    pub fn centroid(&self) -> Result<Vec<f64>> {
        match self.dim() {
            2 => {
                let vol = self.volume()?;
                Ok(self.first_moment()?.iter().map(|m| m / vol).collect())
            }
            3 => {
                // cone decomposition from the origin over triangulated facets
                let mut m = [0.0; 3];
                let mut vol = 0.0;
                for f in &self.facets {
                    if f.len() < 3 {
                        continue;
                    }
                    let p0 = &self.vertices[f[0]];
                    for w in f[1..].windows(2) {
                        let (a, b) = (&self.vertices[w[0]], &self.vertices[w[1]]);
                        let v = dot(p0, &cross3(a, b)).abs() / 6.0;
                        vol += v;
                        for j in 0..3 {
                            m[j] += v * (p0[j] + a[j] + b[j]) / 4.0;
                        }
                    }
                }
                Ok(m.iter().map(|c| c / vol).collect())
            }
            k => Err(Error::Unsupported(format!("centroid in dimension {k}"))),
        }
    }

    fn require_planar(&self) -> Result<()> {
        if self.dim() == 2 {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("planar moment in dimension {}", self.dim())))
        }
    }

    /// Consecutive vertex pairs of a polygon, counterclockwise.
    fn fan(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        let m = self.vertices.len();
        (0..m).map(move |j| (self.vertices[j].as_slice(), self.vertices[(j + 1) % m].as_slice()))
    }
}

fn cross(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}

type Facets = (Vec<Vec<f64>>, Vec<Vec<usize>>);

/// Sutherland-Hodgman clipping of a large square; each polygon edge carries
/// the index of the constraint it lies on.
fn clip_polygon(normals: &[Vec<f64>], offsets: &[f64]) -> Result<Facets> {
    let fmax = offsets.iter().copied().fold(0.0, f64::max);
    let mut big = 1e3 * fmax;
    for _ in 0..8 {
        let mut poly: Vec<([f64; 2], Option<usize>)> = vec![
            ([-big, -big], None),
            ([big, -big], None),
            ([big, big], None),
            ([-big, big], None),
        ];
        for (c, (u, &f)) in normals.iter().zip(offsets).enumerate() {
            let eps = 1e-13 * fmax;
            let mut out = Vec::with_capacity(poly.len() + 1);
            let m = poly.len();
            for j in 0..m {
                let (p, label) = poly[j];
                let q = poly[(j + 1) % m].0;
                let sp = p[0] * u[0] + p[1] * u[1] - f;
                let sq = q[0] * u[0] + q[1] * u[1] - f;
                let cut = |p: [f64; 2], q: [f64; 2]| {
                    let s = sp / (sp - sq);
                    [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]
                };
                match (sp <= eps, sq <= eps) {
                    (true, true) => out.push((p, label)),
                    (true, false) => {
                        out.push((p, label));
                        if sp < -eps {
                            out.push((cut(p, q), Some(c)));
                        } else {
                            // p lies on the line: the new edge starts at p
                            out.last_mut().unwrap().1 = Some(c);
                        }
                    }
                    (false, true) => {
                        if sq < -eps {
                            out.push((cut(p, q), label));
                        }
                    }
                    (false, false) => {}
                }
            }
            poly = dedupe(out, 1e-14 * fmax.max(1.0));
            if poly.len() < 3 {
                return Err(Error::EmptyBody);
            }
        }
        if poly.iter().any(|(_, l)| l.is_none()) {
            big *= 1e3;
            continue;
        }
        let vertices: Vec<Vec<f64>> = poly.iter().map(|(p, _)| p.to_vec()).collect();
        let mut facets = vec![Vec::new(); normals.len()];
        let m = poly.len();
        for (j, (_, l)) in poly.iter().enumerate() {
            facets[l.unwrap()] = vec![j, (j + 1) % m];
        }
        return Ok((vertices, facets));
    }
    Err(Error::NotSpanning)
}

fn dedupe(poly: Vec<([f64; 2], Option<usize>)>, tol: f64) -> Vec<([f64; 2], Option<usize>)> {
    let m = poly.len();
    let mut out: Vec<([f64; 2], Option<usize>)> = Vec::with_capacity(m);
    for j in 0..m {
        let (p, _) = poly[j];
        let q = poly[(j + 1) % m].0;
        if (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol && m > 1 {
            continue;
        }
        out.push(poly[j]);
    }
    out
}

/// Brute force over `k`-subsets of constraints.
fn enumerate_vertices(normals: &[Vec<f64>], offsets: &[f64], k: usize) -> Result<Facets> {
    let m = normals.len();
    if m < k + 1 {
        return Err(Error::NotSpanning);
    }
    let fmax = offsets.iter().copied().fold(0.0, f64::max);
    let tol = 1e-10 * fmax.max(1.0);
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| normals[i].clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| offsets[i]).collect();
        if let Some(v) = solve_linear(a, b) {
            let feasible = normals.iter().zip(offsets).all(|(u, f)| dot(&v, u) <= f + tol);
            if feasible && !vertices.iter().any(|w| dist(w, &v) <= 1e3 * tol) {
                vertices.push(v);
            }
        }
        if !next_combination(&mut idx, m) {
            break;
        }
    }
    if vertices.len() < k + 1 {
        return Err(Error::NotSpanning);
    }
    let facets = (0..m)
        .map(|i| {
            let on: Vec<usize> = (0..vertices.len())
                .filter(|&j| (dot(&vertices[j], &normals[i]) - offsets[i]).abs() <= 1e3 * tol)
                .collect();
            if k == 3 && on.len() >= 3 {
                order_facet(&vertices, on, &normals[i])
            } else {
                on
            }
        })
        .collect();
    Ok((vertices, facets))
}

/// Sorts facet vertices counterclockwise around the outward normal.
fn order_facet(vertices: &[Vec<f64>], mut on: Vec<usize>, u: &[f64]) -> Vec<usize> {
    let c: Vec<f64> = (0..3).map(|j| on.iter().map(|&i| vertices[i][j]).sum::<f64>() / on.len() as f64).collect();
    let helper = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = {
        let w = cross3(u, &helper);
        let s = norm(&w);
        w.map(|x| x / s)
    };
    let e2 = cross3(u, &e1);
    let angle = |i: usize| {
        let d = sub(&vertices[i], &c);
        dot(&d, &e2).atan2(dot(&d, &e1))
    };
    on.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
    on
}

/// Solves `a x = b`; `None` when `a` is numerically singular.
pub fn solve_linear(a: Vec<Vec<f64>>, b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    let m = DMatrix::from_fn(k, k, |i, j| a[i][j]);
    let scale = m.amax().max(1e-300);
    let svd = m.svd(true, true);
    if svd.singular_values.min() <= 1e-10 * scale {
        return None;
    }
    svd.solve(&DVector::from_vec(b), 0.0).ok().map(|x| x.as_slice().to_vec())
}

/// Numerical rank with relative tolerance `tol`.
pub fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    let Some(k) = rows.first().map(Vec::len) else {
        return 0;
    };
    let m = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
    let scale = m.amax();
    m.rank(tol * scale.max(1e-300))
}

/// Unit vector orthogonal to `k - 1` independent rows in `R^k`, via the
/// generalized cross product.
pub fn nullspace_direction(rows: &[&[f64]], k: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(rows.len() + 1, k);
    let d: Vec<f64> = (0..k)
        .map(|j| {
            let minor = DMatrix::from_fn(k - 1, k - 1, |r, c| rows[r][if c < j { c } else { c + 1 }]);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * minor.determinant()
        })
        .collect();
    let s = norm(&d);
    (s > 1e-10).then(|| d.iter().map(|x| x / s).collect())
}
