//! Length-minimizing CC geodesics from the identity.
//!
//! A unit-length geodesic is fixed by a unit initial tangent
//! `w = B + iA ∈ C^n` and a twist `φ ∈ [-2π, 2π]`:
//!
//! ```text
//! z(s) = s · sinc(φs/2) · e^{-iφs/2} · w,      t(s) = s² τ(φs),
//! τ(u) = (u - sin u) / (2u²)
//! ```
//!
//! which is the usual trigonometric form written so that `φ → 0` needs no
//! special casing. A geodesic of length `r` is the dilation `δ_r` of the unit
//! one. The inverse problem reduces to the odd, increasing ratio
//! `ρ(φ) = t/|z|² = (φ - sin φ) / (4(1 - cos φ))`; once `φ` is known the
//! tangent is `e^{iφ/2} z/|z|`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{self, GroupPoint, HorizontalVector};
use crate::numeric::{cis, cmul, ksum, sinc, tau, u_minus_sin_over_cube};

/// Root bracket is `(-2π + EPS, 2π - EPS)`.
const BRACKET_EPS: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicParams {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub phi: f64,
    pub r: f64,
}

impl GeodesicParams {
    pub fn new(a: Vec<f64>, b: Vec<f64>, phi: f64, r: f64) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: a.len().max(1),
                got: b.len(),
            });
        }
        let s: f64 = a.iter().chain(&b).map(|c| c * c).sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange {
                name: "Σ(A²+B²)",
                value: s,
            });
        }
        if !(phi.abs() <= 2.0 * PI) {
            return Err(Error::OutOfRange { name: "phi", value: phi });
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::OutOfRange { name: "r", value: r });
        }
        Ok(Self { a, b, phi, r })
    }

    /// From a unit horizontal tangent `[B_1..B_n, A_1..A_n]`.
    pub fn from_tangent(tangent: &[f64], phi: f64, r: f64) -> Result<Self> {
        let n = tangent.len() / 2;
        Self::new(tangent[n..].to_vec(), tangent[..n].to_vec(), phi, r)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }
}

/// `ρ(φ) = (φ - sin φ) / (4 (1 - cos φ))`, odd and increasing on `(-2π, 2π)`.
pub fn rho(phi: f64) -> f64 {
    let s = sinc(0.5 * phi);
    phi * u_minus_sin_over_cube(phi) / (2.0 * s * s)
}

fn rho_prime(phi: f64) -> f64 {
    if phi.abs() < 0.05 {
        return 1.0 / 12.0 + phi * phi / 120.0;
    }
    let omc = 2.0 * (0.5 * phi).sin().powi(2);
    (omc * omc - (phi - phi.sin()) * phi.sin()) / (4.0 * omc * omc)
}

/// Evaluates the geodesic at `s ∈ [0, 1]`.
pub fn geodesic_point(p: &GeodesicParams, s: f64) -> Result<GroupPoint> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange { name: "s", value: s });
    }
    Ok(eval_unchecked(p, s))
}

pub(crate) fn eval_unchecked(p: &GeodesicParams, s: f64) -> GroupPoint {
    let n = p.n();
    let u = p.phi * s;
    let m = cis(-0.5 * u);
    let scale = p.r * s * sinc(0.5 * u);
    let mut z = vec![0.0; 2 * n];
    for l in 0..n {
        let (x, y) = cmul(m, (p.b[l], p.a[l]));
        z[l] = scale * x;
        z[n + l] = scale * y;
    }
    let t = p.r * p.r * s * s * tau(u);
    GroupPoint::new(z, t).expect("finite geodesic point")
}

/// CC length by composite Simpson integration of the finite-difference
/// horizontal speed.
pub fn arc_length(p: &GeodesicParams, steps: usize) -> Result<f64> {
    if steps < 16 {
        return Err(Error::OutOfRange {
            name: "quadrature steps",
            value: steps as f64,
        });
    }
    let steps = steps + steps % 2;
    let h = 1.0 / steps as f64;
    let fd = 1e-5;
    let speed = |s: f64| -> f64 {
        let a = eval_unchecked(p, s - fd);
        let b = eval_unchecked(p, s + fd);
        let v: f64 = a.z().iter().zip(b.z()).map(|(x, y)| ((y - x) / (2.0 * fd)).powi(2)).sum();
        v.sqrt()
    };
    Ok(ksum((0..=steps).map(|k| {
        let w = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        w * speed(k as f64 * h) * h / 3.0
    })))
}

/// `γ'(0)` in the horizontal frame: `(B_1..B_n, A_1..A_n)`.
pub fn initial_tangent(p: &GeodesicParams) -> HorizontalVector {
    HorizontalVector::new(p.b.iter().chain(&p.a).copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSolveResult {
    pub params: GeodesicParams,
    pub unique: bool,
    /// Endpoint on the center: the tangent is a free point of a circle and
    /// `params` carries the default `∂x_1` choice.
    pub tangent_family: bool,
    pub endpoint_error: f64,
}

/// Exponential coordinates of a point: length, twist and unit tangent.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ExpCoords {
    pub r: f64,
    pub phi: f64,
    /// `None` on the center (`z = 0`).
    pub tangent: Option<Vec<f64>>,
}

pub(crate) fn exp_coords(g: &GroupPoint) -> Result<ExpCoords> {
    let n = g.n();
    let z2: f64 = g.z().iter().map(|c| c * c).sum();
    let t = g.t();
    if z2 == 0.0 {
        if t == 0.0 {
            return Ok(ExpCoords {
                r: 0.0,
                phi: 0.0,
                tangent: None,
            });
        }
        return Ok(ExpCoords {
            r: (4.0 * PI * t.abs()).sqrt(),
            phi: 2.0 * PI * t.signum(),
            tangent: None,
        });
    }
    let zn = z2.sqrt();
    let phi = solve_twist(t / z2)?;
    let r = if phi.abs() <= PI {
        zn / sinc(0.5 * phi)
    } else {
        (t.abs() / tau(phi).abs()).sqrt()
    };
    let rot = cis(0.5 * phi);
    let mut tangent = vec![0.0; 2 * n];
    for l in 0..n {
        let (b, a) = cmul(rot, (g.x(l) / zn, g.y(l) / zn));
        tangent[l] = b;
        tangent[n + l] = a;
    }
    Ok(ExpCoords {
        r,
        phi,
        tangent: Some(tangent),
    })
}

/// Solves `ρ(φ) = target` by safeguarded Newton inside the bracket.
pub(crate) fn solve_twist(target: f64) -> Result<f64> {
    let phi_max = 2.0 * PI - BRACKET_EPS;
    if target == 0.0 {
        return Ok(0.0);
    }
    if target >= rho(phi_max) {
        return Ok(phi_max);
    }
    if target <= -rho(phi_max) {
        return Ok(-phi_max);
    }
    let (mut lo, mut hi) = (-phi_max, phi_max);
    // Small-twist start from ρ ≈ φ/12; large targets start near the ends.
    let mut x = if target.abs() < 0.2 {
        12.0 * target
    } else {
        target.signum() * (2.0 * PI - 1.0 / (2.0 * target.abs()).sqrt().max(1e-9)).max(1.0)
    };
    x = x.clamp(lo, hi);
    for _ in 0..MAX_ITERATIONS {
        let f = rho(x) - target;
        if f == 0.0 {
            return Ok(x);
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - f / rho_prime(x);
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) || hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::RootNotConverged {
        lo,
        hi,
        iterations: MAX_ITERATIONS,
    })
}

/// Inverse endpoint problem for the geodesic from `e` to `g`.
pub fn solve_geodesic(g: &GroupPoint, tol: f64) -> Result<GeodesicSolveResult> {
    if g.is_identity() {
        return Err(Error::IdentityEndpoint);
    }
    let n = g.n();
    let ec = exp_coords(g)?;
    let (tangent, unique) = match ec.tangent {
        Some(t) => (t, true),
        None => {
            let mut t = vec![0.0; 2 * n];
            t[0] = 1.0;
            (t, false)
        }
    };
    let params = GeodesicParams::from_tangent(&tangent, ec.phi, ec.r).or_else(|_| {
        // renormalize against rounding in the tangent
        let s = tangent.iter().map(|c| c * c).sum::<f64>().sqrt();
        let t: Vec<f64> = tangent.iter().map(|c| c / s).collect();
        GeodesicParams::from_tangent(&t, ec.phi, ec.r)
    })?;
    let end = eval_unchecked(&params, 1.0);
    let endpoint_error = end
        .to_flat()
        .iter()
        .zip(g.to_flat())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if endpoint_error > tol {
        return Err(Error::RoundTrip { error: endpoint_error });
    }
    Ok(GeodesicSolveResult {
        params,
        unique,
        tangent_family: !unique,
        endpoint_error,
    })
}

/// Inverse of [`hlog`] away from the center: the endpoint of the geodesic
/// with initial velocity `v` and twist `phi`.
pub fn exp_point(v: &[f64], phi: f64) -> GroupPoint {
    let n = v.len() / 2;
    let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if r == 0.0 {
        return GroupPoint::identity(n);
    }
    let p = GeodesicParams {
        a: v[n..].iter().map(|c| c / r).collect(),
        b: v[..n].iter().map(|c| c / r).collect(),
        phi,
        r,
    };
    eval_unchecked(&p, 1.0)
}

/// CC distance `d(g, g̃) = |g^{-1} * g̃|_CC`.
pub fn cc_distance(g: &GroupPoint, g_tilde: &GroupPoint) -> Result<f64> {
    if g == g_tilde {
        return Ok(0.0);
    }
    Ok(exp_coords(&group::multiply(&group::inverse(g), g_tilde))?.r)
}

/// `|g|_CC = d(e, g)`.
pub fn cc_gauge(g: &GroupPoint) -> Result<f64> {
    Ok(exp_coords(g)?.r)
}

/// Horizontal log: CC length times the initial unit tangent of the minimizing
/// geodesic from `e` to `g`. Center points take the reference direction `nu`.
pub fn hlog(g: &GroupPoint, nu: Option<&[f64]>) -> Result<HorizontalVector> {
    let n = g.n();
    let ec = exp_coords(g)?;
    match ec.tangent {
        Some(t) => Ok(HorizontalVector::new(t.iter().map(|c| ec.r * c).collect())),
        None if ec.r == 0.0 => Ok(HorizontalVector::new(vec![0.0; 2 * n])),
        None => {
            let nu = nu.ok_or(Error::MissingDirection)?;
            if nu.len() != 2 * n {
                return Err(Error::DimensionMismatch {
                    expected: 2 * n,
                    got: nu.len(),
                });
            }
            Ok(HorizontalVector::new(nu.iter().map(|c| ec.r * c).collect()))
        }
    }
}
