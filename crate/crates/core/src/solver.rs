//! Variational Minkowski solver: minimize `‖f‖ / Vol(Ω_f)^e` over support vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::body::{wulff_shape, Estimate, SupportVector, WulffBody};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::measure::{self, centroid, default_probes, hemisphere_margin, DiscreteSphereMeasure, MeasureOptions};
use crate::numeric::{dot, ksum, norm};
use crate::sampling::chunked;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolExponent {
    /// `1/(2n+2)`, which makes `Φ` invariant under dilations.
    Dilation,
    /// `1/(2n+1)`.
    Paper,
    Custom(f64),
}

impl VolExponent {
    pub fn value(&self, geometry: Geometry) -> f64 {
        let q = geometry.homogeneous_dim();
        match *self {
            VolExponent::Dilation => 1.0 / q,
            VolExponent::Paper => 1.0 / (q - 1.0),
            VolExponent::Custom(e) => e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    Exact,
    /// Box sampling with the same uniforms at every evaluation.
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub geometry: Geometry,
    pub vol_exponent: VolExponent,
    pub volume: VolumeMethod,
    /// Volume every iterate is rescaled to; `None` uses `Vol(wulff(f ≡ 1))`.
    pub volume_target: Option<f64>,
    /// Measure of the final body and of the mass-scaling experiment.
    pub measure: MeasureOptions,
    pub seed: u64,
    pub eta0: f64,
    pub eta_max: f64,
    /// Sweeps stop once every step size is below this.
    pub eta_min: f64,
    /// Relative `Φ` improvement per sweep below which a sweep counts as stalled.
    pub tol: f64,
    pub max_sweeps: usize,
    /// `|centroid| ≤ centroid_tol · mass + centroid_slack`.
    pub centroid_tol: f64,
    /// Allowance for sampling noise in the weights, e.g. `3 sqrt(Σ σ_i²)`.
    pub centroid_slack: f64,
    pub skip_centroid: bool,
    /// Probe count for the hemisphere margin beyond the circle.
    pub probes: usize,
    /// Translate every iterate so that its polytope has centroid zero.
    pub center: bool,
}

impl SolverConfig {
    pub fn new(geometry: Geometry) -> Self {
        Self {
            geometry,
            vol_exponent: VolExponent::Dilation,
            volume: match geometry {
                Geometry::Heisenberg { n: 1 } | Geometry::Euclidean { dim: 2 | 3 } => VolumeMethod::Exact,
                _ => VolumeMethod::MonteCarlo { samples: 200_000 },
            },
            volume_target: None,
            measure: MeasureOptions::default(),
            seed: 0,
            eta0: 0.05,
            eta_max: 0.5,
            eta_min: 1e-9,
            tol: 1e-13,
            max_sweeps: 20_000,
            centroid_tol: 1e-2,
            centroid_slack: 0.0,
            skip_centroid: false,
            probes: 4096,
            center: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub mass: f64,
    pub centroid: Vec<f64>,
    pub margin: f64,
    /// `(mass + 1) / c`.
    pub radius_bound: f64,
    pub centroid_checked: bool,
}

/// Checks the hemisphere condition, then `|centroid| ≤ tol · mass + slack`.
pub fn validate_measure(mu: &DiscreteSphereMeasure, tol: f64, slack: f64, probes: usize, skip_centroid: bool) -> Result<Validation> {
    let mass = mu.mass();
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let margin = hemisphere_margin(mu, &default_probes(mu, probes, &mut rng));
    if !(margin > 1e-12 * mass) {
        return Err(Error::HemisphereConcentration { margin });
    }
    let c = centroid(mu);
    let limit = tol * mass + slack;
    if !skip_centroid && norm(&c) > limit {
        return Err(Error::CentroidViolation { norm: norm(&c), limit });
    }
    Ok(Validation {
        mass,
        centroid: c,
        margin,
        radius_bound: (mass + 1.0) / margin,
        centroid_checked: !skip_centroid,
    })
}

struct VolumeEval {
    geometry: Geometry,
    method: VolumeMethod,
    seed: u64,
}

impl VolumeEval {
    fn body(&self, f: &SupportVector) -> Result<WulffBody> {
        wulff_shape(self.geometry, f.clone())
    }

    fn volume(&self, body: &WulffBody) -> Result<f64> {
        match self.method {
            VolumeMethod::Exact => body.volume_exact(),
            VolumeMethod::MonteCarlo { samples } => {
                let bbox = body.bounding_box();
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let hits: usize = chunked(&mut rng, samples, |r, c| {
                    (0..c)
                        .filter(|_| {
                            let p: Vec<f64> = bbox.lo.iter().zip(&bbox.hi).map(|(l, h)| l + (h - l) * r.gen::<f64>()).collect();
                            body.contains(&p)
                        })
                        .count()
                })
                .into_iter()
                .sum();
                Ok(bbox.volume() * hits as f64 / samples as f64)
            }
        }
    }
}

/// `Σ w_i f_i / Vol(wulff(f))^e`.
pub fn phi(f: &SupportVector, mu: &DiscreteSphereMeasure, cfg: &SolverConfig) -> Result<f64> {
    check_grid(f, mu)?;
    let eval = VolumeEval {
        geometry: cfg.geometry,
        method: cfg.volume,
        seed: cfg.seed,
    };
    let vol = eval.volume(&eval.body(f)?)?;
    Ok(pairing_norm(&f.values, mu) / vol.powf(cfg.vol_exponent.value(cfg.geometry)))
}

fn pairing_norm(f: &[f64], mu: &DiscreteSphereMeasure) -> f64 {
    ksum(f.iter().zip(&mu.weights).map(|(f, w)| f * w))
}

fn check_grid(f: &SupportVector, mu: &DiscreteSphereMeasure) -> Result<()> {
    if f.grid != mu.grid {
        return Err(Error::InvalidInput("support vector and measure use different grids".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    /// `|w_achieved,i − w_i| / max(w_i, ε)`.
    pub relative: Vec<f64>,
    pub max_relative: f64,
    /// `(mass_achieved − mass) / mass`.
    pub mass_error: f64,
    pub mass_stderr: f64,
}

/// Compares the surface measure of `body` with `mu`.
pub fn residual<R: Rng + ?Sized>(mu: &DiscreteSphereMeasure, body: &WulffBody, opts: &MeasureOptions, rng: &mut R) -> Result<Residual> {
    let report = measure::surface_measure(body, opts, rng)?;
    Ok(compare(mu, &report.measure, report.mass_stderr))
}

fn compare(mu: &DiscreteSphereMeasure, achieved: &DiscreteSphereMeasure, mass_stderr: f64) -> Residual {
    let eps = 1e-3 * mu.mass() / mu.weights.len() as f64;
    let relative: Vec<f64> = mu
        .weights
        .iter()
        .zip(&achieved.weights)
        .map(|(w, a)| (a - w).abs() / w.max(eps))
        .collect();
    let mass = mu.mass();
    Residual {
        max_relative: relative.iter().copied().fold(0.0, f64::max),
        relative,
        mass_error: (achieved.mass() - mass) / mass,
        mass_stderr: mass_stderr / mass,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub f_out: SupportVector,
    #[serde(skip)]
    pub body: Option<WulffBody>,
    pub achieved: DiscreteSphereMeasure,
    pub residual: Residual,
    pub phi_trace: Vec<f64>,
    /// `max_i f_i` after every sweep, before the final dilation.
    pub max_support_trace: Vec<f64>,
    pub validation: Validation,
    pub radius_bound_held: bool,
    pub mass_exponent: Estimate,
    pub dilation: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub experimental: bool,
}

/// Projected cyclic coordinate descent on `Φ` followed by a dilation that
/// matches the total mass of `mu`.
pub fn solve(mu: &DiscreteSphereMeasure, cfg: &SolverConfig) -> Result<SolveReport> {
    if mu.grid.dim() != cfg.geometry.dir_dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.geometry.dir_dim(),
            got: mu.grid.dim(),
        });
    }
    let validation =
        validate_measure(mu, cfg.centroid_tol, cfg.centroid_slack, cfg.probes, cfg.skip_centroid).map_err(|e| Error::InfeasibleInput(Box::new(e)))?;
    let eval = VolumeEval {
        geometry: cfg.geometry,
        method: cfg.volume,
        seed: cfg.seed,
    };
    let grid = mu.grid.clone();
    let m = grid.len();
    let q = cfg.geometry.homogeneous_dim();
    let omega = match cfg.volume_target {
        Some(v) => v,
        None => eval.volume(&eval.body(&SupportVector::constant(grid.clone(), 1.0)?)?)?,
    };
    let e = cfg.vol_exponent.value(cfg.geometry);

    // tightened or recentred, then rescaled to volume ω; returns (f, Φ)
    let settle = |values: Vec<f64>, tighten: bool| -> Result<(Vec<f64>, f64)> {
        let mut body = eval.body(&SupportVector::new(grid.clone(), values.clone())?)?;
        let mut f = values;
        if tighten {
            f = grid.dirs().iter().map(|u| body.h_support(u)).collect();
        }
        if cfg.center {
            let c = body.polytope().centroid()?;
            for (fi, u) in f.iter_mut().zip(grid.dirs()) {
                *fi -= dot(&c, u);
            }
        }
        if tighten || cfg.center {
            body = eval.body(&SupportVector::new(grid.clone(), f.clone())?)?;
        }
        let s = (omega / eval.volume(&body)?).powf(1.0 / q);
        f.iter_mut().for_each(|x| *x *= s);
        Ok((f.clone(), pairing_norm(&f, mu) / omega.powf(e)))
    };

    let (mut f, mut phi_cur) = settle(vec![validation.radius_bound / 2.0; m], true)?;
    let mut eta = vec![cfg.eta0; m];
    let mut phi_trace = vec![phi_cur];
    let mut max_support_trace = vec![f.iter().copied().fold(0.0, f64::max)];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let start = phi_cur;
        for i in 0..m {
            let mut moved = false;
            for sign in [1.0, -1.0] {
                let mut trial = f.clone();
                trial[i] *= (sign * eta[i]).exp();
                // a step that pushes the origin out of the body is rejected
                let Ok((t, p)) = settle(trial, false) else { continue };
                let tie = p == phi_cur && t.iter().copied().fold(0.0, f64::max) < f.iter().copied().fold(0.0, f64::max);
                if p < phi_cur || tie {
                    f = t;
                    phi_cur = p;
                    eta[i] = (2.0 * eta[i]).min(cfg.eta_max);
                    moved = true;
                    break;
                }
            }
            if !moved {
                eta[i] *= 0.5;
            }
        }
        if let Ok((t, p)) = settle(f.clone(), true) {
            if p <= phi_cur {
                f = t;
                phi_cur = p;
            }
        }
        phi_trace.push(phi_cur);
        max_support_trace.push(f.iter().copied().fold(0.0, f64::max));
        let stalled = start - phi_cur <= cfg.tol * start;
        if stalled && eta.iter().all(|&x| x < cfg.eta_min) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations: sweeps, trace: phi_trace });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let body = eval.body(&SupportVector::new(grid.clone(), f)?)?;
    let mass_exponent = measure::mass_scaling_exponent(&body, &cfg.measure, &mut rng)?;
    let before = measure::surface_measure(&body, &cfg.measure, &mut rng)?;
    let dilation = (validation.mass / before.measure.mass()).powf(1.0 / mass_exponent.value);
    let body = body.dilated(dilation)?;
    let after = measure::surface_measure(&body, &cfg.measure, &mut rng)?;
    let residual = compare(mu, &after.measure, after.mass_stderr);
    // without centring the origin may end on the boundary, where h is not positive
    let raw = body.support_vector();
    let f_out = SupportVector::new(
        grid.clone(),
        grid.dirs()
            .iter()
            .zip(&raw.values)
            .map(|(u, f)| {
                let h = body.h_support(u);
                if h > 0.0 {
                    h
                } else {
                    *f
                }
            })
            .collect(),
    )?;
    let radius_bound_held = max_support_trace.iter().all(|&r| r <= validation.radius_bound * (1.0 + 1e-9));
    Ok(SolveReport {
        f_out,
        achieved: after.measure,
        residual,
        phi_trace,
        max_support_trace,
        radius_bound_held,
        mass_exponent,
        dilation,
        sweeps,
        converged,
        experimental: cfg.skip_centroid,
        validation,
        body: Some(body),
    })
}

/// The same engine in flat geometry (`d ∈ {2, 3}`).
pub fn euclidean_oracle_solve(mu: &DiscreteSphereMeasure, cfg: &SolverConfig) -> Result<SolveReport> {
    let d = mu.grid.dim();
    if !(2..=3).contains(&d) {
        return Err(Error::Unsupported(format!("Euclidean oracle in dimension {d}")));
    }
    solve(
        mu,
        &SolverConfig {
            geometry: Geometry::euclidean(d),
            volume: VolumeMethod::Exact,
            ..cfg.clone()
        },
    )
}

/// Closed-form polygon with edge lengths `w_i` and outer normals `u_i`,
/// centred at its centroid; the support vector on the measure's grid.
pub fn polygon_from_measure(mu: &DiscreteSphereMeasure) -> Result<SupportVector> {
    if mu.grid.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: mu.grid.dim(),
        });
    }
    let mut order: Vec<usize> = (0..mu.grid.len()).filter(|&i| mu.weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let (ua, ub) = (mu.grid.get(a), mu.grid.get(b));
        ua[1].atan2(ua[0]).total_cmp(&ub[1].atan2(ub[0]))
    });
    let mut vertices = vec![vec![0.0, 0.0]];
    for &i in &order {
        let (u, w) = (mu.grid.get(i), mu.weights[i]);
        let last = vertices.last().expect("nonempty").clone();
        vertices.push(vec![last[0] - w * u[1], last[1] + w * u[0]]);
    }
    vertices.pop();
    // area centroid by the shoelace formula
    let k = vertices.len();
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for j in 0..k {
        let (p, r) = (&vertices[j], &vertices[(j + 1) % k]);
        let cr = p[0] * r[1] - r[0] * p[1];
        a += cr / 2.0;
        cx += (p[0] + r[0]) * cr / 6.0;
        cy += (p[1] + r[1]) * cr / 6.0;
    }
    if !(a > 0.0) {
        return Err(Error::InvalidInput("measure does not close into a polygon".into()));
    }
    let c = [cx / a, cy / a];
    let values = mu
        .grid
        .dirs()
        .iter()
        .map(|u| vertices.iter().map(|v| (v[0] - c[0]) * u[0] + (v[1] - c[1]) * u[1]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    SupportVector::new(mu.grid.clone(), values)
}

/// `3 sqrt(Σ σ_i²)`: centroid slack for weights with standard errors `σ`.
pub fn centroid_noise(stderr: &[f64]) -> f64 {
    3.0 * stderr.iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Largest per-direction relative deviation `|a_i − b_i| / b_i`.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs()).fold(0.0, f64::max)
}
