//! Surface measures on the direction sphere and their diagnostics.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::body::{Estimate, WulffBody};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::grid::DirectionGrid;
use crate::numeric::{dot, ksum, norm, KahanSum};
use crate::sampling::{chunked, sphere_area, unit_sphere};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSphereMeasure {
    pub grid: DirectionGrid,
    pub weights: Vec<f64>,
}

impl DiscreteSphereMeasure {
    pub fn new(grid: DirectionGrid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        if !(ksum(weights.iter().copied()) > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(Self { grid, weights })
    }

    pub fn mass(&self) -> f64 {
        ksum(self.weights.iter().copied())
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.weights.iter().map(|w| s * w).collect())
    }

    pub fn centroid(&self) -> Vec<f64> {
        centroid(self)
    }
}

/// `Σ w_i u_i`.
pub fn centroid(mu: &DiscreteSphereMeasure) -> Vec<f64> {
    let k = mu.grid.dim();
    (0..k)
        .map(|j| ksum(mu.grid.dirs().iter().zip(&mu.weights).map(|(u, w)| w * u[j])))
        .collect()
}

fn half_mass(mu: &DiscreteSphereMeasure, v: &[f64]) -> f64 {
    ksum(mu.grid.dirs().iter().zip(&mu.weights).map(|(u, w)| w * dot(u, v).max(0.0)))
}

/// `min_v Σ w_i <u_i, v>⁺` over the probe directions.
pub fn hemisphere_margin(mu: &DiscreteSphereMeasure, probes: &[Vec<f64>]) -> f64 {
    probes.iter().map(|v| half_mass(mu, v)).fold(f64::INFINITY, f64::min)
}

/// Probes that make [`hemisphere_margin`] exact on the circle: between two
/// consecutive zeros of some `<u_i, v>` the objective is a nonnegative
/// sinusoid, so its minimum sits at one of the `±J u_i`. Elsewhere a Fibonacci
/// or random sphere cover of `count` points.
pub fn default_probes<R: Rng + ?Sized>(mu: &DiscreteSphereMeasure, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    match mu.grid.dim() {
        2 => mu
            .grid
            .dirs()
            .iter()
            .zip(&mu.weights)
            .filter(|(_, w)| **w > 0.0)
            .flat_map(|(u, _)| [vec![-u[1], u[0]], vec![u[1], -u[0]]])
            .collect(),
        3 => DirectionGrid::fibonacci_sphere(count.max(8)).expect("spanning lattice").dirs().to_vec(),
        k => (0..count).map(|_| unit_sphere(rng, k)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryDensity {
    /// `dA / |∇_E p_i|`: the rate at which the volume grows when `f_i` grows.
    VolumeVariation,
    /// `|π_H n_E| dA`: the horizontal perimeter.
    HorizontalPerimeter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub point: Vec<f64>,
    pub euclidean_normal: Vec<f64>,
    pub horizontal_normal: Vec<f64>,
    /// Euclidean area of the boundary patch this sample stands for.
    pub patch_area: f64,
    /// Active constraint; `None` at characteristic points.
    pub direction: Option<usize>,
    /// `|∇_E p_i|` of the active constraint function.
    pub gradient_norm: f64,
}

impl BoundarySample {
    pub fn is_characteristic(&self) -> bool {
        self.direction.is_none()
    }

    pub fn density(&self, density: BoundaryDensity) -> f64 {
        match density {
            BoundaryDensity::VolumeVariation => self.patch_area / self.gradient_norm,
            BoundaryDensity::HorizontalPerimeter => self.patch_area * norm(&self.horizontal_normal),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    /// Central-difference step for normals and patch areas.
    pub fd_step: f64,
    /// `|horizontal_normal|` below this marks a characteristic point.
    pub characteristic_tol: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            fd_step: 1e-6,
            characteristic_tol: 1e-6,
        }
    }
}

/// Boundary points on uniformly random dilation orbits.
///
/// Orbit directions `θ` are uniform on the Euclidean unit sphere; the
/// boundary point is `δ_{1/ρ(θ)} θ` with `ρ` the body's gauge. Patch areas are
/// `|S| / count` times the area distortion of `θ ↦ δ_{1/ρ(θ)} θ`.
pub fn boundary_sample<R: Rng + ?Sized>(body: &WulffBody, count: usize, opts: &SampleOptions, rng: &mut R) -> Result<Vec<BoundarySample>> {
    if count == 0 {
        return Err(Error::TooFewSamples { got: 0, min: 1 });
    }
    let d = body.geometry().point_dim();
    let scale = sphere_area(d) / count as f64;
    let parts = chunked(rng, count, |r, c| {
        (0..c).map(|_| sample_at(body, &unit_sphere(r, d), scale, opts)).collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// The boundary sample on the orbit through `theta`, weighted by `scale`.
pub fn sample_at(body: &WulffBody, theta: &[f64], scale: f64, opts: &SampleOptions) -> BoundarySample {
    let geo = body.geometry();
    let d = theta.len();
    let point = body.boundary_point(theta);
    let h = opts.fd_step;

    let basis = tangent_basis(theta);
    let tangents: Vec<Vec<f64>> = basis
        .iter()
        .map(|e| {
            let shifted = |s: f64| {
                let th: Vec<f64> = theta.iter().zip(e).map(|(a, b)| a + s * b).collect();
                let n = norm(&th);
                body.boundary_point(&th.iter().map(|c| c / n).collect::<Vec<_>>())
            };
            let (p, m) = (shifted(h), shifted(-h));
            p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    let patch_area = scale * gram_volume(&tangents);

    let (i, _) = body.active_constraint(&point);
    let u = body.grid().get(i);
    let hp = h * norm(&point).max(1.0);
    let grad: Vec<f64> = (0..d)
        .map(|j| {
            let mut a = point.clone();
            let mut b = point.clone();
            a[j] += hp;
            b[j] -= hp;
            (geo.pairing(&a, u) - geo.pairing(&b, u)) / (2.0 * hp)
        })
        .collect();
    let gradient_norm = norm(&grad);
    let euclidean_normal: Vec<f64> = grad.iter().map(|c| c / gradient_norm).collect();
    let horizontal_normal: Vec<f64> = geo.horizontal_frame(&point).iter().map(|e| dot(e, &euclidean_normal)).collect();
    let direction = (norm(&horizontal_normal) >= opts.characteristic_tol).then_some(i);
    BoundarySample {
        point,
        euclidean_normal,
        horizontal_normal,
        patch_area,
        direction,
        gradient_norm,
    }
}

/// Orthonormal basis of the tangent space of the unit sphere at `theta`.
fn tangent_basis(theta: &[f64]) -> Vec<Vec<f64>> {
    let d = theta.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| theta[a].abs().total_cmp(&theta[b].abs()));
    for &j in &order {
        if basis.len() == d - 1 {
            break;
        }
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        for b in std::iter::once(theta).chain(basis.iter().map(Vec::as_slice)) {
            let c = dot(&e, b);
            for (x, y) in e.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let s = norm(&e);
        if s > 1e-8 {
            basis.push(e.iter().map(|x| x / s).collect());
        }
    }
    basis
}

/// `sqrt(det G)` for the Gram matrix of `vectors`.
fn gram_volume(vectors: &[Vec<f64>]) -> f64 {
    let k = vectors.len();
    let g = nalgebra::DMatrix::from_fn(k, k, |a, b| dot(&vectors[a], &vectors[b]));
    g.determinant().max(0.0).sqrt()
}

/// H-Gauss direction of a boundary sample: its active grid direction.
pub fn h_gauss_direction(s: &BoundarySample, body: &WulffBody) -> Result<usize> {
    let (i, margin) = body.active_constraint(&s.point);
    if margin.abs() > 1e-6 * body.support_vector().values[i].max(1.0) {
        return Err(Error::NoActiveConstraint { margin });
    }
    s.direction.ok_or(Error::InvalidInput("characteristic boundary point".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMethod {
    MonteCarlo,
    /// Closed form of the volume-variation density on polygons
    /// (`H^1`, Euclidean plane and space).
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureOptions {
    pub density: BoundaryDensity,
    pub method: MeasureMethod,
    pub samples: usize,
    pub sample: SampleOptions,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            density: BoundaryDensity::VolumeVariation,
            method: MeasureMethod::MonteCarlo,
            samples: 200_000,
            sample: SampleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMeasureReport {
    pub measure: DiscreteSphereMeasure,
    /// Per-atom standard errors (zero for exact evaluation).
    pub stderr: Vec<f64>,
    pub mass_stderr: f64,
    pub characteristic_fraction: f64,
    pub samples: usize,
}

/// Pushes the boundary density forward to the grid through the H-Gauss map.
pub fn surface_measure<R: Rng + ?Sized>(body: &WulffBody, opts: &MeasureOptions, rng: &mut R) -> Result<SurfaceMeasureReport> {
    match opts.method {
        MeasureMethod::Exact => {
            let measure = surface_measure_exact(body, opts.density)?;
            let m = measure.grid.len();
            Ok(SurfaceMeasureReport {
                measure,
                stderr: vec![0.0; m],
                mass_stderr: 0.0,
                characteristic_fraction: 0.0,
                samples: 0,
            })
        }
        MeasureMethod::MonteCarlo => surface_measure_mc(body, opts, rng),
    }
}

fn surface_measure_mc<R: Rng + ?Sized>(body: &WulffBody, opts: &MeasureOptions, rng: &mut R) -> Result<SurfaceMeasureReport> {
    let n = opts.samples;
    if n < 1000 {
        return Err(Error::TooFewSamples { got: n, min: 1000 });
    }
    let m = body.grid().len();
    let d = body.geometry().point_dim();
    // per-sample contributions are |S| · density, the estimator is their mean
    let area = sphere_area(d);
    struct Acc {
        sum: Vec<KahanSum>,
        sumsq: Vec<KahanSum>,
        total_sq: KahanSum,
        characteristic: usize,
    }
    let parts = chunked(rng, n, |r, c| {
        let mut acc = Acc {
            sum: vec![KahanSum::new(); m],
            sumsq: vec![KahanSum::new(); m],
            total_sq: KahanSum::new(),
            characteristic: 0,
        };
        for _ in 0..c {
            let s = sample_at(body, &unit_sphere(r, d), area, &opts.sample);
            match s.direction {
                Some(i) => {
                    let x = s.density(opts.density);
                    acc.sum[i].add(x);
                    acc.sumsq[i].add(x * x);
                    acc.total_sq.add(x * x);
                }
                None => acc.characteristic += 1,
            }
        }
        acc
    });
    let mut sum = vec![KahanSum::new(); m];
    let mut sumsq = vec![KahanSum::new(); m];
    let mut total_sq = KahanSum::new();
    let mut characteristic = 0;
    for p in parts {
        for i in 0..m {
            sum[i].add(p.sum[i].value());
            sumsq[i].add(p.sumsq[i].value());
        }
        total_sq.add(p.total_sq.value());
        characteristic += p.characteristic;
    }
    let nf = n as f64;
    let weights: Vec<f64> = sum.iter().map(|s| s.value() / nf).collect();
    let stderr: Vec<f64> = (0..m)
        .map(|i| {
            let mean = weights[i];
            ((sumsq[i].value() / nf - mean * mean).max(0.0) / (nf - 1.0)).sqrt()
        })
        .collect();
    let mass = ksum(weights.iter().copied());
    let mass_stderr = ((total_sq.value() / nf - mass * mass).max(0.0) / (nf - 1.0)).sqrt();
    Ok(SurfaceMeasureReport {
        measure: DiscreteSphereMeasure::new(body.grid().clone(), weights)?,
        stderr,
        mass_stderr,
        characteristic_fraction: characteristic as f64 / nf,
        samples: n,
    })
}

/// Closed-form volume-variation measure: `∂ Vol / ∂ f_i`, which is
/// `C ∫_{F_i} |v|² dσ` in `H^1` and the facet measure in Euclidean mode.
pub fn surface_measure_exact(body: &WulffBody, density: BoundaryDensity) -> Result<DiscreteSphereMeasure> {
    if density != BoundaryDensity::VolumeVariation && body.geometry().is_heisenberg() {
        return Err(Error::Unsupported("closed form exists only for the volume-variation density".into()));
    }
    let p = body.polytope();
    let m = body.grid().len();
    let weights = match body.geometry() {
        Geometry::Heisenberg { n: 1 } => {
            let c = body.geometry().volume_constant();
            (0..m).map(|i| p.facet_second_moment(i).map(|s| c * s)).collect::<Result<Vec<_>>>()?
        }
        Geometry::Heisenberg { n } => return Err(Error::Unsupported(format!("closed-form measure for n = {n}"))),
        Geometry::Euclidean { .. } => (0..m).map(|i| p.facet_measure(i)).collect::<Result<Vec<_>>>()?,
    };
    DiscreteSphereMeasure::new(body.grid().clone(), weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub kappa: Estimate,
    pub volume: Estimate,
    pub support_integral: Estimate,
    /// `1/(2n+1)`, or `1/(d-1)` in Euclidean mode.
    pub inv_q_minus_1: f64,
    /// `1/(2n+2)`, or `1/d` in Euclidean mode.
    pub inv_q: f64,
    pub inv_q_minus_1_within_2_sigma: bool,
    pub inv_q_within_2_sigma: bool,
}

/// `κ = Vol(Ω) / Σ_i h(Ω, u_i) w_i` with `w = surface_measure(Ω)`.
pub fn volume_identity_check<R: Rng + ?Sized>(
    body: &WulffBody,
    opts: &MeasureOptions,
    volume_samples: usize,
    rng: &mut R,
) -> Result<KappaReport> {
    let volume = match body.volume_exact() {
        Ok(v) if volume_samples == 0 => Estimate { value: v, stderr: 0.0 },
        _ => body.volume_mc(volume_samples, rng)?,
    };
    let report = surface_measure(body, opts, rng)?;
    let h: Vec<f64> = body.grid().dirs().iter().map(|u| body.h_support(u)).collect();
    let integral = ksum(h.iter().zip(&report.measure.weights).map(|(h, w)| h * w));
    // atoms are sample means over disjoint events; treat them as independent
    let integral_se = h.iter().zip(&report.stderr).map(|(h, s)| (h * s).powi(2)).sum::<f64>().sqrt();
    let kappa = volume.value / integral;
    let rel = ((volume.stderr / volume.value).powi(2) + (integral_se / integral).powi(2)).sqrt();
    let kappa = Estimate {
        value: kappa,
        stderr: kappa * rel,
    };
    let q = body.geometry().homogeneous_dim();
    let (inv_q_minus_1, inv_q) = (1.0 / (q - 1.0), 1.0 / q);
    let band = 2.0 * kappa.stderr + 1e-12 * kappa.value;
    Ok(KappaReport {
        kappa,
        volume,
        support_integral: Estimate {
            value: integral,
            stderr: integral_se,
        },
        inv_q_minus_1,
        inv_q,
        inv_q_minus_1_within_2_sigma: (kappa.value - inv_q_minus_1).abs() <= band,
        inv_q_within_2_sigma: (kappa.value - inv_q).abs() <= band,
    })
}

/// Exponent `e` with `mass(S(δ_λ Ω)) = λ^e mass(S(Ω))`, from `λ = 1, 2`.
pub fn mass_scaling_exponent<R: Rng + ?Sized>(body: &WulffBody, opts: &MeasureOptions, rng: &mut R) -> Result<Estimate> {
    let a = surface_measure(body, opts, rng)?;
    let b = surface_measure(&body.dilated(2.0)?, opts, rng)?;
    let (ma, mb) = (a.measure.mass(), b.measure.mass());
    let e = (mb / ma).log2();
    let rel = ((a.mass_stderr / ma).powi(2) + (b.mass_stderr / mb).powi(2)).sqrt();
    Ok(Estimate {
        value: e,
        stderr: rel / std::f64::consts::LN_2,
    })
}

/// Mean of `<u, v>⁺` over the uniform circle: `1/π`.
pub const CIRCLE_HALF_MEAN: f64 = 1.0 / PI;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{wulff_shape, SupportVector};
    use crate::geodesic::{self, GeodesicParams};
    use crate::group::GroupPoint;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn body(geo: Geometry, grid: DirectionGrid, f: impl Fn(&[f64]) -> f64) -> WulffBody {
        wulff_shape(geo, SupportVector::from_fn(grid, f).unwrap()).unwrap()
    }

    fn wavy() -> WulffBody {
        body(Geometry::heisenberg(1), DirectionGrid::circle(32).unwrap(), |u| {
            1.0 + 0.3 * (2.0 * u[1].atan2(u[0])).cos()
        })
    }

    fn measure(dirs: Vec<Vec<f64>>, w: Vec<f64>) -> DiscreteSphereMeasure {
        DiscreteSphereMeasure::new(DirectionGrid::from_unnormalized(dirs, "test").unwrap(), w).unwrap()
    }

    #[test]
    fn centroid_examples() {
        let mu = measure(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]], vec![2.0, 2.0, 1.0, 1.0]);
        assert!(centroid(&mu).iter().all(|c| c.abs() < 1e-15));
        let tri: Vec<Vec<f64>> = (0..3).map(|k| {
            let a = 2.0 * PI * k as f64 / 3.0;
            vec![a.cos(), a.sin()]
        }).collect();
        let mu = measure(tri, vec![1.0; 3]);
        assert!(norm(&centroid(&mu)) < 1e-12);
        let mu = measure(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]], vec![3.0, 0.0, 0.0, 0.0]);
        assert_eq!(centroid(&mu), vec![3.0, 0.0]);
    }

    #[test]
    fn hemisphere_margin_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // all atoms strictly on the right
        let mu = measure(vec![vec![1.0, 0.2], vec![1.0, -0.5], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]], vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        let probes = default_probes(&mu, 0, &mut rng);
        assert!(hemisphere_margin(&mu, &probes) < 1e-12);
        // uniform measure on 64 directions: c = mass/π
        let g = DirectionGrid::circle(64).unwrap();
        let mu = DiscreteSphereMeasure::new(g.clone(), vec![1.0 / 64.0; 64]).unwrap();
        let c = hemisphere_margin(&mu, &default_probes(&mu, 0, &mut rng));
        assert!((c - CIRCLE_HALF_MEAN).abs() < 0.02 * CIRCLE_HALF_MEAN, "{c}");
        // direct summation oracle on a fine probe circle agrees and never undercuts
        let fine: Vec<Vec<f64>> = DirectionGrid::circle(20_000).unwrap().dirs().to_vec();
        let c_fine = hemisphere_margin(&mu, &fine);
        assert!(c_fine >= c - 1e-15 && c_fine - c < 1e-6);
    }

    #[test]
    fn margin_is_relabeling_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = DirectionGrid::circle(12).unwrap();
        let w: Vec<f64> = (0..12).map(|i| 1.0 + (i as f64).sin().abs()).collect();
        let mu = DiscreteSphereMeasure::new(g.clone(), w.clone()).unwrap();
        let perm: Vec<usize> = (0..12).map(|i| (5 * i + 3) % 12).collect();
        let dirs: Vec<Vec<f64>> = perm.iter().map(|&i| g.get(i).to_vec()).collect();
        let mu2 = DiscreteSphereMeasure::new(DirectionGrid::new(dirs, "perm").unwrap(), perm.iter().map(|&i| w[i]).collect()).unwrap();
        let a = hemisphere_margin(&mu, &default_probes(&mu, 0, &mut rng));
        let b = hemisphere_margin(&mu2, &default_probes(&mu2, 0, &mut rng));
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn boundary_samples_lie_on_the_boundary() {
        let b = wavy();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let samples = boundary_sample(&b, 2000, &SampleOptions::default(), &mut rng).unwrap();
        for s in &samples {
            assert!(b.margin(&s.point).abs() < 1e-9);
            assert!((norm(&s.euclidean_normal) - 1.0).abs() < 1e-12);
            let frame = b.geometry().horizontal_frame(&s.point);
            for (k, e) in frame.iter().enumerate() {
                assert!((s.horizontal_normal[k] - dot(e, &s.euclidean_normal)).abs() < 1e-8);
            }
            if !s.is_characteristic() {
                assert_eq!(h_gauss_direction(s, &b).unwrap(), s.direction.unwrap());
            }
        }
    }

    #[test]
    fn ball_samples_match_the_geodesic_sphere() {
        // boundary of the 4096-direction ball is within the polygon gap of the CC unit sphere
        let b = body(Geometry::heisenberg(1), DirectionGrid::circle(4096).unwrap(), |_| 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in boundary_sample(&b, 500, &SampleOptions::default(), &mut rng).unwrap() {
            let res = geodesic::solve_geodesic(&GroupPoint::from_flat(&s.point).unwrap(), 1e-9).unwrap();
            assert!((res.params.r - 1.0).abs() < 1e-6);
            let on_sphere = geodesic::geodesic_point(&GeodesicParams { r: 1.0, ..res.params.clone() }, 1.0).unwrap();
            let gap = crate::group::koranyi_distance(&on_sphere, &GroupPoint::from_flat(&s.point).unwrap());
            assert!(gap < 1e-3, "{gap}");
        }
    }

    #[test]
    fn active_direction_follows_the_log_on_the_ball() {
        let b = body(Geometry::heisenberg(1), DirectionGrid::circle(64).unwrap(), |_| 1.0);
        let s = sample_at(&b, &[0.6, 0.8, 0.0], 1.0, &SampleOptions::default());
        let i = h_gauss_direction(&s, &b).unwrap();
        assert_eq!(i, b.grid().nearest(&[0.6, 0.8]));
    }

    #[test]
    fn facet_region_maps_to_its_direction() {
        let grid = DirectionGrid::coordinate(2).unwrap();
        let b = body(Geometry::heisenberg(1), grid, |_| 1.0);
        for t in [-0.05, 0.0, 0.05] {
            let s = sample_at(&b, &[1.0, 0.1, t], 1.0, &SampleOptions::default());
            assert_eq!(h_gauss_direction(&s, &b).unwrap(), 0);
        }
    }

    #[test]
    fn characteristic_points_are_flagged() {
        let b = body(Geometry::heisenberg(1), DirectionGrid::circle(16).unwrap(), |_| 1.0);
        let opts = SampleOptions {
            characteristic_tol: 2.0,
            ..SampleOptions::default()
        };
        let s = sample_at(&b, &[0.6, 0.8, 0.0], 1.0, &opts);
        assert!(s.is_characteristic());
        assert!(h_gauss_direction(&s, &b).is_err());
    }

    #[test]
    fn monte_carlo_volume_variation_matches_closed_form() {
        let b = wavy();
        let exact = surface_measure_exact(&b, BoundaryDensity::VolumeVariation).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let opts = MeasureOptions {
            samples: 100_000,
            ..MeasureOptions::default()
        };
        let mc = surface_measure(&b, &opts, &mut rng).unwrap();
        assert!((mc.measure.mass() - exact.mass()).abs() < 4.0 * mc.mass_stderr, "{} vs {} ± {}", mc.measure.mass(), exact.mass(), mc.mass_stderr);
        for i in 0..32 {
            let (a, e, s) = (mc.measure.weights[i], exact.weights[i], mc.stderr[i]);
            assert!((a - e).abs() < 5.0 * s + 1e-12, "atom {i}: {a} vs {e} ± {s}");
        }
    }

    #[test]
    fn exact_measure_is_the_volume_derivative() {
        let b = wavy();
        let mu = surface_measure_exact(&b, BoundaryDensity::VolumeVariation).unwrap();
        let f = b.support_vector().values.clone();
        for i in [0, 3, 8] {
            let h = 1e-6;
            let vol = |d: f64| {
                let mut g = f.clone();
                g[i] += d;
                wulff_shape(b.geometry(), SupportVector::new(b.grid().clone(), g).unwrap()).unwrap().volume_exact().unwrap()
            };
            let fd = (vol(h) - vol(-h)) / (2.0 * h);
            assert!((fd - mu.weights[i]).abs() < 1e-7 * mu.weights[i].max(1.0));
        }
    }

    #[test]
    fn euclidean_square_and_cube() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sq = body(Geometry::euclidean(2), DirectionGrid::coordinate(2).unwrap(), |_| 1.0);
        let mc = surface_measure(&sq, &MeasureOptions { samples: 100_000, ..Default::default() }, &mut rng).unwrap();
        for w in &mc.measure.weights {
            assert!((w - 2.0).abs() < 0.02 * 2.0, "{w}");
        }
        let cube = body(Geometry::euclidean(3), DirectionGrid::coordinate(3).unwrap(), |_| 1.0);
        let mc = surface_measure(&cube, &MeasureOptions { samples: 100_000, ..Default::default() }, &mut rng).unwrap();
        for w in &mc.measure.weights {
            assert!((w - 4.0).abs() < 0.02 * 4.0, "{w}");
        }
        // horizontal perimeter equals the volume variation in flat space
        let hp = surface_measure(
            &cube,
            &MeasureOptions { samples: 20_000, density: BoundaryDensity::HorizontalPerimeter, ..Default::default() },
            &mut rng,
        )
        .unwrap();
        assert!((hp.measure.mass() - 24.0).abs() < 0.02 * 24.0);
    }

    #[test]
    fn polygon_edges_at_full_sample_count() {
        let grid = DirectionGrid::circle_offset(7, 0.2).unwrap();
        let b = body(Geometry::euclidean(2), grid, |u| 1.0 + 0.2 * u[0]);
        let exact = surface_measure_exact(&b, BoundaryDensity::VolumeVariation).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mc = surface_measure(&b, &MeasureOptions { samples: 100_000, ..Default::default() }, &mut rng).unwrap();
        for (a, e) in mc.measure.weights.iter().zip(&exact.weights) {
            assert!((a - e).abs() < 0.02 * e, "{a} vs {e}");
        }
    }

    #[test]
    fn symmetric_body_has_symmetric_measure() {
        let b = body(Geometry::heisenberg(1), DirectionGrid::circle(16).unwrap(), |u| 1.0 + 0.2 * u[0] * u[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mc = surface_measure(&b, &MeasureOptions { samples: 100_000, ..Default::default() }, &mut rng).unwrap();
        for i in 0..8 {
            let (a, c) = (mc.measure.weights[i], mc.measure.weights[i + 8]);
            let se = (mc.stderr[i].powi(2) + mc.stderr[i + 8].powi(2)).sqrt();
            assert!((a - c).abs() < 5.0 * se, "{i}: {a} vs {c} ± {se}");
        }
    }

    #[test]
    fn measure_is_deterministic_for_a_seed() {
        let b = wavy();
        let opts = MeasureOptions { samples: 5000, ..Default::default() };
        let a = surface_measure(&b, &opts, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let c = surface_measure(&b, &opts, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn kappa_in_the_euclidean_plane_is_one_half() {
        let sq = body(Geometry::euclidean(2), DirectionGrid::coordinate(2).unwrap(), |_| 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let opts = MeasureOptions { method: MeasureMethod::Exact, ..Default::default() };
        let k = volume_identity_check(&sq, &opts, 0, &mut rng).unwrap();
        assert!((k.kappa.value - 0.5).abs() < 1e-12);
        assert!(k.inv_q_within_2_sigma);
    }

    #[test]
    fn kappa_of_the_volume_variation_is_one_over_q() {
        let b = wavy();
        let opts = MeasureOptions { method: MeasureMethod::Exact, ..Default::default() };
        let k = volume_identity_check(&b, &opts, 0, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        assert!((k.kappa.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn mass_scales_with_exponent_three_in_h1() {
        let b = wavy();
        let opts = MeasureOptions { method: MeasureMethod::Exact, ..Default::default() };
        let e = mass_scaling_exponent(&b, &opts, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert!((e.value - 3.0).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn diagnostics_are_linear_and_homogeneous(w in prop::collection::vec(0.1..3.0f64, 8), v in prop::collection::vec(0.1..3.0f64, 8), s in 0.1..10.0f64) {
            let g = DirectionGrid::circle(8).unwrap();
            let a = DiscreteSphereMeasure::new(g.clone(), w.clone()).unwrap();
            let b = DiscreteSphereMeasure::new(g.clone(), v.clone()).unwrap();
            let sum = DiscreteSphereMeasure::new(g.clone(), w.iter().zip(&v).map(|(x, y)| x + y).collect()).unwrap();
            let (ca, cb, cs) = (centroid(&a), centroid(&b), centroid(&sum));
            for j in 0..2 {
                prop_assert!((cs[j] - ca[j] - cb[j]).abs() < 1e-12);
            }
            let probes = DirectionGrid::circle(90).unwrap().dirs().to_vec();
            let scaled = a.scaled(s).unwrap();
            prop_assert!((hemisphere_margin(&scaled, &probes) - s * hemisphere_margin(&a, &probes)).abs() < 1e-12 * s.max(1.0) * a.mass());
        }
    }
}
