//! Quick invariant suites behind `hmk selftest`.

use std::f64::consts::PI;

use hmk::body::{wulff_shape, SupportVector};
use hmk::density::{smooth_density_euclidean, smooth_density_heisenberg, FrameOptions, SphereFunction, SphereGrid};
use hmk::geodesic::{cc_distance, cc_gauge, geodesic_point, solve_geodesic};
use hmk::geometry::Geometry;
use hmk::grid::DirectionGrid;
use hmk::measure::{self, BoundaryDensity, DiscreteSphereMeasure, MeasureMethod, MeasureOptions};
use hmk::solver::{self, SolverConfig};
use hmk::{group, Error, GroupPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn random_point(rng: &mut ChaCha8Rng) -> GroupPoint {
    GroupPoint::h1(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
}

fn max_dist(a: &GroupPoint, b: &GroupPoint) -> f64 {
    a.to_flat().iter().zip(b.to_flat()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn run(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut err: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b, c) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        err = err.max(max_dist(&group::multiply(&group::multiply(&a, &b), &c), &group::multiply(&a, &group::multiply(&b, &c))));
        err = err.max(max_dist(&group::multiply(&a, &group::inverse(&a)), &GroupPoint::identity(1)));
        let d = (group::koranyi_distance(&group::multiply(&c, &a), &group::multiply(&c, &b)) - group::koranyi_distance(&a, &b)).abs();
        err = err.max(d);
    }
    out.push(check("group law", err < 1e-10, format!("associativity, inverse, left invariance: max error {err:.2e}")));

    let mut err: f64 = 0.0;
    for _ in 0..200 {
        let g = random_point(&mut rng);
        match solve_geodesic(&g, 1e-12).and_then(|r| geodesic_point(&r.params, 1.0)) {
            Ok(p) => err = err.max(max_dist(&p, &g)),
            Err(_) => err = f64::INFINITY,
        }
    }
    out.push(check("geodesic round trip", err < 1e-8, format!("200 targets, max endpoint error {err:.2e}")));

    let d = cc_gauge(&GroupPoint::h1(0.0, 0.0, 1.0)).unwrap_or(f64::NAN);
    let dz = cc_distance(&GroupPoint::identity(1), &GroupPoint::h1(0.3, -0.4, 0.0)).unwrap_or(f64::NAN);
    out.push(check(
        "cc distances",
        (d - (4.0 * PI).sqrt()).abs() < 1e-10 && (dz - 0.5).abs() < 1e-10,
        format!("d(e, (0,0,1)) = {d}, d(e, (0.3,-0.4,0)) = {dz}"),
    ));

    let grid = DirectionGrid::circle(64).expect("grid");
    let wavy = |u: &[f64]| 1.0 + 0.3 * (2.0 * u[1].atan2(u[0])).cos();
    let body = wulff_shape(Geometry::heisenberg(1), SupportVector::from_fn(grid.clone(), wavy).expect("support")).expect("body");
    let tight: Vec<f64> = grid.dirs().iter().map(|u| body.h_support(u)).collect();
    let again = wulff_shape(Geometry::heisenberg(1), SupportVector::new(grid.clone(), tight.clone()).expect("support")).expect("body");
    let idem = grid.dirs().iter().zip(&tight).map(|(u, t)| (again.h_support(u) - t).abs()).fold(0.0, f64::max);
    out.push(check("wulff idempotence", idem < 2e-9, format!("max change {idem:.2e}")));

    let exact = body.volume_exact().unwrap_or(f64::NAN);
    let mc = body.volume_mc(100_000, &mut rng);
    out.push(match mc {
        Ok(e) => check(
            "volume",
            (e.value - exact).abs() < 4.0 * e.stderr,
            format!("exact {exact:.6}, mc {:.6} ± {:.6}", e.value, e.stderr),
        ),
        Err(e) => check("volume", false, e.to_string()),
    });

    let exact_opts = MeasureOptions {
        method: MeasureMethod::Exact,
        ..MeasureOptions::default()
    };
    out.push(match measure::volume_identity_check(&body, &exact_opts, 0, &mut rng) {
        Ok(k) => check("volume identity", (k.kappa.value - 0.25).abs() < 1e-10, format!("kappa = {:.12} (1/4 dilation-consistent)", k.kappa.value)),
        Err(e) => check("volume identity", false, e.to_string()),
    });

    let sampled = measure::surface_measure(
        &body,
        &MeasureOptions {
            samples: 50_000,
            ..MeasureOptions::default()
        },
        &mut rng,
    );
    let closed = measure::surface_measure_exact(&body, BoundaryDensity::VolumeVariation);
    out.push(match (sampled, closed) {
        (Ok(s), Ok(c)) => {
            let z = (s.measure.mass() - c.mass()) / s.mass_stderr;
            check("surface measure", z.abs() < 4.0, format!("mass {:.5} ± {:.5} vs closed form {:.5}", s.measure.mass(), s.mass_stderr, c.mass()))
        }
        (Err(e), _) | (_, Err(e)) => check("surface measure", false, e.to_string()),
    });

    let square = DiscreteSphereMeasure::new(DirectionGrid::coordinate(2).expect("grid"), vec![2.0; 4]).expect("measure");
    let cfg = SolverConfig {
        measure: exact_opts,
        ..SolverConfig::new(Geometry::euclidean(2))
    };
    out.push(match solver::euclidean_oracle_solve(&square, &cfg) {
        Ok(r) => {
            let e = r.f_out.values.iter().map(|f| (f - 1.0).abs()).fold(0.0, f64::max);
            check("euclidean oracle", e < 1e-2, format!("square support error {e:.2e}"))
        }
        Err(e) => check("euclidean oracle", false, e.to_string()),
    });

    let half = DiscreteSphereMeasure::new(
        DirectionGrid::from_unnormalized(vec![vec![1.0, 0.3], vec![1.0, -0.3], vec![-1.0, 0.0]], "gate").expect("grid"),
        vec![1.0, 1.0, 0.0],
    )
    .expect("measure");
    let off = DiscreteSphereMeasure::new(DirectionGrid::coordinate(2).expect("grid"), vec![2.0, 1.0, 1.0, 1.0]).expect("measure");
    let gates = matches!(solver::validate_measure(&half, 1e-9, 0.0, 0, false), Err(Error::HemisphereConcentration { .. }))
        && matches!(solver::validate_measure(&off, 1e-9, 0.0, 0, false), Err(Error::CentroidViolation { .. }));
    out.push(check("validation gates", gates, "hemisphere and centroid violations named".into()));

    let h = SphereFunction::sample(SphereGrid::LatLong { n_theta: 32, n_phi: 64 }, |u| {
        (2.0 * u[0] * u[0] + u[1] * u[1] + 0.6 * u[2] * u[2]).sqrt()
    })
    .expect("function");
    let flat = smooth_density_euclidean(&h).and_then(|e| smooth_density_heisenberg(&h, &FrameOptions::flattened()).map(|f| (e, f)));
    out.push(match flat {
        Ok((e, f)) => {
            let d = e.values.iter().zip(&f.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            check("flattened density", d < 1e-8, format!("max difference {d:.2e}"))
        }
        Err(e) => check("flattened density", false, e.to_string()),
    });
    out
}
