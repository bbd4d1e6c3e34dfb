use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hmk::body::{wulff_shape, SupportVector, WulffBody};
use hmk::geodesic::{self, geodesic_point};
use hmk::geometry::Geometry;
use hmk::grid::DirectionGrid;
use hmk::io::{from_json, to_json, BodyFile, MeasureFile, ReportFile};
use hmk::measure::{self, BoundaryDensity, DiscreteSphereMeasure, MeasureMethod, MeasureOptions};
use hmk::sampling::unit_sphere;
use hmk::solver::{self, SolverConfig, VolExponent, VolumeMethod};
use hmk::{group, Error, GroupPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod selftest;

const EXIT_ERROR: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "hmk", version, about = "Heisenberg-group geodesics, Wulff shapes and Minkowski problems")]
struct Cli {
    /// Heisenberg dimension n (points have 2n+1 coordinates).
    #[arg(long, global = true, default_value_t = 1)]
    n: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; falls back to HMK_WORKERS, then to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimizing geodesic from the identity, printed as CSV.
    Geodesic {
        /// `e`, comma-separated coordinates, or a point JSON file.
        #[arg(long)]
        endpoint: String,
        #[arg(long, default_value_t = 65)]
        points: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance between two points.
    Distance {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_enum, default_value_t = Metric::Cc)]
        metric: Metric,
    },
    /// Support value h(Ω, u) of a body.
    Support {
        #[arg(long)]
        body: PathBuf,
        /// Comma-separated direction.
        #[arg(long)]
        u: String,
        /// Also estimate it by boundary search with this many starts.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Builds a Wulff shape from a support vector.
    Wulff(WulffArgs),
    /// Volume of a body.
    Volume {
        #[arg(long)]
        body: PathBuf,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
    },
    /// Surface measure of a body on its direction grid.
    Measure {
        #[arg(long)]
        body: PathBuf,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Density::VolumeVariation)]
        density: Density,
        /// Closed-form evaluation instead of sampling.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks the Minkowski conditions of a measure.
    Validate {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
        #[arg(long)]
        skip_centroid: bool,
    },
    /// Solves the Minkowski problem for a measure.
    Solve(SolveArgs),
    /// Runs the invariant suites.
    Selftest,
}

#[derive(Args, Debug)]
struct WulffArgs {
    #[arg(long, value_enum, default_value_t = Mode::Heisenberg)]
    mode: Mode,
    /// Point dimension in Euclidean mode.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// `k:amp` adds amp·cos(kθ) on circle grids; repeatable.
    #[arg(long)]
    harmonic: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Writes a boundary mesh (three-dimensional point spaces).
    #[arg(long)]
    obj: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    measure: PathBuf,
    /// Overrides the geometry recorded in the measure file.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Rebins the atoms onto this many circle directions.
    #[arg(long)]
    grid: Option<usize>,
    /// Samples per surface-measure evaluation of the result.
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = ExponentArg::Auto)]
    vol_exponent: ExponentArg,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 1e-2)]
    centroid_tol: f64,
    #[arg(long)]
    skip_centroid: bool,
    #[arg(long, value_enum, default_value_t = Density::VolumeVariation)]
    density: Density,
    /// Closed-form measure of the result where available.
    #[arg(long)]
    exact_measure: bool,
    /// Monte-Carlo volume with this many common random samples.
    #[arg(long)]
    mc_volume: Option<usize>,
    #[arg(long)]
    no_center: bool,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Mode {
    Heisenberg,
    Euclidean,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Metric {
    Cc,
    Koranyi,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Density {
    VolumeVariation,
    HorizontalPerimeter,
}

impl From<Density> for BoundaryDensity {
    fn from(d: Density) -> Self {
        match d {
            Density::VolumeVariation => BoundaryDensity::VolumeVariation,
            Density::HorizontalPerimeter => BoundaryDensity::HorizontalPerimeter,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ExponentArg {
    Auto,
    Paper,
    Dilation,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let workers = cli.workers.or_else(|| std::env::var("HMK_WORKERS").ok().and_then(|s| s.parse().ok()));
    if let Some(w) = workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let invalid = matches!(
                e,
                Error::InfeasibleInput(_) | Error::CentroidViolation { .. } | Error::HemisphereConcentration { .. } | Error::ZeroMass
            );
            ExitCode::from(if invalid { EXIT_INVALID } else { EXIT_ERROR })
        }
    }
}

fn run(cli: &Cli) -> hmk::Result<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    match &cli.command {
        Command::Geodesic { endpoint, points, tol, out } => {
            let g = parse_point(endpoint, cli.n)?;
            let res = geodesic::solve_geodesic(&g, *tol)?;
            let p = &res.params;
            let mut text = format!(
                "# a = {:?}, b = {:?}, phi = {}, r = {}, unique = {}, tangent_family = {}, endpoint_error = {:e}\n",
                p.a, p.b, p.phi, p.r, res.unique, res.tangent_family, res.endpoint_error
            );
            let n = p.n();
            let header: Vec<String> = std::iter::once("s".to_string())
                .chain((1..=n).map(|l| format!("x{l}")))
                .chain((1..=n).map(|l| format!("y{l}")))
                .chain(std::iter::once("t".to_string()))
                .collect();
            text.push_str(&header.join(","));
            text.push('\n');
            let k = (*points).max(2);
            for i in 0..k {
                let s = i as f64 / (k - 1) as f64;
                let q = geodesic_point(p, s)?;
                let row: Vec<String> = std::iter::once(s).chain(q.to_flat()).map(|v| v.to_string()).collect();
                text.push_str(&row.join(","));
                text.push('\n');
            }
            write_or_print(out.as_deref(), &text)?;
        }
        Command::Distance { from, to, metric } => {
            let (a, b) = (parse_point(from, cli.n)?, parse_point(to, cli.n)?);
            match metric {
                Metric::Cc => {
                    let res = geodesic::solve_geodesic(&group::multiply(&group::inverse(&a), &b), 1e-12)?;
                    println!("{}", res.params.r);
                    println!("method: cc geodesic (twist root solve), phi = {}, unique = {}, endpoint_error = {:e}", res.params.phi, res.unique, res.endpoint_error);
                }
                Metric::Koranyi => {
                    println!("{}", group::koranyi_distance(&a, &b));
                    println!("method: koranyi gauge of a^-1 * b");
                }
            }
        }
        Command::Support { body, u, samples } => {
            let body = load_body(body)?;
            let u = parse_vector(u)?;
            let s = hmk::numeric::norm(&u);
            let u: Vec<f64> = u.iter().map(|c| c / s).collect();
            if u.len() != body.geometry().dir_dim() {
                return Err(Error::DimensionMismatch {
                    expected: body.geometry().dir_dim(),
                    got: u.len(),
                });
            }
            println!("h = {}", body.h_support(&u));
            if let Some(k) = samples {
                let (v, gain) = body.h_support_sampled(&u, *k, 64, &mut rng);
                println!("sampled h = {v} (last refinement gain {gain:.3e})");
            }
        }
        Command::Wulff(args) => wulff(cli, args, &mut rng)?,
        Command::Volume { body, samples } => {
            let body = load_body(body)?;
            if let Ok(v) = body.volume_exact() {
                println!("exact volume = {v}");
            }
            let e = body.volume_mc(*samples, &mut rng)?;
            println!("mc volume = {} ± {} ({samples} samples)", e.value, e.stderr);
        }
        Command::Measure { body, samples, density, exact, out } => {
            let body = load_body(body)?;
            let opts = MeasureOptions {
                density: (*density).into(),
                method: if *exact { MeasureMethod::Exact } else { MeasureMethod::MonteCarlo },
                samples: *samples,
                ..MeasureOptions::default()
            };
            let report = measure::surface_measure(&body, &opts, &mut rng)?;
            println!("mass = {} ± {}", report.measure.mass(), report.mass_stderr);
            println!("characteristic fraction = {}", report.characteristic_fraction);
            let c = report.measure.centroid();
            println!("centroid = {c:?}");
            let mut file = MeasureFile::new(body.geometry(), &report.measure);
            if !*exact {
                file.stderr = Some(report.stderr.clone());
            }
            write_or_print(out.as_deref(), &to_json(&file))?;
        }
        Command::Validate { measure, tol, skip_centroid } => {
            let (_, mu, stderr) = load_measure(measure)?;
            let c = mu.centroid();
            println!("mass = {}", mu.mass());
            println!("centroid = {c:?} (|c| = {:e})", hmk::numeric::norm(&c));
            let mut r = ChaCha8Rng::seed_from_u64(0);
            println!("hemisphere margin = {}", measure::hemisphere_margin(&mu, &measure::default_probes(&mu, 4096, &mut r)));
            let slack = stderr.as_deref().map_or(0.0, solver::centroid_noise);
            if slack > 0.0 {
                println!("centroid slack from sampling noise = {slack:e}");
            }
            match solver::validate_measure(&mu, *tol, slack, 4096, *skip_centroid) {
                Ok(v) => println!("valid; radius bound (mass+1)/c = {}", v.radius_bound),
                Err(e) => {
                    println!("invalid: {e}");
                    return Ok(EXIT_INVALID);
                }
            }
        }
        Command::Solve(args) => return solve(cli, args),
        Command::Selftest => {
            let results = selftest::run(cli.seed);
            let failed = results.iter().filter(|r| !r.passed).count();
            for r in &results {
                println!("[{}] {}: {}", if r.passed { "pass" } else { "FAIL" }, r.name, r.detail);
            }
            println!("{} checks, {failed} failed", results.len());
            return Ok(if failed == 0 { 0 } else { EXIT_ERROR });
        }
    }
    Ok(0)
}

fn wulff(cli: &Cli, args: &WulffArgs, rng: &mut ChaCha8Rng) -> hmk::Result<()> {
    let geometry = match args.mode {
        Mode::Heisenberg => Geometry::heisenberg(cli.n),
        Mode::Euclidean => Geometry::euclidean(args.dim),
    };
    let grid = grid_for(geometry.dir_dim(), args.grid, rng)?;
    let harmonics = args
        .harmonic
        .iter()
        .map(|h| {
            let (k, a) = h.split_once(':').ok_or(Error::InvalidInput(format!("harmonic {h:?} is not k:amp")))?;
            let k: f64 = k.trim().parse().map_err(|_| Error::InvalidInput(format!("bad harmonic order {k:?}")))?;
            let a: f64 = a.trim().parse().map_err(|_| Error::InvalidInput(format!("bad harmonic amplitude {a:?}")))?;
            Ok((k, a))
        })
        .collect::<hmk::Result<Vec<_>>>()?;
    if !harmonics.is_empty() && geometry.dir_dim() != 2 {
        return Err(Error::InvalidInput("harmonics need a circle grid".into()));
    }
    let f = SupportVector::from_fn(grid, |u| {
        let th = u[1].atan2(u[0]);
        args.radius + harmonics.iter().map(|(k, a)| a * (k * th).cos()).sum::<f64>()
    })?;
    let body = wulff_shape(geometry, f)?;
    let tight = SupportVector::new(body.grid().clone(), body.grid().dirs().iter().map(|u| body.h_support(u)).collect())?;
    eprintln!("directions = {}, circumradius = {}", tight.len(), body.polytope().circumradius());
    if let Ok(v) = body.volume_exact() {
        eprintln!("volume = {v}");
    }
    if let Some(path) = &args.obj {
        write(path, &body.to_obj(32, 64)?)?;
    }
    write_or_print(args.out.as_deref(), &to_json(&BodyFile::new(geometry, &tight)))
}

fn solve(cli: &Cli, args: &SolveArgs) -> hmk::Result<u8> {
    let (geometry, mu, stderr) = load_measure(&args.measure)?;
    let geometry = match args.mode {
        None => geometry,
        Some(Mode::Heisenberg) => Geometry::heisenberg(cli.n),
        Some(Mode::Euclidean) => Geometry::euclidean(mu.grid.dim()),
    };
    let (mu, stderr) = match args.grid {
        Some(m) if m != mu.grid.len() => (rebin(&mu, m)?, None),
        _ => (mu, stderr),
    };
    let mut cfg = SolverConfig::new(geometry);
    cfg.seed = cli.seed;
    cfg.vol_exponent = match args.vol_exponent {
        ExponentArg::Auto | ExponentArg::Dilation => VolExponent::Dilation,
        ExponentArg::Paper => VolExponent::Paper,
    };
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    if let Some(s) = args.mc_volume {
        cfg.volume = VolumeMethod::MonteCarlo { samples: s };
    }
    if let Some(m) = args.max_sweeps {
        cfg.max_sweeps = m;
    }
    cfg.centroid_tol = args.centroid_tol;
    cfg.centroid_slack = stderr.as_deref().map_or(0.0, solver::centroid_noise);
    cfg.skip_centroid = args.skip_centroid;
    cfg.center = !args.no_center;
    cfg.measure = MeasureOptions {
        density: args.density.into(),
        method: if args.exact_measure { MeasureMethod::Exact } else { MeasureMethod::MonteCarlo },
        samples: args.samples,
        ..MeasureOptions::default()
    };
    let report = solver::solve(&mu, &cfg)?;
    println!("sweeps = {}, converged = {}, phi = {}", report.sweeps, report.converged, report.phi_trace.last().copied().unwrap_or(f64::NAN));
    println!("dilation = {}, mass exponent = {} ± {}", report.dilation, report.mass_exponent.value, report.mass_exponent.stderr);
    println!(
        "max relative residual = {}, mass error = {} ± {}",
        report.residual.max_relative, report.residual.mass_error, report.residual.mass_stderr
    );
    println!("radius bound {} held = {}", report.validation.radius_bound, report.radius_bound_held);
    if report.experimental {
        println!("experimental: centroid condition skipped");
    }
    write_or_print(args.out.as_deref(), &to_json(&ReportFile::new(&report, &cfg)))?;
    Ok(0)
}

/// Moves every atom to its nearest direction of an `m`-point circle grid.
fn rebin(mu: &DiscreteSphereMeasure, m: usize) -> hmk::Result<DiscreteSphereMeasure> {
    if mu.grid.dim() != 2 {
        return Err(Error::Unsupported("rebinning needs circle directions".into()));
    }
    let grid = DirectionGrid::circle(m)?;
    let mut w = vec![0.0; m];
    for (u, x) in mu.grid.dirs().iter().zip(&mu.weights) {
        w[grid.nearest(u)] += x;
    }
    DiscreteSphereMeasure::new(grid, w)
}

fn grid_for(dim: usize, m: usize, rng: &mut ChaCha8Rng) -> hmk::Result<DirectionGrid> {
    match dim {
        2 => DirectionGrid::circle(m),
        3 => DirectionGrid::fibonacci_sphere(m),
        k => {
            let mut dirs: Vec<Vec<f64>> = (0..k)
                .flat_map(|i| {
                    let mut e = vec![0.0; k];
                    e[i] = 1.0;
                    let neg = e.iter().map(|c| -c).collect();
                    [e, neg]
                })
                .collect();
            while dirs.len() < m {
                dirs.push(unit_sphere(rng, k));
            }
            DirectionGrid::new(dirs, format!("random:{m}"))
        }
    }
}

fn parse_vector(s: &str) -> hmk::Result<Vec<f64>> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad number {c:?}"))))
        .collect()
}

fn parse_point(s: &str, n: usize) -> hmk::Result<GroupPoint> {
    if s == "e" {
        return Ok(GroupPoint::identity(n));
    }
    if Path::new(s).is_file() {
        return from_json(&read(Path::new(s))?);
    }
    let coords = parse_vector(s)?;
    if coords.len() != 2 * n + 1 {
        return Err(Error::DimensionMismatch {
            expected: 2 * n + 1,
            got: coords.len(),
        });
    }
    GroupPoint::from_flat(&coords)
}

fn load_body(path: &Path) -> hmk::Result<WulffBody> {
    let file: BodyFile = from_json(&read(path)?)?;
    wulff_shape(file.geometry, file.support_vector()?)
}

fn load_measure(path: &Path) -> hmk::Result<(Geometry, DiscreteSphereMeasure, Option<Vec<f64>>)> {
    let file: MeasureFile = from_json(&read(path)?)?;
    Ok((file.geometry, file.measure()?, file.stderr.clone()))
}

fn read(path: &Path) -> hmk::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> hmk::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, text: &str) -> hmk::Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
