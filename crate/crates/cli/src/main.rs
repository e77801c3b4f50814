//! `normfactor` command-line interface.
//!
//! Exit codes: 0 success, 1 a computed check failed, 2 bad input.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use normfactor::cf_moments::{moment_via_cf, CharFn};
use normfactor::decompose::{embedding_pair, eval_decomposition, eval_embedding, residual_scan, square_grid};
use normfactor::inequalities::{buja_margin, hlawka_margin, hlawka_search, johnson_counterexample, khinchin_chain_with, HLAWKA_STRICT};
use normfactor::norm_model::NormDescriptor;
use normfactor::rand_vectors::{pairwise_expectations, rademacher_moment};
use normfactor::{
    measure_from_profile, profile_from_norm, ConvexProfile, DiscreteDistribution, NormSpec, ProfileOptions,
    QuadratureOptions, RademacherInstance, RepresentingMeasure, Vec2, VecD,
};

#[derive(Parser, Debug)]
#[command(name = "normfactor", version, about = "Additive decompositions and L1 embeddings of planar norms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for randomized sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the artifact here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Absolute quadrature tolerance.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the decomposition at a point or on a square grid.
    Decompose {
        #[arg(long)]
        norm: PathBuf,
        /// Use a measure exported by `measure-export` instead of rebuilding it.
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long, requires = "v", allow_hyphen_values = true)]
        u: Option<f64>,
        #[arg(long, requires = "u", allow_hyphen_values = true)]
        v: Option<f64>,
        #[arg(long, default_value_t = 41)]
        grid: usize,
        #[arg(long, default_value_t = 3.0)]
        radius: f64,
        /// Largest acceptable |norm − decomposition|.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Emit the embedding functions as CSV, or evaluate the embedded norm at a point.
    Embed {
        #[arg(long)]
        norm: PathBuf,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, requires = "v", allow_hyphen_values = true)]
        u: Option<f64>,
        #[arg(long, requires = "u", allow_hyphen_values = true)]
        v: Option<f64>,
    },
    /// Residuals of the decomposition and the embedding on a grid.
    Verify {
        #[arg(long)]
        norm: PathBuf,
        #[arg(long, default_value_t = 41)]
        grid: usize,
        #[arg(long, default_value_t = 3.0)]
        radius: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Export the representing measure as CSV.
    MeasureExport {
        #[arg(long)]
        norm: PathBuf,
    },
    /// Export N(u) = ‖(u,1)‖ and its one-sided derivatives as CSV.
    ProfileExport {
        #[arg(long)]
        norm: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        radius: f64,
        #[arg(long, default_value_t = 201)]
        n: usize,
    },
    /// Khinchin–Kahane chain for a Rademacher sum.
    Khinchin {
        #[arg(long)]
        norm: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
        j: u32,
    },
    /// E‖X − Y‖ versus E‖X + Y‖.
    Buja {
        #[arg(long)]
        norm: PathBuf,
        #[arg(long)]
        dist: PathBuf,
    },
    /// Hlawka margins on random triples, or an exhaustive lattice search.
    Hlawka {
        #[arg(long)]
        norm: PathBuf,
        #[arg(long)]
        search: bool,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 2)]
        radius: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Moments of ‖X‖ through the characteristic function.
    Moments {
        #[arg(long)]
        norm: PathBuf,
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=3))]
        j: u32,
        #[arg(long, value_enum, default_value_t = Via::Both)]
        via: Via,
    },
    /// Exact Johnson-norm counterexample for d in 3..=6.
    Counterexample {
        #[arg(long)]
        d: usize,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Via {
    Cf,
    Exact,
    Both,
}

/// Bad input (exit 2) or a failed computation that is not the input's fault.
#[derive(Debug)]
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type CmdResult = Result<Artifact, InputError>;

struct Artifact {
    body: String,
    ok: bool,
}

impl Artifact {
    fn json(value: &impl Serialize, ok: bool) -> Self {
        let mut body = serde_json::to_string_pretty(value).expect("serializable");
        body.push('\n');
        Artifact { body, ok }
    }

    fn text(body: String) -> Self {
        Artifact { body, ok: true }
    }
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load_norm(path: &Path) -> Result<NormSpec, InputError> {
    let text = read(path)?;
    let desc: NormDescriptor = serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    Ok(desc.to_spec().map_err(|e| InputError(format!("{}: {e}", path.display())))?)
}

fn planar(spec: &NormSpec) -> Result<(ConvexProfile, RepresentingMeasure), InputError> {
    let p = profile_from_norm(spec, &ProfileOptions::default())?;
    let m = measure_from_profile(&p)?;
    Ok((p, m))
}

#[derive(Serialize)]
struct Tolerance {
    abs_tol: f64,
    rel_tol: f64,
}

impl From<&QuadratureOptions> for Tolerance {
    fn from(q: &QuadratureOptions) -> Self {
        Tolerance { abs_tol: q.abs_tol, rel_tol: q.rel_tol }
    }
}

#[derive(Serialize)]
struct PointRecord {
    u: f64,
    v: f64,
    norm: f64,
    value: f64,
    residual: f64,
}

fn points(u: Option<f64>, v: Option<f64>, grid: usize, radius: f64) -> Result<Vec<Vec2>, InputError> {
    match (u, v) {
        (Some(u), Some(v)) => Ok(vec![Vec2::new(u, v)]),
        _ if grid == 0 || !(radius > 0.0) => Err(InputError("grid must be positive and radius > 0".into())),
        _ => Ok(square_grid(grid, radius)),
    }
}

fn run(cli: &Cli) -> CmdResult {
    let mut q = QuadratureOptions::default();
    if let Some(t) = cli.abs_tol {
        q.abs_tol = t;
    }
    if let Some(t) = cli.rel_tol {
        q.rel_tol = t;
    }
    q.validate()?;
    match &cli.command {
        Command::Decompose { norm, measure, u, v, grid, radius, tol } => {
            let spec = load_norm(norm)?;
            let m = match measure {
                Some(path) => RepresentingMeasure::from_csv(&read(path)?)?,
                None => planar(&spec)?.1,
            };
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            for x in points(*u, *v, *grid, *radius)? {
                let n = spec.eval2(x)?;
                let value = eval_decomposition(&m, x.u, x.v, &q)?;
                let residual = (n - value).abs();
                worst = worst.max(residual);
                rows.push(PointRecord { u: x.u, v: x.v, norm: n, value, residual });
            }
            let out = json!({
                "norm": spec.label(),
                "quadrature": Tolerance::from(&q),
                "tolerance": tol,
                "max_residual": worst,
                "points": rows,
            });
            Ok(Artifact::json(&out, worst <= *tol))
        }
        Command::Embed { norm, n, u, v } => {
            let spec = load_norm(norm)?;
            let (profile, _) = planar(&spec)?;
            let pair = embedding_pair(&profile);
            match (u, v) {
                (Some(u), Some(v)) => {
                    let value = eval_embedding(&pair, *u, *v, &q)?;
                    let normv = spec.eval2(Vec2::new(*u, *v))?;
                    let out = json!({
                        "norm": spec.label(),
                        "amplitude": pair.amplitude(),
                        "quadrature": Tolerance::from(&q),
                        "point": PointRecord { u: *u, v: *v, norm: normv, value, residual: (normv - value).abs() },
                    });
                    Ok(Artifact::json(&out, true))
                }
                _ if *n < 2 => Err(InputError("--n must be at least 2".into())),
                _ => Ok(Artifact::text(pair.to_csv(*n))),
            }
        }
        Command::Verify { norm, grid, radius, tol } => {
            let spec = load_norm(norm)?;
            let pts = points(None, None, *grid, *radius)?;
            let r = residual_scan(&spec, &pts, &q)?;
            let ok = r.max_residual_decomposition <= *tol && r.max_residual_embedding <= *tol;
            let out = json!({
                "norm": spec.label(),
                "points": r.points,
                "max_residual_decomposition": r.max_residual_decomposition,
                "max_residual_embedding": r.max_residual_embedding,
                "worst_decomposition_point": r.worst_decomposition_point,
                "worst_embedding_point": r.worst_embedding_point,
                "tolerance": tol,
                "quadrature": Tolerance::from(&q),
                "passed": ok,
            });
            Ok(Artifact::json(&out, ok))
        }
        Command::MeasureExport { norm } => {
            let spec = load_norm(norm)?;
            Ok(Artifact::text(planar(&spec)?.1.to_csv()))
        }
        Command::ProfileExport { norm, radius, n } => {
            let spec = load_norm(norm)?;
            if *n < 2 || !(*radius > 0.0) {
                return Err(InputError("--n must be at least 2 and --radius positive".into()));
            }
            let (profile, _) = planar(&spec)?;
            let grid: Vec<f64> = (0..*n).map(|i| -radius + 2.0 * radius * i as f64 / (*n - 1) as f64).collect();
            Ok(Artifact::text(profile.to_csv(&grid)))
        }
        Command::Khinchin { norm, vectors, j } => {
            let spec = load_norm(norm)?;
            let inst = RademacherInstance::from_json(&read(vectors)?)?;
            let (_, m) = planar(&spec)?;
            let chain = khinchin_chain_with(&m, &spec, &inst, &q)?;
            let moment = rademacher_moment(&spec, &inst, *j)?;
            let ok = chain.holds(1e-9);
            let out = json!({
                "norm": spec.label(),
                "n": inst.len(),
                "j": j,
                "moment": moment,
                "two_e_sq": chain.two_e_sq,
                "improved_bound": chain.improved_bound,
                "second_moment": chain.second_moment,
                "bound_error": chain.bound_error,
                "holds": ok,
            });
            Ok(Artifact::json(&out, ok))
        }
        Command::Buja { norm, dist } => {
            let spec = load_norm(norm)?;
            let dist = DiscreteDistribution::from_json(&read(dist)?)?;
            let (e_diff, e_sum) = pairwise_expectations(&spec, &dist)?;
            let is_planar = spec.is_planar() && dist.dim() == 2;
            let margin = if is_planar { buja_margin(&spec, &dist)? } else { e_sum - e_diff };
            let out = json!({
                "norm": spec.label(),
                "E_diff": e_diff,
                "E_sum": e_sum,
                "margin": margin,
                "planar": is_planar,
            });
            Ok(Artifact::json(&out, !is_planar || margin >= -1e-12))
        }
        Command::Hlawka { norm, search, d, radius, samples } => {
            let spec = load_norm(norm)?;
            let d = d.or(spec.dim()).unwrap_or(2);
            // the inequality is guaranteed in the plane and for Euclidean norms
            let guaranteed = d == 2 || spec == NormSpec::Lp(2.0);
            let triple = |x: &VecD, y: &VecD, z: &VecD| json!([x.0, y.0, z.0]);
            if *search {
                let found = hlawka_search(&spec, d, *radius)?;
                let violation = found.as_ref().map(|r| json!({"margin": r.margin, "triple": triple(&r.triple[0], &r.triple[1], &r.triple[2])}));
                let out = json!({"norm": spec.label(), "mode": "search", "d": d, "radius": radius, "strict": HLAWKA_STRICT, "violation": violation});
                Ok(Artifact::json(&out, !(guaranteed && found.is_some())))
            } else {
                if *samples == 0 {
                    return Err(InputError("--samples must be positive".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                let mut draw = || VecD((0..d).map(|_| rng.random_range(-3.0..3.0)).collect());
                let mut worst: Option<normfactor::inequalities::HlawkaReport> = None;
                for _ in 0..*samples {
                    let (x, y, z) = (draw(), draw(), draw());
                    let r = hlawka_margin(&spec, &x, &y, &z)?;
                    if worst.as_ref().is_none_or(|w| r.margin < w.margin) {
                        worst = Some(r);
                    }
                }
                let w = worst.expect("at least one sample");
                let violated = w.margin < HLAWKA_STRICT;
                let out = json!({
                    "norm": spec.label(),
                    "mode": "sample",
                    "d": d,
                    "seed": cli.seed,
                    "samples": samples,
                    "min_margin": w.margin,
                    "argmin": triple(&w.triple[0], &w.triple[1], &w.triple[2]),
                    "violated": violated,
                });
                Ok(Artifact::json(&out, !(guaranteed && violated)))
            }
        }
        Command::Moments { norm, dist, j, via } => {
            let spec = load_norm(norm)?;
            let dist = DiscreteDistribution::from_json(&read(dist)?)?;
            let exact = dist.expect(|x| spec.eval(x.as_slice()).map(|n| n.powi(*j as i32)).unwrap_or(f64::NAN));
            if exact.is_nan() {
                return Err(InputError(format!("distribution of dimension {} does not match the norm", dist.dim())));
            }
            let value_cf = if *via == Via::Exact {
                None
            } else {
                let (_, m) = planar(&spec)?;
                Some(moment_via_cf(&m, &CharFn::new(dist.clone())?, *j, &q)?)
            };
            let value_exact = (*via != Via::Cf).then_some(exact);
            let abs_error = value_cf.map(|c| (c - exact).abs());
            let limit = if *j == 1 { 1e-4 } else { 1e-3 };
            let out = json!({
                "norm": spec.label(),
                "j": j,
                "value_cf": value_cf,
                "value_exact": value_exact,
                "abs_error": abs_error,
                "tolerance": limit,
                "quadrature": Tolerance::from(&q),
            });
            Ok(Artifact::json(&out, abs_error.is_none_or(|e| e <= limit)))
        }
        Command::Counterexample { d } => {
            let row = johnson_counterexample(*d)?;
            let f = |r: num_rational::Rational64| *r.numer() as f64 / *r.denom() as f64;
            let out = json!({
                "d": row.d,
                "E_diff": row.e_diff.to_string(),
                "E_sum": row.e_sum.to_string(),
                "E_diff_float": f(row.e_diff),
                "E_sum_float": f(row.e_sum),
                "strict": row.e_diff > row.e_sum,
            });
            Ok(Artifact::json(&out, row.e_diff > row.e_sum))
        }
    }
}

fn configure_threads() -> Result<(), InputError> {
    let Ok(raw) = std::env::var("NORMFACTOR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| InputError(format!("NORMFACTOR_THREADS={raw} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(&cli));
    match result {
        Ok(art) => {
            let written = match &cli.output {
                Some(path) => fs::write(path, &art.body).map_err(|e| format!("{}: {e}", path.display())),
                None => std::io::stdout().write_all(art.body.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if art.ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("check failed");
                ExitCode::from(1)
            }
        }
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
