use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use carnot_core::algebra::{build_algebra, catalog, check_spec, AlgebraSpec, StratifiedAlgebra};
use carnot_core::dimension::{self, MetricMode, Preset, Verdict};
use carnot_core::exterior::{admissible_pairs, maurer_cartan, theta_form, theta_product_check};
use carnot_core::grid::{vanishing_chain_check, Generator, GridMap, GridSpec};
use carnot_core::group::FrameField;
use carnot_core::sphere::{oriented_integral, stokes_residual, Ball, SphereIntegrator};
use carnot_core::Error;

mod selftest;

#[derive(Parser)]
#[command(
    name = "carnot",
    version,
    about = "Stratified groups: structure checks, form identities, sphere integrals and box counting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Catalog name (heisenberg, heisenberg(n), engel, free_step2(r), abelianN) or a TOML spec.
    #[arg(long, short, default_value = "heisenberg")]
    group: String,
    /// Seed for randomized suites, echoed in every report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the output to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the invariants of a group spec.
    Validate {
        #[command(flatten)]
        common: Common,
        /// TOML spec; overrides --group.
        spec: Option<PathBuf>,
    },
    /// Left-invariant frame and coframe as polynomials in the coordinates.
    Frames {
        #[command(flatten)]
        common: Common,
    },
    /// Maurer-Cartan table dη_k.
    McTable {
        #[command(flatten)]
        common: Common,
    },
    /// θ-form product identities for every admissible pair.
    Theta {
        #[command(flatten)]
        common: Common,
    },
    /// Vanishing chain on a sampled mapping into the group.
    Chain {
        #[command(flatten)]
        common: Common,
        /// legendrian-cylinder or plane.
        #[arg(long, default_value = "legendrian-cylinder")]
        preset: String,
        /// Sampled mapping (.toml grid spec, .csv or binary); overrides --preset.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        kappa: usize,
        /// Grid step for the presets; 1e-3 for the cylinder, 0.05 for the plane.
        #[arg(long)]
        step: Option<f64>,
        /// Bound for f* of the η-wedges.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Bound for the finite-difference residual f*θ ∧ d(f*ω).
        #[arg(long, default_value_t = 1e-4)]
        implied_tol: f64,
    },
    /// Oriented integral ∫ g df_J over a sphere, with the Stokes comparison.
    IntegrateSphere {
        #[command(flatten)]
        common: Common,
        /// Ambient dimension n of the ball.
        #[arg(long, short = 'n', default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 24)]
        resolution: usize,
        /// Half-width of the chart blending band, in radians.
        #[arg(long, default_value_t = carnot_core::sphere::DEFAULT_BAND)]
        band: f64,
        /// Grid spec whose generator is the map f; identity when absent.
        #[arg(long)]
        map: Option<PathBuf>,
        /// 1-based components J of f, comma separated; defaults to 1..n-1.
        #[arg(long, value_delimiter = ',')]
        forms: Vec<usize>,
        /// Weight g: `one` or a coordinate `xK`.
        #[arg(long)]
        weight: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Box-counting dimension experiment.
    Dim {
        #[command(flatten)]
        common: Common,
        /// cube, vertical-plane, legendrian-cylinder or graph.
        #[arg(long)]
        preset: Option<String>,
        /// Sampled hypersurface (.toml grid spec, .csv or binary).
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Dyadic exponents a:b, meaning scales 2^-a .. 2^-b.
        #[arg(long, default_value = "2:7")]
        scales: String,
        #[arg(long, default_value_t = 0.25)]
        tol: f64,
        /// Mode shown in the table: homogeneous or euclidean.
        #[arg(long, default_value = "homogeneous")]
        metric: String,
        /// Samples per cell side; presets pick their own when omitted.
        #[arg(long)]
        density: Option<f64>,
    },
    /// Quick randomized run of the exact suites and a sphere integral.
    Selftest {
        #[command(flatten)]
        common: Common,
        /// Random samples per suite.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

/// A failed run: message for stderr and exit code.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(2, e.to_string())
    }
}

type Outcome = Result<(String, u8), Failure>;

fn main() -> ExitCode {
    carnot_core::configure_threads();
    let cli = Cli::parse();
    let (common, result) = run(cli.command);
    match result.and_then(|(text, code)| emit(&common, &text).map(|()| code)) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure(2, format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cmd: Command) -> (Common, Outcome) {
    match cmd {
        Command::Validate { common, spec } => {
            let r = validate(&common, spec.as_deref());
            (common, r)
        }
        Command::Frames { common } => {
            let r = frames(&common);
            (common, r)
        }
        Command::McTable { common } => {
            let r = mc_table(&common);
            (common, r)
        }
        Command::Theta { common } => {
            let r = theta(&common);
            (common, r)
        }
        Command::Chain {
            common,
            preset,
            grid,
            kappa,
            step,
            tol,
            implied_tol,
        } => {
            let r = chain(&common, &preset, grid.as_deref(), kappa, step, tol, implied_tol);
            (common, r)
        }
        Command::IntegrateSphere {
            common,
            dim,
            resolution,
            band,
            map,
            forms,
            weight,
            center,
            radius,
        } => {
            let r = integrate_sphere(
                &common,
                dim,
                resolution,
                band,
                map.as_deref(),
                &forms,
                weight.as_deref(),
                &center,
                radius,
            );
            (common, r)
        }
        Command::Dim {
            common,
            preset,
            grid,
            scales,
            tol,
            metric,
            density,
        } => {
            // The CSV goes to --out, the report to standard output.
            let r = dim(&common, preset.as_deref(), grid.as_deref(), &scales, tol, &metric, density);
            let mut shown = common.clone();
            shown.out = None;
            (shown, r)
        }
        Command::Selftest { common, samples } => {
            let r = selftest::run(common.seed, samples);
            (common, r)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(2, format!("{}: {e}", path.display())))
}

fn load_spec(group: &str) -> Result<AlgebraSpec, Failure> {
    let path = Path::new(group);
    if group.ends_with(".toml") || path.is_file() {
        Ok(AlgebraSpec::from_toml(&read(path)?)?)
    } else {
        Ok(catalog(group)?)
    }
}

fn load_group(common: &Common) -> Result<StratifiedAlgebra, Failure> {
    let spec = load_spec(&common.group)?;
    build_algebra(&spec).map_err(|e| Failure(1, format!("invalid group: {e}")))
}

fn load_grid(path: &Path) -> Result<GridMap, Failure> {
    let io = |e: std::io::Error| Failure(2, format!("{}: {e}", path.display()));
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => Ok(GridSpec::from_toml(&read(path)?)?.sample()?),
        Some("csv") => Ok(GridMap::read_csv(fs::File::open(path).map_err(io)?)?),
        _ => Ok(GridMap::read_binary(fs::File::open(path).map_err(io)?)?),
    }
}

fn header(out: &mut String, name: &str, seed: u64) {
    let _ = writeln!(out, "group = {name}");
    let _ = writeln!(out, "seed = {seed}");
}

fn validate(common: &Common, spec: Option<&Path>) -> Outcome {
    let spec = match spec {
        Some(p) => AlgebraSpec::from_toml(&read(p)?)?,
        None => load_spec(&common.group)?,
    };
    let report = check_spec(&spec);
    let mut out = String::new();
    header(&mut out, &report.name, common.seed);
    let _ = writeln!(out, "q = {}", report.strata.iter().sum::<usize>());
    let _ = writeln!(out, "step = {}", report.strata.len());
    let _ = writeln!(out, "strata = {:?}", report.strata);
    let _ = writeln!(out, "Q = {}", report.homogeneous_dim);
    for check in &report.checks {
        match &check.outcome {
            Ok(()) => {
                let _ = writeln!(out, "{}: PASS", check.name);
            }
            Err(e) => {
                let _ = writeln!(out, "{}: FAIL ({e})", check.name);
            }
        }
    }
    Ok((out, if report.passed() { 0 } else { 1 }))
}

fn frames(common: &Common) -> Outcome {
    let alg = load_group(common)?;
    let f = FrameField::new(&alg)?;
    let q = alg.dim();
    let name = |v: usize| format!("x{}", v + 1);
    let mut out = String::new();
    header(&mut out, alg.name(), common.seed);
    for i in 0..q {
        let terms: Vec<String> = (0..q)
            .filter(|&r| f.frame_poly()[(r, i)].num_terms() > 0)
            .map(|r| format!("({}) ∂{}", f.frame_poly()[(r, i)].display_with(&name), r + 1))
            .collect();
        let _ = writeln!(out, "X{} = {}", i + 1, terms.join(" + "));
    }
    for r in 0..q {
        let terms: Vec<String> = (0..q)
            .filter(|&c| f.coframe_poly()[(r, c)].num_terms() > 0)
            .map(|c| format!("({}) dx{}", f.coframe_poly()[(r, c)].display_with(&name), c + 1))
            .collect();
        let _ = writeln!(out, "η{} = {}", r + 1, terms.join(" + "));
    }
    Ok((out, 0))
}

fn mc_table(common: &Common) -> Outcome {
    let alg = load_group(common)?;
    let mut out = String::new();
    header(&mut out, alg.name(), common.seed);
    for k in 0..alg.dim() {
        let d = maurer_cartan(&alg, k)?;
        let _ = writeln!(out, "dη{} = {}", k + 1, d.pretty());
    }
    Ok((out, 0))
}

fn theta(common: &Common) -> Outcome {
    let alg = load_group(common)?;
    if alg.is_commutative() {
        return Err(Failure(3, "theta requires ι ≥ 2; the group is commutative".into()));
    }
    let mut out = String::new();
    header(&mut out, alg.name(), common.seed);
    let mut all = true;
    let mut last_s = None;
    for (s, r) in admissible_pairs(&alg) {
        if last_s != Some(s) {
            let _ = writeln!(out, "θ{} = {}", s + 1, theta_form(&alg, s)?.pretty());
            last_s = Some(s);
        }
        let check = theta_product_check(&alg, s, r)?;
        all &= check.holds;
        let _ = writeln!(
            out,
            "(s, r) = ({}, {}): {}  lhs = {}  rhs = {}",
            s + 1,
            r + 1,
            if check.holds { "PASS" } else { "FAIL" },
            check.lhs.pretty(),
            check.rhs.pretty()
        );
    }
    Ok((out, if all { 0 } else { 1 }))
}

fn chain(
    common: &Common,
    preset: &str,
    grid: Option<&Path>,
    kappa: usize,
    step: Option<f64>,
    tol: f64,
    implied_tol: f64,
) -> Outcome {
    let alg = load_group(common)?;
    let gm = match grid {
        Some(p) => load_grid(p)?,
        None => match preset {
            "legendrian-cylinder" => {
                let (gen, lower, upper) = Preset::LegendrianCylinder.setup(alg.dim())?;
                GridMap::from_generator_with_step(&gen, &lower, &upper, step.unwrap_or(1e-3))?
            }
            "plane" => GridMap::from_generator_with_step(
                &Generator::HorizontalPlane {
                    source: 2,
                    target: alg.dim(),
                },
                &[-1.0, -1.0],
                &[1.0, 1.0],
                step.unwrap_or(0.05),
            )?,
            other => return Err(Failure(2, format!("unknown chain preset {other:?}"))),
        },
    };
    let mut out = String::new();
    header(&mut out, alg.name(), common.seed);
    match vanishing_chain_check(&gm, &alg, kappa, tol) {
        Err(Error::PreconditionDefect(field)) => {
            let _ = writeln!(out, "PreconditionDefect: {}", field.summary());
            Ok((out, 1))
        }
        Err(Error::Commutative) => Err(Failure(3, "chain requires ι ≥ 2; the group is commutative".into())),
        Err(e) => Err(e.into()),
        Ok(report) => {
            let _ = writeln!(out, "{}", report.summary());
            let mut ok = report.step1.max() <= tol;
            for st in &report.steps {
                ok &= st.direct.max() <= tol && st.implied.max() <= implied_tol;
            }
            let _ = writeln!(out, "max rank = {}", report.max_rank());
            let _ = writeln!(out, "verdict = {}", if ok { "PASS" } else { "FAIL" });
            Ok((out, if ok { 0 } else { 1 }))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn integrate_sphere(
    common: &Common,
    n: usize,
    resolution: usize,
    band: f64,
    map: Option<&Path>,
    forms: &[usize],
    weight: Option<&str>,
    center: &[f64],
    radius: f64,
) -> Outcome {
    let f = match map {
        Some(p) => GridSpec::from_toml(&read(p)?)?.generator.build()?,
        None => Generator::Identity { dim: n }.build()?,
    };
    let j: Vec<usize> = if forms.is_empty() {
        (0..n.saturating_sub(1)).collect()
    } else {
        forms
            .iter()
            .map(|&k| k.checked_sub(1).ok_or_else(|| Failure(2, "form indices are 1-based".into())))
            .collect::<Result<_, _>>()?
    };
    let weight = weight.map_or_else(|| format!("x{n}"), str::to_string);
    let g = match weight.as_str() {
        "one" => Generator::Constant {
            source: n,
            value: vec![1.0],
        },
        w => {
            let k: usize = w
                .strip_prefix('x')
                .and_then(|k| k.parse().ok())
                .filter(|k| (1..=n).contains(k))
                .ok_or_else(|| Failure(2, format!("weight must be `one` or x1..x{n}, got {w:?}")))?;
            let mut row = vec![0.0; n];
            row[k - 1] = 1.0;
            Generator::Linear {
                matrix: vec![row],
                offset: vec![0.0],
            }
        }
    }
    .build()?;
    let ball = if center.is_empty() {
        Ball::new(vec![0.0; n], radius)?
    } else {
        Ball::new(center.to_vec(), radius)?
    };
    let integ = SphereIntegrator::with_band(n, resolution, band)?;
    let gfun = |x: &[f64]| carnot_core::grid::Mapping::eval(&g, x)[0];
    let integral = oriented_integral(&f, &gfun, &j, &ball, &integ)?;
    let stokes = stokes_residual(&f, &g, &j, &ball, &integ, resolution)?;
    let mut out = String::new();
    let _ = writeln!(out, "seed = {}", common.seed);
    let _ = writeln!(out, "n = {n}");
    let _ = writeln!(out, "forms = {:?}", j.iter().map(|k| k + 1).collect::<Vec<_>>());
    let _ = writeln!(out, "weight = {weight}");
    let _ = writeln!(out, "value = {:.15e}", integral.value);
    let _ = writeln!(out, "hadamard_bound = {:.15e}", integral.hadamard_bound);
    let _ = writeln!(out, "area = {:.15e}", integral.area);
    let _ = writeln!(out, "area_error = {:.3e}", integral.area_error);
    let _ = writeln!(out, "under_resolved = {}", integral.under_resolved);
    let _ = writeln!(out, "volume_integral = {:.15e}", stokes.volume);
    let _ = writeln!(out, "stokes_residual = {:.3e}", stokes.residual);
    Ok((out, 0))
}

fn parse_scales(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure(2, format!("scales must look like a:b with a <= b, got {text:?}"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b || b > 40 {
        return Err(bad());
    }
    Ok(dimension::dyadic_scales(a, b))
}

fn dim(
    common: &Common,
    preset: Option<&str>,
    grid: Option<&Path>,
    scales: &str,
    tol: f64,
    metric: &str,
    density: Option<f64>,
) -> Outcome {
    let alg = load_group(common)?;
    let scales = parse_scales(scales)?;
    let metric: MetricMode = metric.parse()?;
    if density.is_some_and(|d| !(d.is_finite() && d > 0.0)) {
        return Err(Failure(2, "--density must be positive".into()));
    }
    let report = match (grid, preset) {
        (Some(p), _) => {
            let d = density.unwrap_or(dimension::DEFAULT_DENSITY);
            dimension::gromov_experiment_with_density(&load_grid(p)?, &alg, &scales, tol, d)?
        }
        (None, Some(name)) => {
            let preset: Preset = name.parse()?;
            let d = density.unwrap_or(preset.density());
            dimension::gromov_experiment_with_density(&preset.grid(alg.dim())?, &alg, &scales, tol, d)?
        }
        (None, None) => return Err(Failure(2, "dim needs --preset or --grid".into())),
    };
    if let Some(path) = &common.out {
        let mut csv = Vec::new();
        dimension::write_counts_csv(&report.homogeneous, &report.euclidean, &mut csv)?;
        fs::write(path, csv).map_err(|e| Failure(2, format!("{}: {e}", path.display())))?;
        let toml_path = path.with_extension("toml");
        let text = format!("seed = {}\n{}", common.seed, report.to_toml());
        fs::write(&toml_path, text).map_err(|e| Failure(2, format!("{}: {e}", toml_path.display())))?;
    }
    let shown = match metric {
        MetricMode::Homogeneous => &report.homogeneous,
        MetricMode::Euclidean => &report.euclidean,
    };
    let mut out = String::new();
    header(&mut out, alg.name(), common.seed);
    let _ = writeln!(out, "metric = {metric}");
    let _ = writeln!(out, "density = {}", report.density);
    let _ = writeln!(out, "eps,N,samples,saturated");
    for row in &shown.table {
        let _ = writeln!(out, "{},{},{},{}", row.eps, row.count, row.samples, row.saturated);
    }
    let fmt_fit = |r: &dimension::BoxCountResult| match r.fit {
        Some(f) => format!("{:.4} (residual {:.4})", f.slope, f.residual),
        None => "unavailable".into(),
    };
    let _ = writeln!(out, "slope = {}", fmt_fit(shown));
    let _ = writeln!(out, "slope_homogeneous = {}", fmt_fit(&report.homogeneous));
    let _ = writeln!(out, "slope_euclidean = {}", fmt_fit(&report.euclidean));
    let _ = writeln!(out, "target = Q - 1 = {}", report.target);
    let _ = writeln!(out, "rank_histogram = {:?}", report.rank_histogram);
    let _ = writeln!(out, "verdict = {} ({})", report.verdict, report.reason);
    if report.verdict == Verdict::Pass {
        let _ = writeln!(out, "caveat: {}", report.caveat);
    }
    let code = if report.verdict == Verdict::Fail { 1 } else { 0 };
    Ok((out, code))
}
