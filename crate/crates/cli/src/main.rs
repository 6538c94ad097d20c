use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use netschwarz::analyzer::{analyze_grid, write_analysis_csv, write_summary_csv, AnalysisOptions};
use netschwarz::experiments::{
    conductivities, run_experiment, violation_error, Conductivity, ExperimentConfig, ExperimentKind, Problem,
    StructuralConfig, StructuralLoad,
};
use netschwarz::fibergen::{generate_fiber_network_with_stats, generate_grid_network, FiberGenConfig, FiberKind};
use netschwarz::mesh::BoxMesh;
use netschwarz::network::io::{load_network, save_network};
use netschwarz::solver::{pcg_solve, reference_solve, PatchShape, PcgOptions, SchwarzPreconditioner, DEFAULT_MAX_FACTOR_ENTRIES};

/// Two-level additive Schwarz preconditioning for spatial network models.
#[derive(Parser)]
#[command(name = "netschwarz", version, about)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "NETSCHWARZ_THREADS")]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a fiber or grid network and write it to a file.
    Generate(GenerateArgs),
    /// Homogeneity and Poincare scans of a network over box grids.
    Analyze(AnalyzeArgs),
    /// Solve a heat or structural problem with preconditioned CG.
    Solve(SolveArgs),
    /// Run a configured experiment.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum NetworkKind {
    Uniform,
    OrientBias,
    PlaceBias,
    Grid,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    kind: NetworkKind,
    /// Seed of the fiber placement.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Target total fiber length.
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    fiber_length: Option<f64>,
    /// Points per side of a grid network.
    #[arg(long, default_value_t = 513)]
    points: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    network: PathBuf,
    /// Box resolutions `R^-1`.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
    grid: Vec<usize>,
    /// Per-box table: grid, box_index, center_x, center_y, mass, lambda1, lambda2, mu.
    #[arg(long)]
    out: PathBuf,
    /// Per-resolution table: grid, half_width, r0, rho, sigma, mu_max, mu_mean, mu_std, mean_inv_lambda2, violations.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Also compute the Dirichlet eigenvalue for boxes touching the boundary.
    #[arg(long)]
    dirichlet: bool,
    /// Edge length bound `R0` (defaults to the longest edge).
    #[arg(long)]
    r0: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Heat,
    Structural,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoadKind {
    Tensile,
    Lateral,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConductivityKind {
    /// gamma = 1 on every edge.
    Unit,
    /// The weights stored in the network file.
    Weights,
    /// Independent draws from U[0.1, 1].
    Random,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long, value_enum, default_value = "heat")]
    problem: ProblemKind,
    /// Load case of a structural problem.
    #[arg(long, value_enum, default_value = "tensile")]
    load: LoadKind,
    #[arg(long, value_enum, default_value = "unit")]
    conductivity: ConductivityKind,
    /// Coarse mesh size, as `1/8` or `0.125`; `1/H` must be an integer.
    #[arg(long = "H", value_parser = parse_h)]
    h: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    #[arg(long, value_enum, default_value = "open")]
    patch_shape: Shape,
    /// Per-iteration table: iteration, residual, k_error, rate.
    #[arg(long)]
    report: PathBuf,
    /// Compute a reference solution and report `|u - u_l|_K` and rates.
    #[arg(long)]
    reference: bool,
    /// Largest Cholesky factor (entries) for the direct reference solve.
    #[arg(long, default_value_t = DEFAULT_MAX_FACTOR_ENTRIES)]
    max_factor_entries: usize,
    /// Nodal solution table: node, x1, x2, then one column per component.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Seed of random conductivities.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Open,
    HalfOpen,
    Closed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    AssumptionScan,
    Heat,
    StructuralTensile,
    StructuralLateral,
    CdAnalysis,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment description.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment instead of a config file.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn parse_h(s: &str) -> Result<usize, String> {
    let inv = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            b / a
        }
        None => 1.0 / s.trim().parse::<f64>().map_err(|e| format!("{e}"))?,
    };
    let r = inv.round();
    if !(r >= 1.0) || (inv - r).abs() > 1e-9 * r {
        return Err(format!("1/H = {inv} is not a positive integer"));
    }
    Ok(r as usize)
}

fn generate(a: GenerateArgs) -> anyhow::Result<()> {
    let net = match a.kind {
        NetworkKind::Grid => generate_grid_network(a.points)?,
        kind => {
            let kind = match kind {
                NetworkKind::Uniform => FiberKind::Uniform,
                NetworkKind::OrientBias => FiberKind::OrientBias,
                _ => FiberKind::PlaceBias,
            };
            let mut cfg = FiberGenConfig::preset(kind, a.seed);
            if let Some(d) = a.density {
                cfg = cfg.with_density(d);
            }
            if let Some(r) = a.fiber_length {
                cfg = cfg.with_fiber_length(r);
            }
            let (net, stats) = generate_fiber_network_with_stats(&cfg)?;
            log::info!("{stats:?}");
            net
        }
    };
    save_network(&net, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!(
        "{} nodes, {} edges, total length {:.6}, longest edge {:.6}",
        net.node_count(),
        net.edge_count(),
        net.total_length(),
        net.max_edge_length()
    );
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> anyhow::Result<()> {
    let net = load_network(&a.network).with_context(|| format!("reading {}", a.network.display()))?;
    let opts = AnalysisOptions { r0: a.r0, dirichlet: a.dirichlet, ..Default::default() };
    let mut grids = Vec::new();
    for &res in &a.grid {
        let g = analyze_grid(&net, res, &opts)?;
        eprintln!(
            "R^-1 = {res}: sigma {:.4}, mu {:.4}, {} violations",
            g.sigma(),
            g.mu(),
            g.poincare.violations().count()
        );
        grids.push(g);
    }
    write_analysis_csv(BufWriter::new(File::create(&a.out)?), net.dim(), &grids)?;
    if let Some(p) = &a.summary {
        write_summary_csv(BufWriter::new(File::create(p)?), &grids)?;
    }
    for g in &grids {
        g.poincare.check()?;
    }
    Ok(())
}

fn solve(a: SolveArgs) -> anyhow::Result<()> {
    let net = load_network(&a.network).with_context(|| format!("reading {}", a.network.display()))?;
    let problem = match a.problem {
        ProblemKind::Heat => {
            let c = match a.conductivity {
                ConductivityKind::Unit => Conductivity::Unit,
                ConductivityKind::Weights => Conductivity::EdgeWeights,
                ConductivityKind::Random => Conductivity::Uniform { low: 0.1, high: 1.0 },
            };
            let gamma = conductivities(&net, c, a.seed);
            Problem::heat(net, gamma)?
        }
        ProblemKind::Structural => {
            let load = match a.load {
                LoadKind::Tensile => StructuralLoad::Tensile,
                LoadKind::Lateral => StructuralLoad::Lateral,
            };
            Problem::structural(net, load, &StructuralConfig::default())?
        }
    };
    let k = problem.op.matrix();
    let mesh = BoxMesh::new(&problem.network, 1.0 / a.h as f64)?;
    let shape = match a.patch_shape {
        Shape::Open => PatchShape::Open,
        Shape::HalfOpen => PatchShape::HalfOpen,
        Shape::Closed => PatchShape::Closed,
    };
    let pre = SchwarzPreconditioner::build_with(&problem.network, &mesh, &problem.op, shape)?;
    let reference = if a.reference {
        let r = reference_solve(k, &problem.rhs, Some(&pre), a.max_factor_entries)?;
        eprintln!("reference solution by {} (relative residual {:.2e})", r.method, r.relative_residual);
        Some(r.solution)
    } else {
        None
    };
    let opts = PcgOptions { tol: a.tol, max_iterations: a.max_iterations };
    let (u, report) = pcg_solve(k, &problem.rhs, &pre, &opts, reference.as_deref())?;
    let mut w = csv_writer(&a.report)?;
    w.write_record(["iteration", "residual", "k_error", "rate"])?;
    for (l, r) in report.residuals.iter().enumerate() {
        let e = report.errors.get(l).map(|v| v.to_string()).unwrap_or_default();
        let rate = if l >= 2 { report.rates.get(l - 2).map(|v| v.to_string()).unwrap_or_default() } else { String::new() };
        w.write_record([l.to_string(), r.to_string(), e, rate])?;
    }
    w.flush()?;
    if let Some(p) = &a.solution {
        let field = problem.full_solution(&u)?;
        let mut w = csv_writer(p)?;
        let mut header = vec!["node".to_string(), "x1".into(), "x2".into()];
        header.extend((1..=field.components()).map(|c| format!("u{c}")));
        w.write_record(&header)?;
        for x in 0..problem.network.node_count() {
            let pos = problem.network.position(x);
            let mut row = vec![x.to_string(), pos[0].to_string(), pos[1].to_string()];
            row.extend((0..field.components()).map(|c| field.get(x, c).to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    eprint!("{} dofs, {} iterations", k.nrows(), report.iterations);
    if let (Some(m), Some(x)) = (report.mean_rate(), report.max_rate()) {
        eprint!(", mean rate {m:.3}, max rate {x:.3}");
    }
    eprintln!();
    if !report.converged {
        bail!("no convergence in {} iterations", a.max_iterations);
    }
    Ok(())
}

fn csv_writer(path: &PathBuf) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn experiment(a: ExperimentArgs) -> anyhow::Result<()> {
    let mut cfg = match (&a.config, a.preset) {
        (Some(p), _) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        (None, Some(preset)) => {
            let kind = match preset {
                Preset::AssumptionScan => ExperimentKind::AssumptionScan,
                Preset::Heat => ExperimentKind::Heat,
                Preset::StructuralTensile => ExperimentKind::StructuralTensile,
                Preset::StructuralLateral => ExperimentKind::StructuralLateral,
                Preset::CdAnalysis => ExperimentKind::CdAnalysis,
            };
            ExperimentConfig::preset(kind, 1)
        }
        (None, None) => bail!("either --config or --preset is required"),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.print_config {
        print!("{}", toml::to_string(&cfg)?);
        return Ok(());
    }
    let out = a
        .out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("netschwarz-{}", cfg.kind.name())));
    let result = run_experiment(&cfg, &out)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "run {} -> {}", result.run_id, out.display())?;
    for r in &result.rates {
        writeln!(
            stdout,
            "{:>16} H^-1 = {:>3}: {:>4} iterations, mean rate {}, max rate {}",
            r.network,
            r.h_inverse,
            r.report.iterations,
            r.mean_rate().map_or("-".into(), |v| format!("{v:.3}")),
            r.max_rate().map_or("-".into(), |v| format!("{v:.3}")),
        )?;
    }
    for s in &result.scans {
        writeln!(stdout, "{:>16} R^-1 = {:>3}: sigma {:.3}, mu {:.3}", s.network, s.resolution, s.sigma, s.mu)?;
    }
    for (n, s) in &result.slopes {
        writeln!(stdout, "{n:>16} slope of mean 1/lambda2 against R: {s:.3}")?;
    }
    for c in &result.cd {
        writeln!(
            stdout,
            "{:>16} H^-1 = {:>3}: C_d {:.3}, predicted rate {:.3}",
            c.network, c.h_inverse, c.cd, c.predicted_rate
        )?;
    }
    if let Some(e) = violation_error(&result) {
        return Err(e.into());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Analyze(a) => analyze(a),
        Command::Solve(a) => solve(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let violation = e.chain().any(|c| c.downcast_ref::<netschwarz::Error>().is_some_and(|e| e.is_assumption_violation()));
            ExitCode::from(if violation { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_parsing() {
        assert_eq!(parse_h("1/8"), Ok(8));
        assert_eq!(parse_h("0.25"), Ok(4));
        assert_eq!(parse_h("1 / 16"), Ok(16));
        assert!(parse_h("0.3").is_err());
        assert!(parse_h("2").is_err());
        assert!(parse_h("x").is_err());
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
