use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analyzer::{analyze_grid, poincare_scaling_slope, write_analysis_csv, write_summary_csv, AnalysisOptions, GridAnalysis};
use crate::error::{Error, Result};
use crate::fibergen::wire_ratio_range;
use crate::mesh::BoxMesh;
use crate::network::SpatialNetwork;
use crate::solver::{
    estimate_spectrum, pcg_solve, reference_solve, PcgOptions, PcgReport, ReferenceMethod, SchwarzPreconditioner,
};

use super::config::{ExperimentConfig, ExperimentKind, NetworkSpec};
use super::output::{write_manifest, Table};
use super::problem::{build_network, conductivities, Problem, StructuralLoad};

/// One PCG run.
#[derive(Debug, Clone)]
pub struct RateRow {
    pub network: String,
    pub h_inverse: usize,
    pub dofs: usize,
    pub coarse_dim: usize,
    pub patches: usize,
    pub report: PcgReport,
    pub reference: Option<ReferenceMethod>,
    /// Lanczos estimate `(lambda_min, lambda_max)` of the spectrum of `P`.
    pub spectrum: Option<(f64, f64)>,
}

impl RateRow {
    pub fn mean_rate(&self) -> Option<f64> {
        self.report.mean_rate()
    }

    pub fn max_rate(&self) -> Option<f64> {
        self.report.max_rate()
    }
}

/// Assumption scan of one network at one resolution.
#[derive(Debug, Clone)]
pub struct ScanRow {
    pub network: String,
    pub resolution: usize,
    pub rho: f64,
    pub sigma: f64,
    pub mu: f64,
    pub mu_mean: f64,
    pub mean_inverse_lambda2: f64,
    pub violations: usize,
}

#[derive(Debug, Clone)]
pub struct CdRow {
    pub network: String,
    pub h_inverse: usize,
    pub sigma: f64,
    pub mu: f64,
    pub mean_rate: f64,
    pub max_rate: f64,
    /// `(1 + tau) / (sqrt(sigma) mu (1 - tau))` with the measured mean rate.
    pub cd: f64,
    /// `(sqrt(k) - 1) / (sqrt(k) + 1)` with `sqrt(k) = C_d sqrt(sigma) mu`.
    pub predicted_rate: f64,
}

#[derive(Debug, Clone)]
pub struct NetworkRow {
    pub network: String,
    pub nodes: usize,
    pub edges: usize,
    pub dirichlet_nodes: usize,
    pub total_length: f64,
    pub max_edge_length: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    pub run_id: String,
    pub networks: Vec<NetworkRow>,
    pub rates: Vec<RateRow>,
    pub scans: Vec<ScanRow>,
    /// Slope of `log mean(1 / lambda_2)` against `log R`, per network.
    pub slopes: Vec<(String, f64)>,
    pub cd: Vec<CdRow>,
    /// Files written, relative to the output directory.
    pub files: Vec<PathBuf>,
}

impl ExperimentResult {
    pub fn violation_count(&self) -> usize {
        self.scans.iter().map(|s| s.violations).sum()
    }
}

/// `C_d = (1 + tau) / (sqrt(sigma) mu (1 - tau))`.
pub fn cd_constant(sigma: f64, mu: f64, mean_rate: f64) -> f64 {
    (1.0 + mean_rate) / (sigma.sqrt() * mu * (1.0 - mean_rate))
}

/// Rate predicted from `sqrt(kappa) = C_d sqrt(sigma) mu`.
pub fn predicted_rate(cd: f64, sigma: f64, mu: f64) -> f64 {
    let s = cd * sigma.sqrt() * mu;
    (s - 1.0) / (s + 1.0)
}

/// Runs `config`, writing tidy CSV tables and `manifest.json` into `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentResult> {
    config.validate()?;
    std::fs::create_dir_all(out)?;
    let mut result = ExperimentResult::default();
    let mut tables = Vec::new();
    match config.kind {
        ExperimentKind::AssumptionScan => {
            let mut boxes = Vec::new();
            for spec in &config.networks {
                let net = load(spec, config, &mut result)?;
                let grids = scan(&net, spec, config, &config.analysis.resolutions, &mut result)?;
                boxes.push((spec.name.clone(), net.dim(), grids));
            }
            tables.push(scan_summary_table(&result));
            tables.push(slope_table(&result));
            for (name, dim, grids) in &boxes {
                let mut buf = Vec::new();
                write_analysis_csv(&mut buf, *dim, grids)?;
                tables.push(Table::raw(format!("boxes_{name}.csv"), buf));
                let mut buf = Vec::new();
                write_summary_csv(&mut buf, grids)?;
                tables.push(Table::raw(format!("analysis_{name}.csv"), buf));
            }
        }
        ExperimentKind::Heat | ExperimentKind::CdAnalysis => {
            for spec in &config.networks {
                let net = load(spec, config, &mut result)?;
                if config.kind == ExperimentKind::CdAnalysis {
                    scan(&net, spec, config, &config.solver.h_inverse, &mut result)?;
                }
                let seed = spec.seed.unwrap_or(config.seed);
                let gamma = conductivities(&net, spec.conductivity, seed);
                let problem = Problem::heat(net, gamma)?;
                solve_all(&problem, spec, config, &mut result)?;
            }
            tables.push(rates_table(&result));
            tables.push(curves_table(&result));
            if config.kind == ExperimentKind::CdAnalysis {
                result.cd = cd_rows(&result, config.cd.constant);
                tables.push(cd_table(&result));
            }
        }
        ExperimentKind::StructuralTensile | ExperimentKind::StructuralLateral => {
            let load_case = if config.kind == ExperimentKind::StructuralTensile {
                StructuralLoad::Tensile
            } else {
                StructuralLoad::Lateral
            };
            let mut displacement = Table::new(
                "displacement.csv",
                &["network", "node", "x1", "x2", "u1", "u2", "u3"],
            );
            for spec in &config.networks {
                let net = load(spec, config, &mut result)?;
                let (lo, hi) = wire_ratio_range(&net, config.structural.wire_radius);
                if lo < 0.05 || hi > 500.0 {
                    log::warn!("{}: r_w / |x - y| ranges over [{lo:.3e}, {hi:.3e}], outside [0.05, 500]", spec.name);
                } else {
                    log::info!("{}: r_w / |x - y| ranges over [{lo:.3e}, {hi:.3e}]", spec.name);
                }
                let problem = Problem::structural(net, load_case, &config.structural)?;
                let u = solve_all(&problem, spec, config, &mut result)?;
                let field = problem.full_solution(&u)?;
                for x in 0..problem.network.node_count() {
                    let p = problem.network.position(x);
                    let c = |k: usize| if k < field.components() { field.get(x, k).to_string() } else { "0".into() };
                    displacement.push(vec![spec.name.clone(), x.to_string(), p[0].to_string(), p[1].to_string(), c(0), c(1), c(2)]);
                }
            }
            tables.push(rates_table(&result));
            tables.push(curves_table(&result));
            tables.push(displacement);
        }
    }
    tables.insert(0, networks_table(&result));
    let (run_id, files) = write_manifest(config, out, &tables)?;
    result.run_id = run_id;
    result.files = files;
    Ok(result)
}

fn load(spec: &NetworkSpec, config: &ExperimentConfig, result: &mut ExperimentResult) -> Result<SpatialNetwork> {
    let start = Instant::now();
    let net = build_network(spec, config.seed)?;
    log::info!(
        "{}: {} nodes, {} edges ({:.1} s)",
        spec.name,
        net.node_count(),
        net.edge_count(),
        start.elapsed().as_secs_f64()
    );
    result.networks.push(NetworkRow {
        network: spec.name.clone(),
        nodes: net.node_count(),
        edges: net.edge_count(),
        dirichlet_nodes: net.dirichlet_count(),
        total_length: net.total_length(),
        max_edge_length: net.max_edge_length(),
    });
    Ok(net)
}

fn scan(
    net: &SpatialNetwork,
    spec: &NetworkSpec,
    config: &ExperimentConfig,
    resolutions: &[usize],
    result: &mut ExperimentResult,
) -> Result<Vec<GridAnalysis>> {
    let opts = AnalysisOptions { r0: config.analysis.r0, dirichlet: config.analysis.dirichlet, ..Default::default() };
    let mut grids = Vec::new();
    for &res in resolutions {
        let start = Instant::now();
        let g = analyze_grid(net, res, &opts)?;
        let violations = g.poincare.violations().count();
        log::info!(
            "{} R^-1 = {res}: sigma {:.3}, mu {:.3}, {violations} violations ({:.1} s)",
            spec.name,
            g.sigma(),
            g.mu(),
            start.elapsed().as_secs_f64()
        );
        result.scans.push(ScanRow {
            network: spec.name.clone(),
            resolution: res,
            rho: g.homogeneity.rho,
            sigma: g.sigma(),
            mu: g.mu(),
            mu_mean: g.poincare.mu_mean(),
            mean_inverse_lambda2: g.poincare.mean_inverse_lambda2(),
            violations,
        });
        grids.push(g);
    }
    if grids.len() >= 2 {
        let reports: Vec<_> = grids.iter().map(|g| g.poincare.clone()).collect();
        result.slopes.push((spec.name.clone(), poincare_scaling_slope(&reports)));
    }
    Ok(grids)
}

/// Solves `problem` once per `H`, returning the reference solution (or the
/// last PCG iterate when no reference is requested).
fn solve_all(problem: &Problem, spec: &NetworkSpec, config: &ExperimentConfig, result: &mut ExperimentResult) -> Result<Vec<f64>> {
    let s = &config.solver;
    let k = problem.op.matrix();
    let opts = PcgOptions { tol: s.tol, max_iterations: s.max_iterations };
    let mut reference: Option<(Vec<f64>, ReferenceMethod)> = None;
    let mut last = Vec::new();
    for &hinv in &s.h_inverse {
        let mesh = BoxMesh::new(&problem.network, 1.0 / hinv as f64)?;
        let pre = SchwarzPreconditioner::build_with(&problem.network, &mesh, &problem.op, s.patch_shape)?;
        if s.reference && reference.is_none() {
            let start = Instant::now();
            let r = reference_solve(k, &problem.rhs, Some(&pre), s.max_factor_entries)?;
            log::info!(
                "{}: reference by {} ({:.1} s, relative residual {:.1e})",
                spec.name,
                r.method,
                start.elapsed().as_secs_f64(),
                r.relative_residual
            );
            reference = Some((r.solution, r.method));
        }
        let (x, report) = pcg_solve(k, &problem.rhs, &pre, &opts, reference.as_ref().map(|r| r.0.as_slice()))?;
        log::info!(
            "{} H^-1 = {hinv}: {} iterations, mean rate {}, max rate {} (setup {:.1} s, solve {:.1} s)",
            spec.name,
            report.iterations,
            report.mean_rate().map_or("-".into(), |v| format!("{v:.3}")),
            report.max_rate().map_or("-".into(), |v| format!("{v:.3}")),
            pre.stats().setup_seconds,
            report.solve_seconds
        );
        if !report.converged {
            log::warn!("{} H^-1 = {hinv}: no convergence in {} iterations", spec.name, s.max_iterations);
        }
        let spectrum = if s.spectrum_steps > 0 {
            let e = estimate_spectrum(k, &pre, s.spectrum_steps, config.seed)?;
            Some((e.lambda_min, e.lambda_max))
        } else {
            None
        };
        result.rates.push(RateRow {
            network: spec.name.clone(),
            h_inverse: hinv,
            dofs: k.nrows(),
            coarse_dim: pre.stats().coarse_dim,
            patches: pre.stats().patches,
            report,
            reference: reference.as_ref().map(|r| r.1),
            spectrum,
        });
        last = x;
    }
    Ok(reference.map_or(last, |r| r.0))
}

fn cd_rows(result: &ExperimentResult, constant: f64) -> Vec<CdRow> {
    let mut rows = Vec::new();
    for r in &result.rates {
        let Some(scan) = result.scans.iter().find(|s| s.network == r.network && s.resolution == r.h_inverse) else {
            continue;
        };
        let (Some(mean), Some(max)) = (r.mean_rate(), r.max_rate()) else {
            continue;
        };
        rows.push(CdRow {
            network: r.network.clone(),
            h_inverse: r.h_inverse,
            sigma: scan.sigma,
            mu: scan.mu,
            mean_rate: mean,
            max_rate: max,
            cd: cd_constant(scan.sigma, scan.mu, mean),
            predicted_rate: predicted_rate(constant, scan.sigma, scan.mu),
        });
    }
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn networks_table(result: &ExperimentResult) -> Table {
    let mut t = Table::new(
        "networks.csv",
        &["network", "nodes", "edges", "dirichlet_nodes", "total_length", "max_edge_length"],
    );
    for n in &result.networks {
        t.push(vec![
            n.network.clone(),
            n.nodes.to_string(),
            n.edges.to_string(),
            n.dirichlet_nodes.to_string(),
            n.total_length.to_string(),
            n.max_edge_length.to_string(),
        ]);
    }
    t
}

fn rates_table(result: &ExperimentResult) -> Table {
    let mut t = Table::new(
        "rates.csv",
        &[
            "network",
            "h_inverse",
            "dofs",
            "coarse_dim",
            "patches",
            "iterations",
            "converged",
            "mean_rate",
            "max_rate",
            "reference",
            "lambda_min",
            "lambda_max",
        ],
    );
    for r in &result.rates {
        t.push(vec![
            r.network.clone(),
            r.h_inverse.to_string(),
            r.dofs.to_string(),
            r.coarse_dim.to_string(),
            r.patches.to_string(),
            r.report.iterations.to_string(),
            r.report.converged.to_string(),
            opt(r.mean_rate()),
            opt(r.max_rate()),
            r.reference.map(|m| m.to_string()).unwrap_or_default(),
            opt(r.spectrum.map(|s| s.0)),
            opt(r.spectrum.map(|s| s.1)),
        ]);
    }
    t
}

fn curves_table(result: &ExperimentResult) -> Table {
    let mut t = Table::new("curves.csv", &["network", "h_inverse", "iteration", "residual", "k_error", "rate"]);
    for r in &result.rates {
        for (l, res) in r.report.residuals.iter().enumerate() {
            let rate = if l >= 2 { r.report.rates.get(l - 2).copied() } else { None };
            t.push(vec![
                r.network.clone(),
                r.h_inverse.to_string(),
                l.to_string(),
                res.to_string(),
                opt(r.report.errors.get(l).copied()),
                opt(rate),
            ]);
        }
    }
    t
}

fn scan_summary_table(result: &ExperimentResult) -> Table {
    let mut t = Table::new(
        "assumptions.csv",
        &["network", "grid", "rho", "sigma", "mu_max", "mu_mean", "mean_inv_lambda2", "violations"],
    );
    for s in &result.scans {
        t.push(vec![
            s.network.clone(),
            s.resolution.to_string(),
            s.rho.to_string(),
            s.sigma.to_string(),
            s.mu.to_string(),
            s.mu_mean.to_string(),
            s.mean_inverse_lambda2.to_string(),
            s.violations.to_string(),
        ]);
    }
    t
}

fn slope_table(result: &ExperimentResult) -> Table {
    let mut t = Table::new("scaling.csv", &["network", "inv_lambda2_slope"]);
    for (n, s) in &result.slopes {
        t.push(vec![n.clone(), s.to_string()]);
    }
    t
}

fn cd_table(result: &ExperimentResult) -> Table {
    let mut t = Table::new(
        "cd.csv",
        &["network", "h_inverse", "sigma", "mu", "mean_rate", "max_rate", "cd", "predicted_rate"],
    );
    for r in &result.cd {
        t.push(vec![
            r.network.clone(),
            r.h_inverse.to_string(),
            r.sigma.to_string(),
            r.mu.to_string(),
            r.mean_rate.to_string(),
            r.max_rate.to_string(),
            r.cd.to_string(),
            r.predicted_rate.to_string(),
        ]);
    }
    t
}

/// Error for a configuration whose scan found assumption violations.
pub fn violation_error(result: &ExperimentResult) -> Option<Error> {
    let n = result.violation_count();
    (n > 0).then(|| Error::AssumptionViolation(format!("{n} boxes failed the connectivity or eigenvalue checks")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cd_formulas() {
        // paper-style row: sigma 1, mu 0.47, tau 0.25
        let cd = cd_constant(1.0, 0.47, 0.25);
        assert!((cd - 1.25 / (0.47 * 0.75)).abs() < 1e-14);
        assert!((cd_constant(4.0, 0.5, 0.0) - 1.0).abs() < 1e-15);
        // sqrt(k) = 3 gives (3 - 1) / (3 + 1)
        assert!((predicted_rate(3.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
    }
}
