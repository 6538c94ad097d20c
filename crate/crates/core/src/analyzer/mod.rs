//! Box-wise audit of a network: mass homogeneity, connectivity subgraphs
//! and the local Poincare constant `mu = R^-1 lambda_2^-1/2`.
//!
//! A scan at resolution `k` tiles the domain into boxes of side `1/k` (the
//! elements of the mesh with `H = 1/k`). `R^-1` in the reported constants is
//! that resolution `k`.

mod eigen;
mod subgraph;

pub use eigen::{generalized_eigen_smallest, EigenMode, EigenOptions, EigenPair};
pub use subgraph::{build_connectivity_subgraph, ConnectivitySubgraph};

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{BoxMesh, PatchSeed};
use crate::network::{BoxRegion, Point, SpatialNetwork};

/// Box values `(2R)^-d |1|^2_{M,B}` at one resolution.
#[derive(Debug, Clone)]
pub struct HomogeneityReport {
    pub resolution: usize,
    /// Box half-width `R`.
    pub half_width: f64,
    pub values: Vec<f64>,
    /// Smallest box value.
    pub rho: f64,
    pub max: f64,
    /// `max / min`; infinite when a box is empty.
    pub sigma: f64,
}

fn mesh_for(network: &SpatialNetwork, resolution: usize) -> Result<BoxMesh> {
    if resolution == 0 {
        return Err(Error::Config("resolution must be positive".into()));
    }
    BoxMesh::new(network, 1.0 / resolution as f64)
}

pub fn homogeneity_scan(network: &SpatialNetwork, resolution: usize) -> Result<HomogeneityReport> {
    let mesh = mesh_for(network, resolution)?;
    Ok(homogeneity_on(network, &mesh, resolution))
}

fn homogeneity_on(network: &SpatialNetwork, mesh: &BoxMesh, resolution: usize) -> HomogeneityReport {
    let mass = network.mass_diagonal();
    let scale = (resolution as f64).powi(network.dim() as i32);
    let values: Vec<f64> = (0..mesh.element_count())
        .map(|e| scale * mesh.nodes_in_element(e).iter().map(|&x| mass[x]).sum::<f64>())
        .collect();
    let rho = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(0.0, f64::max);
    let sigma = if rho > 0.0 { max / rho } else { f64::INFINITY };
    HomogeneityReport { resolution, half_width: 0.5 * mesh.h(), values, rho, max, sigma }
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    /// Enlargement of the boxes for the connectivity subgraph; defaults to
    /// the longest edge.
    pub r0: Option<f64>,
    pub eigen: EigenOptions,
    /// Also compute the Dirichlet value `lambda_1` for boxes whose subgraph
    /// holds Dirichlet nodes.
    pub dirichlet: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { r0: None, eigen: EigenOptions::default(), dirichlet: true }
    }
}

/// Results for one box of a scan.
#[derive(Debug, Clone)]
pub struct BoxAnalysis {
    pub box_index: usize,
    pub center: Point,
    /// `(2R)^-d |1|^2_{M,B}`.
    pub mass_value: f64,
    pub subgraph_nodes: usize,
    pub added_edges: usize,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub mu: Option<f64>,
    pub violation: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PoincareReport {
    pub resolution: usize,
    pub half_width: f64,
    pub r0: f64,
    pub boxes: Vec<BoxAnalysis>,
}

impl PoincareReport {
    fn mus(&self) -> impl Iterator<Item = f64> + '_ {
        self.boxes.iter().filter_map(|b| b.mu)
    }

    /// Largest `mu` over the boxes.
    pub fn mu_hat(&self) -> f64 {
        self.mus().fold(0.0, f64::max)
    }

    pub fn mu_mean(&self) -> f64 {
        let (s, n) = self.mus().fold((0.0, 0usize), |(s, n), m| (s + m, n + 1));
        s / n as f64
    }

    pub fn mu_std(&self) -> f64 {
        let mean = self.mu_mean();
        let (s, n) = self.mus().fold((0.0, 0usize), |(s, n), m| (s + (m - mean).powi(2), n + 1));
        (s / n as f64).sqrt()
    }

    /// Mean of `1 / lambda_2` over the boxes.
    pub fn mean_inverse_lambda2(&self) -> f64 {
        let (s, n) = self.boxes.iter().filter_map(|b| b.lambda2).fold((0.0, 0usize), |(s, n), l| (s + 1.0 / l, n + 1));
        s / n as f64
    }

    pub fn violations(&self) -> impl Iterator<Item = (usize, &str)> {
        self.boxes.iter().filter_map(|b| b.violation.as_deref().map(|v| (b.box_index, v)))
    }

    /// The first box violation as an error.
    pub fn check(&self) -> Result<()> {
        match self.violations().next() {
            Some((i, v)) => Err(Error::AssumptionViolation(format!("box {i}: {v}"))),
            None => Ok(()),
        }
    }
}

/// One resolution of a full audit.
#[derive(Debug, Clone)]
pub struct GridAnalysis {
    pub homogeneity: HomogeneityReport,
    pub poincare: PoincareReport,
}

impl GridAnalysis {
    pub fn sigma(&self) -> f64 {
        self.homogeneity.sigma
    }

    pub fn mu(&self) -> f64 {
        self.poincare.mu_hat()
    }
}

pub fn poincare_scan(network: &SpatialNetwork, resolution: usize, opts: &AnalysisOptions) -> Result<PoincareReport> {
    Ok(analyze_grid(network, resolution, opts)?.poincare)
}

/// Homogeneity and Poincare scans at one resolution. Per-box failures are
/// recorded in the report rather than returned.
pub fn analyze_grid(network: &SpatialNetwork, resolution: usize, opts: &AnalysisOptions) -> Result<GridAnalysis> {
    let mesh = mesh_for(network, resolution)?;
    let homogeneity = homogeneity_on(network, &mesh, resolution);
    let r0 = opts.r0.unwrap_or_else(|| network.max_edge_length());
    let half_width = 0.5 * mesh.h();
    let k = resolution as f64;
    let boxes: Vec<BoxAnalysis> = (0..mesh.element_count())
        .into_par_iter()
        .map(|e| {
            let center = mesh.element_center(e);
            let mut out = BoxAnalysis {
                box_index: e,
                center,
                mass_value: homogeneity.values[e],
                subgraph_nodes: 0,
                added_edges: 0,
                lambda1: None,
                lambda2: None,
                mu: None,
                violation: None,
            };
            let region = BoxRegion::new(center, half_width);
            let layers = 1 + (r0 / mesh.h()).ceil() as usize;
            let candidates: Vec<usize> = mesh
                .patch(PatchSeed::Element(e), layers)
                .into_iter()
                .flat_map(|t| mesh.nodes_in_element(t).iter().copied())
                .collect();
            let result = build_connectivity_subgraph(network, &region, r0, mesh.nodes_in_element(e), &candidates)
                .and_then(|g| {
                    out.subgraph_nodes = g.nodes.len();
                    out.added_edges = g.added_edge_count();
                    let l = g.laplacian(network);
                    let m = g.mass(network);
                    let coords: Vec<Point> = g.nodes.iter().map(|&x| *network.position(x)).collect();
                    let fixed: Vec<bool> = g.nodes.iter().map(|&x| network.is_dirichlet(x)).collect();
                    let l2 = generalized_eigen_smallest(&l, &m, &fixed, EigenMode::Neumann, Some(&coords), &opts.eigen)?;
                    out.lambda2 = Some(l2.value);
                    out.mu = Some(k / l2.value.sqrt());
                    if opts.dirichlet && fixed.iter().any(|f| *f) {
                        let l1 = generalized_eigen_smallest(&l, &m, &fixed, EigenMode::Dirichlet, Some(&coords), &opts.eigen)?;
                        out.lambda1 = Some(l1.value);
                    }
                    Ok(())
                });
            if let Err(err) = result {
                out.violation = Some(err.to_string());
            }
            out
        })
        .collect();
    Ok(GridAnalysis { homogeneity, poincare: PoincareReport { resolution, half_width, r0, boxes } })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        let dx = x.ln() - mx;
        (a + dx * (y.ln() - my), b + dx * dx)
    });
    num / den
}

/// Slope of mean `1 / lambda_2` against the box half-width `R`.
pub fn poincare_scaling_slope(reports: &[PoincareReport]) -> f64 {
    let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.half_width, r.mean_inverse_lambda2())).collect();
    loglog_slope(&pts)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Tidy per-box table:
/// `grid,box_index,center_x,center_y[,center_z],mass,lambda1,lambda2,mu`.
pub fn write_analysis_csv<W: Write>(w: W, dim: usize, grids: &[GridAnalysis]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["grid", "box_index", "center_x", "center_y", "center_z"];
    header.truncate(2 + dim.max(2));
    header.extend(["mass", "lambda1", "lambda2", "mu"]);
    out.write_record(&header)?;
    for g in grids {
        for b in &g.poincare.boxes {
            let mut row = vec![g.poincare.resolution.to_string(), b.box_index.to_string()];
            row.extend(b.center.iter().take(dim.max(2)).map(|c| c.to_string()));
            row.push(b.mass_value.to_string());
            row.push(cell(b.lambda1));
            row.push(cell(b.lambda2));
            row.push(cell(b.mu));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One row per resolution: `grid,half_width,r0,rho,sigma,mu_max,mu_mean,mu_std,mean_inv_lambda2,violations`.
pub fn write_summary_csv<W: Write>(w: W, grids: &[GridAnalysis]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "grid",
        "half_width",
        "r0",
        "rho",
        "sigma",
        "mu_max",
        "mu_mean",
        "mu_std",
        "mean_inv_lambda2",
        "violations",
    ])?;
    for g in grids {
        let p = &g.poincare;
        out.write_record([
            p.resolution.to_string(),
            p.half_width.to_string(),
            p.r0.to_string(),
            g.homogeneity.rho.to_string(),
            g.homogeneity.sigma.to_string(),
            p.mu_hat().to_string(),
            p.mu_mean().to_string(),
            p.mu_std().to_string(),
            p.mean_inverse_lambda2().to_string(),
            p.violations().count().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibergen::generate_grid_network;

    #[test]
    fn grid_homogeneity_by_hand() {
        // 17 points per side (h = 1/16), 4x4 boxes of 4x4 lattice cells.
        // Interior nodes weigh 2h, face nodes 1.5h, corner nodes h.
        let net = generate_grid_network(17).unwrap();
        let hm = homogeneity_scan(&net, 4).unwrap();
        assert_eq!(hm.values.len(), 16);
        let h = 1.0 / 16.0;
        // interior box: 16 interior nodes
        assert!((hm.values[5] - 16.0 * 16.0 * 2.0 * h).abs() < 1e-12);
        // lower-left box: 9 interior, 6 face nodes, 1 corner
        let low = 16.0 * (9.0 * 2.0 * h + 6.0 * 1.5 * h + h);
        assert!((hm.rho - low).abs() < 1e-12, "{} vs {low}", hm.rho);
        // upper-right box also owns the upper faces: 16 interior, 8 face, 1 corner
        let high = 16.0 * (16.0 * 2.0 * h + 8.0 * 1.5 * h + h);
        assert!((hm.max - high).abs() < 1e-12, "{} vs {high}", hm.max);
        assert!((hm.sigma - high / low).abs() < 1e-12);
        let total: f64 = hm.values.iter().sum::<f64>() / 16.0;
        assert!((total - net.total_length()).abs() < 1e-12);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.2, 0.4].iter().map(|&x| (x, 3.0 * x * x)).collect();
        assert!((loglog_slope(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn grid_poincare_scan() {
        let net = generate_grid_network(33).unwrap();
        let g = analyze_grid(&net, 4, &AnalysisOptions::default()).unwrap();
        g.poincare.check().unwrap();
        assert_eq!(g.poincare.boxes.len(), 16);
        for b in &g.poincare.boxes {
            assert_eq!(b.added_edges, 0);
            let l2 = b.lambda2.unwrap();
            assert!(l2 > 0.0);
            // boxes touching the boundary hold Dirichlet nodes
            assert_eq!(b.lambda1.is_some(), b.box_index != 5 && b.box_index != 6 && b.box_index != 9 && b.box_index != 10);
        }
        let mu = g.mu();
        assert!(mu > 0.3 && mu < 0.6, "{mu}");
        let mut buf = Vec::new();
        write_analysis_csv(&mut buf, 2, std::slice::from_ref(&g)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("grid,box_index,center_x,center_y,mass,lambda1,lambda2,mu\n4,0,0.125,0.125,"));
        assert_eq!(text.lines().count(), 17);
    }
}
