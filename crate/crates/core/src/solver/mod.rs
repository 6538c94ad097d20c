//! Two-level additive Schwarz preconditioner and the PCG driver.
//!
//! The coarse space is the free part of the Q1 basis restricted to the
//! network (one copy per component); the local spaces are the free dofs of
//! the network nodes in the patch of each mesh node, by default the open
//! star where its basis function is positive. Every subspace solve
//! is exact, through a sparse Cholesky factor computed once at setup.

mod pcg;
mod spectrum;

pub use pcg::{DEFAULT_MAX_FACTOR_ENTRIES, pcg_solve, reference_solve, PcgOptions, PcgReport, ReferenceMethod, ReferenceSolution};
pub use spectrum::{dense_spectrum, estimate_spectrum, convergence_rate, SpectrumEstimate};

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{BasisRestriction, BoxMesh, PatchSeed};
use crate::models::AssembledOperator;
use crate::network::SpatialNetwork;
use crate::sparse::{Cholesky, CsrMatrix};

/// `z = B r` for a symmetric positive definite `B`.
pub trait Preconditioner: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, r: &[f64]) -> Vec<f64>;
}

/// `B = I`, i.e. plain CG.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl Preconditioner for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }
}

#[derive(Debug)]
struct CoarseSpace {
    /// Free dofs by coarse dofs.
    phi: CsrMatrix,
    phi_t: CsrMatrix,
    chol: Cholesky,
}

#[derive(Debug)]
struct Patch {
    /// Mesh node (basis index) the patch belongs to, if any.
    mesh_node: Option<usize>,
    dofs: Vec<usize>,
    chol: Cholesky,
}

/// Which network nodes make up the local space of mesh node `y_j`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatchShape {
    /// The nodes of the open box `y_j + (-H, H)^d`, where `phi_j` is positive.
    #[default]
    Open,
    /// The nodes of the half-open elements touching `y_j`.
    HalfOpen,
    /// The nodes of the closed box `y_j + [-H, H]^d`.
    Closed,
}

impl std::str::FromStr for PatchShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half-open" => Ok(Self::HalfOpen),
            "closed" => Ok(Self::Closed),
            "open" => Ok(Self::Open),
            _ => Err(Error::Config(format!("unknown patch shape '{s}' (expected half-open, closed or open)"))),
        }
    }
}

/// Setup statistics of a [`SchwarzPreconditioner`].
#[derive(Debug, Clone, Default)]
pub struct SchwarzStats {
    pub coarse_dim: usize,
    pub patches: usize,
    /// Mesh nodes whose patch holds no free dofs.
    pub skipped_patches: Vec<usize>,
    pub largest_patch: usize,
    /// Sum of the patch sizes over the free dof count.
    pub mean_overlap: f64,
    /// Largest number of patches sharing one dof.
    pub max_overlap: usize,
    pub setup_seconds: f64,
}

/// `B = Phi0 A0^-1 Phi0^T + sum_j E_j K_j^-1 E_j^T`.
#[derive(Debug)]
pub struct SchwarzPreconditioner {
    n: usize,
    coarse: Option<CoarseSpace>,
    patches: Vec<Patch>,
    stats: SchwarzStats,
}

impl SchwarzPreconditioner {
    /// Coarse space from the free basis functions of `mesh`, one open patch per mesh node.
    pub fn build(network: &SpatialNetwork, mesh: &BoxMesh, op: &AssembledOperator) -> Result<Self> {
        Self::build_with(network, mesh, op, PatchShape::Open)
    }

    pub fn build_with(network: &SpatialNetwork, mesh: &BoxMesh, op: &AssembledOperator, shape: PatchShape) -> Result<Self> {
        let start = Instant::now();
        let empty = mesh.summary().empty_elements();
        if !empty.is_empty() {
            return Err(Error::AssumptionViolation(format!(
                "{} mesh elements hold no network nodes (first: {}); use a larger H",
                empty.len(),
                empty[0]
            )));
        }
        let r0 = network.max_edge_length();
        if mesh.h() < 2.0 * r0 {
            log::warn!("H = {} is below 2 R0 = {}; the convergence bound does not apply", mesh.h(), 2.0 * r0);
        }
        let dofs = op.dofs();
        let nc = op.components();
        let basis = BasisRestriction::assemble(network, mesh);
        let m0 = mesh.free_count();
        let mut t = Vec::new();
        for (i, &x) in dofs.free_nodes().iter().enumerate() {
            let (cols, vals) = basis.phi().row(x);
            for (&k, &v) in cols.iter().zip(vals) {
                if k < m0 {
                    for c in 0..nc {
                        t.push((c * dofs.free_nodes().len() + i, c * m0 + k, v));
                    }
                }
            }
        }
        let phi = CsrMatrix::from_triplets(op.free_dof_count(), nc * m0, t);
        let coarse = if m0 == 0 { None } else { Some(coarse_space(op.matrix(), phi)?) };

        let seeds: Vec<usize> = (0..mesh.mesh_node_count()).collect();
        let sets: Vec<(usize, Vec<usize>)> = seeds
            .iter()
            .map(|&j| {
                let mut set = Vec::new();
                let y = mesh.mesh_node_position(j);
                let layers = if shape == PatchShape::Closed { 2 } else { 1 };
                for e in mesh.patch(PatchSeed::MeshNode(j), layers) {
                    for &x in mesh.nodes_in_element(e) {
                        let p = network.position(x);
                        let outside = |a: usize| {
                            let t = (p[a] - y[a]).abs() / mesh.h();
                            match shape {
                                PatchShape::HalfOpen => false,
                                PatchShape::Closed => t > 1.0 + 1e-12,
                                PatchShape::Open => t >= 1.0 - 1e-12,
                            }
                        };
                        if (0..mesh.dim()).any(outside) {
                            continue;
                        }
                        for c in 0..nc {
                            if let Some(d) = dofs.free_dof(x, c) {
                                set.push(d);
                            }
                        }
                    }
                }
                set.sort_unstable();
                (j, set)
            })
            .collect();
        let mut pre = Self::assemble(op.matrix(), coarse, sets)?;
        pre.stats.setup_seconds = start.elapsed().as_secs_f64();
        Ok(pre)
    }

    /// General subspace decomposition: an optional coarse basis (free dofs by
    /// coarse dofs) and explicit local dof sets.
    pub fn from_subspaces(k: &CsrMatrix, coarse_basis: Option<CsrMatrix>, patches: Vec<Vec<usize>>) -> Result<Self> {
        let start = Instant::now();
        let coarse = coarse_basis.map(|phi| coarse_space(k, phi)).transpose()?;
        let sets = patches
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                (usize::MAX, s)
            })
            .collect();
        let mut pre = Self::assemble(k, coarse, sets)?;
        pre.stats.setup_seconds = start.elapsed().as_secs_f64();
        Ok(pre)
    }

    fn assemble(k: &CsrMatrix, coarse: Option<CoarseSpace>, sets: Vec<(usize, Vec<usize>)>) -> Result<Self> {
        let n = k.nrows();
        let mut skipped = Vec::new();
        let mut kept = Vec::new();
        for (j, s) in sets {
            if let Some(&d) = s.iter().find(|&&d| d >= n) {
                return Err(Error::Shape(format!("patch dof {d} out of range ({n} dofs)")));
            }
            if s.is_empty() {
                log::debug!("patch of mesh node {j} holds no free dofs; skipped");
                skipped.push(j);
            } else {
                kept.push((j, s));
            }
        }
        let patches: Vec<Patch> = kept
            .into_par_iter()
            .map(|(j, dofs)| {
                let chol = Cholesky::factor(&k.principal_submatrix(&dofs)).map_err(|e| {
                    Error::Singular(format!(
                        "local matrix of patch {} ({} dofs) is singular: {e}",
                        if j == usize::MAX { "<explicit>".to_string() } else { j.to_string() },
                        dofs.len()
                    ))
                })?;
                Ok(Patch { mesh_node: (j != usize::MAX).then_some(j), dofs, chol })
            })
            .collect::<Result<_>>()?;
        let mut count = vec![0usize; n];
        for p in &patches {
            for &d in &p.dofs {
                count[d] += 1;
            }
        }
        let total: usize = patches.iter().map(|p| p.dofs.len()).sum();
        let stats = SchwarzStats {
            coarse_dim: coarse.as_ref().map_or(0, |c| c.chol.dim()),
            patches: patches.len(),
            skipped_patches: skipped.into_iter().filter(|&j| j != usize::MAX).collect(),
            largest_patch: patches.iter().map(|p| p.dofs.len()).max().unwrap_or(0),
            mean_overlap: if n == 0 { 0.0 } else { total as f64 / n as f64 },
            max_overlap: count.iter().copied().max().unwrap_or(0),
            setup_seconds: 0.0,
        };
        Ok(Self { n, coarse, patches, stats })
    }

    pub fn stats(&self) -> &SchwarzStats {
        &self.stats
    }

    /// Dof sets of the local spaces, with the mesh node each belongs to.
    pub fn patch_dofs(&self) -> impl Iterator<Item = (Option<usize>, &[usize])> {
        self.patches.iter().map(|p| (p.mesh_node, p.dofs.as_slice()))
    }

    /// The coarse basis (free dofs by coarse dofs), if any.
    pub fn coarse_basis(&self) -> Option<&CsrMatrix> {
        self.coarse.as_ref().map(|c| &c.phi)
    }
}

fn coarse_space(k: &CsrMatrix, phi: CsrMatrix) -> Result<CoarseSpace> {
    if phi.nrows() != k.nrows() {
        return Err(Error::Shape(format!("coarse basis has {} rows, operator {}", phi.nrows(), k.nrows())));
    }
    let phi_t = phi.transpose();
    let dead: Vec<usize> = (0..phi_t.nrows()).filter(|&c| phi_t.row(c).1.iter().all(|v| *v == 0.0)).collect();
    if !dead.is_empty() {
        return Err(Error::Singular(format!(
            "coarse basis columns {dead:?} vanish at every free network node; use a larger H"
        )));
    }
    let a0 = phi_t.matmul(&k.matmul(&phi));
    let chol = Cholesky::factor(&a0).map_err(|e| {
        let diag = a0.diagonal();
        let weak: Vec<usize> = (0..diag.len()).filter(|&i| !(diag[i] > 0.0)).collect();
        Error::Singular(format!("coarse matrix is not positive definite ({e}); suspicious columns {weak:?}"))
    })?;
    Ok(CoarseSpace { phi, phi_t, chol })
}

impl Preconditioner for SchwarzPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.n);
        let mut z = vec![0.0; self.n];
        if let Some(c) = &self.coarse {
            let mut y = c.phi_t.matvec(r);
            c.chol.solve_in_place(&mut y);
            c.phi.matvec_into(&y, &mut z);
        }
        let local: Vec<Vec<f64>> = self
            .patches
            .par_iter()
            .map(|p| {
                let mut b: Vec<f64> = p.dofs.iter().map(|&d| r[d]).collect();
                p.chol.solve_in_place(&mut b);
                b
            })
            .collect();
        for (p, w) in self.patches.iter().zip(local) {
            for (&d, v) in p.dofs.iter().zip(w) {
                z[d] += v;
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibergen::generate_grid_network;
    use crate::models::{assemble_heat, HeatParams};
    use crate::sparse::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_setup(p: usize, h: f64) -> (SpatialNetwork, BoxMesh, AssembledOperator) {
        let net = generate_grid_network(p).unwrap();
        let mesh = BoxMesh::new(&net, h).unwrap();
        let op = assemble_heat(&net, &HeatParams::uniform(&net, 1.0)).unwrap();
        (net, mesh, op)
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn grid_5x5_patches_and_coarse() {
        let (net, mesh, op) = grid_setup(5, 0.5);
        let pre = SchwarzPreconditioner::build(&net, &mesh, &op).unwrap();
        // one free mesh node (the centre), 9 mesh nodes, 9 free network nodes
        assert_eq!(pre.stats().coarse_dim, 1);
        assert_eq!(op.free_dof_count(), 9);
        // corner patches touch only Dirichlet nodes except through one element
        assert_eq!(pre.stats().patches + pre.stats().skipped_patches.len(), 9);
        assert!(pre.stats().max_overlap <= 4);
        // the centre patch covers every free node
        assert_eq!(pre.stats().largest_patch, 9);
    }

    #[test]
    fn interior_patch_covers_four_elements() {
        let (net, mesh, op) = grid_setup(9, 0.25);
        let k = (0..mesh.mesh_node_count()).find(|&k| mesh.mesh_node_position(k)[..2] == [0.5, 0.5]).unwrap();
        let size = |shape| {
            let pre = SchwarzPreconditioner::build_with(&net, &mesh, &op, shape).unwrap();
            let (_, dofs) = pre.patch_dofs().find(|(j, _)| *j == Some(k)).unwrap();
            dofs.len()
        };
        // (0.25, 0.75)^2, [0.25, 0.75)^2 and [0.25, 0.75]^2 on a lattice of spacing 1/8
        assert_eq!(size(PatchShape::Open), 9);
        assert_eq!(size(PatchShape::HalfOpen), 16);
        assert_eq!(size(PatchShape::Closed), 25);
    }

    #[test]
    fn symmetric_and_linear() {
        let (net, mesh, op) = grid_setup(17, 0.25);
        let pre = SchwarzPreconditioner::build(&net, &mesh, &op).unwrap();
        let n = op.free_dof_count();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = random(n, &mut rng);
            let b = random(n, &mut rng);
            let (ba, bb) = (pre.apply(&a), pre.apply(&b));
            let (x, y) = (dot(&ba, &b), dot(&bb, &a));
            assert!((x - y).abs() <= 1e-10 * x.abs().max(y.abs()), "{x} vs {y}");
            let sum: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
            let bs = pre.apply(&sum);
            for i in 0..n {
                assert!((bs[i] - ba[i] - bb[i]).abs() < 1e-12 * (1.0 + bs[i].abs()));
            }
        }
    }

    #[test]
    fn single_full_patch_is_exact_inverse() {
        let (_, _, op) = grid_setup(9, 0.25);
        let n = op.free_dof_count();
        let pre = SchwarzPreconditioner::from_subspaces(op.matrix(), None, vec![(0..n).collect()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random(n, &mut rng);
        let z = pre.apply(&op.matrix().matvec(&w));
        for i in 0..n {
            assert!((z[i] - w[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn all_dirichlet_patches_are_skipped() {
        let (net, mesh, op) = grid_setup(3, 0.5);
        let pre = SchwarzPreconditioner::build(&net, &mesh, &op).unwrap();
        assert_eq!(op.free_dof_count(), 1);
        // the only free node (0.5, 0.5) lies in the open star of the centre alone
        assert_eq!(pre.stats().patches, 1);
        assert_eq!(pre.stats().skipped_patches.len(), 8);
        let half = SchwarzPreconditioner::build_with(&net, &mesh, &op, PatchShape::HalfOpen).unwrap();
        // under the half-open convention it belongs to the upper-right element
        assert_eq!(half.stats().patches, 4);
    }
}
