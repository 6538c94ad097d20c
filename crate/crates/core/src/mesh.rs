//! Uniform hypercube mesh on the network's domain, the multilinear (Q1)
//! nodal basis restricted to the network nodes, and the averaging
//! interpolant onto that basis.
//!
//! Elements follow the half-open box convention of [`BoxRegion`]: each point
//! of the domain belongs to exactly one element, and points on the upper
//! face of the domain belong to the last element along that axis.
//!
//! Basis functions are numbered so that the first `m0` span the functions
//! that vanish on the Dirichlet faces; the remaining `m - m0` belong to mesh
//! nodes on those faces.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::network::{BoxRegion, Face, FaceSide, NodeField, Point, SpatialNetwork};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct BoxMesh {
    dim: usize,
    domain: Point,
    h: f64,
    /// Elements per axis (1 on unused axes).
    counts: [usize; 3],
    /// Mesh nodes per axis (1 on unused axes).
    lattice: [usize; 3],
    m0: usize,
    basis_of_lattice: Vec<usize>,
    lattice_of_basis: Vec<usize>,
    element_of_node: Vec<usize>,
    element_offsets: Vec<usize>,
    element_nodes: Vec<usize>,
}

/// Where a patch `U_k(seed)` starts from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatchSeed {
    Element(usize),
    /// Mesh node, by basis index.
    MeshNode(usize),
    Point(Point),
    Region(BoxRegion),
}

impl BoxMesh {
    /// Builds the mesh with element side `h` and assigns every network node to its element.
    pub fn new(network: &SpatialNetwork, h: f64) -> Result<Self> {
        let dim = network.dim();
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("mesh size H = {h} must be positive")));
        }
        let mut counts = [1usize; 3];
        let mut lattice = [1usize; 3];
        let mut domain = [0.0; 3];
        for (a, &l) in network.domain().iter().enumerate() {
            let ratio = l / h;
            let n = ratio.round();
            if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
                return Err(Error::Config(format!(
                    "side length {l} on axis {a} is not an integer multiple of H = {h}"
                )));
            }
            counts[a] = n as usize;
            lattice[a] = counts[a] + 1;
            domain[a] = l;
        }
        let faces = network.dirichlet_faces();
        let m = lattice.iter().product::<usize>();
        let mut basis_of_lattice = vec![0usize; m];
        let mut lattice_of_basis = Vec::with_capacity(m);
        let on_dirichlet = |idx: [usize; 3]| {
            faces.iter().any(|f| match f.side {
                FaceSide::Lower => idx[f.axis] == 0,
                FaceSide::Upper => idx[f.axis] == counts[f.axis],
            })
        };
        let decode = |l: usize| [l % lattice[0], (l / lattice[0]) % lattice[1], l / (lattice[0] * lattice[1])];
        for l in 0..m {
            if !on_dirichlet(decode(l)) {
                basis_of_lattice[l] = lattice_of_basis.len();
                lattice_of_basis.push(l);
            }
        }
        let m0 = lattice_of_basis.len();
        for l in 0..m {
            if on_dirichlet(decode(l)) {
                basis_of_lattice[l] = lattice_of_basis.len();
                lattice_of_basis.push(l);
            }
        }

        let mut mesh = Self {
            dim,
            domain,
            h,
            counts,
            lattice,
            m0,
            basis_of_lattice,
            lattice_of_basis,
            element_of_node: Vec::new(),
            element_offsets: Vec::new(),
            element_nodes: Vec::new(),
        };
        let element_of_node: Vec<usize> = network.positions().iter().map(|p| mesh.element_of(p)).collect();
        let ne = mesh.element_count();
        let mut offsets = vec![0usize; ne + 1];
        for &e in &element_of_node {
            offsets[e + 1] += 1;
        }
        for e in 0..ne {
            offsets[e + 1] += offsets[e];
        }
        let mut fill = offsets.clone();
        let mut nodes = vec![0usize; element_of_node.len()];
        for (x, &e) in element_of_node.iter().enumerate() {
            nodes[fill[e]] = x;
            fill[e] += 1;
        }
        mesh.element_of_node = element_of_node;
        mesh.element_offsets = offsets;
        mesh.element_nodes = nodes;
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Elements per axis.
    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    pub fn element_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// `m`, the number of mesh nodes (basis functions).
    pub fn mesh_node_count(&self) -> usize {
        self.lattice_of_basis.len()
    }

    /// `m0`, the number of basis functions vanishing on the Dirichlet faces.
    pub fn free_count(&self) -> usize {
        self.m0
    }

    fn element_coords(&self, e: usize) -> [usize; 3] {
        [e % self.counts[0], (e / self.counts[0]) % self.counts[1], e / (self.counts[0] * self.counts[1])]
    }

    fn element_index(&self, c: [usize; 3]) -> usize {
        c[0] + self.counts[0] * (c[1] + self.counts[1] * c[2])
    }

    fn lattice_coords(&self, k: usize) -> [usize; 3] {
        let l = self.lattice_of_basis[k];
        [l % self.lattice[0], (l / self.lattice[0]) % self.lattice[1], l / (self.lattice[0] * self.lattice[1])]
    }

    fn basis_index(&self, c: [usize; 3]) -> usize {
        self.basis_of_lattice[c[0] + self.lattice[0] * (c[1] + self.lattice[1] * c[2])]
    }

    /// Position in element units along axis `a`.
    fn scaled(&self, p: &Point, a: usize) -> f64 {
        p[a] / self.domain[a] * self.counts[a] as f64
    }

    /// The unique element containing `p`.
    pub fn element_of(&self, p: &Point) -> usize {
        let mut c = [0usize; 3];
        for (a, ca) in c.iter_mut().enumerate().take(self.dim) {
            let t = self.scaled(p, a).floor();
            *ca = if t < 0.0 { 0 } else { (t as usize).min(self.counts[a] - 1) };
        }
        self.element_index(c)
    }

    pub fn element_of_node(&self, x: usize) -> usize {
        self.element_of_node[x]
    }

    pub fn nodes_in_element(&self, e: usize) -> &[usize] {
        &self.element_nodes[self.element_offsets[e]..self.element_offsets[e + 1]]
    }

    /// Lower corner and centre of element `e`.
    pub fn element_center(&self, e: usize) -> Point {
        let c = self.element_coords(e);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = (c[a] as f64 + 0.5) * self.domain[a] / self.counts[a] as f64;
        }
        p
    }

    pub fn mesh_node_position(&self, k: usize) -> Point {
        let c = self.lattice_coords(k);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = c[a] as f64 * self.domain[a] / self.counts[a] as f64;
        }
        p
    }

    /// `T_k`: the element that contains mesh node `k` under the half-open convention.
    pub fn owner_element(&self, k: usize) -> usize {
        let mut c = self.lattice_coords(k);
        for a in 0..self.dim {
            c[a] = c[a].min(self.counts[a] - 1);
        }
        self.element_index(c)
    }

    /// True when mesh node `k` lies on one of the given faces.
    pub fn mesh_node_on(&self, k: usize, faces: &[Face]) -> bool {
        let c = self.lattice_coords(k);
        faces.iter().any(|f| match f.side {
            FaceSide::Lower => c[f.axis] == 0,
            FaceSide::Upper => c[f.axis] == self.counts[f.axis],
        })
    }

    /// Element indices of the patch `U_k(seed)` (closure adjacency, so
    /// diagonal neighbours are included), sorted ascending.
    pub fn patch(&self, seed: PatchSeed, layers: usize) -> Vec<usize> {
        if layers == 0 {
            return Vec::new();
        }
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for a in 0..self.dim {
            let (l, h) = match seed {
                PatchSeed::Element(e) => {
                    let c = self.element_coords(e)[a] as i64;
                    (c - 1, c + 1)
                }
                PatchSeed::MeshNode(k) => {
                    let c = self.lattice_coords(k)[a] as i64;
                    (c - 1, c)
                }
                PatchSeed::Point(p) => {
                    let t = self.scaled(&p, a);
                    (t.ceil() as i64 - 1, t.floor() as i64)
                }
                PatchSeed::Region(b) => {
                    let s = self.counts[a] as f64 / self.domain[a];
                    let tl = (b.center[a] - b.half_width) * s;
                    let th = (b.center[a] + b.half_width) * s;
                    (tl.ceil() as i64 - 1, th.floor() as i64)
                }
            };
            let grow = layers as i64 - 1;
            lo[a] = (l - grow).max(0);
            hi[a] = (h + grow).min(self.counts[a] as i64 - 1);
            if lo[a] > hi[a] {
                return Vec::new();
            }
        }
        let mut out = Vec::new();
        for c2 in lo[2]..=hi[2] {
            for c1 in lo[1]..=hi[1] {
                for c0 in lo[0]..=hi[0] {
                    out.push(self.element_index([c0 as usize, c1 as usize, c2 as usize]));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Values of the nodal basis at `p`: the multilinear hat functions of
    /// the corners of the element containing `p`. Zero values are omitted.
    pub fn eval_basis(&self, p: &Point) -> Vec<(usize, f64)> {
        let e = self.element_coords(self.element_of(p));
        let mut xi = [0.0; 3];
        for a in 0..self.dim {
            xi[a] = (self.scaled(p, a) - e[a] as f64).clamp(0.0, 1.0);
        }
        let mut out = Vec::with_capacity(1 << self.dim);
        for corner in 0..(1usize << self.dim) {
            let mut value = 1.0;
            let mut c = e;
            for a in 0..self.dim {
                if corner >> a & 1 == 1 {
                    value *= xi[a];
                    c[a] += 1;
                } else {
                    value *= 1.0 - xi[a];
                }
            }
            if value != 0.0 {
                out.push((self.basis_index(c), value));
            }
        }
        out
    }

    pub fn summary(&self) -> MeshSummary {
        MeshSummary {
            h: self.h,
            counts: self.counts().to_vec(),
            mesh_nodes: self.mesh_node_count(),
            free_mesh_nodes: self.m0,
            element_node_counts: (0..self.element_count()).map(|e| self.nodes_in_element(e).len()).collect(),
        }
    }
}

/// Plain-text description of a mesh and its node assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSummary {
    pub h: f64,
    pub counts: Vec<usize>,
    pub mesh_nodes: usize,
    pub free_mesh_nodes: usize,
    pub element_node_counts: Vec<usize>,
}

impl MeshSummary {
    pub fn empty_elements(&self) -> Vec<usize> {
        self.element_node_counts.iter().enumerate().filter(|(_, &c)| c == 0).map(|(e, _)| e).collect()
    }

    /// ```text
    /// mesh-summary 1
    /// h 0.25
    /// counts 4 4
    /// mesh_nodes 25
    /// free_mesh_nodes 9
    /// element_nodes 16
    /// <one count per line, element order>
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let counts: Vec<String> = self.counts.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "mesh-summary 1");
        let _ = writeln!(s, "h {}", self.h);
        let _ = writeln!(s, "counts {}", counts.join(" "));
        let _ = writeln!(s, "mesh_nodes {}", self.mesh_nodes);
        let _ = writeln!(s, "free_mesh_nodes {}", self.free_mesh_nodes);
        let _ = writeln!(s, "element_nodes {}", self.element_node_counts.len());
        for c in &self.element_node_counts {
            let _ = writeln!(s, "{c}");
        }
        s
    }
}

/// The basis evaluated at the network nodes, `Phi[x, k] = phi_k(x)`, with
/// the per-element masses `|1|^2_{M,T}` used by the interpolant.
#[derive(Debug, Clone)]
pub struct BasisRestriction {
    phi: CsrMatrix,
    phi_t: CsrMatrix,
    element_mass: Vec<f64>,
}

impl BasisRestriction {
    pub fn assemble(network: &SpatialNetwork, mesh: &BoxMesh) -> Self {
        let n = network.node_count();
        let mut triplets = Vec::with_capacity(n << mesh.dim());
        let mut element_mass = vec![0.0; mesh.element_count()];
        let mass = network.mass_diagonal();
        for e in 0..mesh.element_count() {
            for &x in mesh.nodes_in_element(e) {
                element_mass[e] += mass[x];
                for (k, v) in mesh.eval_basis(network.position(x)) {
                    triplets.push((x, k, v));
                }
            }
        }
        let phi = CsrMatrix::from_triplets(n, mesh.mesh_node_count(), triplets);
        let phi_t = phi.transpose();
        Self { phi, phi_t, element_mass }
    }

    /// Network nodes by rows, basis functions by columns.
    pub fn phi(&self) -> &CsrMatrix {
        &self.phi
    }

    /// Column-compressed view: row `k` holds `phi_k` at its supporting nodes.
    pub fn phi_transpose(&self) -> &CsrMatrix {
        &self.phi_t
    }

    /// `|1|^2_{M,T}` for element `e`.
    pub fn element_mass(&self, e: usize) -> f64 {
        self.element_mass[e]
    }

    /// `psi_k = |1|^{-2}_{M,T_k}`, or `None` when `T_k` holds no network mass.
    pub fn psi(&self, mesh: &BoxMesh, k: usize) -> Option<f64> {
        let m = self.element_mass[mesh.owner_element(k)];
        (m > 0.0).then(|| 1.0 / m)
    }
}

/// Result of [`interpolate`]: basis coefficients (component-major, one block
/// of `count` values per component) and the interpolant at the network nodes.
#[derive(Debug, Clone)]
pub struct Interpolant {
    pub count: usize,
    pub coefficients: Vec<f64>,
    pub field: NodeField,
}

/// `I v = sum_k (M_{T_k} psi_k, v) phi_k`, i.e. each coefficient is the
/// mass-weighted mean of `v` over `T_k`.
///
/// With `free_only` the sum runs over the first `m0` basis functions (so the
/// result vanishes on the Dirichlet faces); otherwise over all `m`.
pub fn interpolate(
    network: &SpatialNetwork,
    mesh: &BoxMesh,
    basis: &BasisRestriction,
    field: &NodeField,
    free_only: bool,
) -> Result<Interpolant> {
    if field.node_count() != network.node_count() {
        return Err(Error::Shape(format!(
            "field has {} nodes, network has {}",
            field.node_count(),
            network.node_count()
        )));
    }
    let count = if free_only { mesh.free_count() } else { mesh.mesh_node_count() };
    let mass = network.mass_diagonal();
    let mut psi = Vec::with_capacity(count);
    for k in 0..count {
        let t = mesh.owner_element(k);
        match basis.psi(mesh, k) {
            Some(p) => psi.push(p),
            None => {
                return Err(Error::AssumptionViolation(format!(
                    "element {t} (owner of mesh node {k}) contains no network mass; use a larger H"
                )))
            }
        }
    }
    let n = network.node_count();
    let mut coefficients = vec![0.0; count * field.components()];
    let mut out = NodeField::zeros(field.components(), n);
    for c in 0..field.components() {
        let v = field.component(c);
        let coef = &mut coefficients[c * count..(c + 1) * count];
        for (k, ck) in coef.iter_mut().enumerate() {
            let t = mesh.owner_element(k);
            let s: f64 = mesh.nodes_in_element(t).iter().map(|&x| mass[x] * v[x]).sum();
            *ck = s * psi[k];
        }
        let o = out.component_mut(c);
        for (x, ox) in o.iter_mut().enumerate() {
            let (ks, vals) = basis.phi().row(x);
            *ox = ks.iter().zip(vals).filter(|(&k, _)| k < count).map(|(&k, &p)| p * coef[k]).sum();
        }
    }
    Ok(Interpolant { count, coefficients, field: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::EdgeSpec;

    fn square_net(points: Vec<Point>, faces: Vec<Face>) -> SpatialNetwork {
        let edges = (0..points.len() - 1).map(|i| EdgeSpec::new(i, i + 1)).collect();
        SpatialNetwork::new(2, &[1.0, 1.0], points, edges, faces).unwrap()
    }

    fn basic() -> SpatialNetwork {
        square_net(vec![[0.1, 0.1, 0.0], [0.6, 0.2, 0.0], [1.0, 0.5, 0.0]], Face::all(2))
    }

    #[test]
    fn counts_and_free_nodes() {
        let mesh = BoxMesh::new(&basic(), 0.25).unwrap();
        assert_eq!(mesh.element_count(), 16);
        assert_eq!(mesh.mesh_node_count(), 25);
        assert_eq!(mesh.free_count(), 9);
        for k in 0..mesh.free_count() {
            assert!(!mesh.mesh_node_on(k, &Face::all(2)));
        }
        for k in mesh.free_count()..25 {
            assert!(mesh.mesh_node_on(k, &Face::all(2)));
        }
    }

    #[test]
    fn rejects_non_dividing_h() {
        assert!(matches!(BoxMesh::new(&basic(), 0.3), Err(Error::Config(_))));
    }

    #[test]
    fn upper_boundary_goes_to_last_element() {
        let mesh = BoxMesh::new(&basic(), 0.25).unwrap();
        let e = mesh.element_of(&[1.0, 0.5, 0.0]);
        assert_eq!(e, 3 + 4 * 2);
        assert_eq!(mesh.element_of_node(2), e);
    }

    #[test]
    fn patch_shapes() {
        let mesh = BoxMesh::new(&basic(), 0.25).unwrap();
        let interior = (0..mesh.mesh_node_count())
            .find(|&k| mesh.mesh_node_position(k) == [0.5, 0.5, 0.0])
            .unwrap();
        assert_eq!(mesh.patch(PatchSeed::MeshNode(interior), 1), vec![5, 6, 9, 10]);
        assert_eq!(mesh.patch(PatchSeed::Element(5), 1).len(), 9);
        assert_eq!(mesh.patch(PatchSeed::Element(0), 2).len(), 9);
        assert_eq!(mesh.patch(PatchSeed::Element(0), 1).len(), 4);
        assert_eq!(mesh.patch(PatchSeed::Point([0.5, 0.5, 0.0]), 1).len(), 4);
        assert_eq!(mesh.patch(PatchSeed::Point([0.6, 0.6, 0.0]), 1), vec![10]);
    }

    #[test]
    fn basis_values() {
        let net = square_net(vec![[0.0, 0.0, 0.0], [1.0, 1.0, 0.0]], vec![]);
        let mesh = BoxMesh::new(&net, 1.0).unwrap();
        let mut vals = mesh.eval_basis(&[0.1, 0.2, 0.0]);
        vals.sort_by(|a, b| a.0.cmp(&b.0));
        let expect = [0.72, 0.08, 0.18, 0.02];
        for ((_, v), e) in vals.iter().zip(expect) {
            assert!((v - e).abs() < 1e-15, "{v} vs {e}");
        }
        let mid = mesh.eval_basis(&[0.5, 0.5, 0.0]);
        assert_eq!(mid.len(), 4);
        assert!(mid.iter().all(|(_, v)| *v == 0.25));
        let corner = mesh.eval_basis(&[1.0, 0.0, 0.0]);
        assert_eq!(corner.len(), 1);
        assert_eq!(corner[0].1, 1.0);
        assert_eq!(mesh.mesh_node_position(corner[0].0), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn interpolation_of_constants() {
        let pts: Vec<Point> = (0..=20)
            .flat_map(|i| [[i as f64 / 20.0, 0.05 + 0.9 * i as f64 / 20.0, 0.0]])
            .collect();
        let net = square_net(pts, Face::all(2));
        let mesh = BoxMesh::new(&net, 1.0).unwrap();
        let basis = BasisRestriction::assemble(&net, &mesh);
        let v = NodeField::constant(1, net.node_count(), 2.5);
        let all = interpolate(&net, &mesh, &basis, &v, false).unwrap();
        for &x in all.field.values() {
            assert!((x - 2.5).abs() < 1e-12);
        }
        // With one element and every mesh node on Γ there is no free basis function.
        let free = interpolate(&net, &mesh, &basis, &v, true).unwrap();
        assert!(free.field.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn empty_owner_element_is_reported() {
        let net = square_net(vec![[0.1, 0.1, 0.0], [0.2, 0.1, 0.0]], vec![]);
        let mesh = BoxMesh::new(&net, 0.5).unwrap();
        let basis = BasisRestriction::assemble(&net, &mesh);
        let v = NodeField::constant(1, 2, 1.0);
        assert!(matches!(
            interpolate(&net, &mesh, &basis, &v, false),
            Err(Error::AssumptionViolation(_))
        ));
    }

    #[test]
    fn summary_text() {
        let mesh = BoxMesh::new(&basic(), 0.5).unwrap();
        let s = mesh.summary();
        assert_eq!(s.element_node_counts.iter().sum::<usize>(), 3);
        assert!(s.to_text().starts_with("mesh-summary 1\nh 0.5\ncounts 2 2\nmesh_nodes 9\nfree_mesh_nodes 1\n"));
    }
}
