//! Spatial networks: graphs embedded in a hyper-rectangle, together with the
//! lumped mass operator `M` and the reciprocal-length weighted Laplacian `L`.
//!
//! For a field `v` and a node `x`,
//!
//! ```text
//! (M_x v, v) = 1/2 * sum_{y ~ x} |x - y| v(x)^2
//! (L_x v, v) = 1/2 * sum_{y ~ x} (v(x) - v(y))^2 / |x - y|
//! ```
//!
//! and restricted forms over a subdomain sum `M_x`, `L_x` over the nodes
//! inside it. Vector fields are handled componentwise.

mod field;
pub mod io;
mod region;

use std::collections::HashSet;

pub use field::NodeField;
pub use region::{BoxRegion, Face, FaceSide, Subdomain};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub type Point = [f64; 3];

/// Edge as supplied to the constructor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub a: usize,
    pub b: usize,
    pub fiber: Option<u32>,
    pub weight: Option<f64>,
}

impl EdgeSpec {
    pub fn new(a: usize, b: usize) -> Self {
        Self { a, b, fiber: None, weight: None }
    }

    pub fn with_fiber(mut self, fiber: u32) -> Self {
        self.fiber = Some(fiber);
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = Some(weight);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// Euclidean length, cached at construction.
    pub length: f64,
    pub fiber: Option<u32>,
    pub weight: Option<f64>,
}

impl Edge {
    pub fn other(&self, node: usize) -> usize {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Connected-component labelling of a network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    pub component_count: usize,
    /// Component label per node; labels are numbered in order of first appearance.
    pub labels: Vec<usize>,
}

impl Connectivity {
    pub fn is_connected(&self) -> bool {
        self.component_count <= 1
    }

    /// Node count per component.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.component_count];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Labels the connected components of an undirected graph.
pub fn connected_components(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Connectivity {
    let mut offsets = vec![0usize; node_count + 1];
    let pairs: Vec<(usize, usize)> = edges.into_iter().collect();
    for &(a, b) in &pairs {
        offsets[a + 1] += 1;
        offsets[b + 1] += 1;
    }
    for i in 0..node_count {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut nbrs = vec![0usize; offsets[node_count]];
    for &(a, b) in &pairs {
        nbrs[fill[a]] = b;
        fill[a] += 1;
        nbrs[fill[b]] = a;
        fill[b] += 1;
    }
    let mut labels = vec![usize::MAX; node_count];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..node_count {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = count;
        stack.push(start);
        while let Some(x) = stack.pop() {
            for &y in &nbrs[offsets[x]..offsets[x + 1]] {
                if labels[y] == usize::MAX {
                    labels[y] = count;
                    stack.push(y);
                }
            }
        }
        count += 1;
    }
    Connectivity { component_count: count, labels }
}

/// A connected graph embedded in the closed hyper-rectangle `[0, l_1] x ... x [0, l_d]`.
///
/// Immutable once built. Node indices are dense and 0-based; coordinates
/// beyond `dim` are zero.
#[derive(Debug, Clone)]
pub struct SpatialNetwork {
    dim: usize,
    domain: Point,
    positions: Vec<Point>,
    edges: Vec<Edge>,
    adj_offsets: Vec<usize>,
    /// `(neighbor, edge index)` pairs, grouped by node.
    adj: Vec<(usize, usize)>,
    dirichlet_faces: Vec<Face>,
    dirichlet: Vec<bool>,
    mass: Vec<f64>,
}

/// Relative tolerance used to decide whether a node lies on a face of the domain.
pub const FACE_TOLERANCE: f64 = 1e-12;

impl SpatialNetwork {
    /// Validates and builds a network; a disconnected graph is rejected.
    pub fn new(
        dim: usize,
        domain: &[f64],
        positions: Vec<Point>,
        edges: Vec<EdgeSpec>,
        dirichlet_faces: Vec<Face>,
    ) -> Result<Self> {
        let net = Self::new_allow_disconnected(dim, domain, positions, edges, dirichlet_faces)?;
        let conn = net.check_connected();
        if !conn.is_connected() {
            return Err(Error::Disconnected { components: conn.component_count });
        }
        Ok(net)
    }

    /// Like [`SpatialNetwork::new`] but accepts a disconnected graph.
    pub fn new_allow_disconnected(
        dim: usize,
        domain: &[f64],
        positions: Vec<Point>,
        edges: Vec<EdgeSpec>,
        dirichlet_faces: Vec<Face>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidNetwork(format!("dimension {dim} not in 1..=3")));
        }
        if domain.len() != dim {
            return Err(Error::InvalidNetwork(format!(
                "domain has {} side lengths, expected {dim}",
                domain.len()
            )));
        }
        let mut dom = [0.0; 3];
        for (a, &l) in domain.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidNetwork(format!("side length {l} on axis {a} must be positive")));
            }
            dom[a] = l;
        }
        for (i, p) in positions.iter().enumerate() {
            for a in 0..3 {
                let ok = if a < dim {
                    let tol = FACE_TOLERANCE * dom[a];
                    p[a].is_finite() && p[a] >= -tol && p[a] <= dom[a] + tol
                } else {
                    p[a] == 0.0
                };
                if !ok {
                    return Err(Error::InvalidNetwork(format!("node {i} at {p:?} lies outside the domain")));
                }
            }
        }
        for f in &dirichlet_faces {
            if f.axis >= dim {
                return Err(Error::InvalidNetwork(format!("Dirichlet face {f} beyond dimension {dim}")));
            }
        }
        let n = positions.len();
        let mut seen = HashSet::with_capacity(edges.len());
        let mut out_edges = Vec::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            if e.a >= n || e.b >= n {
                return Err(Error::InvalidNetwork(format!("edge {k} references a missing node")));
            }
            if e.a == e.b {
                return Err(Error::InvalidNetwork(format!("edge {k} is a self-loop at node {}", e.a)));
            }
            if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
                return Err(Error::InvalidNetwork(format!("edge {k} duplicates ({}, {})", e.a, e.b)));
            }
            let length = distance(&positions[e.a], &positions[e.b]);
            if !(length > 0.0) {
                return Err(Error::InvalidNetwork(format!("edge {k} has zero length")));
            }
            if let Some(w) = e.weight {
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::InvalidNetwork(format!("edge {k} has non-positive weight {w}")));
                }
            }
            out_edges.push(Edge { a: e.a, b: e.b, length, fiber: e.fiber, weight: e.weight });
        }

        let mut adj_offsets = vec![0usize; n + 1];
        for e in &out_edges {
            adj_offsets[e.a + 1] += 1;
            adj_offsets[e.b + 1] += 1;
        }
        for i in 0..n {
            adj_offsets[i + 1] += adj_offsets[i];
        }
        let mut fill = adj_offsets.clone();
        let mut adj = vec![(0usize, 0usize); adj_offsets[n]];
        for (k, e) in out_edges.iter().enumerate() {
            adj[fill[e.a]] = (e.b, k);
            fill[e.a] += 1;
            adj[fill[e.b]] = (e.a, k);
            fill[e.b] += 1;
        }
        let mut mass = vec![0.0; n];
        for e in &out_edges {
            mass[e.a] += 0.5 * e.length;
            mass[e.b] += 0.5 * e.length;
        }
        let mut net = Self {
            dim,
            domain: dom,
            positions,
            edges: out_edges,
            adj_offsets,
            adj,
            dirichlet_faces: Vec::new(),
            dirichlet: Vec::new(),
            mass,
        };
        net.set_dirichlet_faces(dirichlet_faces);
        Ok(net)
    }

    fn set_dirichlet_faces(&mut self, mut faces: Vec<Face>) {
        faces.sort();
        faces.dedup();
        self.dirichlet = self.positions.iter().map(|p| faces.iter().any(|f| self.on_face(p, f))).collect();
        self.dirichlet_faces = faces;
    }

    fn on_face(&self, p: &Point, f: &Face) -> bool {
        let target = match f.side {
            FaceSide::Lower => 0.0,
            FaceSide::Upper => self.domain[f.axis],
        };
        (p[f.axis] - target).abs() <= FACE_TOLERANCE * self.domain[f.axis]
    }

    /// Same graph with a different Dirichlet boundary.
    pub fn with_dirichlet_faces(&self, faces: Vec<Face>) -> Result<Self> {
        if let Some(f) = faces.iter().find(|f| f.axis >= self.dim) {
            return Err(Error::InvalidNetwork(format!("Dirichlet face {f} beyond dimension {}", self.dim)));
        }
        let mut net = self.clone();
        net.set_dirichlet_faces(faces);
        Ok(net)
    }

    /// Same graph and geometry with per-edge weights replaced.
    pub fn with_edge_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::Shape(format!("{} weights for {} edges", weights.len(), self.edges.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidNetwork(format!("non-positive edge weight {w}")));
        }
        let mut net = self.clone();
        for (e, &w) in net.edges.iter_mut().zip(weights) {
            e.weight = Some(w);
        }
        Ok(net)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Side lengths `l_1..l_d`.
    pub fn domain(&self) -> &[f64] {
        &self.domain[..self.dim]
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &Point {
        &self.positions[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbor, edge index)` pairs of node `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_offsets[i]..self.adj_offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj_offsets[i + 1] - self.adj_offsets[i]
    }

    pub fn dirichlet_faces(&self) -> &[Face] {
        &self.dirichlet_faces
    }

    pub fn is_dirichlet(&self, i: usize) -> bool {
        self.dirichlet[i]
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn dirichlet_count(&self) -> usize {
        self.dirichlet.iter().filter(|&&d| d).count()
    }

    /// Diagonal of `M`: half the summed length of the incident edges.
    pub fn mass_diagonal(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    pub fn check_connected(&self) -> Connectivity {
        connected_components(self.node_count(), self.edges.iter().map(|e| (e.a, e.b)))
    }

    /// Node membership mask for a subdomain.
    pub fn subdomain_mask(&self, sub: &Subdomain) -> Vec<bool> {
        match sub {
            Subdomain::Box(b) => self.positions.iter().map(|p| b.contains(p, self.domain(), self.dim)).collect(),
            Subdomain::Nodes(nodes) => {
                let mut mask = vec![false; self.node_count()];
                for &i in nodes {
                    if i < mask.len() {
                        mask[i] = true;
                    }
                }
                mask
            }
        }
    }

    fn check_field(&self, field: &NodeField) -> Result<()> {
        if field.node_count() != self.node_count() {
            return Err(Error::Shape(format!(
                "field has {} nodes, network has {}",
                field.node_count(),
                self.node_count()
            )));
        }
        Ok(())
    }

    /// `|v|^2_{M, omega}`, summed over components. `None` means the whole domain.
    pub fn mass_quadratic(&self, field: &NodeField, sub: Option<&Subdomain>) -> Result<f64> {
        self.check_field(field)?;
        let mask = sub.map(|s| self.subdomain_mask(s));
        let mut total = 0.0;
        for c in 0..field.components() {
            let v = field.component(c);
            for x in 0..self.node_count() {
                if mask.as_ref().is_none_or(|m| m[x]) {
                    total += self.mass[x] * v[x] * v[x];
                }
            }
        }
        Ok(total)
    }

    /// `|v|^2_{L, omega}`, summed over components. Edges leaving the
    /// subdomain contribute their half from the inside endpoint.
    pub fn laplacian_quadratic(&self, field: &NodeField, sub: Option<&Subdomain>) -> Result<f64> {
        self.check_field(field)?;
        let mask = sub.map(|s| self.subdomain_mask(s));
        let mut total = 0.0;
        for c in 0..field.components() {
            let v = field.component(c);
            for x in 0..self.node_count() {
                if mask.as_ref().is_none_or(|m| m[x]) {
                    let mut acc = 0.0;
                    for &(y, k) in self.neighbors(x) {
                        let d = v[x] - v[y];
                        acc += d * d / self.edges[k].length;
                    }
                    total += 0.5 * acc;
                }
            }
        }
        Ok(total)
    }

    pub fn apply_mass(&self, field: &NodeField) -> Result<NodeField> {
        self.check_field(field)?;
        let mut out = field.clone();
        for c in 0..field.components() {
            for (o, m) in out.component_mut(c).iter_mut().zip(&self.mass) {
                *o *= m;
            }
        }
        Ok(out)
    }

    pub fn apply_laplacian(&self, field: &NodeField) -> Result<NodeField> {
        self.check_field(field)?;
        let mut out = NodeField::zeros(field.components(), self.node_count());
        for c in 0..field.components() {
            let v = field.component(c);
            let o = out.component_mut(c);
            for (x, ox) in o.iter_mut().enumerate() {
                let mut acc = 0.0;
                for &(y, k) in self.neighbors(x) {
                    acc += (v[x] - v[y]) / self.edges[k].length;
                }
                *ox = acc;
            }
        }
        Ok(out)
    }

    /// Assembled `L` on all nodes.
    pub fn laplacian_matrix(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(4 * self.edges.len());
        for e in &self.edges {
            let w = 1.0 / e.length;
            t.push((e.a, e.a, w));
            t.push((e.b, e.b, w));
            t.push((e.a, e.b, -w));
            t.push((e.b, e.a, -w));
        }
        CsrMatrix::from_triplets(self.node_count(), self.node_count(), t)
    }
}

pub fn distance(p: &Point, q: &Point) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    let dz = p[2] - q[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}
