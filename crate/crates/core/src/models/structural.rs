use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Point, SpatialNetwork};
use crate::sparse::CsrMatrix;

use super::{AssembledOperator, DofMap};

/// Which neighbour pairs `{y, z}` of a node carry a bending term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairPolicy {
    /// Every unordered pair of distinct neighbours.
    #[default]
    AllPairs,
    /// Only pairs whose two edges carry the same fiber id.
    SameFiber,
}

impl std::str::FromStr for PairPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-pairs" => Ok(Self::AllPairs),
            "same-fiber" => Ok(Self::SameFiber),
            _ => Err(Error::Config(format!("unknown pair policy '{s}'"))),
        }
    }
}

/// Wire radius and Young's modulus of a fiber material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuralParams {
    pub wire_radius: f64,
    pub youngs_modulus: f64,
    #[serde(default)]
    pub pair_policy: PairPolicy,
}

impl Default for StructuralParams {
    /// Steel wire, radius 2.5 mm.
    fn default() -> Self {
        Self { wire_radius: 2.5e-3, youngs_modulus: 210e9, pair_policy: PairPolicy::AllPairs }
    }
}

impl StructuralParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wire_radius > 0.0 && self.wire_radius.is_finite()) {
            return Err(Error::Config(format!("wire radius {} must be positive", self.wire_radius)));
        }
        if !(self.youngs_modulus > 0.0 && self.youngs_modulus.is_finite()) {
            return Err(Error::Config(format!("Young's modulus {} must be positive", self.youngs_modulus)));
        }
        Ok(())
    }

    /// Cross-section area `pi r^2`.
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.wire_radius * self.wire_radius
    }

    /// Tensile stiffness `gamma_1 = A E`.
    pub fn gamma_tensile(&self) -> f64 {
        self.area() * self.youngs_modulus
    }

    /// Second moment of area `pi r^4 / 4`.
    pub fn second_moment(&self) -> f64 {
        0.25 * std::f64::consts::PI * self.wire_radius.powi(4)
    }

    /// `gamma_xyz = E I (|x-y| + |x-z|)^-2`.
    pub fn gamma_bending(&self, lxy: f64, lxz: f64) -> f64 {
        self.youngs_modulus * self.second_moment() / (lxy + lxz).powi(2)
    }
}

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Bending directions for the unit edge directions `dy`, `dz` at a node:
/// `(eta1, eta2_y, eta2_z)`.
///
/// `eta1` is the normalised `dy x dz`. For (nearly) collinear edges it is
/// the standard basis vector least aligned with `dy` (ties go to the higher
/// axis, so planar networks get `e3`), orthogonalised against `dy`. The
/// second mode uses `eta2_w = d_w x eta1`.
pub fn bending_directions(dy: &Point, dz: &Point) -> (Point, Point, Point) {
    let c = cross(dy, dz);
    let norm = dot3(&c, &c).sqrt();
    let eta1 = if norm > 1e-8 {
        scale(&c, 1.0 / norm)
    } else {
        let mut best = 2;
        for a in [1, 0] {
            if dy[a].abs() < dy[best].abs() {
                best = a;
            }
        }
        let mut e = [0.0; 3];
        e[best] = 1.0;
        let p = dot3(&e, dy);
        let v = [e[0] - p * dy[0], e[1] - p * dy[1], e[2] - p * dy[2]];
        scale(&v, 1.0 / dot3(&v, &v).sqrt())
    };
    (eta1, cross(dy, &eta1), cross(dz, &eta1))
}

/// Node-level sparsity pattern expanded to `n` components per node, with
/// in-place accumulation of rank-one terms.
struct BlockAssembler {
    n: usize,
    nodes: usize,
    /// Sorted neighbour lists (including the node itself).
    offsets: Vec<usize>,
    pattern: Vec<usize>,
    indptr: Vec<usize>,
    data: Vec<f64>,
}

impl BlockAssembler {
    fn new(nodes: usize, n: usize, mut adjacency: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(nodes + 1);
        let mut pattern = Vec::new();
        offsets.push(0);
        for (x, adj) in adjacency.iter_mut().enumerate() {
            adj.push(x);
            adj.sort_unstable();
            adj.dedup();
            pattern.extend_from_slice(adj);
            offsets.push(pattern.len());
        }
        let mut indptr = Vec::with_capacity(n * nodes + 1);
        indptr.push(0);
        for _ in 0..n {
            for x in 0..nodes {
                let last = *indptr.last().unwrap();
                indptr.push(last + n * (offsets[x + 1] - offsets[x]));
            }
        }
        let data = vec![0.0; *indptr.last().unwrap()];
        Self { n, nodes, offsets, pattern, indptr, data }
    }

    fn slot(&self, x: usize, c: usize, y: usize, d: usize) -> usize {
        let adj = &self.pattern[self.offsets[x]..self.offsets[x + 1]];
        let k = adj.binary_search(&y).expect("entry outside the assembled pattern");
        self.indptr[c * self.nodes + x] + d * adj.len() + k
    }

    /// Adds `w a a^T` where `a` has coefficient `v[c]` at `(node, c)`.
    fn add_rank_one(&mut self, terms: &[(usize, [f64; 3])], w: f64) {
        for &(x, a) in terms {
            for c in 0..self.n {
                for &(y, b) in terms {
                    for d in 0..self.n {
                        let s = self.slot(x, c, y, d);
                        self.data[s] += w * (a[c] * b[d]);
                    }
                }
            }
        }
    }

    fn finish(self) -> CsrMatrix {
        let dim = self.n * self.nodes;
        let mut indices = Vec::with_capacity(self.data.len());
        for _ in 0..self.n {
            for x in 0..self.nodes {
                let adj = &self.pattern[self.offsets[x]..self.offsets[x + 1]];
                for d in 0..self.n {
                    indices.extend(adj.iter().map(|&y| d * self.nodes + y));
                }
            }
        }
        CsrMatrix::from_parts(dim, dim, self.indptr, indices, self.data).expect("assembled pattern is valid")
    }
}

fn unit(p: &Point, q: &Point, length: f64) -> Point {
    scale(&[q[0] - p[0], q[1] - p[1], q[2] - p[2]], 1.0 / length)
}

/// Bending pairs `(y, z)` around `x`, as `(y, edge xy, z, edge xz)`.
fn bending_pairs<'a>(
    network: &'a SpatialNetwork,
    policy: PairPolicy,
    x: usize,
) -> impl Iterator<Item = (usize, usize, usize, usize)> + 'a {
    let nbrs = network.neighbors(x);
    let edges = network.edges();
    nbrs.iter().enumerate().flat_map(move |(i, &(y, ey))| {
        nbrs[i + 1..].iter().filter_map(move |&(z, ez)| {
            let ok = match policy {
                PairPolicy::AllPairs => true,
                PairPolicy::SameFiber => edges[ey].fiber.is_some() && edges[ey].fiber == edges[ez].fiber,
            };
            ok.then_some((y, ey, z, ez))
        })
    })
}

fn add_tension(asm: &mut BlockAssembler, network: &SpatialNetwork, params: &StructuralParams) {
    let pos = network.positions();
    let g1 = params.gamma_tensile();
    for e in network.edges() {
        let d = unit(&pos[e.a], &pos[e.b], e.length);
        asm.add_rank_one(&[(e.a, scale(&d, -1.0)), (e.b, d)], g1 / e.length);
    }
}

/// Tension plus bending on `n` displacement components (`n` = 2 or 3).
///
/// `n = 2` is the three-component operator with the third component
/// dropped, i.e. only the in-plane coefficients are kept.
pub fn assemble_structural(network: &SpatialNetwork, params: &StructuralParams, n: usize) -> Result<AssembledOperator> {
    params.validate()?;
    if n != 2 && n != 3 {
        return Err(Error::Config(format!("structural problems need 2 or 3 components, got {n}")));
    }
    let nodes = network.node_count();
    let pos = network.positions();
    let edges = network.edges();

    let mut adjacency: Vec<Vec<usize>> = (0..nodes).map(|x| network.neighbors(x).iter().map(|e| e.0).collect()).collect();
    for x in 0..nodes {
        for (y, _, z, _) in bending_pairs(network, params.pair_policy, x) {
            adjacency[y].push(z);
            adjacency[z].push(y);
        }
    }
    let mut asm = BlockAssembler::new(nodes, n, adjacency);

    add_tension(&mut asm, network, params);
    for x in 0..nodes {
        for (y, ey, z, ez) in bending_pairs(network, params.pair_policy, x) {
            let (ly, lz) = (edges[ey].length, edges[ez].length);
            let dy = unit(&pos[x], &pos[y], ly);
            let dz = unit(&pos[x], &pos[z], lz);
            let (eta1, eta2y, eta2z) = bending_directions(&dy, &dz);
            let w = params.gamma_bending(ly, lz) * (ly + lz) / 2.0;
            for (ty, tz) in [(eta1, eta1), (eta2y, eta2z)] {
                let a = scale(&ty, 1.0 / ly);
                let b = scale(&tz, 1.0 / lz);
                let center = [-(a[0] + b[0]), -(a[1] + b[1]), -(a[2] + b[2])];
                asm.add_rank_one(&[(x, center), (y, a), (z, b)], w);
            }
        }
    }
    Ok(AssembledOperator::from_full(asm.finish(), DofMap::new(network, n), None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{EdgeSpec, Face, NodeField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn edge_net() -> SpatialNetwork {
        SpatialNetwork::new(
            3,
            &[1.0, 1.0, 1.0],
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            vec![EdgeSpec::new(0, 1)],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn params_derived_quantities() {
        let d = StructuralParams::default();
        let area = std::f64::consts::PI * 6.25e-6;
        assert!((d.gamma_tensile() - area * 210e9).abs() < 1e-6);
        let i = 0.25 * std::f64::consts::PI * 2.5e-3f64.powi(4);
        assert!((d.gamma_bending(1.0, 1.0) - 210e9 * i / 4.0).abs() < 1e-12);
    }

    #[test]
    fn axial_and_transverse_stretch() {
        let net = edge_net();
        let p = StructuralParams { wire_radius: 1.0, youngs_modulus: 1.0 / std::f64::consts::PI, ..Default::default() };
        let op = assemble_structural(&net, &p, 3).unwrap();
        // v(x) = 0, v(y) = e1
        let axial = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert!((op.full_matrix().quadratic_form(&axial) - 1.0).abs() < 1e-14);
        let transverse = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert_eq!(op.full_matrix().quadratic_form(&transverse), 0.0);
    }

    #[test]
    fn collinear_bending_example() {
        let net = SpatialNetwork::new(
            2,
            &[2.0, 1.0],
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
            vec![EdgeSpec::new(0, 1), EdgeSpec::new(1, 2)],
            vec![Face::lower(0), Face::upper(0)],
        )
        .unwrap();
        let p = StructuralParams::default();
        let op = assemble_structural(&net, &p, 3).unwrap();
        let mut v = NodeField::zeros(3, 3);
        v.component_mut(2)[1] = 1.0;
        let energy = op.full_matrix().quadratic_form(v.values());
        let expected = 4.0 * p.gamma_bending(1.0, 1.0);
        assert!((energy - expected).abs() <= 1e-12 * expected, "{energy} vs {expected}");
        let (eta1, _, _) = bending_directions(&[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
        assert_eq!(eta1, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn collinear_rule_for_axis_aligned_edges() {
        let (eta1, _, _) = bending_directions(&[0.0, 0.0, 1.0], &[0.0, 0.0, -1.0]);
        assert_eq!(eta1, [0.0, 1.0, 0.0]);
        let s = 0.5f64.sqrt();
        let (eta1, _, _) = bending_directions(&[s, s, 0.0], &[-s, -s, 0.0]);
        assert_eq!(eta1, [0.0, 0.0, 1.0]);
    }

    fn random_net(seed: u64, dim: usize) -> SpatialNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 30;
        let pts: Vec<Point> = (0..n)
            .map(|_| {
                let mut p = [0.0; 3];
                for a in p.iter_mut().take(dim) {
                    *a = rng.random_range(0.0..1.0);
                }
                p
            })
            .collect();
        let mut edges: Vec<EdgeSpec> = (1..n).map(|i| EdgeSpec::new(rng.random_range(0..i), i).with_fiber(i as u32 % 3)).collect();
        for _ in 0..15 {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b && !edges.iter().any(|e| (e.a, e.b) == (a, b) || (e.a, e.b) == (b, a)) {
                edges.push(EdgeSpec::new(a, b).with_fiber(a as u32 % 3));
            }
        }
        SpatialNetwork::new(dim, &vec![1.0; dim], pts, edges, Face::all(dim)).unwrap()
    }

    #[test]
    fn symmetric_and_translation_invariant() {
        for dim in [2, 3] {
            let net = random_net(11 + dim as u64, dim);
            let op = assemble_structural(&net, &StructuralParams::default(), 3).unwrap();
            assert!(op.full_matrix().is_symmetric());
            assert!(op.matrix().is_symmetric());
            let scale_k = op.full_matrix().diagonal().iter().cloned().fold(0.0, f64::max);
            for c in 0..3 {
                let t = NodeField::from_fn(3, net.node_count(), |_, k| if k == c { 1.0 } else { 0.0 });
                let e = op.full_matrix().quadratic_form(t.values());
                assert!(e.abs() <= 1e-12 * scale_k * net.node_count() as f64, "{e}");
            }
        }
    }

    #[test]
    fn tension_annihilates_rotations() {
        let net = random_net(5, 3);
        let p = StructuralParams { wire_radius: 1.0, youngs_modulus: 1.0 / std::f64::consts::PI, ..Default::default() };
        let n = net.node_count();
        let adjacency = (0..n).map(|x| net.neighbors(x).iter().map(|e| e.0).collect()).collect();
        let mut asm = BlockAssembler::new(n, 3, adjacency);
        add_tension(&mut asm, &net, &p);
        let kt = asm.finish();
        let omega = [0.3, -0.7, 0.2];
        let v = NodeField::from_fn(3, n, |x, c| cross(&omega, net.position(x))[c]);
        // per-edge functional (v(y) - v(x)) . d_xy
        let per_edge: f64 = net
            .edges()
            .iter()
            .map(|e| {
                let (a, b) = (net.position(e.a), net.position(e.b));
                let dv: f64 = (0..3).map(|c| (v.get(e.b, c) - v.get(e.a, c)) * (b[c] - a[c]) / e.length).sum();
                p.gamma_tensile() * dv * dv / e.length
            })
            .sum();
        assert!(per_edge <= 1e-20 * p.gamma_tensile(), "{per_edge}");
        // assembled form, relative to its rounding scale sum |K_ij v_i v_j|
        let vals = v.values();
        let scale: f64 = kt.triplets().map(|(i, j, k)| (k * vals[i] * vals[j]).abs()).sum();
        let e = kt.quadratic_form(vals);
        assert!(e.abs() <= 1e-13 * scale, "{e} vs {scale}");
        let stretch = NodeField::from_fn(3, n, |x, c| net.position(x)[c]);
        assert!(kt.quadratic_form(stretch.values()) > 1.0);
    }

    #[test]
    fn planar_operator_drops_third_component() {
        let net = random_net(7, 2);
        let p = StructuralParams::default();
        let k3 = assemble_structural(&net, &p, 3).unwrap();
        let k2 = assemble_structural(&net, &p, 2).unwrap();
        let n = net.node_count();
        assert_eq!(k2.full_matrix().nrows(), 2 * n);
        for i in 0..2 * n {
            for j in 0..2 * n {
                assert_eq!(k2.full_matrix().get(i, j), k3.full_matrix().get(i, j));
            }
        }
        assert_eq!(k2.matrix().nrows(), k2.dofs().free_dof_count());
    }

    #[test]
    fn same_fiber_policy_drops_cross_fiber_pairs() {
        let net = random_net(9, 2);
        let all = assemble_structural(&net, &StructuralParams::default(), 3).unwrap();
        let same = assemble_structural(
            &net,
            &StructuralParams { pair_policy: PairPolicy::SameFiber, ..Default::default() },
            3,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = (0..3 * net.node_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(same.full_matrix().quadratic_form(&v) <= all.full_matrix().quadratic_form(&v));
    }

    #[test]
    fn rejects_bad_input() {
        let net = edge_net();
        assert!(assemble_structural(&net, &StructuralParams::default(), 1).is_err());
        let bad = StructuralParams { wire_radius: -1.0, ..Default::default() };
        assert!(assemble_structural(&net, &bad, 3).is_err());
        assert_eq!("same-fiber".parse::<PairPolicy>().unwrap(), PairPolicy::SameFiber);
    }
}
