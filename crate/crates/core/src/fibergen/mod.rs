//! Seeded random fiber networks on the unit square and regular grid networks.
//!
//! Fibers are straight segments of length `r`. Each fiber `i` draws from its
//! own ChaCha8 stream (`seed`, stream `i`), so a fiber's geometry does not
//! depend on how many fibers were drawn before it.

mod geometry;

pub use geometry::{clip_to_unit_square, segment_intersection, Point2, SegmentIntersection};

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{connected_components, EdgeSpec, Face, SpatialNetwork};

/// Distribution of fiber midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Placement {
    /// Uniform on `[-r/2, 1 + r/2]^2`.
    Uniform,
    /// Bands parallel to the `x2`-axis: the first coordinate has density
    /// proportional to `1 + amplitude cos(2 pi x1 / period)`, the second is
    /// uniform.
    Bands { amplitude: f64, period: f64 },
}

/// Distribution of fiber angles in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Orientation {
    Uniform,
    /// `theta = mean + Z / (2 sqrt(concentration))` modulo `pi`: a wrapped
    /// normal on the doubled angle with variance `1 / concentration`.
    Biased { mean: f64, concentration: f64 },
}

/// The preset fiber network families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberKind {
    Uniform,
    OrientBias,
    PlaceBias,
}

impl std::str::FromStr for FiberKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "orient-bias" => Ok(Self::OrientBias),
            "place-bias" => Ok(Self::PlaceBias),
            _ => Err(Error::Config(format!("unknown fiber network kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberGenConfig {
    #[serde(default = "default_fiber_length")]
    pub fiber_length: f64,
    /// Target total (clipped) fiber length.
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default = "default_placement")]
    pub placement: Placement,
    #[serde(default = "default_orientation")]
    pub orientation: Orientation,
    /// Defaults to `fiber_length * 1e-4`.
    #[serde(default)]
    pub merge_tolerance: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to `100 * density / fiber_length + 1000`.
    #[serde(default)]
    pub max_fibers: Option<u64>,
}

fn default_fiber_length() -> f64 {
    0.05
}
fn default_density() -> f64 {
    1000.0
}
fn default_placement() -> Placement {
    Placement::Uniform
}
fn default_orientation() -> Orientation {
    Orientation::Uniform
}

impl Default for FiberGenConfig {
    fn default() -> Self {
        Self::preset(FiberKind::Uniform, 0)
    }
}

impl FiberGenConfig {
    pub fn preset(kind: FiberKind, seed: u64) -> Self {
        let (placement, orientation) = match kind {
            FiberKind::Uniform => (Placement::Uniform, Orientation::Uniform),
            FiberKind::OrientBias => (Placement::Uniform, Orientation::Biased { mean: 0.0, concentration: 1.0 }),
            FiberKind::PlaceBias => (Placement::Bands { amplitude: 0.3, period: 0.25 }, Orientation::Uniform),
        };
        Self {
            fiber_length: default_fiber_length(),
            density: default_density(),
            placement,
            orientation,
            merge_tolerance: None,
            seed,
            max_fibers: None,
        }
    }

    pub fn with_density(mut self, density: f64) -> Self {
        self.density = density;
        self
    }

    pub fn with_fiber_length(mut self, r: f64) -> Self {
        self.fiber_length = r;
        self
    }

    pub fn merge_tolerance(&self) -> f64 {
        self.merge_tolerance.unwrap_or(self.fiber_length * 1e-4)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.fiber_length;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Config(format!("fiber length {r} must be positive")));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::Config(format!("density {} must be positive", self.density)));
        }
        let tol = self.merge_tolerance();
        if !(tol > 0.0 && tol < r) {
            return Err(Error::Config(format!("merge tolerance {tol} must lie in (0, fiber length)")));
        }
        if let Placement::Bands { amplitude, period } = self.placement {
            if !(0.0..=1.0).contains(&amplitude) || !(period > 0.0 && period.is_finite()) {
                return Err(Error::Config("band placement needs amplitude in [0, 1] and period > 0".into()));
            }
        }
        if let Orientation::Biased { concentration, .. } = self.orientation {
            if !(concentration > 0.0) {
                return Err(Error::Config("orientation concentration must be positive".into()));
            }
        }
        Ok(())
    }

    fn fiber_cap(&self) -> u64 {
        self.max_fibers.unwrap_or((100.0 * self.density / self.fiber_length) as u64 + 1000)
    }
}

/// Counts describing one generation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationStats {
    pub fibers: usize,
    pub clipped_length: f64,
    pub intersections: usize,
    pub merged_nodes: usize,
    pub removed_nodes: usize,
}

/// Endpoints of fiber `index` before clipping.
pub fn sample_fiber(config: &FiberGenConfig, index: u64) -> (Point2, Point2) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index);
    let r = config.fiber_length;
    let uniform = |rng: &mut ChaCha8Rng| rng.random_range(-0.5 * r..=1.0 + 0.5 * r);
    let mid = match config.placement {
        Placement::Uniform => [uniform(&mut rng), uniform(&mut rng)],
        Placement::Bands { amplitude, period } => {
            // rejection sampling against the uniform envelope
            let x1 = loop {
                let x = uniform(&mut rng);
                let accept = (1.0 + amplitude * (std::f64::consts::TAU * x / period).cos()) / (1.0 + amplitude);
                if rng.random::<f64>() < accept {
                    break x;
                }
            };
            [x1, uniform(&mut rng)]
        }
    };
    let theta = match config.orientation {
        Orientation::Uniform => rng.random_range(0.0..std::f64::consts::PI),
        Orientation::Biased { mean, concentration } => {
            let z: f64 = rng.sample(StandardNormal);
            (mean + z / (2.0 * concentration.sqrt())).rem_euclid(std::f64::consts::PI)
        }
    };
    let (s, c) = theta.sin_cos();
    let h = 0.5 * r;
    ([mid[0] - h * c, mid[1] - h * s], [mid[0] + h * c, mid[1] + h * s])
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if the sets were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] || (self.size[a] == self.size[b] && b < a) {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// Generates a connected fiber network on the unit square with every face
/// marked Dirichlet.
pub fn generate_fiber_network(config: &FiberGenConfig) -> Result<SpatialNetwork> {
    generate_fiber_network_with_stats(config).map(|(n, _)| n)
}

pub fn generate_fiber_network_with_stats(config: &FiberGenConfig) -> Result<(SpatialNetwork, GenerationStats)> {
    config.validate()?;
    let mut stats = GenerationStats::default();

    // 1-2: sample and clip until the clipped length reaches the target
    let mut fibers: Vec<(Point2, Point2)> = Vec::new();
    let cap = config.fiber_cap();
    let mut index = 0u64;
    while stats.clipped_length < config.density {
        if index >= cap {
            return Err(Error::Generation(format!(
                "density {} not reached after {cap} fibers (length {})",
                config.density, stats.clipped_length
            )));
        }
        let (a, b) = sample_fiber(config, index);
        index += 1;
        if let Some((c0, c1)) = clip_to_unit_square(a, b) {
            stats.clipped_length += ((c1[0] - c0[0]).powi(2) + (c1[1] - c0[1]).powi(2)).sqrt();
            fibers.push((c0, c1));
        }
    }
    stats.fibers = fibers.len();
    log::debug!("sampled {} fibers ({} draws)", fibers.len(), index);

    let net = network_from_segments(&fibers, config.fiber_length, config.merge_tolerance(), &mut stats)?;
    Ok((net, stats))
}

/// Steps 3-6 of the pipeline for already clipped segments: node at every
/// crossing, split, merge nodes closer than `tol`, keep the largest
/// component. `bin` is the binning size for the crossing search.
pub fn network_from_segments(
    fibers: &[(Point2, Point2)],
    bin: f64,
    tol: f64,
    stats: &mut GenerationStats,
) -> Result<SpatialNetwork> {
    // 3: intersections
    let crossings = find_intersections(fibers, bin);
    stats.intersections = crossings.len();

    // 4: nodes and edges split along each fiber
    let mut positions: Vec<Point2> = Vec::with_capacity(2 * fibers.len() + crossings.len());
    let mut along: Vec<Vec<(f64, usize)>> = Vec::with_capacity(fibers.len());
    for (a, b) in fibers {
        let i = positions.len();
        positions.push(*a);
        positions.push(*b);
        along.push(vec![(0.0, i), (1.0, i + 1)]);
    }
    for &(i, j, at, s, t) in &crossings {
        let node = positions.len();
        positions.push(at);
        along[i].push((s, node));
        along[j].push((t, node));
    }
    let mut edges: Vec<(usize, usize, u32)> = Vec::new();
    for (f, list) in along.iter_mut().enumerate() {
        list.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for w in list.windows(2) {
            edges.push((w[0].1, w[1].1, f as u32));
        }
    }

    // 5: merge close nodes
    let (positions, edges, merged) = merge_close_nodes(positions, edges, tol);
    stats.merged_nodes = merged;

    // 6: largest connected component
    let conn = connected_components(positions.len(), edges.iter().map(|e| (e.0, e.1)));
    let sizes = conn.sizes();
    let best = (0..sizes.len()).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap_or(0);
    let mut new_index = vec![usize::MAX; positions.len()];
    let mut kept = Vec::new();
    for (x, p) in positions.iter().enumerate() {
        if conn.labels[x] == best {
            new_index[x] = kept.len();
            kept.push([p[0], p[1], 0.0]);
        }
    }
    stats.removed_nodes = positions.len() - kept.len();
    let specs: Vec<EdgeSpec> = edges
        .iter()
        .filter(|e| new_index[e.0] != usize::MAX)
        .map(|e| EdgeSpec::new(new_index[e.0], new_index[e.1]).with_fiber(e.2))
        .collect();
    if specs.is_empty() {
        return Err(Error::Generation("no fiber intersections; the network has no edges".into()));
    }
    SpatialNetwork::new(2, &[1.0, 1.0], kept, specs, Face::all(2))
}

type Crossing = (usize, usize, Point2, f64, f64);

/// All proper or touching intersections between distinct fibers, sorted by
/// fiber pair. Collinear overlaps produce no node.
fn find_intersections(fibers: &[(Point2, Point2)], bin: f64) -> Vec<Crossing> {
    let nb = ((1.0 / bin).ceil() as usize).max(1);
    let cell = |v: f64| ((v * nb as f64).floor().max(0.0) as usize).min(nb - 1);
    let bbox = |f: &(Point2, Point2)| {
        (f.0[0].min(f.1[0]), f.0[1].min(f.1[1]), f.0[0].max(f.1[0]), f.0[1].max(f.1[1]))
    };
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); nb * nb];
    for (i, f) in fibers.iter().enumerate() {
        let (x0, y0, x1, y1) = bbox(f);
        for by in cell(y0)..=cell(y1) {
            for bx in cell(x0)..=cell(x1) {
                bins[by * nb + bx].push(i);
            }
        }
    }
    let mut out = Vec::new();
    for by in 0..nb {
        for bx in 0..nb {
            let list = &bins[by * nb + bx];
            for (k, &i) in list.iter().enumerate() {
                let bi = bbox(&fibers[i]);
                for &j in &list[k + 1..] {
                    let bj = bbox(&fibers[j]);
                    let lo_x = bi.0.max(bj.0);
                    let lo_y = bi.1.max(bj.1);
                    if lo_x > bi.2.min(bj.2) || lo_y > bi.3.min(bj.3) {
                        continue;
                    }
                    // test each pair once: in the bin holding the low corner of the overlap
                    if cell(lo_x) != bx || cell(lo_y) != by {
                        continue;
                    }
                    let (a, b) = (fibers[i], fibers[j]);
                    if let SegmentIntersection::Point { at, s, t } = segment_intersection(a.0, a.1, b.0, b.1) {
                        out.push((i, j, at, s, t));
                    }
                }
            }
        }
    }
    out.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    out
}

/// Repeatedly merges nodes closer than `tol` into their cluster centroid
/// until no close pairs remain; self-loops and repeated edges are dropped.
fn merge_close_nodes(
    mut positions: Vec<Point2>,
    mut edges: Vec<(usize, usize, u32)>,
    tol: f64,
) -> (Vec<Point2>, Vec<(usize, usize, u32)>, usize) {
    let mut merged_total = 0;
    loop {
        let n = positions.len();
        let mut uf = UnionFind::new(n);
        let key = |p: &Point2| ((p[0] / tol).floor() as i64, (p[1] / tol).floor() as i64);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in positions.iter().enumerate() {
            grid.entry(key(p)).or_default().push(i);
        }
        let mut any = false;
        for (i, p) in positions.iter().enumerate() {
            let (kx, ky) = key(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = grid.get(&(kx + dx, ky + dy)) {
                        for &j in list {
                            if j > i {
                                let q = positions[j];
                                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                                if d2 < tol * tol && uf.union(i, j) {
                                    any = true;
                                }
                            }
                        }
                    }
                }
            }
        }
        if !any {
            break;
        }
        // new node per root, numbered by first member
        let mut root_index = vec![usize::MAX; n];
        let mut new_pos: Vec<Point2> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let mut map = vec![0usize; n];
        for (i, p) in positions.iter().enumerate() {
            let r = uf.find(i);
            if root_index[r] == usize::MAX {
                root_index[r] = new_pos.len();
                new_pos.push([0.0, 0.0]);
                counts.push(0);
            }
            let k = root_index[r];
            map[i] = k;
            new_pos[k][0] += p[0];
            new_pos[k][1] += p[1];
            counts[k] += 1;
        }
        for (p, c) in new_pos.iter_mut().zip(&counts) {
            p[0] = (p[0] / *c as f64).clamp(0.0, 1.0);
            p[1] = (p[1] / *c as f64).clamp(0.0, 1.0);
        }
        merged_total += n - new_pos.len();
        positions = new_pos;
        for e in edges.iter_mut() {
            e.0 = map[e.0];
            e.1 = map[e.1];
        }
    }
    let mut seen = std::collections::HashSet::with_capacity(edges.len());
    edges.retain(|e| e.0 != e.1 && seen.insert((e.0.min(e.1), e.0.max(e.1))));
    (positions, edges, merged_total)
}

/// Regular lattice with `points_per_side` nodes per axis on the unit square,
/// edge length `1 / (points_per_side - 1)`, every face Dirichlet.
pub fn generate_grid_network(points_per_side: usize) -> Result<SpatialNetwork> {
    let p = points_per_side;
    if p < 2 {
        return Err(Error::Config("a grid network needs at least 2 points per side".into()));
    }
    let n = (p - 1) as f64;
    let mut positions = Vec::with_capacity(p * p);
    for j in 0..p {
        for i in 0..p {
            positions.push([i as f64 / n, j as f64 / n, 0.0]);
        }
    }
    let mut edges = Vec::with_capacity(2 * p * (p - 1));
    for j in 0..p {
        for i in 0..p - 1 {
            edges.push(EdgeSpec::new(j * p + i, j * p + i + 1));
        }
    }
    for j in 0..p - 1 {
        for i in 0..p {
            edges.push(EdgeSpec::new(j * p + i, (j + 1) * p + i));
        }
    }
    SpatialNetwork::new(2, &[1.0, 1.0], positions, edges, Face::all(2))
}

/// Per-edge conductivities drawn uniformly from `[lo, hi]`.
pub fn random_conductivities(network: &SpatialNetwork, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..network.edge_count()).map(|_| rng.random_range(lo..=hi)).collect()
}

/// Range of `r_w / |x - y|` over all edges, for a given wire radius.
pub fn wire_ratio_range(network: &SpatialNetwork, wire_radius: f64) -> (f64, f64) {
    network.edges().iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), e| {
        let r = wire_radius / e.length;
        (lo.min(r), hi.max(r))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: FiberKind, seed: u64) -> FiberGenConfig {
        FiberGenConfig::preset(kind, seed).with_density(20.0)
    }

    #[test]
    fn grid_counts() {
        let g = generate_grid_network(3).unwrap();
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.edge_count(), 12);
        assert!(g.edges().iter().all(|e| e.length == 0.5));
        assert!((g.total_length() - 6.0).abs() < 1e-12);
        assert!(generate_grid_network(1).is_err());
    }

    #[test]
    fn two_crossing_fibers() {
        let fibers = vec![([0.1, 0.1], [0.3, 0.3]), ([0.1, 0.3], [0.3, 0.1])];
        let c = find_intersections(&fibers, 0.05);
        assert_eq!(c.len(), 1);
        assert!((c[0].2[0] - 0.2).abs() < 1e-15 && (c[0].2[1] - 0.2).abs() < 1e-15);
        let mut stats = GenerationStats::default();
        let net = network_from_segments(&fibers, 0.05, 1e-5, &mut stats).unwrap();
        assert_eq!((net.node_count(), net.edge_count()), (5, 4));
        assert!(net.check_connected().is_connected());
    }

    #[test]
    fn intersections_match_brute_force() {
        let cfg = small(FiberKind::Uniform, 4);
        let fibers: Vec<_> = (0..300).filter_map(|i| {
            let (a, b) = sample_fiber(&cfg, i);
            clip_to_unit_square(a, b)
        }).collect();
        let fast = find_intersections(&fibers, cfg.fiber_length);
        let mut slow = Vec::new();
        for i in 0..fibers.len() {
            for j in i + 1..fibers.len() {
                if let SegmentIntersection::Point { .. } =
                    segment_intersection(fibers[i].0, fibers[i].1, fibers[j].0, fibers[j].1)
                {
                    slow.push((i, j));
                }
            }
        }
        let fast: Vec<_> = fast.iter().map(|c| (c.0, c.1)).collect();
        assert_eq!(fast, slow);
    }

    #[test]
    fn generated_network_properties() {
        for kind in [FiberKind::Uniform, FiberKind::OrientBias, FiberKind::PlaceBias] {
            let cfg = small(kind, 7);
            let (net, stats) = generate_fiber_network_with_stats(&cfg).unwrap();
            assert!(stats.clipped_length >= 20.0);
            assert!(net.check_connected().is_connected());
            for p in net.positions() {
                assert!((0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]));
            }
            assert!(net.edges().iter().all(|e| e.length <= cfg.fiber_length * (1.0 + 1e-12)));
            assert!(net.edges().iter().all(|e| e.fiber.is_some()));
            let tol = cfg.merge_tolerance();
            let pos = net.positions();
            let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
            for (i, p) in pos.iter().enumerate() {
                grid.entry(((p[0] / tol).floor() as i64, (p[1] / tol).floor() as i64)).or_default().push(i);
            }
            for (i, p) in pos.iter().enumerate() {
                let k = ((p[0] / tol).floor() as i64, (p[1] / tol).floor() as i64);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for &j in grid.get(&(k.0 + dx, k.1 + dy)).map(Vec::as_slice).unwrap_or(&[]) {
                            if j != i {
                                let d = ((p[0] - pos[j][0]).powi(2) + (p[1] - pos[j][1]).powi(2)).sqrt();
                                assert!(d >= tol, "nodes {i} and {j} at distance {d}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_fiber_network(&small(FiberKind::Uniform, 1)).unwrap();
        let b = generate_fiber_network(&small(FiberKind::Uniform, 1)).unwrap();
        let c = generate_fiber_network(&small(FiberKind::Uniform, 2)).unwrap();
        assert_eq!(a.positions(), b.positions());
        assert_eq!(a.edges(), b.edges());
        assert_ne!(a.positions(), c.positions());
    }

    #[test]
    fn fiber_streams_are_independent_of_order() {
        let cfg = small(FiberKind::PlaceBias, 3);
        assert_eq!(sample_fiber(&cfg, 17), sample_fiber(&cfg, 17));
        assert_ne!(sample_fiber(&cfg, 17), sample_fiber(&cfg, 18));
    }

    #[test]
    fn orientation_bias_concentrates_angles() {
        let cfg = FiberGenConfig::preset(FiberKind::OrientBias, 5);
        let mut aligned = 0;
        for i in 0..2000 {
            let (a, b) = sample_fiber(&cfg, i);
            let angle = (b[1] - a[1]).atan2(b[0] - a[0]).rem_euclid(std::f64::consts::PI);
            let dev = angle.min(std::f64::consts::PI - angle);
            if dev < std::f64::consts::FRAC_PI_4 {
                aligned += 1;
            }
        }
        // P(|Z| / 2 < pi / 4) is about 0.884; uniform would give 0.5
        assert!(aligned > 1700 && aligned < 1850, "{aligned}");
    }

    #[test]
    fn placement_bias_forms_bands() {
        let cfg = FiberGenConfig::preset(FiberKind::PlaceBias, 5);
        // midpoints within 1/16 of a band centre x1 = k/4
        let near = (0..4000)
            .filter(|&i| {
                let (a, b) = sample_fiber(&cfg, i);
                let x = 0.5 * (a[0] + b[0]);
                (x * 4.0 - (x * 4.0).round()).abs() < 0.25
            })
            .count();
        // share (1 + 0.3 * 2 / pi) / 2 = 0.595 of 4000, against 0.5 for uniform placement
        assert!((2250..2500).contains(&near), "{near}");
    }

    #[test]
    fn unreachable_density_is_an_error() {
        let mut cfg = small(FiberKind::Uniform, 1);
        cfg.max_fibers = Some(10);
        assert!(matches!(generate_fiber_network(&cfg), Err(Error::Generation(_))));
        cfg.merge_tolerance = Some(1.0);
        assert!(matches!(generate_fiber_network(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1));
        assert!(uf.union(3, 4));
        assert!(!uf.union(1, 0));
        assert_eq!(uf.find(1), uf.find(0));
        assert_ne!(uf.find(0), uf.find(3));
    }

    #[test]
    fn merging_collapses_near_duplicates() {
        let pos = vec![[0.5, 0.5], [0.5 + 1e-7, 0.5], [0.7, 0.5]];
        let edges = vec![(0, 2, 0), (1, 2, 1), (0, 1, 2)];
        let (p, e, merged) = merge_close_nodes(pos, edges, 1e-5);
        assert_eq!(merged, 1);
        assert_eq!(p.len(), 2);
        assert_eq!(e, vec![(0, 1, 0)]);
    }
}
