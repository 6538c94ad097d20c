#![allow(dead_code)]

use netschwarz::fibergen::{generate_fiber_network, FiberGenConfig, FiberKind};
use netschwarz::mesh::BoxMesh;
use netschwarz::network::{EdgeSpec, Face, SpatialNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small planar fiber network with between `max_nodes / 3` and
/// `max_nodes` nodes, some Dirichlet nodes and no empty element at `H = 1/2`.
pub fn small_fibers(kind: FiberKind, seed: u64, max_nodes: usize) -> SpatialNetwork {
    for attempt in 0..50u64 {
        let mut density = 40.0;
        while density > 4.0 {
            let cfg = FiberGenConfig::preset(kind, seed * 1000 + attempt).with_fiber_length(0.4).with_density(density);
            if let Ok(net) = generate_fiber_network(&cfg) {
                let n = net.node_count();
                if n <= max_nodes {
                    let covered = BoxMesh::new(&net, 0.5).is_ok_and(|m| m.summary().empty_elements().is_empty());
                    if 3 * n >= max_nodes && net.dirichlet_count() > 0 && covered {
                        return net;
                    }
                    break;
                }
            }
            density *= 0.95;
        }
    }
    panic!("no small network for seed {seed}");
}

/// Random connected 3D network: a random spanning tree plus extra edges.
pub fn random_3d(seed: u64, nodes: usize, extra: usize) -> SpatialNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<[f64; 3]> =
        (0..nodes).map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
    let mut edges: Vec<EdgeSpec> = (1..nodes).map(|i| EdgeSpec::new(rng.random_range(0..i), i)).collect();
    let mut seen: std::collections::HashSet<(usize, usize)> = edges.iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect();
    while edges.len() < nodes - 1 + extra {
        let (a, b) = (rng.random_range(0..nodes), rng.random_range(0..nodes));
        if a != b && seen.insert((a.min(b), a.max(b))) {
            edges.push(EdgeSpec::new(a, b));
        }
    }
    SpatialNetwork::new(3, &[1.0, 1.0, 1.0], positions, edges, vec![]).unwrap()
}

/// Uniform random vector in `[-1, 1]^n`.
pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Same geometry and Dirichlet faces, edges without fiber ids.
pub fn strip_fiber_ids(net: &SpatialNetwork) -> SpatialNetwork {
    let edges = net.edges().iter().map(|e| EdgeSpec::new(e.a, e.b)).collect();
    SpatialNetwork::new(net.dim(), net.domain(), net.positions().to_vec(), edges, net.dirichlet_faces().to_vec()).unwrap()
}

pub fn all_faces(dim: usize) -> Vec<Face> {
    Face::all(dim)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
