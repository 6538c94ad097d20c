use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::fibergen::UnionFind;
use crate::network::{BoxRegion, SpatialNetwork};
use crate::sparse::CsrMatrix;

/// A connected subgraph holding every edge that touches a box, with nodes
/// restricted to the box enlarged by `R0`.
#[derive(Debug, Clone)]
pub struct ConnectivitySubgraph {
    /// Global node ids, ascending.
    pub nodes: Vec<usize>,
    /// Global edge ids, ascending.
    pub edges: Vec<usize>,
    /// `true` for edges with an endpoint in the box, `false` for edges the
    /// search added to connect them.
    pub mandatory: Vec<bool>,
}

impl ConnectivitySubgraph {
    pub fn added_edge_count(&self) -> usize {
        self.mandatory.iter().filter(|m| !**m).count()
    }

    fn local_index(&self, network: &SpatialNetwork) -> Vec<usize> {
        let mut local = vec![usize::MAX; network.node_count()];
        for (i, &x) in self.nodes.iter().enumerate() {
            local[x] = i;
        }
        local
    }

    /// Lumped mass of the subgraph's own edges.
    pub fn mass(&self, network: &SpatialNetwork) -> Vec<f64> {
        let local = self.local_index(network);
        let mut m = vec![0.0; self.nodes.len()];
        for &k in &self.edges {
            let e = &network.edges()[k];
            m[local[e.a]] += 0.5 * e.length;
            m[local[e.b]] += 0.5 * e.length;
        }
        m
    }

    /// Graph Laplacian of the subgraph, in local numbering.
    pub fn laplacian(&self, network: &SpatialNetwork) -> CsrMatrix {
        let local = self.local_index(network);
        let mut t = Vec::with_capacity(4 * self.edges.len());
        for &k in &self.edges {
            let e = &network.edges()[k];
            let (a, b) = (local[e.a], local[e.b]);
            let w = 1.0 / e.length;
            t.push((a, a, w));
            t.push((b, b, w));
            t.push((a, b, -w));
            t.push((b, a, -w));
        }
        CsrMatrix::from_triplets(self.nodes.len(), self.nodes.len(), t)
    }
}

/// Builds the subgraph for the nodes `inner` (the network nodes lying in
/// `region`).
///
/// Mandatory edges are those with an endpoint in `inner`; their other
/// endpoints must lie in the closed box enlarged by `r0`. While the
/// mandatory edges form more than one component, a breadth-first search
/// from the component holding the lowest node id, through nodes of the
/// enlarged box, adds the edges of a shortest path to another component.
/// `candidates` must contain every node of the enlarged box (extra nodes
/// are filtered out).
pub fn build_connectivity_subgraph(
    network: &SpatialNetwork,
    region: &BoxRegion,
    r0: f64,
    inner: &[usize],
    candidates: &[usize],
) -> Result<ConnectivitySubgraph> {
    let dim = network.dim();
    let outer = region.expanded(r0);
    // relative slack so that edges of length exactly r0 are kept
    let slack = outer.expanded(1e-12 * outer.half_width);
    // local numbering of the enlarged box
    let mut allowed: Vec<usize> =
        candidates.iter().copied().filter(|&x| slack.contains_closed(network.position(x), dim)).collect();
    allowed.sort_unstable();
    allowed.dedup();
    let local: HashMap<usize, usize> = allowed.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let n = allowed.len();
    let mut is_inner = vec![false; n];
    for x in inner {
        match local.get(x) {
            Some(&i) => is_inner[i] = true,
            None => return Err(Error::Shape(format!("inner node {x} is not among the candidates"))),
        }
    }
    let mut edge_set: Vec<usize> = Vec::new();
    for &x in inner {
        for &(y, k) in network.neighbors(x) {
            let Some(&ly) = local.get(&y) else {
                return Err(Error::AssumptionViolation(format!(
                    "edge {k} leaves the box enlarged by R0 = {r0}; R0 is smaller than the local edge length"
                )));
            };
            if !is_inner[ly] || x < y {
                edge_set.push(k);
            }
        }
    }
    edge_set.sort_unstable();
    edge_set.dedup();
    if edge_set.is_empty() {
        return Err(Error::AssumptionViolation(format!(
            "box at {:?} (half-width {}) contains no network edges",
            &region.center[..dim],
            region.half_width
        )));
    }

    let mut uf = UnionFind::new(n);
    let mut in_graph = vec![false; n];
    for &k in &edge_set {
        let e = &network.edges()[k];
        let (a, b) = (local[&e.a], local[&e.b]);
        uf.union(a, b);
        in_graph[a] = true;
        in_graph[b] = true;
    }
    let mut added: Vec<usize> = Vec::new();
    loop {
        let first = (0..n).find(|&i| in_graph[i]).expect("nonempty edge set");
        let root = uf.find(first);
        if (0..n).filter(|&i| in_graph[i]).all(|i| uf.find(i) == root) {
            break;
        }
        // breadth-first search from the root component
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for i in 0..n {
            if in_graph[i] && uf.find(i) == root {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        let mut target = None;
        'bfs: while let Some(i) = queue.pop_front() {
            for &(y, k) in network.neighbors(allowed[i]) {
                let Some(&j) = local.get(&y) else { continue };
                if seen[j] {
                    continue;
                }
                seen[j] = true;
                parent[j] = Some((i, k));
                if in_graph[j] && uf.find(j) != root {
                    target = Some(j);
                    break 'bfs;
                }
                queue.push_back(j);
            }
        }
        let Some(mut j) = target else {
            return Err(Error::AssumptionViolation(format!(
                "edges touching the box at {:?} (half-width {}) cannot be connected inside the box enlarged by R0 = {r0}",
                &region.center[..dim],
                region.half_width
            )));
        };
        while let Some((i, k)) = parent[j] {
            added.push(k);
            uf.union(i, j);
            in_graph[i] = true;
            j = i;
        }
    }
    let nodes: Vec<usize> = (0..n).filter(|&i| in_graph[i]).map(|i| allowed[i]).collect();
    let mut all: Vec<(usize, bool)> =
        edge_set.iter().map(|&k| (k, true)).chain(added.iter().map(|&k| (k, false))).collect();
    all.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    all.dedup_by_key(|e| e.0);
    Ok(ConnectivitySubgraph {
        nodes,
        edges: all.iter().map(|e| e.0).collect(),
        mandatory: all.iter().map(|e| e.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibergen::generate_grid_network;
    use crate::network::{EdgeSpec, Face};

    fn all_nodes(net: &SpatialNetwork) -> Vec<usize> {
        (0..net.node_count()).collect()
    }

    fn inside(net: &SpatialNetwork, b: &BoxRegion) -> Vec<usize> {
        (0..net.node_count()).filter(|&x| b.contains(net.position(x), net.domain(), net.dim())).collect()
    }

    #[test]
    fn grid_box_needs_no_extra_edges() {
        let net = generate_grid_network(9).unwrap();
        let b = BoxRegion::new([0.5, 0.5, 0.0], 0.25);
        let inner = inside(&net, &b);
        let g = build_connectivity_subgraph(&net, &b, net.max_edge_length(), &inner, &all_nodes(&net)).unwrap();
        assert_eq!(g.added_edge_count(), 0);
        // 4x4 inner nodes; every edge touching them
        assert_eq!(inner.len(), 16);
        let expected = net.edges().iter().filter(|e| inner.contains(&e.a) || inner.contains(&e.b)).count();
        assert_eq!(g.edges.len(), expected);
        assert!(crate::network::connected_components(
            g.nodes.len(),
            g.edges.iter().map(|&k| {
                let e = &net.edges()[k];
                (g.nodes.binary_search(&e.a).unwrap(), g.nodes.binary_search(&e.b).unwrap())
            })
        )
        .is_connected());
    }

    /// Two vertical fibers through the box, linked by a bent fiber above it.
    fn three_fibers() -> SpatialNetwork {
        let pos = vec![
            [0.4, 0.3, 0.0],
            [0.4, 0.5, 0.0],
            [0.4, 0.62, 0.0],
            [0.6, 0.3, 0.0],
            [0.6, 0.5, 0.0],
            [0.6, 0.62, 0.0],
            [0.5, 0.7, 0.0],
        ];
        let edges = vec![
            EdgeSpec::new(0, 1),
            EdgeSpec::new(1, 2),
            EdgeSpec::new(3, 4),
            EdgeSpec::new(4, 5),
            EdgeSpec::new(2, 6),
            EdgeSpec::new(6, 5),
        ];
        SpatialNetwork::new(2, &[1.0, 1.0], pos, edges, vec![Face::lower(0)]).unwrap()
    }

    #[test]
    fn search_adds_linking_edges() {
        let net = three_fibers();
        let b = BoxRegion::new([0.5, 0.5, 0.0], 0.11);
        let inner = inside(&net, &b);
        assert_eq!(inner, vec![1, 4]);
        let g = build_connectivity_subgraph(&net, &b, 0.2, &inner, &all_nodes(&net)).unwrap();
        assert_eq!(g.added_edge_count(), 2);
        assert_eq!(g.edges, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(g.nodes.len(), 7);
    }

    #[test]
    fn unreachable_link_is_a_violation() {
        let net = three_fibers();
        let b = BoxRegion::new([0.5, 0.5, 0.0], 0.11);
        let inner = inside(&net, &b);
        // enlarged box reaches the fiber ends at 0.62 but not the link at 0.7
        match build_connectivity_subgraph(&net, &b, 0.05, &inner, &all_nodes(&net)) {
            Err(Error::AssumptionViolation(_)) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn disconnected_network_is_a_violation() {
        let pos = vec![[0.1, 0.1, 0.0], [0.2, 0.1, 0.0], [0.8, 0.8, 0.0], [0.9, 0.8, 0.0]];
        let net = SpatialNetwork::new_allow_disconnected(
            2,
            &[1.0, 1.0],
            pos,
            vec![EdgeSpec::new(0, 1), EdgeSpec::new(2, 3)],
            vec![],
        )
        .unwrap();
        let b = BoxRegion::new([0.5, 0.5, 0.0], 0.5);
        let inner = inside(&net, &b);
        assert!(build_connectivity_subgraph(&net, &b, 0.1, &inner, &all_nodes(&net))
            .unwrap_err()
            .is_assumption_violation());
    }

    #[test]
    fn subgraph_operators() {
        let net = three_fibers();
        let b = BoxRegion::new([0.5, 0.5, 0.0], 0.11);
        let inner = inside(&net, &b);
        let g = build_connectivity_subgraph(&net, &b, 0.2, &inner, &all_nodes(&net)).unwrap();
        let m = g.mass(&net);
        assert!((m.iter().sum::<f64>() - net.total_length()).abs() < 1e-14);
        let l = g.laplacian(&net);
        assert!(l.is_symmetric());
        assert!(l.matvec(&vec![1.0; g.nodes.len()]).iter().all(|x| x.abs() < 1e-12));
    }
}
