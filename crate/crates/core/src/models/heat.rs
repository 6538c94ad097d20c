use crate::error::{Error, Result};
use crate::network::SpatialNetwork;
use crate::sparse::CsrMatrix;

use super::{AssembledOperator, DofMap};

/// Edge conductivities `gamma_xy`, indexed like the network's edges.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatParams {
    conductivity: Vec<f64>,
}

impl HeatParams {
    pub fn new(network: &SpatialNetwork, conductivity: Vec<f64>) -> Result<Self> {
        if conductivity.len() != network.edge_count() {
            return Err(Error::Shape(format!(
                "{} conductivities for {} edges",
                conductivity.len(),
                network.edge_count()
            )));
        }
        if let Some(g) = conductivity.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::Config(format!("conductivity {g} must be positive")));
        }
        Ok(Self { conductivity })
    }

    pub fn uniform(network: &SpatialNetwork, gamma: f64) -> Self {
        Self { conductivity: vec![gamma; network.edge_count()] }
    }

    /// Conductivities taken from the edge weights (1 where an edge has none).
    pub fn from_edge_weights(network: &SpatialNetwork) -> Self {
        Self { conductivity: network.edges().iter().map(|e| e.weight.unwrap_or(1.0)).collect() }
    }

    pub fn conductivity(&self) -> &[f64] {
        &self.conductivity
    }

    pub fn alpha(&self) -> f64 {
        self.conductivity.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn beta(&self) -> f64 {
        self.conductivity.iter().copied().fold(0.0, f64::max)
    }
}

/// `(K v, v) = sum_edges gamma_xy (v(x) - v(y))^2 / |x - y|`.
pub fn assemble_heat(network: &SpatialNetwork, params: &HeatParams) -> Result<AssembledOperator> {
    if params.conductivity.len() != network.edge_count() {
        return Err(Error::Shape("conductivity count does not match edge count".into()));
    }
    if network.dirichlet_count() == 0 {
        return Err(Error::Singular("heat problem needs at least one Dirichlet node".into()));
    }
    let mut t = Vec::with_capacity(4 * network.edge_count());
    for (e, g) in network.edges().iter().zip(&params.conductivity) {
        let w = g / e.length;
        t.push((e.a, e.a, w));
        t.push((e.b, e.b, w));
        t.push((e.a, e.b, -w));
        t.push((e.b, e.a, -w));
    }
    let n = network.node_count();
    let full = CsrMatrix::from_triplets(n, n, t);
    Ok(AssembledOperator::from_full(full, DofMap::new(network, 1), Some((params.alpha(), params.beta()))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{EdgeSpec, Face, NodeField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> SpatialNetwork {
        SpatialNetwork::new(
            2,
            &[1.0, 1.0],
            vec![[0.0, 0.0, 0.0], [0.5, 0.2, 0.0], [1.0, 0.4, 0.0], [0.5, 1.0, 0.0], [0.3, 0.6, 0.0]],
            vec![
                EdgeSpec::new(0, 1),
                EdgeSpec::new(1, 2),
                EdgeSpec::new(1, 3),
                EdgeSpec::new(3, 4),
                EdgeSpec::new(4, 0),
                EdgeSpec::new(4, 1),
            ],
            vec![Face::lower(0)],
        )
        .unwrap()
    }

    #[test]
    fn unit_conductivity_gives_laplacian() {
        let net = small();
        let op = assemble_heat(&net, &HeatParams::uniform(&net, 1.0)).unwrap();
        assert_eq!(op.full_matrix(), &net.laplacian_matrix());
        assert!(op.full_matrix().is_symmetric());
    }

    #[test]
    fn single_edge_elimination() {
        let net = SpatialNetwork::new(
            1,
            &[1.0],
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            vec![EdgeSpec::new(0, 1)],
            vec![Face::lower(0)],
        )
        .unwrap();
        let op = assemble_heat(&net, &HeatParams::uniform(&net, 5.0)).unwrap();
        assert_eq!(op.matrix().to_dense(), vec![vec![5.0]]);
    }

    #[test]
    fn no_dirichlet_node_is_singular() {
        let net = small().with_dirichlet_faces(vec![]).unwrap();
        assert!(matches!(assemble_heat(&net, &HeatParams::uniform(&net, 1.0)), Err(Error::Singular(_))));
    }

    #[test]
    fn bounds_hold_on_random_fields() {
        let net = small();
        let gammas = vec![0.3, 2.0, 1.0, 0.7, 1.5, 0.9];
        let params = HeatParams::new(&net, gammas.clone()).unwrap();
        assert_eq!((params.alpha(), params.beta()), (0.3, 2.0));
        let op = assemble_heat(&net, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let k = op.full_matrix().quadratic_form(&v);
            let l = net.laplacian_quadratic(&NodeField::scalar(v.clone()), None).unwrap();
            assert!(0.3 * l <= k * (1.0 + 1e-12) && k <= 2.0 * l * (1.0 + 1e-12));
            // direct evaluation of the edge sum
            let direct: f64 = net
                .edges()
                .iter()
                .zip(&gammas)
                .map(|(e, g)| g * (v[e.a] - v[e.b]).powi(2) / e.length)
                .sum();
            assert!((k - direct).abs() <= 1e-12 * direct.abs().max(1e-300));
        }
    }

    #[test]
    fn rejects_bad_conductivity() {
        let net = small();
        assert!(HeatParams::new(&net, vec![1.0; 5]).is_err());
        assert!(HeatParams::new(&net, vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
    }
}
