use crate::error::{Error, Result};
use crate::fibergen::{generate_fiber_network, generate_grid_network, random_conductivities, FiberGenConfig};
use crate::models::{assemble_heat, assemble_structural, build_rhs, mass_load, AssembledOperator, HeatParams};
use crate::network::{io, Face, NodeField, SpatialNetwork};

use super::config::{Conductivity, NetworkSource, NetworkSpec, StructuralConfig};

/// Builds the network described by `spec`; fiber networks use `seed` unless
/// the spec sets its own.
pub fn build_network(spec: &NetworkSpec, seed: u64) -> Result<SpatialNetwork> {
    let seed = spec.seed.unwrap_or(seed);
    match &spec.source {
        NetworkSource::Grid { points_per_side } => generate_grid_network(*points_per_side),
        NetworkSource::Fiber { preset, density, fiber_length } => {
            let mut cfg = FiberGenConfig::preset(*preset, seed);
            if let Some(d) = density {
                cfg = cfg.with_density(*d);
            }
            if let Some(r) = fiber_length {
                cfg = cfg.with_fiber_length(*r);
            }
            generate_fiber_network(&cfg)
        }
        NetworkSource::File { path } => io::load_network(path),
    }
}

pub fn conductivities(network: &SpatialNetwork, c: Conductivity, seed: u64) -> Vec<f64> {
    match c {
        Conductivity::Unit => vec![1.0; network.edge_count()],
        Conductivity::Uniform { low, high } => random_conductivities(network, low, high, seed ^ 0x9e37_79b9_7f4a_7c15),
        Conductivity::EdgeWeights => HeatParams::from_edge_weights(network).conductivity().to_vec(),
    }
}

/// The two structural load cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralLoad {
    /// `n = 2`, stretch `g = [s x1, 0]` on `x1 = 0, 1`, no body force.
    Tensile,
    /// `n = 3`, stretch `g = [s x1, 0, 0]` and a uniform out-of-plane load.
    Lateral,
}

impl std::str::FromStr for StructuralLoad {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tensile" => Ok(Self::Tensile),
            "lateral" => Ok(Self::Lateral),
            _ => Err(Error::Config(format!("unknown load case '{s}' (expected tensile or lateral)"))),
        }
    }
}

/// An assembled linear system `K u = f` on the free dofs, with the boundary
/// lifting needed to recover the full field.
#[derive(Debug)]
pub struct Problem {
    pub network: SpatialNetwork,
    pub op: AssembledOperator,
    pub rhs: Vec<f64>,
    pub lifting: Option<NodeField>,
}

impl Problem {
    /// `(K u, v) = (M 1, v)` with `u = 0` on the network's Dirichlet faces.
    pub fn heat(network: SpatialNetwork, conductivity: Vec<f64>) -> Result<Self> {
        let op = assemble_heat(&network, &HeatParams::new(&network, conductivity)?)?;
        let load = mass_load(&network, &NodeField::constant(1, network.node_count(), 1.0))?;
        let rhs = build_rhs(&op, &load, None)?;
        Ok(Self { network, op, rhs, lifting: None })
    }

    /// Clamps the faces `x1 = 0` and `x1 = 1` and assembles the load case.
    pub fn structural(network: SpatialNetwork, load: StructuralLoad, cfg: &StructuralConfig) -> Result<Self> {
        let network = network.with_dirichlet_faces(vec![Face::lower(0), Face::upper(0)])?;
        let (n, strain) = match load {
            StructuralLoad::Tensile => (2, cfg.tensile_strain),
            StructuralLoad::Lateral => (3, cfg.lateral_strain),
        };
        let op = assemble_structural(&network, &cfg.params(), n)?;
        let nodes = network.node_count();
        let g = NodeField::from_fn(n, nodes, |x, c| if c == 0 { strain * network.position(x)[0] } else { 0.0 });
        let body = match load {
            StructuralLoad::Tensile => NodeField::zeros(n, nodes),
            StructuralLoad::Lateral => {
                mass_load(&network, &NodeField::from_fn(n, nodes, |_, c| if c == 2 { cfg.lateral_load } else { 0.0 }))?
            }
        };
        let rhs = build_rhs(&op, &body, Some(&g))?;
        Ok(Self { network, op, rhs, lifting: Some(g) })
    }

    /// Full nodal field `lifting + E u` of a free-dof solution.
    pub fn full_solution(&self, u: &[f64]) -> Result<NodeField> {
        let mut field = self.op.dofs().lift(u)?;
        if let Some(g) = &self.lifting {
            for (v, gv) in field.values_mut().iter_mut().zip(g.values()) {
                *v += gv;
            }
        }
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_problem_on_grid() {
        let net = generate_grid_network(5).unwrap();
        let p = Problem::heat(net, vec![1.0; 40]).unwrap();
        assert_eq!(p.rhs.len(), 9);
        // interior grid node: four incident edges of length 1/4
        assert!(p.rhs.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn uniform_stretch_of_a_grid_is_in_equilibrium() {
        let net = generate_grid_network(5).unwrap();
        let p = Problem::structural(net, StructuralLoad::Tensile, &StructuralConfig::default()).unwrap();
        // 15 free nodes off the clamped faces, two components each
        assert_eq!(p.rhs.len(), 30);
        let u = crate::solver::reference_solve(p.op.matrix(), &p.rhs, None, usize::MAX).unwrap().solution;
        let scale = p.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        assert!(u.iter().all(|v| v.abs() < 1e-12 * scale), "{u:?}");
        let full = p.full_solution(&u).unwrap();
        assert!((full.get(4, 0) - 0.2).abs() < 1e-15);
    }
}
