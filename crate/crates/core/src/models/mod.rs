//! Model operators `K` on a network: heat conduction and the fiber
//! structural operator (tension plus bending), with Dirichlet elimination.

mod heat;
mod structural;

pub use heat::{assemble_heat, HeatParams};
pub use structural::{assemble_structural, bending_directions, PairPolicy, StructuralParams};

use crate::error::{Error, Result};
use crate::network::{NodeField, SpatialNetwork};
use crate::sparse::CsrMatrix;

/// Numbering of the degrees of freedom of an `n`-component field.
///
/// Full dofs are `c * N + x`; free dofs are `c * N_free + i` where `i` is
/// the position of `x` among the non-Dirichlet nodes.
#[derive(Debug, Clone)]
pub struct DofMap {
    components: usize,
    nodes: usize,
    free_nodes: Vec<usize>,
    fixed_nodes: Vec<usize>,
    free_index: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(network: &SpatialNetwork, components: usize) -> Self {
        let mask = network.dirichlet_mask();
        let mut free_nodes = Vec::new();
        let mut fixed_nodes = Vec::new();
        let mut free_index = vec![None; mask.len()];
        for (x, &fixed) in mask.iter().enumerate() {
            if fixed {
                fixed_nodes.push(x);
            } else {
                free_index[x] = Some(free_nodes.len());
                free_nodes.push(x);
            }
        }
        Self { components, nodes: mask.len(), free_nodes, fixed_nodes, free_index }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    pub fn free_index(&self, x: usize) -> Option<usize> {
        self.free_index[x]
    }

    pub fn free_dof_count(&self) -> usize {
        self.components * self.free_nodes.len()
    }

    /// Free dof of component `c` at node `x`, if `x` is free.
    pub fn free_dof(&self, x: usize, c: usize) -> Option<usize> {
        self.free_index[x].map(|i| c * self.free_nodes.len() + i)
    }

    /// Full dof numbers of the free dofs, in free-dof order.
    pub fn free_full_dofs(&self) -> Vec<usize> {
        (0..self.components).flat_map(|c| self.free_nodes.iter().map(move |&x| c * self.nodes + x)).collect()
    }

    pub fn fixed_full_dofs(&self) -> Vec<usize> {
        (0..self.components).flat_map(|c| self.fixed_nodes.iter().map(move |&x| c * self.nodes + x)).collect()
    }

    /// Restriction of a full field to the free dofs.
    pub fn restrict(&self, field: &NodeField) -> Result<Vec<f64>> {
        self.check(field)?;
        let mut out = Vec::with_capacity(self.free_dof_count());
        for c in 0..self.components {
            let v = field.component(c);
            out.extend(self.free_nodes.iter().map(|&x| v[x]));
        }
        Ok(out)
    }

    /// Full field from free-dof values, zero on the Dirichlet nodes.
    pub fn lift(&self, free: &[f64]) -> Result<NodeField> {
        if free.len() != self.free_dof_count() {
            return Err(Error::Shape(format!("expected {} free dofs, got {}", self.free_dof_count(), free.len())));
        }
        let nf = self.free_nodes.len();
        let mut out = NodeField::zeros(self.components, self.nodes);
        for c in 0..self.components {
            let o = out.component_mut(c);
            for (i, &x) in self.free_nodes.iter().enumerate() {
                o[x] = free[c * nf + i];
            }
        }
        Ok(out)
    }

    fn check(&self, field: &NodeField) -> Result<()> {
        if field.components() != self.components || field.node_count() != self.nodes {
            return Err(Error::Shape(format!(
                "field is {}x{}, expected {}x{}",
                field.components(),
                field.node_count(),
                self.components,
                self.nodes
            )));
        }
        Ok(())
    }
}

/// `K` on all dofs, its free block and the free-to-fixed coupling block.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    full: CsrMatrix,
    free: CsrMatrix,
    coupling: CsrMatrix,
    dofs: DofMap,
    bounds: Option<(f64, f64)>,
}

impl AssembledOperator {
    pub(crate) fn from_full(full: CsrMatrix, dofs: DofMap, bounds: Option<(f64, f64)>) -> Self {
        let free_dofs = dofs.free_full_dofs();
        let fixed_dofs = dofs.fixed_full_dofs();
        let free = full.principal_submatrix(&free_dofs);
        let coupling = full.submatrix(&free_dofs, &fixed_dofs);
        Self { full, free, coupling, dofs, bounds }
    }

    /// `K` restricted to the free dofs.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.free
    }

    /// `K` on all dofs, before elimination.
    pub fn full_matrix(&self) -> &CsrMatrix {
        &self.full
    }

    /// Rows: free dofs; columns: Dirichlet dofs.
    pub fn coupling(&self) -> &CsrMatrix {
        &self.coupling
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn components(&self) -> usize {
        self.dofs.components
    }

    pub fn free_dof_count(&self) -> usize {
        self.free.nrows()
    }

    /// `(alpha, beta)` with `alpha (Lv, v) <= (Kv, v) <= beta (Lv, v)`, when known.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    /// Energy norm `(K u, u)^(1/2)` of a free-dof vector.
    pub fn energy_norm(&self, u: &[f64]) -> f64 {
        self.free.quadratic_form(u).max(0.0).sqrt()
    }
}

/// `(M g)` componentwise: the load vector of a nodal body force `g`.
pub fn mass_load(network: &SpatialNetwork, g: &NodeField) -> Result<NodeField> {
    network.apply_mass(g)
}

/// Right-hand side `(f - K g)` restricted to the free dofs.
///
/// `load` is the assembled load vector (for example [`mass_load`] of a
/// source); `lifting` is the boundary extension `g`, `None` meaning zero.
pub fn build_rhs(op: &AssembledOperator, load: &NodeField, lifting: Option<&NodeField>) -> Result<Vec<f64>> {
    let mut rhs = op.dofs.restrict(load)?;
    if let Some(g) = lifting {
        op.dofs.check(g)?;
        let kg = op.full.matvec(g.values());
        let full_free = op.dofs.free_full_dofs();
        for (r, &d) in rhs.iter_mut().zip(&full_free) {
            *r -= kg[d];
        }
    }
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{EdgeSpec, Face};

    fn unit_edge() -> SpatialNetwork {
        SpatialNetwork::new(
            1,
            &[1.0],
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            vec![EdgeSpec::new(0, 1)],
            vec![Face::lower(0)],
        )
        .unwrap()
    }

    #[test]
    fn rhs_of_uniform_source() {
        let net = unit_edge();
        let op = assemble_heat(&net, &HeatParams::uniform(&net, 1.0)).unwrap();
        let f = mass_load(&net, &NodeField::constant(1, 2, 1.0)).unwrap();
        assert_eq!(build_rhs(&op, &f, None).unwrap(), vec![0.5]);
    }

    #[test]
    fn rhs_with_lifting() {
        let net = unit_edge();
        let op = assemble_heat(&net, &HeatParams::uniform(&net, 2.0)).unwrap();
        let zero = NodeField::zeros(1, 2);
        let g = NodeField::scalar(vec![1.0, 0.0]);
        // K = 2 [1 -1; -1 1]; -(K g) at node 1 = 2.
        assert_eq!(build_rhs(&op, &zero, Some(&g)).unwrap(), vec![2.0]);
        assert_eq!(op.coupling().to_dense(), vec![vec![-2.0]]);
    }

    #[test]
    fn lift_and_restrict() {
        let net = unit_edge();
        let dofs = DofMap::new(&net, 2);
        assert_eq!(dofs.free_dof_count(), 2);
        let f = dofs.lift(&[3.0, 4.0]).unwrap();
        assert_eq!(f.values(), &[0.0, 3.0, 0.0, 4.0]);
        assert_eq!(dofs.restrict(&f).unwrap(), vec![3.0, 4.0]);
        assert!(dofs.lift(&[1.0]).is_err());
    }
}
