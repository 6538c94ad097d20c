use crate::error::{Error, Result};

use super::SpatialNetwork;

/// An `n`-component real function on the node set, stored component-major:
/// all values of component 0, then component 1, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    components: usize,
    nodes: usize,
    values: Vec<f64>,
}

impl NodeField {
    pub fn new(components: usize, nodes: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::Shape("a field needs at least one component".into()));
        }
        if values.len() != components * nodes {
            return Err(Error::Shape(format!(
                "{} values for {components} components on {nodes} nodes",
                values.len()
            )));
        }
        Ok(Self { components, nodes, values })
    }

    pub fn scalar(values: Vec<f64>) -> Self {
        let nodes = values.len();
        Self { components: 1, nodes, values }
    }

    pub fn zeros(components: usize, nodes: usize) -> Self {
        Self { components, nodes, values: vec![0.0; components * nodes] }
    }

    pub fn constant(components: usize, nodes: usize, value: f64) -> Self {
        Self { components, nodes, values: vec![value; components * nodes] }
    }

    /// Field whose component `c` at node `x` is `f(x, c)`.
    pub fn from_fn(components: usize, nodes: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(components * nodes);
        for c in 0..components {
            for x in 0..nodes {
                values.push(f(x, c));
            }
        }
        Self { components, nodes, values }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.values[c * self.nodes..(c + 1) * self.nodes]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.values[c * self.nodes..(c + 1) * self.nodes]
    }

    pub fn get(&self, node: usize, c: usize) -> f64 {
        self.values[c * self.nodes + node]
    }

    /// True when the field vanishes at every Dirichlet node, i.e. it lies in `V`.
    pub fn satisfies_dirichlet(&self, net: &SpatialNetwork) -> bool {
        self.nodes == net.node_count()
            && (0..self.components).all(|c| {
                self.component(c)
                    .iter()
                    .zip(net.dirichlet_mask())
                    .all(|(&v, &d)| !d || v == 0.0)
            })
    }
}
