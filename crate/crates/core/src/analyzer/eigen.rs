//! Smallest eigenpairs of `L u = lambda M u` with `M` diagonal, by
//! shift-invert subspace iteration and Rayleigh-Ritz.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::sym_eigen;
use crate::error::{Error, Result};
use crate::sparse::{Cholesky, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMode {
    /// Constrained rows eliminated; returns the smallest eigenvalue.
    Dirichlet,
    /// No constraints; returns the smallest nonzero eigenvalue, with the
    /// constants deflated in the `M` inner product.
    Neumann,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Required `|L u - lambda M u|_{M^-1} <= tol * lambda` for `|u|_M = 1`.
    pub tol: f64,
    pub max_iterations: usize,
    pub block_size: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 500, block_size: 6, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// `M`-normalised, on all nodes (zero at constrained nodes).
    pub vector: Vec<f64>,
    /// `|L u - lambda M u|_{M^-1}`.
    pub residual: f64,
    pub iterations: usize,
}

struct Problem<'a> {
    l: &'a CsrMatrix,
    mass: &'a [f64],
    /// Nodes carrying unknowns.
    active: Vec<usize>,
    /// Factor of `L` on `active` minus `grounded`.
    chol: Cholesky,
    solve_nodes: Vec<usize>,
    neumann: bool,
    total_mass: f64,
}

impl Problem<'_> {
    fn m_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.active.iter().map(|&i| self.mass[i] * a[i] * b[i]).sum()
    }

    fn deflate(&self, v: &mut [f64]) {
        if self.neumann {
            let c = self.active.iter().map(|&i| self.mass[i] * v[i]).sum::<f64>() / self.total_mass;
            for x in v.iter_mut() {
                *x -= c;
            }
        }
    }

    /// `u = L^+ M b` on the admissible space.
    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs: Vec<f64> = self.solve_nodes.iter().map(|&i| self.mass[i] * b[i]).collect();
        self.chol.solve_in_place(&mut rhs);
        let mut u = vec![0.0; b.len()];
        for (&i, v) in self.solve_nodes.iter().zip(rhs) {
            u[i] = v;
        }
        self.deflate(&mut u);
        u
    }

    fn residual(&self, u: &[f64], lambda: f64) -> f64 {
        let lu = self.l.matvec(u);
        self.active
            .iter()
            .map(|&i| {
                let r = lu[i] - lambda * self.mass[i] * u[i];
                r * r / self.mass[i]
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Modified Gram-Schmidt in the `M` inner product (two passes). Nearly
    /// dependent columns are replaced by fresh random vectors.
    fn orthonormalize(&self, block: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
        for j in 0..block.len() {
            for attempt in 0..4 {
                let before = self.m_dot(&block[j], &block[j]).sqrt();
                for _ in 0..2 {
                    for k in 0..j {
                        let c = self.m_dot(&block[k], &block[j]);
                        let (head, tail) = block.split_at_mut(j);
                        for (x, y) in tail[0].iter_mut().zip(&head[k]) {
                            *x -= c * y;
                        }
                    }
                }
                let norm = self.m_dot(&block[j], &block[j]).sqrt();
                if norm > 1e-8 * before || (attempt == 3 && norm > 0.0) {
                    for x in block[j].iter_mut() {
                        *x /= norm;
                    }
                    break;
                }
                block[j] = self.random_vector(rng);
            }
        }
    }

    fn random_vector(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut v = vec![0.0; self.mass.len()];
        for &i in &self.active {
            v[i] = rng.random_range(-1.0..1.0);
        }
        self.deflate(&mut v);
        v
    }
}

/// Smallest (Dirichlet) or smallest nonzero (Neumann) eigenpair of
/// `L u = lambda M u`.
///
/// `constrained` marks rows eliminated in Dirichlet mode (ignored for
/// Neumann). `coords`, when given, seeds the start block with the
/// coordinate functions; the rest of the block is random.
pub fn generalized_eigen_smallest(
    l: &CsrMatrix,
    mass: &[f64],
    constrained: &[bool],
    mode: EigenMode,
    coords: Option<&[[f64; 3]]>,
    opts: &EigenOptions,
) -> Result<EigenPair> {
    let n = l.nrows();
    if l.ncols() != n || mass.len() != n || constrained.len() != n {
        return Err(Error::Shape("eigenproblem operands disagree in size".into()));
    }
    if let Some(m) = mass.iter().find(|m| !(**m > 0.0)) {
        return Err(Error::Singular(format!("mass entry {m} is not positive")));
    }
    let neumann = mode == EigenMode::Neumann;
    let active: Vec<usize> = (0..n).filter(|&i| neumann || !constrained[i]).collect();
    let dim = if neumann { active.len().saturating_sub(1) } else { active.len() };
    if dim == 0 {
        return Err(Error::Singular("eigenproblem has no admissible vectors".into()));
    }
    let solve_nodes: Vec<usize> = if neumann {
        // ground the heaviest node; ties to the lowest index
        let g = active.iter().copied().fold(active[0], |g, i| if mass[i] > mass[g] { i } else { g });
        active.iter().copied().filter(|&i| i != g).collect()
    } else {
        active.clone()
    };
    let chol = Cholesky::factor(&l.principal_submatrix(&solve_nodes))
        .map_err(|e| Error::Singular(format!("stiffness block is singular ({e}); is the graph connected?")))?;
    let total_mass = active.iter().map(|&i| mass[i]).sum();
    let prob = Problem { l, mass, active, chol, solve_nodes, neumann, total_mass };

    let p = opts.block_size.max(1).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<f64>> = Vec::with_capacity(p);
    if let Some(coords) = coords {
        for a in 0..3 {
            if block.len() < p {
                let mut v: Vec<f64> = (0..n).map(|i| if neumann || !constrained[i] { coords[i][a] } else { 0.0 }).collect();
                prob.deflate(&mut v);
                if v.iter().any(|x| *x != 0.0) {
                    block.push(v);
                }
            }
        }
    }
    while block.len() < p {
        block.push(prob.random_vector(&mut rng));
    }
    prob.orthonormalize(&mut block, &mut rng);

    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let mut y: Vec<Vec<f64>> = block.iter().map(|b| prob.apply(b)).collect();
        prob.orthonormalize(&mut y, &mut rng);
        let ly: Vec<Vec<f64>> = y.iter().map(|v| l.matvec(v)).collect();
        let a = Mat::from_fn(p, p, |i, j| prob.active.iter().map(|&k| y[i][k] * ly[j][k]).sum::<f64>());
        let a = Mat::from_fn(p, p, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        let eig = sym_eigen(&a)?;
        block = (0..p)
            .map(|c| {
                let mut v = vec![0.0; n];
                for (k, yk) in y.iter().enumerate() {
                    let w = eig.vectors[(k, c)];
                    for (x, yv) in v.iter_mut().zip(yk) {
                        *x += w * yv;
                    }
                }
                v
            })
            .collect();
        prob.orthonormalize(&mut block, &mut rng);
        let u = &block[0];
        let lambda = l.quadratic_form(u) / prob.m_dot(u, u);
        let res = prob.residual(u, lambda);
        last = res / lambda.abs().max(f64::MIN_POSITIVE);
        if res <= opts.tol * lambda.abs() {
            let mut vector = block.swap_remove(0);
            // fixed sign: largest-magnitude entry positive
            let idx = (0..n).fold(0, |b, i| if vector[i].abs() > vector[b].abs() { i } else { b });
            if vector[idx] < 0.0 {
                vector.iter_mut().for_each(|x| *x = -*x);
            }
            return Ok(EigenPair { value: lambda, vector, residual: res, iterations: it });
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iterations, residual: last })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge() -> CsrMatrix {
        CsrMatrix::from_dense(&[vec![1.0, -1.0], vec![-1.0, 1.0]])
    }

    #[test]
    fn two_node_neumann() {
        let e = generalized_eigen_smallest(&edge(), &[0.5, 0.5], &[false, false], EigenMode::Neumann, None, &EigenOptions::default())
            .unwrap();
        assert!((e.value - 4.0).abs() < 1e-12);
        assert!((e.vector[0] + e.vector[1]).abs() < 1e-12);
    }

    #[test]
    fn two_node_dirichlet() {
        let e = generalized_eigen_smallest(&edge(), &[0.5, 0.5], &[true, false], EigenMode::Dirichlet, None, &EigenOptions::default())
            .unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
        assert_eq!(e.vector[0], 0.0);
    }

    #[test]
    fn single_node_has_no_nonzero_mode() {
        let l = CsrMatrix::from_dense(&[vec![0.0]]);
        assert!(generalized_eigen_smallest(&l, &[1.0], &[false], EigenMode::Neumann, None, &EigenOptions::default()).is_err());
    }

    #[test]
    fn path_matches_closed_form() {
        // unit path of n nodes with lumped mass; the eigenvalues of L v = lambda M v
        // with M = diag(1/2, 1, ..., 1, 1/2) are 2 - 2 cos(k pi / (n - 1)) over the mass.
        let n = 40;
        let mut rows = vec![vec![0.0; n]; n];
        let mut mass = vec![1.0; n];
        mass[0] = 0.5;
        mass[n - 1] = 0.5;
        for i in 0..n - 1 {
            rows[i][i] += 1.0;
            rows[i + 1][i + 1] += 1.0;
            rows[i][i + 1] -= 1.0;
            rows[i + 1][i] -= 1.0;
        }
        let l = CsrMatrix::from_dense(&rows);
        let e = generalized_eigen_smallest(&l, &mass, &vec![false; n], EigenMode::Neumann, None, &EigenOptions::default())
            .unwrap();
        let expected = 2.0 - 2.0 * (std::f64::consts::PI / (n - 1) as f64).cos();
        assert!((e.value - expected).abs() < 1e-10 * expected, "{} vs {expected}", e.value);
        assert!(e.residual <= 1e-8 * e.value);
    }
}
