use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::sym_eigen;
use crate::error::{Error, Result};
use crate::sparse::{dot, CsrMatrix};

use super::Preconditioner;

/// Extreme eigenvalues of `P = B K`.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Full spectrum, ascending, when computed densely.
    pub values: Option<Vec<f64>>,
    /// Lanczos steps taken (0 for the dense path).
    pub steps: usize,
}

impl SpectrumEstimate {
    pub fn condition(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }

    /// `(sqrt(kappa) - 1) / (sqrt(kappa) + 1)`.
    pub fn rate(&self) -> f64 {
        convergence_rate(self.condition())
    }
}

/// `(sqrt(kappa) - 1) / (sqrt(kappa) + 1)`.
pub fn convergence_rate(kappa: f64) -> f64 {
    let s = kappa.sqrt();
    (s - 1.0) / (s + 1.0)
}

/// Lanczos on `P = B K` in the `K` inner product, with full
/// reorthogonalisation, for at most `steps` steps.
pub fn estimate_spectrum(k: &CsrMatrix, pre: &dyn Preconditioner, steps: usize, seed: u64) -> Result<SpectrumEstimate> {
    let n = k.nrows();
    if pre.dim() != n || n == 0 {
        return Err(Error::Shape(format!("operator of size {n}, preconditioner of size {}", pre.dim())));
    }
    let steps = steps.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let knorm = |v: &[f64]| k.quadratic_form(v).max(0.0).sqrt();
    let s = knorm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut kbasis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    for j in 0..steps {
        let kv = k.matvec(&v);
        let mut w = pre.apply(&kv);
        let a = dot(&w, &kv);
        alpha.push(a);
        basis.push(v);
        kbasis.push(kv);
        for _ in 0..2 {
            for (q, kq) in basis.iter().zip(&kbasis) {
                let c = dot(&w, kq);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = knorm(&w);
        if j + 1 == steps || b <= 1e-12 * a.abs() {
            break;
        }
        beta.push(b);
        v = w.into_iter().map(|x| x / b).collect();
    }
    let m = alpha.len();
    let t = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let e = sym_eigen(&t)?;
    Ok(SpectrumEstimate { lambda_min: e.values[0], lambda_max: e.values[m - 1], values: None, steps: m })
}

/// All eigenvalues of `B K` from the symmetric form `C^T B C`, `K = C C^T`.
/// Intended for small systems: `B` is formed column by column.
pub fn dense_spectrum(k: &CsrMatrix, pre: &dyn Preconditioner) -> Result<SpectrumEstimate> {
    let n = k.nrows();
    if pre.dim() != n || n == 0 {
        return Err(Error::Shape(format!("operator of size {n}, preconditioner of size {}", pre.dim())));
    }
    let kd = k.to_dense();
    let km = Mat::from_fn(n, n, |i, j| kd[i][j]);
    let llt = km.llt(Side::Lower).map_err(|e| Error::Singular(format!("K is not positive definite ({e:?})")))?;
    let c = llt.L().to_owned();
    let mut b = Mat::<f64>::zeros(n, n);
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        let col = pre.apply(&unit);
        unit[j] = 0.0;
        for i in 0..n {
            b[(i, j)] = col[i];
        }
    }
    let s = c.transpose() * &b * &c;
    let s = Mat::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let e = sym_eigen(&s)?;
    Ok(SpectrumEstimate { lambda_min: e.values[0], lambda_max: e.values[n - 1], values: Some(e.values), steps: 0 })
}
