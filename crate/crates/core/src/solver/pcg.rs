use std::time::Instant;

use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, norm2, Cholesky, CsrMatrix};

use super::{Identity, Preconditioner};

#[derive(Debug, Clone, Copy)]
pub struct PcgOptions {
    /// Stop once `(r, z)^1/2` falls below `tol` times its initial value.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMethod {
    Cholesky,
    /// PCG to a relative preconditioned residual of `1e-13`.
    Pcg,
}

impl std::fmt::Display for ReferenceMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReferenceMethod::Cholesky => "cholesky",
            ReferenceMethod::Pcg => "pcg",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub solution: Vec<f64>,
    pub method: ReferenceMethod,
    /// `|K u - f| / |f|`.
    pub relative_residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct PcgReport {
    pub iterations: usize,
    pub converged: bool,
    /// `(r_l, z_l)^1/2` for `l = 0..=iterations`.
    pub residuals: Vec<f64>,
    /// `|u - u_l|_K` for `l = 0..=iterations`; empty without a reference.
    pub errors: Vec<f64>,
    /// `tau_l = |u - u_l|_K / |u - u_(l-1)|_K` for `l = 2..=iterations`.
    pub rates: Vec<f64>,
    /// Cumulative wall time after each iteration, in seconds.
    pub times: Vec<f64>,
    pub solve_seconds: f64,
}

impl PcgReport {
    /// Mean of the rates, `tau bar`.
    pub fn mean_rate(&self) -> Option<f64> {
        (!self.rates.is_empty()).then(|| self.rates.iter().sum::<f64>() / self.rates.len() as f64)
    }

    /// Largest rate, `tau`.
    pub fn max_rate(&self) -> Option<f64> {
        self.rates.iter().copied().reduce(f64::max)
    }

    /// Iteration `l` (1-based) of each entry of [`rates`](Self::rates).
    pub fn rate_iterations(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.rates.len()).map(|i| i + 2)
    }
}

/// Preconditioned conjugate gradients for `K u = b` from `u_0 = 0`.
///
/// With a `reference` solution the report carries the energy-norm errors and
/// the per-iteration rates.
pub fn pcg_solve(
    k: &CsrMatrix,
    b: &[f64],
    pre: &dyn Preconditioner,
    opts: &PcgOptions,
    reference: Option<&[f64]>,
) -> Result<(Vec<f64>, PcgReport)> {
    let n = k.nrows();
    if k.ncols() != n || b.len() != n || pre.dim() != n {
        return Err(Error::Shape(format!(
            "system is {}x{} with {} right-hand side entries and a preconditioner of size {}",
            n,
            k.ncols(),
            b.len(),
            pre.dim()
        )));
    }
    if let Some(u) = reference {
        if u.len() != n {
            return Err(Error::Shape(format!("reference has {} entries, expected {n}", u.len())));
        }
    }
    let start = Instant::now();
    let mut report = PcgReport::default();
    let mut x = vec![0.0; n];
    let energy_error = |x: &[f64]| -> Option<f64> {
        reference.map(|u| {
            let d: Vec<f64> = u.iter().zip(x).map(|(a, b)| a - b).collect();
            k.quadratic_form(&d).max(0.0).sqrt()
        })
    };
    if let Some(e) = energy_error(&x) {
        report.errors.push(e);
    }
    if b.iter().all(|v| *v == 0.0) {
        report.residuals.push(0.0);
        report.converged = true;
        return Ok((x, report));
    }
    let mut r = b.to_vec();
    let mut z = pre.apply(&r);
    let mut rz = dot(&r, &z);
    if !(rz > 0.0) {
        return Err(Error::Breakdown { iteration: 0, rz });
    }
    let r0 = rz.sqrt();
    report.residuals.push(r0);
    let mut p = z.clone();
    let mut kp = vec![0.0; n];
    for it in 1..=opts.max_iterations {
        k.matvec_into(&p, &mut kp);
        let pkp = dot(&p, &kp);
        if !(pkp > 0.0) {
            return Err(Error::Breakdown { iteration: it, rz: pkp });
        }
        let alpha = rz / pkp;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &kp, &mut r);
        z = pre.apply(&r);
        let rz_new = dot(&r, &z);
        report.iterations = it;
        report.times.push(start.elapsed().as_secs_f64());
        if let Some(e) = energy_error(&x) {
            report.errors.push(e);
        }
        if rz_new < 0.0 {
            return Err(Error::Breakdown { iteration: it, rz: rz_new });
        }
        report.residuals.push(rz_new.sqrt());
        if rz_new.sqrt() <= opts.tol * r0 {
            report.converged = true;
            break;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    report.rates = report.errors.windows(2).skip(1).map(|w| w[1] / w[0]).collect();
    report.solve_seconds = start.elapsed().as_secs_f64();
    Ok((x, report))
}

/// Default size limit for the direct reference solve (about 3.2 GB of factor).
pub const DEFAULT_MAX_FACTOR_ENTRIES: usize = 400_000_000;

/// Direct solve of `K u = f` by sparse Cholesky, or PCG with `fallback` to
/// `1e-13` when the factor would exceed `max_factor_entries`.
pub fn reference_solve(
    k: &CsrMatrix,
    f: &[f64],
    fallback: Option<&dyn Preconditioner>,
    max_factor_entries: usize,
) -> Result<ReferenceSolution> {
    let n = k.nrows();
    if f.len() != n {
        return Err(Error::Shape(format!("right-hand side has {} entries, expected {n}", f.len())));
    }
    let fnorm = norm2(f);
    let residual = |u: &[f64]| {
        let ku = k.matvec(u);
        let r = norm2(&ku.iter().zip(f).map(|(a, b)| a - b).collect::<Vec<_>>());
        if fnorm > 0.0 {
            r / fnorm
        } else {
            r
        }
    };
    let entries = Cholesky::factor_entries(k)?;
    if entries <= max_factor_entries {
        let chol = Cholesky::factor(k)?;
        let solution = chol.solve(f);
        let relative_residual = residual(&solution);
        return Ok(ReferenceSolution { solution, method: ReferenceMethod::Cholesky, relative_residual });
    }
    log::info!("Cholesky factor would hold {entries} entries; falling back to PCG");
    let identity = Identity(n);
    let pre = fallback.unwrap_or(&identity);
    let (solution, report) = pcg_solve(k, f, pre, &PcgOptions { tol: 1e-13, max_iterations: 100 * n.max(1) }, None)?;
    if !report.converged {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            residual: report.residuals.last().copied().unwrap_or(f64::NAN),
        });
    }
    let relative_residual = residual(&solution);
    Ok(ReferenceSolution { solution, method: ReferenceMethod::Pcg, relative_residual })
}
