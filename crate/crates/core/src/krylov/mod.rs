//! Restarted GMRES with right preconditioning and the classical and learned
//! preconditioners it is compared with.
//!
//! Preconditioned directions `z_i = M⁻¹ v_i` are stored explicitly (the
//! flexible variant), so a nonlinear `M⁻¹` still yields iterates
//! `x_i = Z y_i` whose residuals are exact. The trace records the true
//! residual `‖b − A x_i‖/‖b‖` at every iteration.

mod precond;

pub use precond::{assemble, make_preconditioner, PrecondSpec, Preconditioner, SchwarzBlock, VectorMap};

use crate::error::{Error, Result};
use crate::pdegrid::{dot, Field, LinearOperator};
use crate::trace::ResidualTrace;

/// Systems up to this size run without restarts by default.
pub const FULL_MEMORY_LIMIT: usize = 1024;
/// Default restart length above [`FULL_MEMORY_LIMIT`].
pub const DEFAULT_RESTART: usize = 100;
/// Relative Arnoldi norm below which the Krylov space is considered exhausted.
pub const BREAKDOWN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOptions {
    pub tol: f64,
    /// `None` selects full memory for `n ≤ 1024` and [`DEFAULT_RESTART`] otherwise.
    pub restart: Option<usize>,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: 1e-11, restart: None, max_iter: 2000 }
    }
}

#[derive(Debug, Clone)]
pub struct GmresResult {
    pub x: Field,
    pub trace: ResidualTrace,
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!("non-finite value in {what}")));
    }
    Ok(())
}

/// Solves `A x = b` from `x₀ = 0`.
pub fn gmres(op: &dyn LinearOperator, b: &Field, precond: &Preconditioner, opts: &GmresOptions) -> Result<GmresResult> {
    let n = op.size();
    if b.channels() != 1 || b.len() != n {
        return Err(Error::Shape(format!("right-hand side of length {} for system of size {n}", b.len())));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let restart = opts.restart.unwrap_or(if n <= FULL_MEMORY_LIMIT { n } else { DEFAULT_RESTART });
    if restart == 0 {
        return Err(Error::InvalidParameter("restart must be >= 1".into()));
    }
    let bv = b.data();
    let bnorm = norm(bv);
    let mut x = vec![0.0; n];
    let mut trace = ResidualTrace::default();
    trace.push(0, if bnorm > 0.0 { 1.0 } else { 0.0 });
    if bnorm == 0.0 {
        trace.mark_converged(0);
        return Ok(GmresResult { x: b.like(x), trace });
    }
    let mut ax = vec![0.0; n];
    let mut iter = 0;
    let mut r = bv.to_vec();
    'outer: while iter < opts.max_iter {
        let beta = norm(&r);
        let m = restart.min(opts.max_iter - iter);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        // Hessenberg columns after rotation (upper triangular R), rotations, rhs g
        let mut rcols: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut rot: Vec<(f64, f64)> = Vec::with_capacity(m);
        let mut g = vec![beta];
        for j in 0..m {
            let zj = precond.apply(&v[j])?;
            check_finite(&zj, "preconditioner output")?;
            let mut w = vec![0.0; n];
            op.apply_into(&zj, &mut w);
            check_finite(&w, "operator output")?;
            z.push(zj);
            let w_norm0 = norm(&w);
            let mut hcol = vec![0.0; j + 2];
            // modified Gram–Schmidt, repeated once for stability
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(&w, vi);
                    hcol[i] += hij;
                    w.iter_mut().zip(vi).for_each(|(w, v)| *w -= hij * v);
                }
            }
            let hnext = norm(&w);
            hcol[j + 1] = hnext;
            for (i, &(c, s)) in rot.iter().enumerate() {
                let (a, b) = (hcol[i], hcol[i + 1]);
                hcol[i] = c * a + s * b;
                hcol[i + 1] = -s * a + c * b;
            }
            let (a, b) = (hcol[j], hcol[j + 1]);
            let d = a.hypot(b);
            let (c, s) = if d == 0.0 { (1.0, 0.0) } else { (a / d, b / d) };
            hcol[j] = d;
            hcol[j + 1] = 0.0;
            rot.push((c, s));
            g.push(-s * g[j]);
            g[j] *= c;
            hcol.truncate(j + 1);
            rcols.push(hcol);
            let breakdown = hnext <= BREAKDOWN_TOL * w_norm0.max(f64::MIN_POSITIVE) || d == 0.0;
            // current iterate x + Z y with R y = g
            let y = back_substitute(&rcols, &g[..=j]);
            let mut xi = x.clone();
            for (zi, yi) in z.iter().zip(&y) {
                xi.iter_mut().zip(zi).for_each(|(x, z)| *x += yi * z);
            }
            op.apply_into(&xi, &mut ax);
            r = bv.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let rel = norm(&r) / bnorm;
            iter += 1;
            trace.push(iter, rel);
            if rel <= opts.tol {
                x = xi;
                trace.mark_converged(iter);
                break 'outer;
            }
            if breakdown {
                x = xi;
                trace.stagnated = true;
                break 'outer;
            }
            if j + 1 == m {
                x = xi;
                continue 'outer;
            }
            v.push(w.iter().map(|x| x / hnext).collect());
        }
    }
    Ok(GmresResult { x: b.like(x), trace })
}

/// Solves the upper-triangular system stored column-wise in `cols`.
fn back_substitute(cols: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    let m = g.len();
    let mut y = g.to_vec();
    for i in (0..m).rev() {
        for j in i + 1..m {
            y[i] -= cols[j][i] * y[j];
        }
        y[i] = if cols[i][i] != 0.0 { y[i] / cols[i][i] } else { 0.0 };
    }
    y
}
