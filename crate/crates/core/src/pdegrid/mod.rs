//! Grid fields, constant-coefficient stencils with zero Dirichlet boundary,
//! sparse assembly and seeded elliptic datasets.
//!
//! Grids hold `n` interior points per axis of the unit interval/square, so
//! the spacing is `h = 1/(n + 1)` and boundary values are implicitly zero.

mod dataset;
mod field;
mod sparse;
mod stencil;

pub use dataset::{
    make_dataset, make_sample, sample_rng, variable_coeff_operator, DatasetKind, DatasetSpec, Sample, SineSeries,
};
pub use field::{interior_spacing, Field};
pub(crate) use field::dot;
pub use sparse::SparseMatrix;
pub use stencil::{apply, poisson_operator, poisson_operator_with, residual, StencilKind, StencilOperator};

use crate::error::{Error, Result};

/// A square linear map on flat vectors.
pub trait LinearOperator: Send + Sync {
    fn size(&self) -> usize;
    /// `y = A x`; `y` is overwritten.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size()];
        self.apply_into(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn size(&self) -> usize {
        (**self).size()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_into(x, y)
    }
}

impl LinearOperator for nalgebra::DMatrix<f64> {
    fn size(&self) -> usize {
        self.nrows()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Jacobi-preconditioned conjugate gradients for SPD sparse systems, from a
/// zero initial guess, to relative residual `tol`.
pub fn conjugate_gradient(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let dinv: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.mul_vec_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.iter_mut().zip(&ap).for_each(|(r, ap)| *r -= alpha * ap);
        if dot(&r, &r).sqrt() <= tol * bnorm {
            // confirm against the true residual to guard against drift
            let ax = a.mul_vec(&x);
            let true_r: f64 = ax.iter().zip(b).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
            if true_r <= tol * bnorm {
                return Ok(x);
            }
            r = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        }
        z.iter_mut().zip(r.iter().zip(&dinv)).for_each(|(z, (r, d))| *z = r * d);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    Err(Error::Numerical(format!("conjugate gradients did not reach {tol:e} in {max_iter} iterations")))
}
