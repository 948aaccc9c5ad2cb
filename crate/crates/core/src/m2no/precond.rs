//! A trained model as a (nonlinear) GMRES preconditioner.

use std::sync::Arc;

use crate::error::{shape_bail, Result};
use crate::krylov::{PrecondSpec, VectorMap};
use crate::pdegrid::{interior_spacing, Field};

use super::{forward, ModelParams};

/// `z = (‖v‖/ρ) · G(ρ v/‖v‖)` with `ρ = input_scale · √N`, so inputs reach
/// the network at the scale it was trained on and the map is positively
/// homogeneous.
#[derive(Debug, Clone)]
pub struct LearnedPreconditioner {
    params: ModelParams,
    shape: Vec<usize>,
    spacing: Vec<f64>,
}

impl LearnedPreconditioner {
    pub fn new(params: ModelParams, shape: &[usize]) -> Result<Self> {
        params.config.check_grid(shape)?;
        let spacing = shape.iter().map(|&n| interior_spacing(n)).collect();
        Ok(Self { params, shape: shape.to_vec(), spacing })
    }
}

impl VectorMap for LearnedPreconditioner {
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n: usize = self.shape.iter().product();
        if v.len() != n {
            shape_bail!("preconditioner expects {n} entries, got {}", v.len());
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let rho = self.params.input_scale * (n as f64).sqrt();
        let a = Field::from_data(&self.shape, v.iter().map(|x| x * rho / norm).collect())?
            .with_spacing(self.spacing.clone())?;
        let z = forward(&self.params, &a)?;
        Ok(z.data().iter().map(|x| x * norm / rho).collect())
    }
}

/// Wraps a trained model for `krylov::gmres` on a grid of `shape`.
pub fn precondition_with_model(params: &ModelParams, shape: &[usize]) -> Result<PrecondSpec> {
    Ok(PrecondSpec::Learned(Arc::new(LearnedPreconditioner::new(params.clone(), shape)?)))
}
