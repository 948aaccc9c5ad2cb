use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::multigrid::{MgConfig, MgHierarchy};
use crate::pdegrid::{Field, SparseMatrix};
use crate::polywavelet::derive_filter_bank;

/// A possibly nonlinear map used as `M⁻¹` (e.g. a trained network).
pub trait VectorMap: Send + Sync + fmt::Debug {
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>>;
}

/// Which preconditioner to build.
#[derive(Debug, Clone)]
pub enum PrecondSpec {
    Identity,
    /// One forward Gauss–Seidel sweep from zero, i.e. `(D + L)⁻¹ v`.
    GaussSeidel,
    /// Additive Schwarz over contiguous index blocks with overlap, exact block solves.
    Schwarz { block_size: usize, overlap: usize },
    /// One V-cycle applied to `(0, v)`.
    WaveletMg { k: usize, config: MgConfig },
    /// Any matrix-free map, typically a trained model.
    Learned(Arc<dyn VectorMap>),
    /// An explicitly assembled `M⁻¹`.
    Dense(DMatrix<f64>),
}

impl PrecondSpec {
    pub fn schwarz_default() -> Self {
        Self::Schwarz { block_size: 64, overlap: 8 }
    }

    pub fn wavelet_mg_default() -> Self {
        Self::WaveletMg { k: 1, config: MgConfig::default() }
    }
}

/// Parses the classical kinds by name (`identity`, `gs`, `schwarz`, `wavelet_mg`) with defaults.
impl FromStr for PrecondSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "none" => Ok(Self::Identity),
            "gs" | "gauss_seidel" => Ok(Self::GaussSeidel),
            "schwarz" => Ok(Self::schwarz_default()),
            "wavelet_mg" => Ok(Self::wavelet_mg_default()),
            other => Err(Error::InvalidParameter(format!("unknown preconditioner `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchwarzBlock {
    start: usize,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// A ready-to-apply preconditioner.
#[derive(Debug, Clone)]
pub enum Preconditioner {
    Identity,
    GaussSeidel(SparseMatrix),
    Schwarz { n: usize, blocks: Vec<SchwarzBlock> },
    WaveletMg(Box<MgHierarchy>),
    Learned(Arc<dyn VectorMap>),
    Dense(DMatrix<f64>),
}

impl Preconditioner {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::GaussSeidel(_) => "gs",
            Self::Schwarz { .. } => "schwarz",
            Self::WaveletMg(_) => "wavelet_mg",
            Self::Learned(_) => "learned",
            Self::Dense(_) => "dense",
        }
    }

    /// Whether `apply` is guaranteed linear.
    pub fn is_linear(&self) -> bool {
        !matches!(self, Self::Learned(_))
    }

    /// `z ≈ M⁻¹ v`
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            Self::Identity => v.to_vec(),
            Self::GaussSeidel(op) => {
                let mut z = vec![0.0; v.len()];
                op.gauss_seidel_sweep(&mut z, v);
                z
            }
            Self::Schwarz { n, blocks } => {
                let mut z = vec![0.0; *n];
                for b in blocks {
                    let m = b.lu.l().nrows();
                    let rhs = DVector::from_column_slice(&v[b.start..b.start + m]);
                    let y = b.lu.solve(&rhs).ok_or_else(|| Error::Numerical("singular Schwarz block".into()))?;
                    z[b.start..b.start + m].iter_mut().zip(y.iter()).for_each(|(z, y)| *z += y);
                }
                z
            }
            Self::WaveletMg(hier) => {
                let f = Field::from_data(hier.fine_shape(), v.to_vec())?;
                let zero = f.like(vec![0.0; v.len()]);
                crate::multigrid::v_cycle(hier, &zero, &f)?.into_data()
            }
            Self::Learned(map) => map.apply(v)?,
            Self::Dense(m) => (m * DVector::from_column_slice(v)).as_slice().to_vec(),
        })
    }
}

/// Builds a preconditioner for the system matrix `op` on a grid of `shape`.
pub fn make_preconditioner(spec: &PrecondSpec, op: &SparseMatrix, shape: &[usize]) -> Result<Preconditioner> {
    let n = op.nrows();
    Ok(match spec {
        PrecondSpec::Identity => Preconditioner::Identity,
        PrecondSpec::GaussSeidel => Preconditioner::GaussSeidel(op.clone()),
        &PrecondSpec::Schwarz { block_size, overlap } => {
            if block_size == 0 || overlap >= block_size {
                return Err(Error::InvalidParameter(format!(
                    "Schwarz blocks need 0 <= overlap < block_size, got block {block_size}, overlap {overlap}"
                )));
            }
            let mut blocks = Vec::new();
            let mut s = 0;
            while s < n {
                let lo = s.saturating_sub(overlap);
                let hi = (s + block_size + overlap).min(n);
                let local = DMatrix::from_fn(hi - lo, hi - lo, |i, j| op.get(lo + i, lo + j));
                blocks.push(SchwarzBlock { start: lo, lu: local.lu() });
                s += block_size;
            }
            Preconditioner::Schwarz { n, blocks }
        }
        PrecondSpec::WaveletMg { k, config } => {
            let bank = derive_filter_bank(*k)?;
            Preconditioner::WaveletMg(Box::new(MgHierarchy::new(op.clone(), shape, bank, config)?))
        }
        PrecondSpec::Learned(map) => Preconditioner::Learned(map.clone()),
        PrecondSpec::Dense(m) => {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Shape(format!("dense preconditioner {}x{} for system of size {n}", m.nrows(), m.ncols())));
            }
            Preconditioner::Dense(m.clone())
        }
    })
}

/// Assembles `M⁻¹` column by column from unit vectors. Intended for
/// validating learned maps on small grids.
pub fn assemble(pre: &Preconditioner, n: usize) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = pre.apply(&e)?;
        e[j] = 0.0;
        m.set_column(j, &DVector::from_column_slice(&col));
    }
    Ok(m)
}
