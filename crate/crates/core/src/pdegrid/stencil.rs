use std::f64::consts::PI;

use crate::error::{shape_bail, Error, Result};

use super::field::{interior_spacing, Field};
use super::sparse::SparseMatrix;
use super::LinearOperator;

/// 2D Poisson kernel choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StencilKind {
    /// `[[0,−1,0],[−1,4,−1],[0,−1,0]] / h²`
    #[default]
    FivePoint,
    /// Bilinear finite-element stiffness `[[−1,−1,−1],[−1,8,−1],[−1,−1,−1]] / (3h²)`.
    NinePoint,
}

/// Constant-coefficient 3-point (1D) or 3×3 (2D) stencil with zero Dirichlet
/// boundary: samples outside the grid read as zero.
///
/// Weights are stored already scaled by the grid spacing, row-major for 2D
/// (`weights[3 * (dy + 1) + (dx + 1)]`).
#[derive(Debug, Clone, PartialEq)]
pub struct StencilOperator {
    shape: Vec<usize>,
    weights: Vec<f64>,
    spacing: Vec<f64>,
}

/// Negative Laplacian on `n` interior points per axis of the unit interval/square.
pub fn poisson_operator(dim: usize, n: usize) -> Result<StencilOperator> {
    poisson_operator_with(dim, n, StencilKind::FivePoint)
}

pub fn poisson_operator_with(dim: usize, n: usize, kind: StencilKind) -> Result<StencilOperator> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("Poisson operator needs n >= 3, got {n}")));
    }
    let h = interior_spacing(n);
    let s = 1.0 / (h * h);
    match (dim, kind) {
        (1, _) => StencilOperator::new(vec![n], vec![-s, 2.0 * s, -s], vec![h]),
        (2, StencilKind::FivePoint) => {
            let w = [0.0, -s, 0.0, -s, 4.0 * s, -s, 0.0, -s, 0.0];
            StencilOperator::new(vec![n, n], w.to_vec(), vec![h, h])
        }
        (2, StencilKind::NinePoint) => {
            let t = s / 3.0;
            let mut w = vec![-t; 9];
            w[4] = 8.0 * t;
            StencilOperator::new(vec![n, n], w, vec![h, h])
        }
        _ => Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {dim}"))),
    }
}

impl StencilOperator {
    pub fn new(shape: Vec<usize>, weights: Vec<f64>, spacing: Vec<f64>) -> Result<Self> {
        let expected = match shape.len() {
            1 => 3,
            2 => 9,
            d => shape_bail!("stencils are 1D or 2D, got {d} axes"),
        };
        if weights.len() != expected {
            shape_bail!("{}D stencil needs {expected} weights, got {}", shape.len(), weights.len());
        }
        if spacing.len() != shape.len() || shape.contains(&0) {
            shape_bail!("bad stencil geometry {shape:?} / {spacing:?}");
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numerical("non-finite stencil weight".into()));
        }
        Ok(Self { shape, weights, spacing })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn dim(&self) -> usize {
        self.shape.len()
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Diagonal entry of the induced matrix.
    pub fn center(&self) -> f64 {
        self.weights[self.weights.len() / 2]
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            weights: self.weights.iter().map(|w| alpha * w).collect(),
            spacing: self.spacing.clone(),
        }
    }

    /// Same kernel on a grid with `n` points per axis (spacing recomputed).
    pub fn with_grid(&self, n: usize) -> Self {
        Self {
            shape: vec![n; self.dim()],
            weights: self.weights.clone(),
            spacing: vec![interior_spacing(n); self.dim()],
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let w = &self.weights;
        (0..w.len()).all(|i| w[i] == w[w.len() - 1 - i])
    }

    fn apply_plane(&self, u: &[f64], out: &mut [f64]) {
        let w = &self.weights;
        match self.shape[..] {
            [n] => {
                for i in 0..n {
                    let left = if i > 0 { u[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { u[i + 1] } else { 0.0 };
                    out[i] = w[0] * left + w[1] * u[i] + w[2] * right;
                }
            }
            [ny, nx] => {
                for y in 0..ny {
                    for x in 0..nx {
                        let mut s = 0.0;
                        for dy in 0..3 {
                            let yy = y + dy;
                            if yy == 0 || yy > ny {
                                continue;
                            }
                            let row = (yy - 1) * nx;
                            for dx in 0..3 {
                                let wt = w[3 * dy + dx];
                                let xx = x + dx;
                                if wt == 0.0 || xx == 0 || xx > nx {
                                    continue;
                                }
                                s += wt * u[row + xx - 1];
                            }
                        }
                        out[y * nx + x] = s;
                    }
                }
            }
            _ => unreachable!("validated in constructor"),
        }
    }

    fn check_field(&self, u: &Field) -> Result<()> {
        if u.shape() != self.shape.as_slice() {
            shape_bail!("operator grid {:?} vs field {:?}", self.shape, u.shape());
        }
        Ok(())
    }

    /// Applies the stencil to every channel of `u`.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        self.check_field(u)?;
        let p = u.plane_len();
        let mut out = vec![0.0; u.len()];
        for (src, dst) in u.data().chunks(p).zip(out.chunks_mut(p)) {
            self.apply_plane(src, dst);
        }
        Ok(u.like(out))
    }

    /// `f − A u`
    pub fn residual(&self, u: &Field, f: &Field) -> Result<Field> {
        u.check_layout(f, "residual")?;
        let au = self.apply(u)?;
        Ok(f.like(f.data().iter().zip(au.data()).map(|(fi, ai)| fi - ai).collect()))
    }

    /// Assembled matrix (row-major unknown ordering).
    pub fn to_sparse(&self) -> SparseMatrix {
        let n = self.size();
        let mut t = Vec::with_capacity(n * 5);
        match self.shape[..] {
            [m] => {
                for i in 0..m {
                    for d in 0..3 {
                        let j = i + d;
                        if j >= 1 && j <= m && self.weights[d] != 0.0 {
                            t.push((i, j - 1, self.weights[d]));
                        }
                    }
                }
            }
            [ny, nx] => {
                for y in 0..ny {
                    for x in 0..nx {
                        for dy in 0..3 {
                            for dx in 0..3 {
                                let wt = self.weights[3 * dy + dx];
                                let (yy, xx) = (y + dy, x + dx);
                                if wt != 0.0 && yy >= 1 && yy <= ny && xx >= 1 && xx <= nx {
                                    t.push((y * nx + x, (yy - 1) * nx + xx - 1, wt));
                                }
                            }
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        SparseMatrix::from_triplets(n, n, t).expect("stencil indices in range")
    }

    /// Eigenvalue belonging to the discrete sine mode `Π_a sin(m_a π x_a)`.
    ///
    /// Valid for kernels that are even under reflection of each axis
    /// separately (all kernels built by [`poisson_operator_with`]); the zero
    /// boundary then acts as an odd extension and sine modes are eigenvectors.
    pub fn sine_mode_eigenvalue(&self, modes: &[usize]) -> f64 {
        let cos = |a: usize, off: isize| (PI * modes[a] as f64 * self.spacing[a] * off as f64).cos();
        match self.shape.len() {
            1 => (0..3).map(|d| self.weights[d] * cos(0, d as isize - 1)).sum(),
            _ => {
                let mut s = 0.0;
                for dy in 0..3 {
                    for dx in 0..3 {
                        s += self.weights[3 * dy + dx] * cos(0, dy as isize - 1) * cos(1, dx as isize - 1);
                    }
                }
                s
            }
        }
    }
}

impl LinearOperator for StencilOperator {
    fn size(&self) -> usize {
        self.shape.iter().product()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.apply_plane(x, y)
    }
}

/// Spec-level alias for [`StencilOperator::apply`].
pub fn apply(op: &StencilOperator, u: &Field) -> Result<Field> {
    op.apply(u)
}

/// Spec-level alias for [`StencilOperator::residual`].
pub fn residual(op: &StencilOperator, u: &Field, f: &Field) -> Result<Field> {
    op.residual(u, f)
}
