//! Classical V-cycle multigrid with multiwavelet transfers: restriction is
//! the low-pass filter `H`, prolongation its transpose, and coarse operators
//! are Galerkin products `H A Hᵀ`.
//!
//! `depth` counts coarsenings, so `depth = 1` is a two-grid method.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{shape_bail, Error, Result};
use crate::mwtransform::axis;
use crate::pdegrid::{dot, Field, LinearOperator, SparseMatrix, StencilOperator};
use crate::polywavelet::FilterBank;
use crate::trace::ResidualTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoother {
    /// `u ← u + ω D⁻¹ (f − A u)`
    Jacobi { omega: f64 },
    /// Forward lexicographic sweep.
    GaussSeidel,
}

impl Default for Smoother {
    fn default() -> Self {
        Self::Jacobi { omega: 2.0 / 3.0 }
    }
}

impl Smoother {
    /// Parses `jacobi` or `gs`/`gauss_seidel`; `omega` applies to Jacobi.
    pub fn parse(name: &str, omega: f64) -> Result<Self> {
        match name {
            "jacobi" => Ok(Self::Jacobi { omega }),
            "gs" | "gauss_seidel" => Ok(Self::GaussSeidel),
            other => Err(Error::InvalidParameter(format!("unknown smoother `{other}`"))),
        }
    }
}

impl FromStr for Smoother {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, 2.0 / 3.0)
    }
}

/// Treatment of the coarsest level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoarseSolve {
    /// Direct solve when every coarsest axis has at most `4k²` points, else relax.
    #[default]
    Auto,
    Direct,
    Relax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MgConfig {
    pub depth: usize,
    pub pre: usize,
    pub post: usize,
    pub smoother: Smoother,
    /// Relaxation steps on the coarsest level when it is not solved directly.
    pub coarse_steps: usize,
    pub coarse: CoarseSolve,
}

impl Default for MgConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            pre: 2,
            post: 2,
            smoother: Smoother::default(),
            coarse_steps: 2,
            coarse: CoarseSolve::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MgLevel {
    pub op: SparseMatrix,
    pub shape: Vec<usize>,
    pub pre: usize,
    pub post: usize,
    diag: Vec<f64>,
}

impl MgLevel {
    fn new(op: SparseMatrix, shape: Vec<usize>, pre: usize, post: usize) -> Result<Self> {
        let diag = op.diagonal();
        if diag.iter().any(|d| *d == 0.0 || !d.is_finite()) {
            return Err(Error::Numerical(format!("zero diagonal in level operator {shape:?}")));
        }
        Ok(Self { op, shape, pre, post, diag })
    }

    pub fn size(&self) -> usize {
        self.op.nrows()
    }
}

/// Operators, transfers and smoothing schedule of a V-cycle. `levels[0]` is finest.
#[derive(Debug, Clone)]
pub struct MgHierarchy {
    bank: FilterBank,
    levels: Vec<MgLevel>,
    smoother: Smoother,
    coarse_steps: usize,
    direct: Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

/// Assembled restriction matrix for a grid of `shape`: block-diagonal `H`
/// per axis, Kronecker product across axes.
pub fn transfer_matrix(shape: &[usize], bank: &FilterBank) -> Result<SparseMatrix> {
    let k = bank.k();
    let h = bank.h_row_major();
    let mut mats = Vec::with_capacity(shape.len());
    for a in 0..shape.len() {
        axis::check_axis(shape, a, k)?;
        let n = shape[a];
        let mut t = Vec::with_capacity(n * k);
        for c in 0..n / (2 * k) {
            for i in 0..k {
                for j in 0..2 * k {
                    let w = h[i * 2 * k + j];
                    if w != 0.0 {
                        t.push((c * k + i, 2 * c * k + j, w));
                    }
                }
            }
        }
        mats.push(SparseMatrix::from_triplets(n / 2, n, t)?);
    }
    Ok(match mats.len() {
        1 => mats.pop().unwrap(),
        _ => mats[0].kron(&mats[1]),
    })
}

impl MgHierarchy {
    pub fn new(fine: SparseMatrix, shape: &[usize], bank: FilterBank, cfg: &MgConfig) -> Result<Self> {
        let n: usize = shape.iter().product();
        if fine.nrows() != n || fine.ncols() != n {
            shape_bail!("operator {}x{} does not match grid {shape:?}", fine.nrows(), fine.ncols());
        }
        if cfg.depth == 0 {
            return Err(Error::InvalidParameter("multigrid depth must be >= 1".into()));
        }
        if let Smoother::Jacobi { omega } = cfg.smoother {
            if !(omega > 0.0 && omega.is_finite()) {
                return Err(Error::InvalidParameter(format!("Jacobi weight must be positive, got {omega}")));
            }
        }
        let mut levels = Vec::with_capacity(cfg.depth + 1);
        let mut op = fine;
        let mut cur = shape.to_vec();
        for _ in 0..cfg.depth {
            let r = transfer_matrix(&cur, &bank)?;
            let coarse = r.matmul(&op)?.matmul(&r.transpose())?;
            levels.push(MgLevel::new(op, cur.clone(), cfg.pre, cfg.post)?);
            op = coarse;
            cur = cur.iter().map(|n| n / 2).collect();
        }
        levels.push(MgLevel::new(op, cur.clone(), 0, 0)?);
        let k = bank.k();
        let direct = match cfg.coarse {
            CoarseSolve::Direct => true,
            CoarseSolve::Relax => false,
            CoarseSolve::Auto => cur.iter().all(|&n| n <= 4 * k * k),
        };
        let direct = direct.then(|| levels.last().unwrap().op.to_dense().lu());
        Ok(Self {
            bank,
            levels,
            smoother: cfg.smoother,
            coarse_steps: cfg.coarse_steps,
            direct,
        })
    }

    pub fn from_stencil(op: &StencilOperator, bank: FilterBank, cfg: &MgConfig) -> Result<Self> {
        Self::new(op.to_sparse(), op.shape(), bank, cfg)
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }
    pub fn levels(&self) -> &[MgLevel] {
        &self.levels
    }
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }
    pub fn smoother(&self) -> Smoother {
        self.smoother
    }
    pub fn coarse_steps(&self) -> usize {
        self.coarse_steps
    }
    pub fn has_direct_coarse_solve(&self) -> bool {
        self.direct.is_some()
    }
    pub fn fine_shape(&self) -> &[usize] {
        &self.levels[0].shape
    }

    fn relax(&self, level: &MgLevel, u: &mut [f64], f: &[f64], steps: usize, scratch: &mut [f64]) {
        relax_with(&level.op, &level.diag, self.smoother, u, f, steps, scratch);
    }

    fn cycle(&self, j: usize, u: &mut [f64], f: &[f64], details: &mut Option<Vec<f64>>) {
        let level = &self.levels[j];
        let mut scratch = vec![0.0; u.len()];
        if j + 1 == self.levels.len() {
            match &self.direct {
                Some(lu) => {
                    let x = lu.solve(&DVector::from_column_slice(f)).expect("nonsingular coarse operator");
                    u.copy_from_slice(x.as_slice());
                }
                None => self.relax(level, u, f, self.coarse_steps, &mut scratch),
            }
            return;
        }
        self.relax(level, u, f, level.pre, &mut scratch);
        level.op.mul_vec_into(u, &mut scratch);
        let r: Vec<f64> = f.iter().zip(&scratch).map(|(f, a)| f - a).collect();
        let rc = restrict_plane(&r, &level.shape, &self.bank);
        if let Some(d) = details {
            // Parseval: the discarded G-channel energy is ‖r‖² − ‖H r‖²
            d[j] += (dot(&r, &r) - dot(&rc, &rc)).max(0.0);
        }
        let mut ec = vec![0.0; rc.len()];
        self.cycle(j + 1, &mut ec, &rc, details);
        prolong_plane_add(&ec, u, &level.shape, &self.bank);
        self.relax(level, u, f, level.post, &mut scratch);
    }

    fn check(&self, u: &Field) -> Result<()> {
        if u.shape() != self.fine_shape() {
            shape_bail!("hierarchy grid {:?} vs field {:?}", self.fine_shape(), u.shape());
        }
        Ok(())
    }

    /// Residual `f − A u` on the finest level.
    pub fn residual(&self, u: &Field, f: &Field) -> Result<Field> {
        self.check(u)?;
        u.check_layout(f, "residual")?;
        let p = u.plane_len();
        let mut out = vec![0.0; u.len()];
        for c in 0..u.channels() {
            let dst = &mut out[c * p..(c + 1) * p];
            self.levels[0].op.mul_vec_into(u.channel(c), dst);
            dst.iter_mut().zip(f.channel(c)).for_each(|(a, f)| *a = f - *a);
        }
        Ok(f.like(out))
    }
}

fn relax_with(op: &SparseMatrix, diag: &[f64], smoother: Smoother, u: &mut [f64], f: &[f64], steps: usize, scratch: &mut [f64]) {
    for _ in 0..steps {
        match smoother {
            Smoother::Jacobi { omega } => {
                op.mul_vec_into(u, scratch);
                for i in 0..u.len() {
                    u[i] += omega * (f[i] - scratch[i]) / diag[i];
                }
            }
            Smoother::GaussSeidel => op.gauss_seidel_sweep(u, f),
        }
    }
}

/// Restricts one plane: `H` along every axis.
pub(crate) fn restrict_plane(x: &[f64], shape: &[usize], bank: &FilterBank) -> Vec<f64> {
    let h = bank.h_row_major();
    axis::analysis_separable(x, shape, &vec![h; shape.len()], bank.k())
}

/// Adds `Hᵀ x` into the fine plane `out` of shape `fine_shape`.
pub(crate) fn prolong_plane_add(x: &[f64], out: &mut [f64], fine_shape: &[usize], bank: &FilterBank) {
    let h = bank.h_row_major();
    axis::synthesis_separable_add(x, out, fine_shape, &vec![h; fine_shape.len()], bank.k())
}

/// Low-pass restriction, halving each axis.
pub fn restrict(field: &Field, bank: &FilterBank) -> Result<Field> {
    for a in 0..field.dim() {
        axis::check_axis(field.shape(), a, bank.k())?;
    }
    let mut data = Vec::with_capacity(field.len() >> field.dim());
    for c in 0..field.channels() {
        data.extend(restrict_plane(field.channel(c), field.shape(), bank));
    }
    let shape = field.shape().iter().map(|n| n / 2).collect();
    let spacing = field.spacing().iter().map(|h| 2.0 * h).collect();
    Ok(Field::from_parts(shape, field.channels(), spacing, data))
}

/// Prolongation `Hᵀ`, doubling each axis.
pub fn prolong(field: &Field, bank: &FilterBank) -> Result<Field> {
    if let Some(n) = field.shape().iter().find(|&&n| n % bank.k() != 0) {
        shape_bail!("coarse axis length {n} is not a multiple of k = {}", bank.k());
    }
    let shape: Vec<usize> = field.shape().iter().map(|n| 2 * n).collect();
    let plane: usize = shape.iter().product();
    let mut data = vec![0.0; plane * field.channels()];
    for c in 0..field.channels() {
        prolong_plane_add(field.channel(c), &mut data[c * plane..(c + 1) * plane], &shape, bank);
    }
    let spacing = field.spacing().iter().map(|h| h / 2.0).collect();
    Ok(Field::from_parts(shape, field.channels(), spacing, data))
}

/// `steps` relaxation sweeps on `A u = f`.
pub fn smooth(op: &SparseMatrix, u: &Field, f: &Field, method: Smoother, steps: usize) -> Result<Field> {
    u.check_layout(f, "smooth")?;
    if op.nrows() != u.plane_len() {
        shape_bail!("operator size {} vs field plane {}", op.nrows(), u.plane_len());
    }
    let diag = op.diagonal();
    let mut out = u.clone();
    let mut scratch = vec![0.0; u.plane_len()];
    for c in 0..u.channels() {
        relax_with(op, &diag, method, out.channel_mut(c), f.channel(c), steps, &mut scratch);
    }
    Ok(out)
}

/// One V-cycle from the iterate `u`.
pub fn v_cycle(hier: &MgHierarchy, u: &Field, f: &Field) -> Result<Field> {
    Ok(v_cycle_with_diagnostics(hier, u, f, false)?.0)
}

/// V-cycle that optionally reports, per transfer level, the residual energy
/// in the discarded detail (G) channels.
pub fn v_cycle_with_diagnostics(hier: &MgHierarchy, u: &Field, f: &Field, diagnose: bool) -> Result<(Field, Option<Vec<f64>>)> {
    hier.check(u)?;
    u.check_layout(f, "v_cycle")?;
    let mut out = u.clone();
    let mut details = diagnose.then(|| vec![0.0; hier.depth()]);
    for c in 0..u.channels() {
        hier.cycle(0, out.channel_mut(c), f.channel(c), &mut details);
    }
    Ok((out, details))
}

/// Outcome of [`solve`].
#[derive(Debug, Clone)]
pub struct MgSolution {
    pub u: Field,
    pub trace: ResidualTrace,
}

/// Iterates V-cycles from zero until `‖f − Au‖/‖f‖ ≤ tol` or `max_cycles`.
/// Non-convergence is reported through the trace, not as an error.
pub fn solve(hier: &MgHierarchy, f: &Field, tol: f64, max_cycles: usize) -> Result<MgSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut u = f.like(vec![0.0; f.len()]);
    let fnorm = f.norm();
    let rel = |u: &Field| -> Result<f64> {
        let r = hier.residual(u, f)?.norm();
        Ok(if fnorm > 0.0 { r / fnorm } else { r })
    };
    let mut trace = ResidualTrace::default();
    let r0 = rel(&u)?;
    trace.push(0, r0);
    if r0 <= tol {
        trace.mark_converged(0);
        return Ok(MgSolution { u, trace });
    }
    for cycle in 1..=max_cycles {
        u = v_cycle(hier, &u, f)?;
        let r = rel(&u)?;
        if !r.is_finite() {
            return Err(Error::Numerical(format!("V-cycle diverged at cycle {cycle}")));
        }
        trace.push(cycle, r);
        if r <= tol {
            trace.mark_converged(cycle);
            break;
        }
    }
    Ok(MgSolution { u, trace })
}

/// Geometric mean of the per-cycle residual reduction over a trace.
pub fn mean_reduction_factor(trace: &ResidualTrace) -> Option<f64> {
    let (first, last) = (trace.entries.first()?, trace.entries.last()?);
    let cycles = last.0 - first.0;
    (cycles > 0 && first.1 > 0.0).then(|| (last.1 / first.1).powf(1.0 / cycles as f64))
}

/// Dense two-grid correction `u + P (Pᵀ A P)⁻¹ Pᵀ (f − A u)` with `P = Hᵀ`.
pub fn two_grid_correction_dense(a: &DMatrix<f64>, r_mat: &DMatrix<f64>, u: &[f64], f: &[f64]) -> Vec<f64> {
    let u = DVector::from_column_slice(u);
    let r = DVector::from_column_slice(f) - a * &u;
    let ac = r_mat * a * r_mat.transpose();
    let ec = ac.lu().solve(&(r_mat * r)).expect("nonsingular coarse operator");
    (u + r_mat.transpose() * ec).as_slice().to_vec()
}

impl LinearOperator for MgLevel {
    fn size(&self) -> usize {
        self.op.nrows()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.op.mul_vec_into(x, y)
    }
}
