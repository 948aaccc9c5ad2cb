//! Multiwavelet transforms: single-level splits into approximation (H) and
//! detail (G) coefficients, multilevel pyramids and the 2D Kronecker filters.
//!
//! Samples are used directly as finest-level scaling coefficients. Along each
//! axis the coefficients are grouped in cells of `k` (basis index fastest);
//! 2D planes are row-major with `y` as the slow axis, so the 2D low-pass
//! filter is `H_y ⊗ H_x`. Details come in the order `GH = G_y⊗H_x`,
//! `HG = H_y⊗G_x`, `GG = G_y⊗G_x`.

pub(crate) mod axis;

use nalgebra::DMatrix;

use crate::error::{shape_bail, Result};
use crate::pdegrid::Field;
use crate::polywavelet::FilterBank;

/// Names of the 2D detail blocks, in storage order.
pub const DETAIL_NAMES_2D: [&str; 3] = ["GH", "HG", "GG"];

fn check_dyadic(shape: &[usize], k: usize, levels: usize) -> Result<()> {
    for (a, &len) in shape.iter().enumerate() {
        let cells = len / k;
        if len % k != 0 || !cells.is_power_of_two() || cells.trailing_zeros() < levels.max(1) as u32 {
            shape_bail!("axis {a} of length {len} is not k·2^n with k = {k}, n >= {}", levels.max(1));
        }
    }
    Ok(())
}

fn coarse_field(f: &Field, data: Vec<f64>) -> Field {
    let shape = f.shape().iter().map(|n| n / 2).collect();
    let spacing = f.spacing().iter().map(|h| 2.0 * h).collect();
    Field::from_parts(shape, f.channels(), spacing, data)
}

/// One analysis level of any dimension: approximation plus `2^d − 1` detail blocks.
fn split(f: &Field, bank: &FilterBank) -> (Field, Vec<Field>) {
    let k = bank.k();
    let (h, g) = (bank.h_row_major(), bank.g_row_major());
    let combos: Vec<Vec<&[f64]>> = match f.dim() {
        1 => vec![vec![h], vec![g]],
        _ => vec![vec![h, h], vec![g, h], vec![h, g], vec![g, g]],
    };
    let outputs: Vec<Field> = combos
        .iter()
        .map(|filters| {
            let mut data = Vec::with_capacity(f.len() >> f.dim());
            for c in 0..f.channels() {
                data.extend(axis::analysis_separable(f.channel(c), f.shape(), filters, k));
            }
            coarse_field(f, data)
        })
        .collect();
    let mut it = outputs.into_iter();
    let approx = it.next().unwrap();
    (approx, it.collect())
}

fn merge(approx: &Field, details: &[Field], bank: &FilterBank) -> Result<Field> {
    let k = bank.k();
    let expected = (1 << approx.dim()) - 1;
    if details.len() != expected {
        shape_bail!("{}D merge needs {expected} detail blocks, got {}", approx.dim(), details.len());
    }
    for d in details {
        approx.check_layout(d, "approximation vs detail")?;
    }
    let (h, g) = (bank.h_row_major(), bank.g_row_major());
    let combos: Vec<Vec<&[f64]>> = match approx.dim() {
        1 => vec![vec![h], vec![g]],
        _ => vec![vec![h, h], vec![g, h], vec![h, g], vec![g, g]],
    };
    let fine_shape: Vec<usize> = approx.shape().iter().map(|n| 2 * n).collect();
    let plane: usize = fine_shape.iter().product();
    let mut data = vec![0.0; plane * approx.channels()];
    for (block, filters) in std::iter::once(approx).chain(details).zip(&combos) {
        for c in 0..approx.channels() {
            axis::synthesis_separable_add(block.channel(c), &mut data[c * plane..(c + 1) * plane], &fine_shape, filters, k);
        }
    }
    let spacing = approx.spacing().iter().map(|h| h / 2.0).collect();
    Ok(Field::from_parts(fine_shape, approx.channels(), spacing, data))
}

/// Single-level 1D analysis: `(H·x, G·x)` blockwise.
pub fn forward_1d(signal: &Field, bank: &FilterBank) -> Result<(Field, Field)> {
    if signal.dim() != 1 {
        shape_bail!("forward_1d needs a 1D field, got {:?}", signal.shape());
    }
    check_dyadic(signal.shape(), bank.k(), 1)?;
    let (a, mut d) = split(signal, bank);
    Ok((a, d.pop().unwrap()))
}

/// Single-level 1D synthesis `Hᵀa + Gᵀd`.
pub fn inverse_1d(approx: &Field, detail: &Field, bank: &FilterBank) -> Result<Field> {
    if approx.dim() != 1 {
        shape_bail!("inverse_1d needs 1D fields, got {:?}", approx.shape());
    }
    check_cells(approx, bank)?;
    merge(approx, std::slice::from_ref(detail), bank)
}

/// Single-level 2D analysis: approximation and `[GH, HG, GG]`.
pub fn forward_2d(field: &Field, bank: &FilterBank) -> Result<(Field, [Field; 3])> {
    if field.dim() != 2 {
        shape_bail!("forward_2d needs a 2D field, got {:?}", field.shape());
    }
    check_dyadic(field.shape(), bank.k(), 1)?;
    let (a, d) = split(field, bank);
    let d: [Field; 3] = d.try_into().expect("three detail blocks");
    Ok((a, d))
}

pub fn inverse_2d(approx: &Field, details: &[Field; 3], bank: &FilterBank) -> Result<Field> {
    if approx.dim() != 2 {
        shape_bail!("inverse_2d needs 2D fields, got {:?}", approx.shape());
    }
    check_cells(approx, bank)?;
    merge(approx, details, bank)
}

fn check_cells(approx: &Field, bank: &FilterBank) -> Result<()> {
    if let Some(n) = approx.shape().iter().find(|&&n| n % bank.k() != 0) {
        shape_bail!("coarse axis length {n} is not a multiple of k = {}", bank.k());
    }
    Ok(())
}

/// Dense 2D filters `H2 = H⊗H` (k² × 4k²) and `G2 = [G⊗H; H⊗G; G⊗G]` (3k² × 4k²).
///
/// Columns index a 2×2 group of cells as `(y-half, y-basis, x-half, x-basis)`,
/// the Kronecker ordering of the per-axis `2k` inputs.
pub fn build_2d_filters(bank: &FilterBank) -> (DMatrix<f64>, DMatrix<f64>) {
    let (h, g) = (bank.h(), bank.g());
    let h2 = h.kronecker(h);
    let k2 = h2.nrows();
    let mut g2 = DMatrix::zeros(3 * k2, h2.ncols());
    g2.rows_mut(0, k2).copy_from(&g.kronecker(h));
    g2.rows_mut(k2, k2).copy_from(&h.kronecker(g));
    g2.rows_mut(2 * k2, k2).copy_from(&g.kronecker(g));
    (h2, g2)
}

/// Detail blocks of one level (1 in 1D; `GH, HG, GG` in 2D).
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidLevel {
    pub details: Vec<Field>,
}

/// Multilevel decomposition. `levels[0]` is the finest level; `base` is the
/// coarsest approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffPyramid {
    pub k: usize,
    pub levels: Vec<PyramidLevel>,
    pub base: Field,
}

impl CoeffPyramid {
    pub fn coefficient_count(&self) -> usize {
        self.base.len() + self.levels.iter().flat_map(|l| &l.details).map(Field::len).sum::<usize>()
    }

    pub fn energy(&self) -> f64 {
        let sq = |f: &Field| f.data().iter().map(|v| v * v).sum::<f64>();
        sq(&self.base) + self.levels.iter().flat_map(|l| &l.details).map(sq).sum::<f64>()
    }

    /// Replaces every detail block with zeros.
    pub fn zero_details(&mut self) {
        for d in self.levels.iter_mut().flat_map(|l| &mut l.details) {
            d.data_mut().fill(0.0);
        }
    }

    /// Every block in a fixed order: base first, then levels from coarsest to
    /// finest with their details in storage order.
    pub fn blocks(&self) -> Vec<&Field> {
        std::iter::once(&self.base)
            .chain(self.levels.iter().rev().flat_map(|l| &l.details))
            .collect()
    }
}

/// Splits the approximation channel `levels` times.
pub fn decompose(field: &Field, bank: &FilterBank, levels: usize) -> Result<CoeffPyramid> {
    if levels > 0 {
        check_dyadic(field.shape(), bank.k(), levels)?;
    }
    let mut base = field.clone();
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, details) = split(&base, bank);
        out.push(PyramidLevel { details });
        base = a;
    }
    Ok(CoeffPyramid { k: bank.k(), levels: out, base })
}

/// Inverse of [`decompose`].
pub fn reconstruct(pyramid: &CoeffPyramid, bank: &FilterBank) -> Result<Field> {
    if pyramid.k != bank.k() {
        shape_bail!("pyramid built with k = {}, bank has k = {}", pyramid.k, bank.k());
    }
    let mut cur = pyramid.base.clone();
    for level in pyramid.levels.iter().rev() {
        check_cells(&cur, bank)?;
        cur = merge(&cur, &level.details, bank)?;
    }
    Ok(cur)
}
