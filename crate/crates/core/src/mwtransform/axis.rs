//! Filter application along one axis of a row-major array.
//!
//! An axis of length `len` is read as `len / k` cells of `k` coefficients;
//! cells `2c` and `2c + 1` form the `2k` input of coarse cell `c`.

use crate::error::{shape_bail, Result};

/// `(outer, len, inner)` view of `shape` around `axis`.
fn split_shape(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

pub(crate) fn check_axis(shape: &[usize], axis: usize, k: usize) -> Result<()> {
    if shape[axis] == 0 || !shape[axis].is_multiple_of(2 * k) {
        shape_bail!("axis {axis} of length {} is not divisible by 2k = {}", shape[axis], 2 * k);
    }
    Ok(())
}

/// Applies the `k × 2k` row-major `filter` along `axis`, halving it.
pub(crate) fn analysis(src: &[f64], shape: &[usize], axis: usize, filter: &[f64], k: usize) -> Vec<f64> {
    let (outer, len, inner) = split_shape(shape, axis);
    let half = len / 2;
    let mut out = vec![0.0; outer * half * inner];
    for o in 0..outer {
        for c in 0..len / (2 * k) {
            for i in 0..k {
                let dst = (o * half + c * k + i) * inner;
                for j in 0..2 * k {
                    let w = filter[i * 2 * k + j];
                    let s = (o * len + 2 * c * k + j) * inner;
                    let (d, s) = (&mut out[dst..dst + inner], &src[s..s + inner]);
                    d.iter_mut().zip(s).for_each(|(d, s)| *d += w * s);
                }
            }
        }
    }
    out
}

/// Adds `filterᵀ · coarse` along `axis` into `fine`, whose shape is `fine_shape`.
pub(crate) fn synthesis_add(coarse: &[f64], fine: &mut [f64], fine_shape: &[usize], axis: usize, filter: &[f64], k: usize) {
    let (outer, len, inner) = split_shape(fine_shape, axis);
    let half = len / 2;
    for o in 0..outer {
        for c in 0..len / (2 * k) {
            for j in 0..2 * k {
                let dst = (o * len + 2 * c * k + j) * inner;
                for i in 0..k {
                    let w = filter[i * 2 * k + j];
                    let s = (o * half + c * k + i) * inner;
                    let (d, s) = (&mut fine[dst..dst + inner], &coarse[s..s + inner]);
                    d.iter_mut().zip(s).for_each(|(d, s)| *d += w * s);
                }
            }
        }
    }
}

pub(crate) fn halved(shape: &[usize], axis: usize) -> Vec<usize> {
    let mut s = shape.to_vec();
    s[axis] /= 2;
    s
}

/// Applies one filter per axis (`filters[a]` along axis `a`) to a plane.
pub(crate) fn analysis_separable(src: &[f64], shape: &[usize], filters: &[&[f64]], k: usize) -> Vec<f64> {
    let mut cur = src.to_vec();
    let mut cur_shape = shape.to_vec();
    for axis in (0..shape.len()).rev() {
        cur = analysis(&cur, &cur_shape, axis, filters[axis], k);
        cur_shape = halved(&cur_shape, axis);
    }
    cur
}

/// Adjoint of [`analysis_separable`]: adds the synthesis of `coarse` into `fine`.
pub(crate) fn synthesis_separable_add(coarse: &[f64], fine: &mut [f64], fine_shape: &[usize], filters: &[&[f64]], k: usize) {
    let d = fine_shape.len();
    if d == 1 {
        synthesis_add(coarse, fine, fine_shape, 0, filters[0], k);
        return;
    }
    // undo axis 0 (applied last in analysis) first, then axis 1
    let mid_shape = halved(fine_shape, 1);
    let mut mid = vec![0.0; mid_shape.iter().product()];
    synthesis_add(coarse, &mut mid, &mid_shape, 0, filters[0], k);
    synthesis_add(&mid, fine, fine_shape, 1, filters[1], k);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthesis_is_adjoint() {
        let k = 2;
        let filter: Vec<f64> = (0..2 * k * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let shape = [8, 12];
        let x: Vec<f64> = (0..96).map(|i| (i as f64 * 1.3).cos()).collect();
        for axis in 0..2 {
            let y_shape = halved(&shape, axis);
            let y: Vec<f64> = (0..48).map(|i| (i as f64 * 0.7).sin()).collect();
            let ax = analysis(&x, &shape, axis, &filter, k);
            let mut aty = vec![0.0; 96];
            synthesis_add(&y, &mut aty, &shape, axis, &filter, k);
            let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&aty).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-12, "axis {axis} {y_shape:?}");
        }
    }
}
