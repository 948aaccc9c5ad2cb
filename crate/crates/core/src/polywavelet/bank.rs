use nalgebra::DMatrix;

use super::{build_multiwavelets, build_scaling_basis, half_interval_basis};
use crate::error::{Error, Result};

/// Two-scale filter bank for basis order `k`.
///
/// `H = (H⁽⁰⁾ | H⁽¹⁾)` maps the `2k` coefficients of a pair of fine cells to the
/// `k` scaling coefficients of their parent; `G` maps them to the `k` wavelet
/// coefficients. `W` stacks `H` over `G` and is orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    k: usize,
    h0: DMatrix<f64>,
    h1: DMatrix<f64>,
    g0: DMatrix<f64>,
    g1: DMatrix<f64>,
    h: DMatrix<f64>,
    g: DMatrix<f64>,
    w: DMatrix<f64>,
    // row-major copies of H and G (k × 2k) for the transform kernels
    h_flat: Vec<f64>,
    g_flat: Vec<f64>,
}

/// Frobenius residuals of the filter identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterResiduals {
    /// `‖H⁽⁰⁾H⁽⁰⁾ᵀ + H⁽¹⁾H⁽¹⁾ᵀ − I‖`
    pub h_block: f64,
    /// `‖G⁽⁰⁾G⁽⁰⁾ᵀ + G⁽¹⁾G⁽¹⁾ᵀ − I‖`
    pub g_block: f64,
    /// `‖H⁽⁰⁾G⁽⁰⁾ᵀ + H⁽¹⁾G⁽¹⁾ᵀ‖`
    pub hg_block: f64,
    /// `‖HᵀH + GᵀG − I‖`
    pub reconstruction: f64,
    /// `max(‖HGᵀ‖, ‖GHᵀ‖)`
    pub cross: f64,
    /// `max(‖HHᵀ − I‖, ‖GGᵀ − I‖)`
    pub orthonormal_rows: f64,
    /// `‖WWᵀ − I‖`
    pub w_orthogonal: f64,
}

impl FilterResiduals {
    pub fn max(&self) -> f64 {
        [
            self.h_block,
            self.g_block,
            self.hg_block,
            self.reconstruction,
            self.cross,
            self.orthonormal_rows,
            self.w_orthogonal,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl FilterBank {
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn h0(&self) -> &DMatrix<f64> {
        &self.h0
    }
    pub fn h1(&self) -> &DMatrix<f64> {
        &self.h1
    }
    pub fn g0(&self) -> &DMatrix<f64> {
        &self.g0
    }
    pub fn g1(&self) -> &DMatrix<f64> {
        &self.g1
    }
    /// `k × 2k` low-pass filter.
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }
    /// `k × 2k` high-pass filter.
    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }
    /// `2k × 2k` orthogonal transform `[H; G]`.
    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Row-major `k × 2k` entries of `H`.
    pub fn h_row_major(&self) -> &[f64] {
        &self.h_flat
    }

    /// Row-major `k × 2k` entries of `G`.
    pub fn g_row_major(&self) -> &[f64] {
        &self.g_flat
    }

    fn from_blocks(h0: DMatrix<f64>, h1: DMatrix<f64>, g0: DMatrix<f64>, g1: DMatrix<f64>) -> Self {
        let k = h0.nrows();
        let mut h = DMatrix::zeros(k, 2 * k);
        let mut g = DMatrix::zeros(k, 2 * k);
        h.view_mut((0, 0), (k, k)).copy_from(&h0);
        h.view_mut((0, k), (k, k)).copy_from(&h1);
        g.view_mut((0, 0), (k, k)).copy_from(&g0);
        g.view_mut((0, k), (k, k)).copy_from(&g1);
        let mut w = DMatrix::zeros(2 * k, 2 * k);
        w.view_mut((0, 0), (k, 2 * k)).copy_from(&h);
        w.view_mut((k, 0), (k, 2 * k)).copy_from(&g);
        let flat = |m: &DMatrix<f64>| {
            let mut v = Vec::with_capacity(m.len());
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    v.push(m[(i, j)]);
                }
            }
            v
        };
        let h_flat = flat(&h);
        let g_flat = flat(&g);
        Self { k, h0, h1, g0, g1, h, g, w, h_flat, g_flat }
    }

    pub fn residuals(&self) -> FilterResiduals {
        let k = self.k;
        let ik = DMatrix::<f64>::identity(k, k);
        let i2k = DMatrix::<f64>::identity(2 * k, 2 * k);
        let (h0, h1, g0, g1) = (&self.h0, &self.h1, &self.g0, &self.g1);
        let (h, g) = (&self.h, &self.g);
        FilterResiduals {
            h_block: (h0 * h0.transpose() + h1 * h1.transpose() - &ik).norm(),
            g_block: (g0 * g0.transpose() + g1 * g1.transpose() - &ik).norm(),
            hg_block: (h0 * g0.transpose() + h1 * g1.transpose()).norm(),
            reconstruction: (h.transpose() * h + g.transpose() * g - &i2k).norm(),
            cross: (h * g.transpose()).norm().max((g * h.transpose()).norm()),
            orthonormal_rows: (h * h.transpose() - &ik)
                .norm()
                .max((g * g.transpose() - &ik).norm()),
            w_orthogonal: (&self.w * self.w.transpose() - &i2k).norm(),
        }
    }

    /// CSV rows `matrix,row,col,value` for `H0, H1, G0, G1` in row-major order.
    ///
    /// Values use the shortest representation that round-trips to the same
    /// `f64` (at most 17 significant digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("matrix,row,col,value\n");
        for (name, m) in [("H0", &self.h0), ("H1", &self.h1), ("G0", &self.g0), ("G1", &self.g1)] {
            for i in 0..self.k {
                for j in 0..self.k {
                    out.push_str(&format!("{name},{i},{j},{}\n", m[(i, j)]));
                }
            }
        }
        out
    }
}

/// Filter bank for order `k` from the two-scale inner products
/// `h⁽⁰⁾ᵢⱼ = ⟨φᵢ, √2 φⱼ(2·)⟩`, `h⁽¹⁾ᵢⱼ = ⟨φᵢ, √2 φⱼ(2· − 1)⟩` and likewise `g` from `ψᵢ`.
pub fn derive_filter_bank(k: usize) -> Result<FilterBank> {
    let phi = build_scaling_basis(k)?;
    let psi = build_multiwavelets(k)?;
    let (left, right) = half_interval_basis(k);
    let project = |fs: &[super::PiecewisePoly], basis: &[super::PiecewisePoly]| {
        DMatrix::from_fn(k, k, |i, j| fs[i].inner(&basis[j]))
    };
    let bank = FilterBank::from_blocks(
        project(&phi, &left),
        project(&phi, &right),
        project(&psi, &left),
        project(&psi, &right),
    );
    let res = bank.residuals();
    if res.max() > 1e-10 {
        return Err(Error::Construction(format!(
            "filter identities violated for k = {k}: {res:?}"
        )));
    }
    Ok(bank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn haar_bank() {
        let b = derive_filter_bank(1).unwrap();
        assert!((b.h0()[(0, 0)] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((b.h1()[(0, 0)] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((b.g0()[(0, 0)] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((b.g1()[(0, 0)] + FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn cross_term_vanishes_k3() {
        let b = derive_filter_bank(3).unwrap();
        assert!((b.h() * b.g().transpose()).norm() < 1e-12);
    }

    #[test]
    fn w_orthogonal_k2() {
        let b = derive_filter_bank(2).unwrap();
        let w = b.w();
        assert!((w * w.transpose() - DMatrix::identity(4, 4)).norm() < 1e-13);
    }

    #[test]
    fn identities_hold_for_all_orders() {
        for k in 1..=super::super::MAX_ORDER {
            let r = derive_filter_bank(k).unwrap().residuals();
            assert!(r.max() < 1e-12, "k={k}: {r:?}");
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(derive_filter_bank(5).unwrap(), derive_filter_bank(5).unwrap());
    }

    #[test]
    fn csv_layout() {
        let csv = derive_filter_bank(1).unwrap().to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "H0,0,0,0.7071067811865476");
        assert!(lines[4].starts_with("G1,0,0,-0.70710678118654"));
    }
}
