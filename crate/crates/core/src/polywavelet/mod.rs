//! Orthonormal Legendre scaling functions, Alpert multiwavelets and the
//! derived two-scale filter bank, all on `[0, 1]` under the uniform measure.
//!
//! Every function lives in a [`PiecewisePoly`] whose pieces carry
//! coefficients in the local L²-orthonormal Legendre basis of the piece, so
//! evaluation is stable up to order 16 and dilation/translation only remaps
//! intervals.

mod bank;
pub mod quadrature;

pub use bank::{derive_filter_bank, FilterBank, FilterResiduals};

use crate::error::{Error, Result};
use quadrature::{gauss_legendre, nodes_for_order, shifted_legendre};

/// Largest supported basis order.
pub const MAX_ORDER: usize = 16;

/// One polynomial piece on `[lo, hi)`.
///
/// `coeffs[j]` multiplies `(hi - lo)^{-1/2} φ_j((x - lo) / (hi - lo))`, i.e. the
/// orthonormal shifted Legendre basis of the piece.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl Piece {
    fn eval(&self, x: f64, scratch: &mut Vec<f64>) -> f64 {
        let width = self.hi - self.lo;
        scratch.resize(self.coeffs.len(), 0.0);
        shifted_legendre((x - self.lo) / width, scratch);
        let s: f64 = self.coeffs.iter().zip(scratch.iter()).map(|(c, p)| c * p).sum();
        s * (1.0 / width).sqrt()
    }
}

/// A piecewise polynomial on sorted, disjoint half-open pieces, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    pieces: Vec<Piece>,
}

impl PiecewisePoly {
    pub fn new(mut pieces: Vec<Piece>) -> Result<Self> {
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for p in &pieces {
            if p.lo.is_nan() || p.hi.is_nan() || p.lo >= p.hi || p.lo < 0.0 || p.hi > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "piece [{}, {}) outside [0, 1]",
                    p.lo, p.hi
                )));
            }
        }
        for w in pieces.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::InvalidParameter("overlapping pieces".into()));
            }
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Highest polynomial degree over all pieces.
    pub fn degree(&self) -> usize {
        self.pieces
            .iter()
            .map(|p| p.coeffs.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut scratch = Vec::new();
        self.eval_with(x, &mut scratch)
    }

    fn eval_with(&self, x: f64, scratch: &mut Vec<f64>) -> f64 {
        match self.piece_at(x) {
            Some(p) => p.eval(x, scratch),
            None => 0.0,
        }
    }

    fn piece_at(&self, x: f64) -> Option<&Piece> {
        let idx = self.pieces.partition_point(|p| p.lo <= x);
        if idx == 0 {
            return None;
        }
        let p = &self.pieces[idx - 1];
        (x < p.hi).then_some(p)
    }

    /// `2^{n/2} f(2^n x - l)`: the level-`n` dilate shifted to cell `l`.
    pub fn dilate(&self, level: u32, shift: usize) -> Result<Self> {
        let scale = (1u64 << level) as f64;
        if shift as f64 >= scale {
            return Err(Error::InvalidParameter(format!(
                "shift {shift} out of range for level {level}"
            )));
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                lo: (p.lo + shift as f64) / scale,
                hi: (p.hi + shift as f64) / scale,
                coeffs: p.coeffs.clone(),
            })
            .collect();
        Ok(Self { pieces })
    }

    /// `∫₀¹ f g dx`, exact up to rounding: Gauss–Legendre on every sub-interval
    /// of the merged breakpoints with enough nodes for the product degree.
    pub fn inner(&self, other: &PiecewisePoly) -> f64 {
        let m = (self.degree() + other.degree()) / 2 + 1;
        self.integrate_product(other, m, |_| 1.0)
    }

    /// `∫₀¹ f(x) x^p dx`, exact up to rounding.
    pub fn moment(&self, p: u32) -> f64 {
        let m = (self.degree() + p as usize) / 2 + 1;
        let one = PiecewisePoly {
            pieces: vec![Piece {
                lo: 0.0,
                hi: 1.0,
                coeffs: vec![1.0],
            }],
        };
        self.integrate_product(&one, m, |x| x.powi(p as i32))
    }

    fn integrate_product(&self, other: &PiecewisePoly, m: usize, weight: impl Fn(f64) -> f64) -> f64 {
        let mut breaks: Vec<f64> = self
            .pieces
            .iter()
            .chain(other.pieces.iter())
            .flat_map(|p| [p.lo, p.hi])
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut sa = Vec::new();
        let mut sb = Vec::new();
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let (Some(pa), Some(pb)) = (self.piece_at(mid), other.piece_at(mid)) else {
                continue;
            };
            let (xs, ws) = gauss_legendre(m, lo, hi);
            for (x, wt) in xs.iter().zip(&ws) {
                total += wt * pa.eval(*x, &mut sa) * pb.eval(*x, &mut sb) * weight(*x);
            }
        }
        total
    }

    fn single(lo: f64, hi: f64, coeffs: Vec<f64>) -> Self {
        Self {
            pieces: vec![Piece { lo, hi, coeffs }],
        }
    }
}

pub(crate) fn check_order(k: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidOrder(k))
    }
}

fn unit(k: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[j] = 1.0;
    v
}

/// Orthonormal scaling functions `φ_0..φ_{k-1}` (shifted Legendre, one piece each).
pub fn build_scaling_basis(k: usize) -> Result<Vec<PiecewisePoly>> {
    check_order(k)?;
    Ok((0..k).map(|j| PiecewisePoly::single(0.0, 1.0, unit(k, j))).collect())
}

/// Orthonormal basis `√2 φ_j(2x)`, `√2 φ_j(2x - 1)` of the fine space on the two halves.
pub(crate) fn half_interval_basis(k: usize) -> (Vec<PiecewisePoly>, Vec<PiecewisePoly>) {
    let left = (0..k).map(|j| PiecewisePoly::single(0.0, 0.5, unit(k, j))).collect();
    let right = (0..k).map(|j| PiecewisePoly::single(0.5, 1.0, unit(k, j))).collect();
    (left, right)
}

/// Coordinates of `f(x)` in the two-half orthonormal basis, computed by quadrature.
fn fine_coordinates(k: usize, mut f: impl FnMut(f64) -> f64) -> Vec<f64> {
    let m = nodes_for_order(k);
    let mut out = vec![0.0; 2 * k];
    let mut phi = vec![0.0; k];
    for (half, lo) in [(0usize, 0.0), (1, 0.5)] {
        let (xs, ws) = gauss_legendre(m, lo, lo + 0.5);
        for (x, w) in xs.iter().zip(&ws) {
            shifted_legendre(2.0 * (x - lo), &mut phi);
            let fx = f(*x);
            for j in 0..k {
                out[half * k + j] += w * fx * std::f64::consts::SQRT_2 * phi[j];
            }
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Multiwavelets `ψ_0..ψ_{k-1}` on `[0,½)`, `[½,1)`.
///
/// Seeds `sign(x - ½) φ_j(x)` in increasing degree are orthogonalized against
/// every `φ_i` and then against each other (two Gram–Schmidt passes). Each
/// `ψ_j` is scaled so that its first non-negligible left-piece coefficient is
/// positive.
pub fn build_multiwavelets(k: usize) -> Result<Vec<PiecewisePoly>> {
    let scaling = build_scaling_basis(k)?;
    let mut phi_t = vec![0.0; k];
    let scaling_coords: Vec<Vec<f64>> = scaling
        .iter()
        .map(|p| fine_coordinates(k, |x| p.eval(x)))
        .collect();
    let mut psi: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut v = fine_coordinates(k, |x| {
            shifted_legendre(x, &mut phi_t);
            let s = if x < 0.5 { -1.0 } else { 1.0 };
            s * phi_t[j]
        });
        let seed_norm = dot(&v, &v).sqrt();
        for _pass in 0..2 {
            for b in scaling_coords.iter().chain(psi.iter()) {
                let a = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= a * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-10 * seed_norm.max(1.0) {
            return Err(Error::Construction(format!(
                "Gram-Schmidt pivot {norm:e} for multiwavelet {j} (k = {k})"
            )));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let lead = v[..k].iter().copied().find(|c| c.abs() > 1e-8).unwrap_or(0.0);
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        psi.push(v);
    }
    psi.into_iter()
        .map(|v| {
            PiecewisePoly::new(vec![
                Piece {
                    lo: 0.0,
                    hi: 0.5,
                    coeffs: v[..k].to_vec(),
                },
                Piece {
                    lo: 0.5,
                    hi: 1.0,
                    coeffs: v[k..].to_vec(),
                },
            ])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram(fs: &[PiecewisePoly]) -> Vec<Vec<f64>> {
        fs.iter().map(|a| fs.iter().map(|b| a.inner(b)).collect()).collect()
    }

    #[test]
    fn order_bounds() {
        assert!(matches!(build_scaling_basis(0), Err(Error::InvalidOrder(0))));
        assert!(matches!(build_multiwavelets(17), Err(Error::InvalidOrder(17))));
    }

    #[test]
    fn constant_and_linear_scaling_functions() {
        let b = build_scaling_basis(2).unwrap();
        for &x in &[0.0, 0.3, 0.99] {
            assert!((b[0].eval(x) - 1.0).abs() < 1e-15);
            assert!((b[1].eval(x) - 3f64.sqrt() * (2.0 * x - 1.0)).abs() < 1e-14);
        }
        assert_eq!(b[1].eval(1.0), 0.0);
    }

    #[test]
    fn haar_wavelet() {
        let psi = build_multiwavelets(1).unwrap();
        assert!((psi[0].eval(0.2) - 1.0).abs() < 1e-14);
        assert!((psi[0].eval(0.7) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn scaling_gram_is_identity() {
        let g = gram(&build_scaling_basis(4).unwrap());
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-14, "({i},{j}) = {v}");
            }
        }
    }

    #[test]
    fn joint_gram_is_identity_k4() {
        let mut all = build_scaling_basis(4).unwrap();
        all.extend(build_multiwavelets(4).unwrap());
        let g = gram(&all);
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-12, "({i},{j}) = {v}");
            }
        }
    }

    #[test]
    fn vanishing_moments_k2() {
        for psi in build_multiwavelets(2).unwrap() {
            for p in 0..2 {
                assert!(psi.moment(p).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn all_orders_construct() {
        for k in 1..=MAX_ORDER {
            let psi = build_multiwavelets(k).unwrap();
            assert_eq!(psi.len(), k);
            for (j, p) in psi.iter().enumerate() {
                assert_eq!(p.pieces().len(), 2);
                assert!((p.inner(p) - 1.0).abs() < 1e-12, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn dilation_matches_direct_evaluation() {
        let k = 3;
        let phi = build_scaling_basis(k).unwrap();
        let psi = build_multiwavelets(k).unwrap();
        for n in 0..4u32 {
            let scale = (1u64 << n) as f64;
            for l in [0usize, (1usize << n) - 1] {
                for f in phi.iter().chain(psi.iter()) {
                    let d = f.dilate(n, l).unwrap();
                    for i in 0..1000 {
                        let x = (i as f64 + 0.37) / 1000.0;
                        let y = scale * x - l as f64;
                        let direct = if (0.0..1.0).contains(&y) {
                            scale.sqrt() * f.eval(y)
                        } else {
                            0.0
                        };
                        assert!((d.eval(x) - direct).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn overlapping_pieces_rejected() {
        let p = |lo, hi| Piece { lo, hi, coeffs: vec![1.0] };
        assert!(PiecewisePoly::new(vec![p(0.0, 0.6), p(0.5, 1.0)]).is_err());
        assert!(PiecewisePoly::new(vec![p(0.5, 1.2)]).is_err());
    }
}
