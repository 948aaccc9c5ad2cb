//! Gauss–Legendre rules and normalized shifted Legendre polynomials.

/// Gauss–Legendre nodes and weights on `[lo, hi]` with `m` points.
///
/// Nodes come from Newton iteration on `P_m`; the rule integrates
/// polynomials of degree `2m - 1` exactly.
pub fn gauss_legendre(m: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "quadrature needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let half = (hi - lo) / 2.0;
    let mid = (hi + lo) / 2.0;
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(m, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[m - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[m - 1 - i] = half * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for n in 1..m {
        let n = n as f64;
        let p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Values of the L²([0,1])-orthonormal shifted Legendre polynomials
/// `φ_0..φ_{k-1}` at `t`, written into `out`.
pub fn shifted_legendre(t: f64, out: &mut [f64]) {
    let k = out.len();
    if k == 0 {
        return;
    }
    let s = 2.0 * t - 1.0;
    let mut p0 = 1.0;
    out[0] = 1.0;
    if k == 1 {
        return;
    }
    let mut p1 = s;
    out[1] = 3f64.sqrt() * s;
    for n in 1..k - 1 {
        let nf = n as f64;
        let p2 = ((2.0 * nf + 1.0) * s * p1 - nf * p0) / (nf + 1.0);
        p0 = p1;
        p1 = p2;
        out[n + 1] = (2.0 * (n + 1) as f64 + 1.0).sqrt() * p2;
    }
}

/// Node count used for inner products between order-`k` functions.
pub fn nodes_for_order(k: usize) -> usize {
    (2 * k + 1).div_ceil(2) + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_monomials_exactly() {
        for m in 1..=20 {
            let (x, w) = gauss_legendre(m, 0.0, 1.0);
            for p in 0..(2 * m) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = 1.0 / (p as f64 + 1.0);
                assert!((q - exact).abs() < 1e-14, "m={m} p={p} q={q}");
            }
        }
    }

    #[test]
    fn legendre_low_orders() {
        let mut v = [0.0; 3];
        shifted_legendre(0.25, &mut v);
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 3f64.sqrt() * (-0.5)).abs() < 1e-15);
        // P2(s) = (3s^2 - 1)/2 at s = -0.5
        assert!((v[2] - 5f64.sqrt() * (-0.125)).abs() < 1e-15);
    }
}
