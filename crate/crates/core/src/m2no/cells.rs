//! Cell layout and the kernels that act on it.
//!
//! A grid of `n` points per axis is viewed as `n/k` cells per axis, each
//! holding the `k^d` multiwavelet coefficients of every hidden channel.
//! Cell data is cell-major: `x[cell * C + ch * k^d + local]`, where `local`
//! is `i` in 1D and `iy * k + ix` in 2D and `C = channels · k^d`.

use nalgebra::DMatrix;

/// Cells per axis for a 1D or 2D grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub d: usize,
    pub n: [usize; 2],
}

impl Dims {
    pub fn new(cells: &[usize]) -> Self {
        match *cells {
            [m] => Self { d: 1, n: [m, 1] },
            [my, mx] => Self { d: 2, n: [my, mx] },
            _ => panic!("cell grids are 1D or 2D"),
        }
    }

    pub fn count(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn coarse(&self) -> Self {
        let mut c = *self;
        c.n[0] /= 2;
        if self.d == 2 {
            c.n[1] /= 2;
        }
        c
    }

    pub fn taps(&self) -> usize {
        if self.d == 1 {
            3
        } else {
            9
        }
    }
}

/// Kernel footprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Footprint {
    /// Same-cell coupling only (a 1×1 convolution).
    Point,
    /// Nearest neighbouring cells (3 taps in 1D, 3×3 in 2D).
    Full,
}

impl Footprint {
    pub fn taps(self, dims: Dims) -> usize {
        match self {
            Self::Point => 1,
            Self::Full => dims.taps(),
        }
    }
}

/// `(output cell, input cell, tap)` triples of a zero-padded convolution.
fn for_each_pair(dims: Dims, fp: Footprint, mut f: impl FnMut(usize, usize, usize)) {
    match fp {
        Footprint::Point => (0..dims.count()).for_each(|p| f(p, p, 0)),
        Footprint::Full if dims.d == 1 => {
            let m = dims.n[0];
            for p in 0..m {
                for t in 0..3 {
                    let q = p + t;
                    if q >= 1 && q <= m {
                        f(p, q - 1, t);
                    }
                }
            }
        }
        Footprint::Full => {
            let [my, mx] = dims.n;
            for y in 0..my {
                for x in 0..mx {
                    for ty in 0..3 {
                        let yy = y + ty;
                        if yy < 1 || yy > my {
                            continue;
                        }
                        for tx in 0..3 {
                            let xx = x + tx;
                            if xx >= 1 && xx <= mx {
                                f(y * mx + x, (yy - 1) * mx + xx - 1, 3 * ty + tx);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Weights `w[(co * cin + ci) * taps + t]` regrouped as one `cout × cin` matrix per tap.
fn per_tap(w: &[f64], cin: usize, cout: usize, taps: usize) -> Vec<Vec<f64>> {
    (0..taps)
        .map(|t| (0..cout * cin).map(|i| w[i * taps + t]).collect())
        .collect()
}

/// `y = scale · (W ∗ x)`
pub fn conv_forward(w: &[f64], x: &[f64], dims: Dims, fp: Footprint, cin: usize, cout: usize, scale: f64) -> Vec<f64> {
    let taps = fp.taps(dims);
    let wt = per_tap(w, cin, cout, taps);
    let mut y = vec![0.0; dims.count() * cout];
    for_each_pair(dims, fp, |p, q, t| {
        let (xs, ys) = (&x[q * cin..(q + 1) * cin], &mut y[p * cout..(p + 1) * cout]);
        for (co, yv) in ys.iter_mut().enumerate() {
            let row = &wt[t][co * cin..(co + 1) * cin];
            *yv += row.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
        }
    });
    if scale != 1.0 {
        y.iter_mut().for_each(|v| *v *= scale);
    }
    y
}

/// Accumulates `∂/∂x` and `∂/∂W` of [`conv_forward`] given the upstream gradient `dy`.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward(
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    dims: Dims,
    fp: Footprint,
    cin: usize,
    cout: usize,
    scale: f64,
    dx: Option<&mut [f64]>,
    dw: Option<&mut [f64]>,
) {
    let taps = fp.taps(dims);
    if let Some(dx) = dx {
        let wt = per_tap(w, cin, cout, taps);
        for_each_pair(dims, fp, |p, q, t| {
            let g = &dy[p * cout..(p + 1) * cout];
            let d = &mut dx[q * cin..(q + 1) * cin];
            for (co, gv) in g.iter().enumerate() {
                let s = scale * gv;
                if s != 0.0 {
                    let row = &wt[t][co * cin..(co + 1) * cin];
                    d.iter_mut().zip(row).for_each(|(d, w)| *d += s * w);
                }
            }
        });
    }
    if let Some(dw) = dw {
        let mut acc = vec![vec![0.0; cout * cin]; taps];
        for_each_pair(dims, fp, |p, q, t| {
            let g = &dy[p * cout..(p + 1) * cout];
            let xs = &x[q * cin..(q + 1) * cin];
            let a = &mut acc[t];
            for (co, gv) in g.iter().enumerate() {
                if *gv != 0.0 {
                    a[co * cin..(co + 1) * cin].iter_mut().zip(xs).for_each(|(a, x)| *a += gv * x);
                }
            }
        });
        for (t, a) in acc.iter().enumerate() {
            for (i, v) in a.iter().enumerate() {
                dw[i * taps + t] += scale * v;
            }
        }
    }
}

/// Dense `k^d × (2k)^d` transfer acting on a `2 × … × 2` group of cells,
/// columns ordered `(y-half, y-basis, x-half, x-basis)`.
pub fn patch_matrix(filters: &[&DMatrix<f64>]) -> Vec<f64> {
    let m = match filters {
        [f] => (*f).clone(),
        [fy, fx] => fy.kronecker(fx),
        _ => unreachable!(),
    };
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        out.extend(m.row(i).iter());
    }
    out
}

/// Fine `(cell, local)` position of patch column `j`.
fn patch_source(j: usize, coarse_cell: usize, fine: Dims, k: usize) -> (usize, usize) {
    if fine.d == 1 {
        (2 * coarse_cell + j / k, j % k)
    } else {
        let two_k = 2 * k;
        let (jy, jx) = (j / two_k, j % two_k);
        let cmx = fine.n[1] / 2;
        let (cy, cx) = (coarse_cell / cmx, coarse_cell % cmx);
        let cell = (2 * cy + jy / k) * fine.n[1] + 2 * cx + jx / k;
        (cell, (jy % k) * k + jx % k)
    }
}

/// Applies a patch transfer to every channel: fine `dims` → coarse.
pub fn patch_forward(mat: &[f64], x: &[f64], fine: Dims, channels: usize, k: usize) -> Vec<f64> {
    let kd = k.pow(fine.d as u32);
    let cols = kd << fine.d;
    let coarse = fine.coarse();
    let cc = channels * kd;
    let fc = channels * kd;
    let mut y = vec![0.0; coarse.count() * cc];
    let mut patch = vec![0.0; cols];
    for cell in 0..coarse.count() {
        for ch in 0..channels {
            for (j, pv) in patch.iter_mut().enumerate() {
                let (src, local) = patch_source(j, cell, fine, k);
                *pv = x[src * fc + ch * kd + local];
            }
            for i in 0..kd {
                let row = &mat[i * cols..(i + 1) * cols];
                y[cell * cc + ch * kd + i] = row.iter().zip(&patch).map(|(a, b)| a * b).sum();
            }
        }
    }
    y
}

/// Adds the transpose of [`patch_forward`] applied to coarse `y` into fine `out`.
pub fn patch_transpose_add(mat: &[f64], y: &[f64], fine: Dims, channels: usize, k: usize, out: &mut [f64]) {
    let kd = k.pow(fine.d as u32);
    let cols = kd << fine.d;
    let coarse = fine.coarse();
    let c = channels * kd;
    for cell in 0..coarse.count() {
        for ch in 0..channels {
            let yc = &y[cell * c + ch * kd..cell * c + (ch + 1) * kd];
            for j in 0..cols {
                let s: f64 = (0..kd).map(|i| mat[i * cols + j] * yc[i]).sum();
                let (dst, local) = patch_source(j, cell, fine, k);
                out[dst * c + ch * kd + local] += s;
            }
        }
    }
}

/// Point-layout planes (channel-major, row-major) → cell layout.
pub fn to_cells(planes: &[f64], shape: &[usize], channels: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; planes.len()];
    map_layout(shape, channels, k, |point, cell| out[cell] = planes[point]);
    out
}

/// Inverse of [`to_cells`].
pub fn from_cells(cells: &[f64], shape: &[usize], channels: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; cells.len()];
    map_layout(shape, channels, k, |point, cell| out[point] = cells[cell]);
    out
}

fn map_layout(shape: &[usize], channels: usize, k: usize, mut f: impl FnMut(usize, usize)) {
    let plane: usize = shape.iter().product();
    match *shape {
        [n] => {
            let c = channels * k;
            for ch in 0..channels {
                for p in 0..n {
                    f(ch * plane + p, (p / k) * c + ch * k + p % k);
                }
            }
        }
        [ny, nx] => {
            let kd = k * k;
            let c = channels * kd;
            let mx = nx / k;
            for ch in 0..channels {
                for y in 0..ny {
                    for x in 0..nx {
                        let cell = (y / k) * mx + x / k;
                        f(ch * plane + y * nx + x, cell * c + ch * kd + (y % k) * k + x % k);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
}

/// Exact GELU `x Φ(x)`.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2))
}

pub fn gelu_derivative(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multigrid;
    use crate::pdegrid::Field;
    use crate::polywavelet::derive_filter_bank;

    fn noise(n: usize, seed: f64) -> Vec<f64> {
        (0..n).map(|i| ((i as f64 + seed) * 12.9898).sin() * 43758.5453 % 1.0).collect()
    }

    #[test]
    fn layout_round_trip() {
        for shape in [vec![12], vec![6, 4]] {
            let n: usize = shape.iter().product::<usize>() * 3;
            let x = noise(n, 0.5);
            assert_eq!(from_cells(&to_cells(&x, &shape, 3, 2), &shape, 3, 2), x);
        }
    }

    #[test]
    fn cell_restriction_matches_point_restriction() {
        let k = 2;
        let bank = derive_filter_bank(k).unwrap();
        for shape in [vec![16], vec![8, 8]] {
            let channels = 2;
            let n: usize = shape.iter().product();
            let x = noise(n * channels, 1.5);
            let f = Field::new(shape.clone(), channels, vec![0.1; shape.len()], x.clone()).unwrap();
            let want = multigrid::restrict(&f, &bank).unwrap();
            let cells: Vec<usize> = shape.iter().map(|s| s / k).collect();
            let filters = vec![bank.h(); shape.len()];
            let got = patch_forward(&patch_matrix(&filters), &to_cells(&x, &shape, channels, k), Dims::new(&cells), channels, k);
            let got = from_cells(&got, want.shape(), channels, k);
            for (a, b) in got.iter().zip(want.data()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn transposes_are_adjoint() {
        let k = 2;
        let bank = derive_filter_bank(k).unwrap();
        let mat = patch_matrix(&[bank.g(), bank.h()]);
        let fine = Dims::new(&[4, 6]);
        let c = 2 * k * k;
        let x = noise(fine.count() * c, 0.1);
        let y = noise(fine.coarse().count() * c, 0.9);
        let ax = patch_forward(&mat, &x, fine, 2, k);
        let mut aty = vec![0.0; x.len()];
        patch_transpose_add(&mat, &y, fine, 2, k, &mut aty);
        let l: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
        let r: f64 = x.iter().zip(&aty).map(|(a, b)| a * b).sum();
        assert!((l - r).abs() < 1e-12);

        let w = noise(c * c * 9, 2.0);
        let cx = conv_forward(&w, &x, fine, Footprint::Full, c, c, 0.7);
        let yy = noise(cx.len(), 3.0);
        let mut dx = vec![0.0; x.len()];
        conv_backward(&w, &x, &yy, fine, Footprint::Full, c, c, 0.7, Some(&mut dx), None);
        let l: f64 = cx.iter().zip(&yy).map(|(a, b)| a * b).sum();
        let r: f64 = x.iter().zip(&dx).map(|(a, b)| a * b).sum();
        assert!((l - r).abs() < 1e-11);
    }

    #[test]
    fn gelu_values() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(1.0) - 0.8413447460685429).abs() < 1e-15);
        let h = 1e-6;
        for x in [-2.0, -0.3, 0.0, 0.8, 3.0] {
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_derivative(x)).abs() < 1e-9);
        }
    }
}
