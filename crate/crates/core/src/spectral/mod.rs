//! Radix-2 FFTs and radially binned energy spectra of error fields.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Complex;

use crate::error::{shape_bail, Result};
use crate::pdegrid::Field;

pub type C64 = Complex<f64>;

/// In-place forward DFT `X_m = Σ_j x_j e^{−2πi jm/n}` for power-of-two `n`.
pub fn fft_in_place(x: &mut [C64]) -> Result<()> {
    let n = x.len();
    if !n.is_power_of_two() {
        shape_bail!("FFT length {n} is not a power of two");
    }
    let bits = n.trailing_zeros();
    if bits == 0 {
        return Ok(());
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            x.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        // twiddles computed directly rather than by recurrence to keep errors at O(ε log n)
        let tw: Vec<C64> = (0..half).map(|t| C64::from_polar(1.0, -2.0 * PI * t as f64 / len as f64)).collect();
        for start in (0..n).step_by(len) {
            for t in 0..half {
                let a = x[start + t];
                let b = x[start + t + half] * tw[t];
                x[start + t] = a + b;
                x[start + t + half] = a - b;
            }
        }
        len *= 2;
    }
    Ok(())
}

/// Complex `ny × nx` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    pub ny: usize,
    pub nx: usize,
    pub data: Vec<C64>,
}

impl ComplexGrid {
    pub fn get(&self, y: usize, x: usize) -> C64 {
        self.data[y * self.nx + x]
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Unnormalized 2D DFT of a single-channel power-of-two field.
pub fn fft2(field: &Field) -> Result<ComplexGrid> {
    let (ny, nx) = match (field.shape(), field.channels()) {
        (&[ny, nx], 1) => (ny, nx),
        (s, c) => shape_bail!("fft2 needs a single-channel 2D field, got {s:?} x {c}"),
    };
    if !ny.is_power_of_two() || !nx.is_power_of_two() {
        shape_bail!("fft2 needs power-of-two axes, got {ny}x{nx}");
    }
    let mut data: Vec<C64> = field.data().iter().map(|&v| C64::new(v, 0.0)).collect();
    for row in data.chunks_mut(nx) {
        fft_in_place(row)?;
    }
    let mut col = vec![C64::new(0.0, 0.0); ny];
    for x in 0..nx {
        for y in 0..ny {
            col[y] = data[y * nx + x];
        }
        fft_in_place(&mut col)?;
        for y in 0..ny {
            data[y * nx + x] = col[y];
        }
    }
    Ok(ComplexGrid { ny, nx, data })
}

/// Signed frequency of DFT index `i` on an axis of length `n` (DC at 0,
/// Nyquist at `−n/2`).
pub fn centered_frequency(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Integer radial bin `⌊‖ξ‖⌋` of index `(y, x)`.
pub fn radial_bin(y: usize, x: usize, ny: usize, nx: usize) -> usize {
    let (fy, fx) = (centered_frequency(y, ny), centered_frequency(x, nx));
    let r2 = (fy * fy + fx * fx) as u64;
    // exact integer square root to avoid float rounding at perfect squares
    let mut r = (r2 as f64).sqrt() as u64;
    while r * r > r2 {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= r2 {
        r += 1;
    }
    r as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumBin {
    pub radius: usize,
    pub count: usize,
    pub average_energy: f64,
}

/// Mean `|û|²` per integer-radius annulus.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<SpectrumBin>,
}

impl Spectrum {
    /// `Σ count · average`, which equals the total spectral energy.
    pub fn total_energy(&self) -> f64 {
        self.bins.iter().map(|b| b.count as f64 * b.average_energy).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin,average_energy\n");
        for b in &self.bins {
            writeln!(s, "{},{:e}", b.radius, b.average_energy).unwrap();
        }
        s
    }
}

fn bin_power(power: &[f64], ny: usize, nx: usize) -> Spectrum {
    let max = radial_bin(ny / 2, nx / 2, ny, nx);
    let mut sum = vec![0.0; max + 1];
    let mut count = vec![0usize; max + 1];
    for y in 0..ny {
        for x in 0..nx {
            let r = radial_bin(y, x, ny, nx);
            sum[r] += power[y * nx + x];
            count[r] += 1;
        }
    }
    let bins = (0..=max)
        .filter(|&r| count[r] > 0)
        .map(|r| SpectrumBin { radius: r, count: count[r], average_energy: sum[r] / count[r] as f64 })
        .collect();
    Spectrum { bins }
}

/// Radial energy spectrum of one field.
pub fn radial_spectrum(error_field: &Field) -> Result<Spectrum> {
    let g = fft2(error_field)?;
    let power: Vec<f64> = g.data.iter().map(|c| c.norm_sqr()).collect();
    Ok(bin_power(&power, g.ny, g.nx))
}

/// Spectrum of a set of error fields: `|û|²` is averaged over the set before binning.
pub fn mean_radial_spectrum(fields: &[Field]) -> Result<Spectrum> {
    let Some(first) = fields.first() else {
        shape_bail!("mean spectrum of an empty set");
    };
    let mut acc: Vec<f64> = Vec::new();
    let (mut ny, mut nx) = (0, 0);
    for f in fields {
        first.check_layout(f, "spectrum set")?;
        let g = fft2(f)?;
        (ny, nx) = (g.ny, g.nx);
        acc.resize(g.data.len(), 0.0);
        acc.iter_mut().zip(&g.data).for_each(|(a, c)| *a += c.norm_sqr());
    }
    let m = fields.len() as f64;
    acc.iter_mut().for_each(|a| *a /= m);
    Ok(bin_power(&acc, ny, nx))
}
