use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::field::{interior_spacing, Field};
use super::sparse::SparseMatrix;
use super::stencil::{poisson_operator_with, StencilKind};
use super::{conjugate_gradient, LinearOperator};

/// Maximum number of sine modes in a random smooth field.
pub const MAX_MODES: usize = 8;
/// Highest sine frequency (per axis) used in random smooth fields.
pub const MAX_FREQUENCY: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    /// Input: smooth right-hand side; target: Poisson solution.
    PoissonRhs,
    /// Input: positive coefficient κ; target: solution of −∇·(κ∇u) = 1.
    VariableCoeff,
}

impl FromStr for DatasetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson_rhs" => Ok(Self::PoissonRhs),
            "variable_coeff" => Ok(Self::VariableCoeff),
            other => Err(Error::InvalidParameter(format!(
                "unknown dataset kind `{other}` (expected poisson_rhs or variable_coeff)"
            ))),
        }
    }
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::PoissonRhs => "poisson_rhs",
            Self::VariableCoeff => "variable_coeff",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub dim: usize,
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub stencil: StencilKind,
}

impl DatasetSpec {
    pub fn new(kind: DatasetKind, dim: usize, n: usize, count: usize, seed: u64) -> Self {
        Self { kind, dim, n, count, seed, stencil: StencilKind::FivePoint }
    }
}

/// One `(a, u)` training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Field,
    pub target: Field,
}

/// Random stream for sample `index`: ChaCha20 keyed by `seed_from_u64(seed)`,
/// stream number `index`. Samples are therefore independent of generation order.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A random combination of 1..=8 sine modes, each with a uniform(−1, 1)
/// amplitude and per-axis frequency in 1..=8.
#[derive(Debug, Clone, PartialEq)]
pub struct SineSeries {
    pub terms: Vec<(f64, Vec<usize>)>,
}

impl SineSeries {
    pub fn random(rng: &mut impl Rng, dim: usize) -> Self {
        let m = rng.random_range(1..=MAX_MODES);
        let terms = (0..m)
            .map(|_| {
                let c = rng.random_range(-1.0..1.0);
                let freq = (0..dim).map(|_| rng.random_range(1..=MAX_FREQUENCY)).collect();
                (c, freq)
            })
            .collect();
        Self { terms }
    }

    /// Samples `Σ c · weight(freq) · Π sin(f_a π x_a)` on the interior grid.
    pub fn sample_weighted(&self, dim: usize, n: usize, weight: impl Fn(&[usize]) -> f64) -> Vec<f64> {
        let h = interior_spacing(n);
        let mut out = vec![0.0; n.pow(dim as u32)];
        for (c, freq) in &self.terms {
            let w = c * weight(freq);
            let axis = |f: usize| -> Vec<f64> { (1..=n).map(|i| (PI * f as f64 * i as f64 * h).sin()).collect() };
            let sx = axis(freq[dim - 1]);
            if dim == 1 {
                out.iter_mut().zip(&sx).for_each(|(o, s)| *o += w * s);
            } else {
                let sy = axis(freq[0]);
                for (y, row) in out.chunks_mut(n).enumerate() {
                    row.iter_mut().zip(&sx).for_each(|(o, s)| *o += w * sy[y] * s);
                }
            }
        }
        out
    }
}

fn check_spec(spec: &DatasetSpec) -> Result<()> {
    if spec.count == 0 {
        return Err(Error::InvalidParameter("dataset count must be >= 1".into()));
    }
    if !(1..=2).contains(&spec.dim) {
        return Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {}", spec.dim)));
    }
    if spec.n < 3 {
        return Err(Error::InvalidParameter(format!("grid needs n >= 3, got {}", spec.n)));
    }
    Ok(())
}

/// Generates `spec.count` pairs. Deterministic in `spec`; targets solve the
/// discrete problem to at least 1e-12 relative residual.
pub fn make_dataset(spec: &DatasetSpec) -> Result<Vec<Sample>> {
    check_spec(spec)?;
    (0..spec.count as u64)
        .into_par_iter()
        .map(|i| make_sample(spec, i))
        .collect()
}

pub fn make_sample(spec: &DatasetSpec, index: u64) -> Result<Sample> {
    check_spec(spec)?;
    let mut rng = sample_rng(spec.seed, index);
    let series = SineSeries::random(&mut rng, spec.dim);
    let shape = vec![spec.n; spec.dim];
    match spec.kind {
        DatasetKind::PoissonRhs => {
            let op = poisson_operator_with(spec.dim, spec.n, spec.stencil)?;
            let a = series.sample_weighted(spec.dim, spec.n, |_| 1.0);
            // sine modes are exact eigenvectors, so the solve is a diagonal scaling
            let u = series.sample_weighted(spec.dim, spec.n, |f| 1.0 / op.sine_mode_eigenvalue(f));
            Ok(Sample {
                input: Field::from_data(&shape, a)?,
                target: Field::from_data(&shape, u)?,
            })
        }
        DatasetKind::VariableCoeff => {
            let scale = 0.5 / (series.terms.len() as f64).sqrt();
            let kappa: Vec<f64> = series
                .sample_weighted(spec.dim, spec.n, |_| 1.0)
                .into_iter()
                .map(|s| (scale * s).exp())
                .collect();
            let input = Field::from_data(&shape, kappa)?;
            let op = variable_coeff_operator(&input)?;
            let f = vec![1.0; op.size()];
            let u = if spec.dim == 1 { thomas(&op, &f)? } else { conjugate_gradient(&op, &f, 1e-13, 20 * op.size())? };
            Ok(Sample { target: Field::from_data(&shape, u)?, input })
        }
    }
}

/// Assembles `−∇·(κ∇u)` with arithmetic-mean face coefficients; faces on the
/// boundary take the adjacent interior value of κ.
pub fn variable_coeff_operator(kappa: &Field) -> Result<SparseMatrix> {
    let shape = kappa.shape().to_vec();
    let k = kappa.channel(0);
    let n = kappa.plane_len();
    let mut t = Vec::with_capacity(5 * n);
    // (point index, neighbour index or None for the boundary, axis length, spacing)
    let add_axis = |stride: usize, len: usize, h: f64, t: &mut Vec<(usize, usize, f64)>| {
        let s = 1.0 / (h * h);
        for p in 0..n {
            let pos = (p / stride) % len;
            for (dir, has) in [(-1isize, pos > 0), (1, pos + 1 < len)] {
                if has {
                    let q = (p as isize + dir * stride as isize) as usize;
                    let face = 0.5 * (k[p] + k[q]) * s;
                    t.push((p, p, face));
                    t.push((p, q, -face));
                } else {
                    t.push((p, p, k[p] * s));
                }
            }
        }
    };
    match shape[..] {
        [m] => add_axis(1, m, kappa.spacing()[0], &mut t),
        [ny, nx] => {
            add_axis(1, nx, kappa.spacing()[1], &mut t);
            add_axis(nx, ny, kappa.spacing()[0], &mut t);
        }
        _ => unreachable!(),
    }
    SparseMatrix::from_triplets(n, n, t)
}

/// Direct tridiagonal solve.
fn thomas(a: &SparseMatrix, f: &[f64]) -> Result<Vec<f64>> {
    let n = f.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let lo = if i > 0 { a.get(i, i - 1) } else { 0.0 };
        let up = if i + 1 < n { a.get(i, i + 1) } else { 0.0 };
        let denom = a.get(i, i) - if i > 0 { lo * c[i - 1] } else { 0.0 };
        if denom.abs() < f64::MIN_POSITIVE {
            return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
        }
        c[i] = up / denom;
        d[i] = (f[i] - if i > 0 { lo * d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdegrid::poisson_operator;

    fn rel_residual(op: &dyn LinearOperator, s: &Sample, rhs: &[f64]) -> f64 {
        let mut au = vec![0.0; rhs.len()];
        op.apply_into(s.target.data(), &mut au);
        let num: f64 = au.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        num / rhs.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("poisson_rhs".parse::<DatasetKind>().unwrap(), DatasetKind::PoissonRhs);
        assert!("darcy".parse::<DatasetKind>().is_err());
        assert!(make_dataset(&DatasetSpec::new(DatasetKind::PoissonRhs, 1, 16, 0, 1)).is_err());
    }

    #[test]
    fn poisson_pairs_solve_the_system() {
        for dim in [1, 2] {
            let spec = DatasetSpec::new(DatasetKind::PoissonRhs, dim, 16, 8, 3);
            let op = poisson_operator(dim, 16).unwrap();
            for s in make_dataset(&spec).unwrap() {
                assert!(rel_residual(&op, &s, s.input.data()) < 1e-12);
            }
        }
    }

    #[test]
    fn variable_coeff_pairs_solve_the_system() {
        for dim in [1, 2] {
            let spec = DatasetSpec::new(DatasetKind::VariableCoeff, dim, 12, 4, 9);
            for s in make_dataset(&spec).unwrap() {
                let op = variable_coeff_operator(&s.input).unwrap();
                assert!(s.input.data().iter().all(|&k| k > 0.0));
                assert!(rel_residual(&op, &s, &vec![1.0; op.size()]) < 1e-12);
            }
        }
    }

    #[test]
    fn constant_kappa_is_poisson() {
        let kappa = Field::from_data(&[5, 5], vec![1.0; 25]).unwrap();
        let a = variable_coeff_operator(&kappa).unwrap().to_dense();
        let p = poisson_operator(2, 5).unwrap().to_sparse().to_dense();
        assert!((a - p).abs().max() < 1e-9);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let spec = DatasetSpec::new(DatasetKind::PoissonRhs, 2, 8, 5, 42);
        let a = make_dataset(&spec).unwrap();
        assert_eq!(a, make_dataset(&spec).unwrap());
        assert_eq!(a[3], make_sample(&spec, 3).unwrap());
    }
}
