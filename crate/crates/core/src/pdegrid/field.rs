use crate::error::{shape_bail, Error, Result};

/// Real-valued samples on a 1D or 2D grid.
///
/// Storage is channel-major: channel `c` occupies the contiguous plane
/// `data[c * plane_len .. (c + 1) * plane_len]`, and each plane is row-major
/// (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    shape: Vec<usize>,
    channels: usize,
    spacing: Vec<f64>,
    data: Vec<f64>,
}

/// Default Dirichlet grid spacing for `n` interior points on the unit interval.
pub fn interior_spacing(n: usize) -> f64 {
    1.0 / (n as f64 + 1.0)
}

impl Field {
    pub fn new(shape: Vec<usize>, channels: usize, spacing: Vec<f64>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 2 {
            shape_bail!("fields are 1D or 2D, got {} axes", shape.len());
        }
        if shape.contains(&0) || channels == 0 {
            shape_bail!("empty field shape {shape:?} x {channels}");
        }
        if spacing.len() != shape.len() {
            shape_bail!("spacing has {} entries for {} axes", spacing.len(), shape.len());
        }
        let expected = shape.iter().product::<usize>() * channels;
        if data.len() != expected {
            shape_bail!("data length {} != {expected} for shape {shape:?} x {channels}", data.len());
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at index {i}")));
        }
        Ok(Self { shape, channels, spacing, data })
    }

    pub fn zeros(shape: &[usize], channels: usize) -> Self {
        let spacing = shape.iter().map(|&n| interior_spacing(n)).collect();
        let len = shape.iter().product::<usize>() * channels;
        Self {
            shape: shape.to_vec(),
            channels,
            spacing,
            data: vec![0.0; len],
        }
    }

    /// Single-channel field with default spacing.
    pub fn from_data(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let spacing = shape.iter().map(|&n| interior_spacing(n)).collect();
        Self::new(shape.to_vec(), 1, spacing, data)
    }

    pub fn from_1d(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::from_data(&[n], data)
    }

    /// Same layout as `self`, new values. Finiteness is not rechecked.
    pub(crate) fn like(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            shape: self.shape.clone(),
            channels: self.channels,
            spacing: self.spacing.clone(),
            data,
        }
    }

    pub(crate) fn from_parts(shape: Vec<usize>, channels: usize, spacing: Vec<f64>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>() * channels, data.len());
        Self { shape, channels, spacing, data }
    }

    pub fn with_spacing(mut self, spacing: Vec<f64>) -> Result<Self> {
        if spacing.len() != self.shape.len() {
            shape_bail!("spacing has {} entries for {} axes", spacing.len(), self.shape.len());
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn dim(&self) -> usize {
        self.shape.len()
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }
    pub fn plane_len(&self) -> usize {
        self.shape.iter().product()
    }
    pub fn len(&self) -> usize {
        self.data.len()
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let p = self.plane_len();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let p = self.plane_len();
        &mut self.data[c * p..(c + 1) * p]
    }

    pub fn same_layout(&self, other: &Field) -> bool {
        self.shape == other.shape && self.channels == other.channels
    }

    pub(crate) fn check_layout(&self, other: &Field, what: &str) -> Result<()> {
        if !self.same_layout(other) {
            shape_bail!(
                "{what}: {:?} x {} vs {:?} x {}",
                self.shape,
                self.channels,
                other.shape,
                other.channels
            );
        }
        Ok(())
    }

    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.check_layout(other, "dot")?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_layout(other, "add")?;
        Ok(self.like(self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_layout(other, "sub")?;
        Ok(self.like(self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect()))
    }

    pub fn scaled(&self, alpha: f64) -> Field {
        self.like(self.data.iter().map(|a| alpha * a).collect())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Field) -> Result<()> {
        self.check_layout(other, "axpy")?;
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += alpha * b);
        Ok(())
    }

    /// Relative difference `‖self − other‖ / ‖other‖` (absolute when `other` is zero).
    pub fn relative_error(&self, reference: &Field) -> Result<f64> {
        let diff = self.sub(reference)?.norm();
        let scale = reference.norm();
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_data() {
        assert!(Field::from_data(&[3], vec![1.0, 2.0]).is_err());
        assert!(Field::from_data(&[2], vec![1.0, f64::NAN]).is_err());
        assert!(Field::from_data(&[2, 2, 2], vec![0.0; 8]).is_err());
    }

    #[test]
    fn channel_planes() {
        let f = Field::new(vec![2], 2, vec![0.5], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.channel(1), &[3.0, 4.0]);
        assert_eq!(f.norm(), 30f64.sqrt());
    }

    #[test]
    fn arithmetic_checks_layout() {
        let a = Field::from_1d(vec![1.0, 2.0]).unwrap();
        let b = Field::from_1d(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(a.add(&b).is_err());
        let mut c = a.clone();
        c.axpy(2.0, &a).unwrap();
        assert_eq!(c.data(), &[3.0, 6.0]);
    }
}
