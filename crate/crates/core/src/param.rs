//! Flat parameter vectors and the little dense arithmetic used everywhere.

use serde::{Deserialize, Serialize};

/// A flat vector of 64-bit model parameters.
///
/// The length is fixed by the owning [`crate::model::ModelSpec`] and never
/// changes after construction. Layout is weights-then-biases, layer by
/// layer, row-major; see [`crate::model`] for the per-kind breakdown.
///
/// Length mismatches in the arithmetic helpers are programmer error and
/// panic; the public model operations validate shapes and return `Err`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "dot: length mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self *= a`
    pub fn scale(&mut self, a: f64) {
        for x in &mut self.values {
            *x *= a;
        }
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        assert_eq!(self.len(), x.len(), "axpy: length mismatch");
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    /// Raw little-endian bytes of the values, in order. Used for hashing
    /// and the checkpoint format.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for ParamVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_axpy() {
        let a = ParamVector::from_vec(vec![1.0, 2.0, 3.0]);
        let b = ParamVector::from_vec(vec![4.0, -1.0, 0.5]);
        assert_eq!(a.dot(&b), 4.0 - 2.0 + 1.5);
        let mut c = a.clone();
        c.axpy(2.0, &b);
        assert_eq!(c.as_slice(), &[9.0, 0.0, 4.0]);
    }

    #[test]
    fn finiteness() {
        let mut a = ParamVector::zeros(2);
        assert!(a.all_finite());
        a[1] = f64::NAN;
        assert!(!a.all_finite());
    }
}
