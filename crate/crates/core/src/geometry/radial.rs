use std::ops::{Add, Index, Mul, Neg, Sub};

/// A U(1)-invariant function, stored as its values at the background's
/// collocation nodes in the reference moment coordinate.
///
/// Smooth invariant functions on the compact manifold are exactly the smooth
/// functions of the moment coordinate on the closed interval, so the values
/// at the Lobatto nodes (endpoints included) determine the profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    values: Vec<f64>,
}

impl RadialFunction {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn constant(len: usize, c: f64) -> Self {
        Self {
            values: vec![c; len],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self + t (other − self)`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        self.zip_with(other, |a, b| a + t * (b - a))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl From<Vec<f64>> for RadialFunction {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

impl Index<usize> for RadialFunction {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl Add for &RadialFunction {
    type Output = RadialFunction;

    fn add(self, rhs: Self) -> RadialFunction {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &RadialFunction {
    type Output = RadialFunction;

    fn sub(self, rhs: Self) -> RadialFunction {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<&RadialFunction> for f64 {
    type Output = RadialFunction;

    fn mul(self, rhs: &RadialFunction) -> RadialFunction {
        rhs.map(|v| self * v)
    }
}

impl Neg for &RadialFunction {
    type Output = RadialFunction;

    fn neg(self) -> RadialFunction {
        self.map(|v| -v)
    }
}
