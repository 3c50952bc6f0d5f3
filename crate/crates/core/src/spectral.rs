//! Chebyshev–Gauss–Lobatto collocation on a closed interval.
//!
//! Nodes are stored in ascending order. Every radial profile in the crate is
//! represented by its values at these nodes, i.e. by the interpolating
//! polynomial of degree `degree`.

use nalgebra::DMatrix;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct ChebyshevGrid {
    lo: f64,
    hi: f64,
    degree: usize,
    /// Reference coordinate in [-1, 1], ascending.
    x: Vec<f64>,
    nodes: Vec<f64>,
    bary: Vec<f64>,
    diff: DMatrix<f64>,
    weights: Vec<f64>,
}

impl ChebyshevGrid {
    pub fn new(lo: f64, hi: f64, degree: usize) -> Self {
        assert!(degree >= 2, "Chebyshev grid needs degree >= 2");
        assert!(hi > lo, "empty interval");
        let n = degree;
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let x: Vec<f64> = (0..=n).map(|j| -(PI * j as f64 / n as f64).cos()).collect();
        // Symmetrize so that mirrored nodes are exact negatives.
        let x: Vec<f64> = (0..=n)
            .map(|j| 0.5 * (x[j] - x[n - j]))
            .collect();
        let nodes = x.iter().map(|&xi| mid + half * xi).collect();

        let bary: Vec<f64> = (0..=n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();

        let mut diff = DMatrix::zeros(n + 1, n + 1);
        for i in 0..=n {
            let mut row_sum = 0.0;
            for j in 0..=n {
                if i != j {
                    let d = (bary[j] / bary[i]) / (x[i] - x[j]);
                    diff[(i, j)] = d / half;
                    row_sum += d / half;
                }
            }
            diff[(i, i)] = -row_sum;
        }

        let weights = clenshaw_curtis(n).into_iter().map(|w| w * half).collect();

        Self {
            lo,
            hi,
            degree,
            x,
            nodes,
            bary,
            diff,
            weights,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights for `∫_lo^hi f dτ`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Differentiation matrix for `d/dτ`.
    pub fn diff_matrix(&self) -> &DMatrix<f64> {
        &self.diff
    }

    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.len());
        let n = self.len();
        // rows sum to zero, so differences are exact on constants
        (0..n)
            .map(|i| {
                let vi = values[i];
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| self.diff[(i, j)] * (values[j] - vi))
                    .sum()
            })
            .collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Barycentric evaluation of the interpolant at `tau`.
    pub fn interpolate(&self, values: &[f64], tau: f64) -> f64 {
        let half = 0.5 * (self.hi - self.lo);
        let mid = 0.5 * (self.hi + self.lo);
        let xt = (tau - mid) / half;
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (&xj, &v)) in self.x.iter().zip(values).enumerate() {
            let d = xt - xj;
            if d == 0.0 {
                return v;
            }
            let c = self.bary[j] / d;
            num += c * v;
            den += c;
        }
        num / den
    }

    /// Values of the interpolant on another grid.
    pub fn resample(&self, values: &[f64], target: &ChebyshevGrid) -> Vec<f64> {
        target
            .nodes
            .iter()
            .map(|&t| self.interpolate(values, t))
            .collect()
    }

    /// Chebyshev coefficients `c_k` with `f = Σ c_k T_k(x)`.
    pub fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        let n = self.degree;
        let nf = n as f64;
        (0..=n)
            .map(|k| {
                let mut s = 0.0;
                for (j, &v) in values.iter().enumerate() {
                    let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                    // x_j = -cos(jπ/n) = cos(π - jπ/n)
                    let ang = PI * (n - j) as f64 / nf;
                    s += w * v * (k as f64 * ang).cos();
                }
                let scale = if k == 0 || k == n { 1.0 / nf } else { 2.0 / nf };
                s * scale
            })
            .collect()
    }

    /// Antiderivative vanishing at `lo`, sampled at the nodes.
    pub fn antiderivative(&self, values: &[f64]) -> Vec<f64> {
        let c = self.coefficients(values);
        let n = self.degree;
        let at = |k: usize| if k <= n { c[k] } else { 0.0 };
        let mut b = vec![0.0; n + 2];
        b[1] = at(0) - 0.5 * at(2);
        for k in 2..=n + 1 {
            b[k] = (at(k - 1) - at(k + 1)) / (2.0 * k as f64);
        }
        let half = 0.5 * (self.hi - self.lo);
        let base = chebyshev_series(&b, -1.0);
        self.x
            .iter()
            .map(|&x| half * (chebyshev_series(&b, x) - base))
            .collect()
    }

    /// Largest magnitude among the top quarter of Chebyshev coefficients,
    /// relative to the largest coefficient overall.
    pub fn tail_ratio(&self, values: &[f64]) -> f64 {
        let c = self.coefficients(values);
        let max = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            return 0.0;
        }
        let start = self.len() - self.len() / 4;
        c[start..].iter().fold(0.0f64, |m, v| m.max(v.abs())) / max
    }
}

/// Clenshaw evaluation of `Σ b_k T_k(x)`.
pub fn chebyshev_series(b: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &bk in b.iter().skip(1).rev() {
        let t = 2.0 * x * b1 - b2 + bk;
        b2 = b1;
        b1 = t;
    }
    x * b1 - b2 + b.first().copied().unwrap_or(0.0)
}

/// Clenshaw–Curtis weights on [-1, 1] for the Lobatto nodes.
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let mut v = vec![1.0; n.saturating_sub(1)];
    let theta = |j: usize| PI * j as f64 / nf;
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta(i + 1)).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (nf * theta(i + 1)).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta(i + 1)).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    w
}

/// Chebyshev–Gauss (first kind) nodes on [a, b], ascending.
pub fn chebyshev_gauss_points(m: usize, a: f64, b: f64) -> Vec<f64> {
    (0..m)
        .map(|j| {
            let x = -(PI * (2 * j + 1) as f64 / (2 * m) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * x
        })
        .collect()
}

/// Polynomial interpolant through values at Chebyshev–Gauss points on [a, b].
///
/// Supports evaluation and integration from `a`.
#[derive(Debug, Clone)]
pub struct GaussChebyshevSeries {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
    integral: Vec<f64>,
}

impl GaussChebyshevSeries {
    pub fn fit(a: f64, b: f64, values: &[f64]) -> Self {
        let m = values.len();
        let mf = m as f64;
        let coeffs: Vec<f64> = (0..m)
            .map(|k| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        // ascending order: x_j = cos(π(2(m-1-j)+1)/(2m))
                        let ang = PI * (2 * (m - 1 - j) + 1) as f64 / (2.0 * mf);
                        v * (k as f64 * ang).cos()
                    })
                    .sum();
                if k == 0 {
                    s / mf
                } else {
                    2.0 * s / mf
                }
            })
            .collect();
        let at = |k: usize| if k < m { coeffs[k] } else { 0.0 };
        let mut integral = vec![0.0; m + 1];
        integral[1] = at(0) - 0.5 * at(2);
        for k in 2..=m {
            integral[k] = (at(k - 1) - at(k + 1)) / (2.0 * k as f64);
        }
        Self {
            a,
            b,
            coeffs,
            integral,
        }
    }

    fn to_ref(&self, t: f64) -> f64 {
        (2.0 * t - self.a - self.b) / (self.b - self.a)
    }

    pub fn eval(&self, t: f64) -> f64 {
        chebyshev_series(&self.coeffs, self.to_ref(t))
    }

    /// `∫_a^t f`.
    pub fn integral_to(&self, t: f64) -> f64 {
        let half = 0.5 * (self.b - self.a);
        half * (chebyshev_series(&self.integral, self.to_ref(t))
            - chebyshev_series(&self.integral, -1.0))
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }
}
