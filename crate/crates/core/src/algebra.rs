//! Exact polynomial identities behind the lower bound for `Ẽ_k`.
//!
//! Polynomials are dense coefficient vectors over `BigRational`, lowest
//! degree first.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Poly = Vec<BigRational>;

pub const MAX_DEGREE: usize = 12;

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn binomial(n: usize, k: usize) -> BigRational {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::from_integer(acc)
}

fn trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn add_scaled(acc: &mut Poly, p: &Poly, s: &BigRational) {
    if acc.len() < p.len() {
        acc.resize(p.len(), BigRational::zero());
    }
    for (a, c) in acc.iter_mut().zip(p) {
        *a += c * s;
    }
}

/// `(x + c)^m`.
fn shifted_power(c: &BigRational, m: usize) -> Poly {
    (0..=m)
        .map(|j| binomial(m, j) * pow(c, m - j))
        .collect()
}

fn pow(c: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * c)
}

pub fn eval(p: &Poly, x: &BigRational) -> BigRational {
    p.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
}

/// `Σ_{i=0}^{k−1} C(k+1, i)(x−1)^{k−i−1}`.
pub fn binomial_side(k: usize) -> Poly {
    let mut acc = Poly::new();
    for i in 0..k {
        add_scaled(&mut acc, &shifted_power(&int(-1), k - i - 1), &binomial(k + 1, i));
    }
    trim(acc)
}

/// `P(x) = Σ_{i=1}^{k} i x^{k−i}`.
pub fn p_poly(k: usize) -> Poly {
    let mut p = vec![BigRational::zero(); k];
    for i in 1..=k {
        p[k - i] = int(i as i64);
    }
    trim(p)
}

/// Both sides of the binomial identity agree coefficient by coefficient.
pub fn identity_holds(k: usize) -> bool {
    binomial_side(k) == p_poly(k)
}

/// Largest `|LHS(x) − RHS(x)|` over the samples, evaluated exactly.
pub fn wedge_binomial_identity(k: usize, samples: &[f64]) -> f64 {
    assert!((1..=MAX_DEGREE).contains(&k), "degree {k} out of range");
    let l = binomial_side(k);
    let r = p_poly(k);
    samples
        .iter()
        .filter_map(|&x| BigRational::from_float(x))
        .map(|x| (eval(&l, &x) - eval(&r, &x)).abs())
        .max()
        .map_or(0.0, |d| d.to_f64().unwrap_or(f64::INFINITY))
}

/// Coefficients of `P` in powers of `x + 2/(k−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    pub k: usize,
    pub center: BigRational,
    /// `a_2, …, a_k`.
    pub a: Vec<BigRational>,
}

impl CoeffTable {
    pub fn a_f64(&self) -> Vec<f64> {
        self.a.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn all_nonnegative(&self) -> bool {
        self.a.iter().all(|c| !c.is_negative())
    }

    /// `(x + 2/(k−1))^{k−1} + Σ a_i (x + 2/(k−1))^{k−i}`.
    pub fn reconstruct(&self, x: &BigRational) -> BigRational {
        let y = x + &self.center;
        let mut total = pow(&y, self.k - 1);
        for (idx, a) in self.a.iter().enumerate() {
            let i = idx + 2;
            total += a * pow(&y, self.k - i);
        }
        total
    }

    pub fn reconstruct_f64(&self, x: f64) -> f64 {
        let y = x + self.center.to_f64().unwrap_or(f64::NAN);
        let a = self.a_f64();
        let mut total = y.powi(self.k as i32 - 1);
        for (idx, ai) in a.iter().enumerate() {
            total += ai * y.powi((self.k - idx - 2) as i32);
        }
        total
    }
}

/// `a_i = P^{(k−i)}(−2/(k−1)) / (k−i)!` by an exact Taylor shift.
pub fn p_expansion_coeffs(k: usize) -> CoeffTable {
    assert!((2..=MAX_DEGREE).contains(&k), "degree {k} out of range");
    let p = p_poly(k);
    let center = BigRational::new(BigInt::from(2), BigInt::from(k as i64 - 1));
    let c = -&center;
    // P(x) = Σ_j b_j (x − c)^j with b_j = Σ_m p_m C(m, j) c^{m−j}
    let b: Vec<BigRational> = (0..p.len())
        .map(|j| {
            (j..p.len())
                .map(|m| &p[m] * binomial(m, j) * pow(&c, m - j))
                .fold(BigRational::zero(), |acc, v| acc + v)
        })
        .collect();
    let a = (2..=k).map(|i| b[k - i].clone()).collect();
    CoeffTable { k, center, a }
}
