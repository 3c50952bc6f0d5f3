#![allow(dead_code)]

use krs_core::geometry::{Background, RadialFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `Σ a cos(bτ + c)`, with exact derivatives.
#[derive(Debug, Clone)]
pub struct Trig {
    pub terms: Vec<(f64, f64, f64)>,
}

impl Trig {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let terms = (0..3)
            .map(|_| (rng.gen_range(-0.5..0.5), rng.gen_range(0.3..2.5), rng.gen_range(0.0..6.3)))
            .collect();
        Self { terms }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(a, b, c)| (k * a, b, c)).collect(),
        }
    }

    /// `order`-th derivative.
    pub fn d(&self, tau: f64, order: u32) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b, c)| {
                let x = b * tau + c;
                let v = match order % 4 {
                    0 => x.cos(),
                    1 => -x.sin(),
                    2 => -x.cos(),
                    _ => x.sin(),
                };
                a * b.powi(order as i32) * v
            })
            .sum()
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.d(tau, 0)
    }

    pub fn sample(&self, bg: &Background) -> RadialFunction {
        bg.sample(|t| self.value(t))
    }
}

/// Seeded trigonometric potentials with positivity margin at least `0.2`.
pub fn trig_potentials(bg: &Background, seed: u64, count: usize) -> Vec<Trig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut p = Trig::random(&mut rng);
            while bg.positivity_margin(&p.sample(bg)) < 0.2 {
                p = p.scaled(0.8);
            }
            p
        })
        .collect()
}

/// Dense polynomial, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn mul(&self, o: &Poly) -> Poly {
        let mut c = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly(c)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut c = vec![0.0; self.0.len().max(o.0.len())];
        for (i, a) in self.0.iter().enumerate() {
            c[i] += a;
        }
        for (i, b) in o.0.iter().enumerate() {
            c[i] += b;
        }
        Poly(c)
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly(self.0.iter().map(|a| k * a).collect())
    }

    pub fn deriv(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(i, a)| i as f64 * a).collect())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Momentum profile `(τ−lo)(hi−τ)/2 · (1 + ε (τ−lo)²(hi−τ)/2)` built from
/// scratch.
pub fn profile_poly(lo: f64, hi: f64, eps: f64) -> Poly {
    let q = Poly(vec![-lo, 1.0]);
    let r = Poly(vec![hi, -1.0]);
    let base = q.mul(&r).scale(0.5);
    let m = Poly(vec![1.0]).add(&base.mul(&q).scale(eps));
    base.mul(&m)
}

/// Gauss–Legendre rule on `[a, b]` by Newton iteration on `P_n`.
pub fn gauss_legendre(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w));
    }
    out
}

pub fn integrate(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    gauss_legendre(a, b, n).into_iter().map(|(x, w)| w * f(x)).sum()
}
