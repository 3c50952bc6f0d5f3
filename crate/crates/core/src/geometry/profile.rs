use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// The two U(1)-reduced Fano backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendId {
    /// ℂℙ¹ with `ω = 2ω_FS`, moment interval `[0, 2]`.
    P1Radial,
    /// `ℙ(𝒪 ⊕ 𝒪(−1)) → ℙ¹` (the blow-up of ℂℙ² at a point) with the
    /// U(2)-invariant Calabi ansatz, moment interval `[1, 3]`.
    #[serde(alias = "calabi")]
    CalabiFiber,
}

impl BackendId {
    pub fn dim(self) -> usize {
        match self {
            BackendId::P1Radial => 1,
            BackendId::CalabiFiber => 2,
        }
    }

    /// Moment interval forced by `[ω] = 2πc₁`: the end divisors have
    /// `c₁`-degree `τ₋` and `τ₊`.
    pub fn interval(self) -> (f64, f64) {
        match self {
            BackendId::P1Radial => (0.0, 2.0),
            BackendId::CalabiFiber => (1.0, 3.0),
        }
    }

    /// `V = ∫ ω^n = (2π)^n c₁^n`.
    pub fn volume(self) -> f64 {
        match self {
            BackendId::P1Radial => 4.0 * PI,
            BackendId::CalabiFiber => 32.0 * PI * PI,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BackendId::P1Radial => "p1_radial",
            BackendId::CalabiFiber => "calabi_fiber",
        }
    }
}

impl fmt::Display for BackendId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendId {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p1_radial" | "p1" => Ok(BackendId::P1Radial),
            "calabi_fiber" | "calabi" => Ok(BackendId::CalabiFiber),
            other => Err(LabError::UnsupportedBackend(other.to_string())),
        }
    }
}

/// Momentum profile `Θ(τ) = F''(s)` of the reference metric, as a function of
/// its moment coordinate `τ = F'(s)`, `s = log|w|²`.
///
/// `Θ = Θ₀ · m` with `Θ₀ = (τ−τ₋)(τ₊−τ)/2` and
/// `m = 1 + ε Θ₀ (τ−τ₋)`. Every such profile vanishes at both ends with
/// slopes `±1`, which is exactly the condition for the metric to close up
/// smoothly over the end divisors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumProfile {
    lo: f64,
    hi: f64,
    eps: f64,
}

impl MomentumProfile {
    pub fn new(lo: f64, hi: f64, eps: f64) -> Result<Self> {
        if (hi - lo - 2.0).abs() > 1e-14 {
            return Err(LabError::InvalidProfile(format!(
                "moment interval [{lo}, {hi}] must have length 2"
            )));
        }
        let p = Self { lo, hi, eps };
        // m > 0 on the interval (dense scan; m is a cubic).
        for i in 0..=2000 {
            let tau = lo + (hi - lo) * i as f64 / 2000.0;
            let m = p.factor(tau).0;
            if m <= 1e-3 {
                return Err(LabError::InvalidProfile(format!(
                    "perturbation {eps} makes the profile non-positive near tau = {tau}"
                )));
            }
        }
        Ok(p)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn perturbation(&self) -> f64 {
        self.eps
    }

    pub fn is_quadratic(&self) -> bool {
        self.eps == 0.0
    }

    fn base(&self, tau: f64) -> (f64, f64) {
        let b = 0.5 * (tau - self.lo) * (self.hi - tau);
        let db = 0.5 * (self.lo + self.hi) - tau;
        (b, db)
    }

    /// `(m, m', m'')`.
    fn factor(&self, tau: f64) -> (f64, f64, f64) {
        let (b, db) = self.base(tau);
        let q = tau - self.lo;
        let m = 1.0 + self.eps * b * q;
        let dm = self.eps * (db * q + b);
        let ddm = self.eps * (-q + 2.0 * db);
        (m, dm, ddm)
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.base(tau).0 * self.factor(tau).0
    }

    pub fn derivative(&self, tau: f64) -> f64 {
        let (b, db) = self.base(tau);
        let (m, dm, _) = self.factor(tau);
        db * m + b * dm
    }

    pub fn second_derivative(&self, tau: f64) -> f64 {
        let (b, db) = self.base(tau);
        let (m, dm, ddm) = self.factor(tau);
        -m + 2.0 * db * dm + b * ddm
    }

    /// `d h_ω / dτ` for the reference metric in complex dimension `n`.
    ///
    /// From `Ric(ω) = −√−1∂∂̄(log F'' + (n−1) log F' − n s)` one gets
    /// `h' = (n − τ − Θ')/Θ − (n−1)/τ`; with `τ₋ + τ₊ = 2n` the numerator
    /// factors through `Θ₀`, which removes the 0/0 at the ends.
    pub fn ricci_slope(&self, tau: f64, n: usize) -> f64 {
        let (b, db) = self.base(tau);
        let (m, _, _) = self.factor(tau);
        let q = tau - self.lo;
        let smooth = -self.eps * (2.0 * db * q + b) / m;
        if n > 1 {
            smooth - (n as f64 - 1.0) / tau
        } else {
            smooth
        }
    }

    /// Flow of the moment coordinate under `s ↦ s + a`: returns
    /// `(τ(s+a), F(s+a) − F(s))` starting from `τ`.
    pub fn shift(&self, tau: f64, a: f64) -> (f64, f64) {
        if self.is_quadratic() {
            // τ(s) = (τ₋ + τ₊ e^s)/(1 + e^s), F(s) = τ₋ s + 2 log(1 + e^s).
            let (lo, hi) = (self.lo, self.hi);
            let ea = a.exp();
            let denom = (hi - tau) + (tau - lo) * ea;
            let sigma = (lo * (hi - tau) + hi * (tau - lo) * ea) / denom;
            let pot = lo * a + 2.0 * (0.5 * denom).ln();
            return (sigma, pot);
        }
        // dσ/da = Θ(σ), dF/da = σ; classical RK4.
        let steps = ((a.abs() * 4000.0).ceil() as usize).max(16);
        let h = a / steps as f64;
        let mut sigma = tau;
        let mut pot = 0.0;
        for _ in 0..steps {
            let k1 = self.value(sigma);
            let k2 = self.value(sigma + 0.5 * h * k1);
            let k3 = self.value(sigma + 0.5 * h * k2);
            let k4 = self.value(sigma + h * k3);
            let s2 = sigma + 0.5 * h * k1;
            let s3 = sigma + 0.5 * h * k2;
            let s4 = sigma + h * k3;
            pot += h / 6.0 * (sigma + 2.0 * s2 + 2.0 * s3 + s4);
            sigma += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        (sigma, pot)
    }
}
