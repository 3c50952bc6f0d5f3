//! Energy functionals on the space of radial Kähler potentials.
//!
//! Path-defined functionals (`J̃`, `Ẽ₀`) are integrated in `t` by
//! Gauss–Legendre quadrature; every spatial integral goes through the
//! background's reduced quadrature.

use crate::error::{LabError, Result};
use crate::geometry::{Background, HoloField, MetricState, RadialFunction, Weight};
use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;
use std::num::NonZeroUsize;

pub const DEFAULT_PATH_NODES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    /// `φ_t = φ₀ + t(φ₁ − φ₀)`.
    Linear,
    /// `φ_t = φ₀ + t²(φ₁ − φ₀)`.
    Reparam,
    /// `φ_t = φ₀ + t(φ₁ − φ₀) + t(1−t)χ`.
    Bent,
}

#[derive(Debug, Clone)]
pub struct PathSpec {
    pub kind: PathKind,
    pub start: RadialFunction,
    pub endpoint: RadialFunction,
    pub bend: Option<RadialFunction>,
    pub nodes: usize,
}

impl PathSpec {
    pub fn linear(endpoint: &RadialFunction) -> Self {
        Self {
            kind: PathKind::Linear,
            start: RadialFunction::zeros(endpoint.len()),
            endpoint: endpoint.clone(),
            bend: None,
            nodes: DEFAULT_PATH_NODES,
        }
    }

    pub fn reparam(endpoint: &RadialFunction) -> Self {
        Self {
            kind: PathKind::Reparam,
            ..Self::linear(endpoint)
        }
    }

    pub fn bent(endpoint: &RadialFunction, chi: &RadialFunction) -> Self {
        Self {
            kind: PathKind::Bent,
            bend: Some(chi.clone()),
            ..Self::linear(endpoint)
        }
    }

    /// Same shape, starting from `start` instead of `0`.
    pub fn from(mut self, start: &RadialFunction) -> Self {
        self.start = start.clone();
        self
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    /// `(φ_t, ∂φ_t/∂t)`.
    pub fn at(&self, t: f64) -> (RadialFunction, RadialFunction) {
        let delta = &self.endpoint - &self.start;
        match self.kind {
            PathKind::Linear => (self.start.lerp(&self.endpoint, t), delta),
            PathKind::Reparam => (&self.start + &(t * t * &delta), 2.0 * t * &delta),
            PathKind::Bent => {
                let chi = self
                    .bend
                    .clone()
                    .unwrap_or_else(|| RadialFunction::zeros(delta.len()));
                let phi = &self.start.lerp(&self.endpoint, t) + &(t * (1.0 - t) * &chi);
                let dphi = &delta + &((1.0 - 2.0 * t) * &chi);
                (phi, dphi)
            }
        }
    }

    /// Gauss–Legendre nodes and weights on `[0, 1]`.
    pub fn quadrature(&self) -> Vec<(f64, f64)> {
        gauss_legendre_unit(self.nodes)
    }
}

pub(crate) fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("nonzero"));
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Every functional value at one potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub i: f64,
    pub i_tilde: f64,
    pub j_tilde: f64,
    pub f_tilde: f64,
    pub e0: f64,
    /// `G̃_k`, `k = 1..=n`.
    pub g: Vec<f64>,
    /// `Ẽ_k`, `k = 0..=n`.
    pub e: Vec<f64>,
    /// `C_{ω,X,k}`, `k = 1..=n`.
    pub c: Vec<f64>,
}

/// Functionals of a background together with a fixed holomorphic field.
#[derive(Debug, Clone)]
pub struct Energies<'a> {
    bg: &'a Background,
    x: HoloField,
    reference: MetricState,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn sign(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl<'a> Energies<'a> {
    pub fn new(bg: &'a Background, x: HoloField) -> Self {
        let reference = bg.reference_state(&x);
        Self { bg, x, reference }
    }

    /// Uses the background's own field `X`.
    pub fn soliton(bg: &'a Background) -> Self {
        Self::new(bg, bg.field().clone())
    }

    pub fn background(&self) -> &Background {
        self.bg
    }

    pub fn field(&self) -> &HoloField {
        &self.x
    }

    pub fn reference(&self) -> &MetricState {
        &self.reference
    }

    pub fn state(&self, phi: &RadialFunction) -> Result<MetricState> {
        self.bg.state(phi, &self.x)
    }

    fn check_degree(&self, k: usize, min: usize) -> Result<()> {
        let n = self.bg.dim();
        if k < min || k > n {
            return Err(LabError::DegreeOutOfRange {
                degree: k,
                min,
                max: n,
            });
        }
        Ok(())
    }

    /// `(1/V)∫ f e^{θ_X} ω^n`.
    pub fn reference_average(&self, f: &RadialFunction) -> Result<f64> {
        self.bg.average(f, &self.reference, Weight::Theta)
    }

    pub fn i_energy(&self, phi: &RadialFunction) -> Result<f64> {
        let s = self.state(phi)?;
        self.i_energy_at(&s)
    }

    pub fn i_energy_at(&self, s: &MetricState) -> Result<f64> {
        let refs = &self.reference;
        Ok(self.bg.average(&s.phi, refs, Weight::None)? - self.bg.average(&s.phi, s, Weight::None)?)
    }

    pub fn i_tilde(&self, phi: &RadialFunction) -> Result<f64> {
        let s = self.state(phi)?;
        self.i_tilde_at(&s)
    }

    pub fn i_tilde_at(&self, s: &MetricState) -> Result<f64> {
        Ok(self.reference_average(&s.phi)? - self.bg.average(&s.phi, s, Weight::Theta)?)
    }

    /// States at the path's quadrature nodes, with `(t, weight, φ̇)`.
    fn path_states(&self, path: &PathSpec) -> Result<Vec<(f64, f64, RadialFunction, MetricState)>> {
        self.bg.check(&path.endpoint)?;
        self.bg.check(&path.start)?;
        path.quadrature()
            .into_iter()
            .map(|(t, w)| {
                let (phi, dphi) = path.at(t);
                match self.state(&phi) {
                    Ok(s) => Ok((t, w, dphi, s)),
                    Err(LabError::PositivityLost { .. }) => Err(LabError::PathLeavesCone {
                        t,
                        margin: self.bg.positivity_margin(&phi),
                    }),
                    Err(e) => Err(e),
                }
            })
            .collect()
    }

    /// `J̃_{ω_{φ₀}}(φ₁ − φ₀)` along the path.
    pub fn j_tilde(&self, path: &PathSpec) -> Result<f64> {
        let base = self.state(&path.start)?;
        let mut total = 0.0;
        for (_, w, dphi, s) in self.path_states(path)? {
            let a = self.bg.average(&dphi, &base, Weight::Theta)?;
            let b = self.bg.average(&dphi, &s, Weight::Theta)?;
            total += w * (a - b);
        }
        Ok(total)
    }

    /// `F̃⁰ = J̃ − (1/V)∫φ e^{θ_X} ω^n` along a linear path.
    pub fn f0_tilde(&self, phi: &RadialFunction) -> Result<f64> {
        Ok(self.j_tilde(&PathSpec::linear(phi))? - self.reference_average(phi)?)
    }

    /// `log((1/V)∫ e^{h_ω − φ} ω^n)`.
    pub fn log_term(&self, phi: &RadialFunction) -> Result<f64> {
        self.bg.check(phi)?;
        let h = self.bg.h_omega();
        let f = h.zip_with(phi, |a, b| (a - b).exp());
        Ok(self.bg.average(&f, &self.reference, Weight::None)?.ln())
    }

    pub fn f_tilde(&self, phi: &RadialFunction) -> Result<f64> {
        Ok(self.f0_tilde(phi)? - self.log_term(phi)?)
    }

    /// `Ẽ_{0,ω_{φ₀}}(φ₁ − φ₀)` along the path.
    pub fn e0_tilde(&self, path: &PathSpec) -> Result<f64> {
        let n = self.bg.dim() as f64;
        let mut total = 0.0;
        for (_, w, dphi, s) in self.path_states(path)? {
            let neg_u = -&s.u;
            total += w * n * self.bg.wedge_ratio(&dphi, &neg_u, &s.u, 0, &s)?;
        }
        Ok(total)
    }

    /// `(1/V)∫ √−1∂u ∧ ∂̄u ∧ (√−1∂∂̄u)^{k−1} ∧ e^{θ} ω^{n−k}` at a state.
    fn curvature_term(&self, s: &MetricState, k: usize) -> Result<f64> {
        self.bg.wedge_ratio(&s.u, &s.u, &s.u, k - 1, s)
    }

    pub fn g_k(&self, phi: &RadialFunction, k: usize) -> Result<f64> {
        let s = self.state(phi)?;
        self.g_k_at(&s, k)
    }

    pub fn g_k_at(&self, s: &MetricState, k: usize) -> Result<f64> {
        self.check_degree(k, 1)?;
        Ok(-self.curvature_term(s, k)? + self.curvature_term(&self.reference, k)?)
    }

    /// `Σ_{i<k} (−1)^{k−i} C(k+1, i) G̃_{k−i}`.
    pub fn g_combination_at(&self, s: &MetricState, k: usize) -> Result<f64> {
        self.check_degree(k, 0)?;
        let mut total = 0.0;
        for i in 0..k {
            total += sign(k - i) * binom(k + 1, i) * self.g_k_at(s, k - i)?;
        }
        Ok(total)
    }

    pub fn e_k(&self, phi: &RadialFunction, k: usize, path: &PathSpec) -> Result<f64> {
        let e0 = self.e0_tilde(path)?;
        let s = self.state(phi)?;
        self.e_k_from(&s, k, e0)
    }

    /// `Ẽ_k` given `Ẽ₀` at the same potential.
    pub fn e_k_from(&self, s: &MetricState, k: usize, e0: f64) -> Result<f64> {
        Ok(self.g_combination_at(s, k)? + (k + 1) as f64 * e0)
    }

    /// `Ẽ_{k,ω_φ}(ψ − φ)`: the `G̃` terms are taken relative to `u(φ)` and
    /// `Ẽ₀` is integrated along a linear path from `φ` to `ψ`.
    pub fn e_k_relative(&self, phi: &RadialFunction, psi: &RadialFunction, k: usize) -> Result<f64> {
        self.check_degree(k, 0)?;
        let a = self.state(phi)?;
        let b = self.state(psi)?;
        let e0 = self.e0_tilde(&PathSpec::linear(psi).from(phi))?;
        let mut total = (k + 1) as f64 * e0;
        for i in 0..k {
            let j = k - i;
            let g = -self.curvature_term(&b, j)? + self.curvature_term(&a, j)?;
            total += sign(k - i) * binom(k + 1, i) * g;
        }
        Ok(total)
    }

    /// `C_{ω,X,k} = Σ_{i<k} (−1)^{k−i} C(k+1, i) (1/V)∫√−1∂u₀∧∂̄u₀∧(√−1∂∂̄u₀)^{k−i−1}∧e^{θ_X}ω^{n−k+i}`.
    pub fn c_constant(&self, k: usize) -> Result<f64> {
        self.check_degree(k, 1)?;
        let mut total = 0.0;
        for i in 0..k {
            total += sign(k - i) * binom(k + 1, i) * self.curvature_term(&self.reference, k - i)?;
        }
        Ok(total)
    }

    /// `(1/V)∫ u₀ e^{θ_X} ω^n`.
    pub fn u0_average(&self) -> Result<f64> {
        self.reference_average(self.bg.u0())
    }

    /// Smallest eigenvalue of `Ric_φ − L_Xω_φ + (2/(k−1))ω_φ` relative to
    /// `ω_φ`. For `k ≤ 1` every potential is a member and the margin is `+∞`.
    pub fn cone_margin(&self, phi: &RadialFunction, k: usize) -> Result<f64> {
        let s = self.state(phi)?;
        self.cone_margin_at(&s, k)
    }

    pub fn cone_margin_at(&self, s: &MetricState, k: usize) -> Result<f64> {
        if k <= 1 {
            return Ok(f64::INFINITY);
        }
        let shift = 1.0 + 2.0 / (k as f64 - 1.0);
        let us = self.bg.fiber_derivative(&s.u);
        let uss = self.bg.fiber_laplacian(&s.u);
        let n = self.bg.dim();
        let mut margin = f64::INFINITY;
        for i in 0..self.bg.len() {
            // Ric_φ − L_Xω_φ = ω_φ − √−1∂∂̄u
            let fiber = uss[i] / s.dsigma[i];
            margin = margin.min(shift - fiber);
            if n > 1 {
                margin = margin.min(shift - us[i] / s.sigma[i]);
            }
        }
        Ok(margin)
    }

    pub fn report(&self, phi: &RadialFunction) -> Result<FunctionalReport> {
        let n = self.bg.dim();
        let s = self.state(phi)?;
        let path = PathSpec::linear(phi);
        let e0 = self.e0_tilde(&path)?;
        let j_tilde = self.j_tilde(&path)?;
        let g = (1..=n).map(|k| self.g_k_at(&s, k)).collect::<Result<Vec<_>>>()?;
        let e = (0..=n).map(|k| self.e_k_from(&s, k, e0)).collect::<Result<Vec<_>>>()?;
        let c = (1..=n).map(|k| self.c_constant(k)).collect::<Result<Vec<_>>>()?;
        Ok(FunctionalReport {
            i: self.i_energy_at(&s)?,
            i_tilde: self.i_tilde_at(&s)?,
            j_tilde,
            f_tilde: j_tilde - self.reference_average(phi)? - self.log_term(phi)?,
            e0,
            g,
            e,
            c,
        })
    }

    /// `(I(φ), Ẽ_k(φ))` for each sample.
    pub fn properness_scatter(&self, sample: &[RadialFunction], k: usize) -> Result<Vec<(f64, f64)>> {
        sample
            .iter()
            .map(|phi| {
                let i = self.i_energy(phi)?;
                let e = self.e_k(phi, k, &PathSpec::linear(phi))?;
                Ok((i, e))
            })
            .collect()
    }
}

/// Residuals of the identities relating the functionals at one potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityDefects {
    /// `Ẽ₀ − [F̃ + (1/V)∫u e^{θ(φ)}ω_φ^n − (1/V)∫u₀e^{θ}ω^n + log(…)]`.
    pub k_energy_f: f64,
    /// `Ẽ₀ − F̃ + (1/V)∫u₀e^{θ}ω^n`, which must be `≥ 0`.
    pub lower_bound_gap: f64,
    /// `Ẽ₁ − [2Ẽ₀ + (1/V)∫|∂u|² e^θ ω_φ^{n−1} − (same at ω)]`.
    pub pali: f64,
    /// `Ĩ − J̃`, which must be `≥ 0`.
    pub i_minus_j: f64,
}

impl Energies<'_> {
    pub fn identity_defects(&self, phi: &RadialFunction) -> Result<IdentityDefects> {
        let s = self.state(phi)?;
        let path = PathSpec::linear(phi);
        let e0 = self.e0_tilde(&path)?;
        let j = self.j_tilde(&path)?;
        let log = self.log_term(phi)?;
        let f = j - self.reference_average(phi)? - log;
        let u_avg = self.bg.average(&s.u, &s, Weight::Theta)?;
        let u0_avg = self.u0_average()?;
        let e1 = self.e_k_from(&s, 1, e0)?;
        let pali_rhs = 2.0 * e0 + self.curvature_term(&s, 1)? - self.curvature_term(&self.reference, 1)?;
        Ok(IdentityDefects {
            k_energy_f: e0 - (f + u_avg - u0_avg + log),
            lower_bound_gap: e0 - f + u0_avg,
            pali: e1 - pali_rhs,
            i_minus_j: self.i_tilde_at(&s)? - j,
        })
    }
}
