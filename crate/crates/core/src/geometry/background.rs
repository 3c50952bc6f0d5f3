use super::profile::{BackendId, MomentumProfile};
use super::radial::RadialFunction;
use crate::error::{LabError, Result};
use crate::spectral::ChebyshevGrid;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Construction parameters for a [`Background`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpec {
    pub backend: BackendId,
    pub grid_size: usize,
    pub kappa: f64,
    /// Amplitude `ε` of the reference-profile deformation; `0` is the
    /// standard (Fubini–Study type) reference.
    #[serde(default)]
    pub perturbation: f64,
}

impl BackgroundSpec {
    pub fn new(backend: BackendId, grid_size: usize, kappa: f64) -> Self {
        Self {
            backend,
            grid_size,
            kappa,
            perturbation: 0.0,
        }
    }

    pub fn perturbed(mut self, eps: f64) -> Self {
        self.perturbation = eps;
        self
    }

    pub fn with_grid(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn build(&self) -> Result<Background> {
        Background::new(*self)
    }
}

/// Holomorphic field `X = κ W` where `W = w∂_w` generates the fiber ℂ*
/// action, together with its normalized potential `θ = κτ + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoloField {
    pub kappa: f64,
    pub theta: RadialFunction,
}

/// A reduced Fano manifold with reference metric `ω ∈ 2πc₁(M)` sampled on a
/// Chebyshev grid in the moment coordinate.
#[derive(Debug, Clone)]
pub struct Background {
    spec: BackgroundSpec,
    n: usize,
    volume: f64,
    grid: ChebyshevGrid,
    profile: MomentumProfile,
    theta: Vec<f64>,
    /// Quadrature weights for `∫_M f ω^n`.
    mass: Vec<f64>,
    /// Quadrature weights for `(2π)^n ∫ f dτ`.
    fiber: Vec<f64>,
    /// `diag(Θ) D`: maps `φ` to `φ_s = Θ φ_τ`.
    flux: DMatrix<f64>,
    /// `diag(Θ') D + diag(Θ) D²`: maps `φ` to `(Θ φ_τ)_τ`.
    stiffness: DMatrix<f64>,
    h_omega: RadialFunction,
    field: HoloField,
    u0: RadialFunction,
}

impl Background {
    pub fn new(spec: BackgroundSpec) -> Result<Self> {
        if spec.grid_size < 16 {
            return Err(LabError::InvalidInput(format!(
                "grid_size must be >= 16, got {}",
                spec.grid_size
            )));
        }
        if !spec.kappa.is_finite() || !spec.perturbation.is_finite() {
            return Err(LabError::InvalidInput("non-finite background parameter".into()));
        }
        let backend = spec.backend;
        let n = backend.dim();
        let (lo, hi) = backend.interval();
        let profile = MomentumProfile::new(lo, hi, spec.perturbation)?;
        let grid = ChebyshevGrid::new(lo, hi, spec.grid_size);
        let tau = grid.nodes().to_vec();

        let theta: Vec<f64> = tau.iter().map(|&t| profile.value(t)).collect();
        let two_pi_n = (2.0 * PI).powi(n as i32);
        let fiber: Vec<f64> = grid.weights().iter().map(|w| w * two_pi_n).collect();
        let mass: Vec<f64> = fiber
            .iter()
            .zip(&tau)
            .map(|(w, t)| w * n as f64 * t.powi(n as i32 - 1))
            .collect();

        let volume: f64 = mass.iter().sum();
        let expected = backend.volume();
        if ((volume - expected) / expected).abs() > 1e-12 {
            return Err(LabError::InvalidProfile(format!(
                "volume {volume} does not match {expected}"
            )));
        }

        let d = grid.diff_matrix();
        let theta_diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&theta));
        let dtheta: Vec<f64> = tau.iter().map(|&t| profile.derivative(t)).collect();
        let dtheta_diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&dtheta));
        let flux = zero_row_sums(&theta_diag * d);
        // product rule; D·diag(Θ)·D would not see T_N, whose Θ-weighted
        // derivative vanishes at every node
        let stiffness = zero_row_sums(&dtheta_diag * d + &theta_diag * (d * d));

        let slope: Vec<f64> = tau
            .iter()
            .map(|&t| {
                // the −(n−1)/τ term integrates in closed form
                if n > 1 {
                    profile.ricci_slope(t, n) + (n as f64 - 1.0) / t
                } else {
                    profile.ricci_slope(t, n)
                }
            })
            .collect();
        let smooth_part = if profile.is_quadratic() {
            vec![0.0; tau.len()]
        } else {
            grid.antiderivative(&slope)
        };
        let raw_h: Vec<f64> = smooth_part
            .iter()
            .zip(&tau)
            .map(|(p, t)| if n > 1 { p - (n as f64 - 1.0) * t.ln() } else { *p })
            .collect();
        let c = normalizing_log(&mass, volume, &raw_h)
            .ok_or_else(|| LabError::NormalizationFailed("Ricci potential of ω".into()))?;
        let h_omega = RadialFunction::from(raw_h.iter().map(|v| v + c).collect::<Vec<_>>());

        let mut bg = Self {
            spec,
            n,
            volume,
            grid,
            profile,
            theta,
            mass,
            fiber,
            flux,
            stiffness,
            h_omega,
            field: HoloField {
                kappa: 0.0,
                theta: RadialFunction::zeros(spec.grid_size + 1),
            },
            u0: RadialFunction::zeros(spec.grid_size + 1),
        };
        bg.field = bg.holo_field(spec.kappa)?;
        bg.u0 = &bg.field.theta - &bg.h_omega;
        Ok(bg)
    }

    pub fn spec(&self) -> &BackgroundSpec {
        &self.spec
    }

    pub fn backend(&self) -> BackendId {
        self.spec.backend
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn grid(&self) -> &ChebyshevGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn profile(&self) -> &MomentumProfile {
        &self.profile
    }

    /// `Θ` at the nodes.
    pub fn momentum(&self) -> &[f64] {
        &self.theta
    }

    pub fn mass_weights(&self) -> &[f64] {
        &self.mass
    }

    pub fn fiber_weights(&self) -> &[f64] {
        &self.fiber
    }

    pub(crate) fn flux_matrix(&self) -> &DMatrix<f64> {
        &self.flux
    }

    pub(crate) fn stiffness_matrix(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn h_omega(&self) -> &RadialFunction {
        &self.h_omega
    }

    /// The background's soliton-candidate field `X`.
    pub fn field(&self) -> &HoloField {
        &self.field
    }

    /// `u₀ = −h_ω + θ_X`.
    pub fn u0(&self) -> &RadialFunction {
        &self.u0
    }

    /// `κW` with potential normalized by `∫(e^θ − 1) ω^n = 0`.
    pub fn holo_field(&self, kappa: f64) -> Result<HoloField> {
        if kappa == 0.0 {
            return Ok(HoloField {
                kappa,
                theta: RadialFunction::zeros(self.len()),
            });
        }
        let raw: Vec<f64> = self.nodes().iter().map(|t| kappa * t).collect();
        let c = normalizing_log(&self.mass, self.volume, &raw)
            .ok_or_else(|| LabError::NormalizationFailed(format!("θ for κ = {kappa}")))?;
        Ok(HoloField {
            kappa,
            theta: RadialFunction::from(raw.iter().map(|v| v + c).collect::<Vec<_>>()),
        })
    }

    pub fn check(&self, f: &RadialFunction) -> Result<()> {
        if f.len() != self.len() {
            return Err(LabError::GridMismatch {
                expected: self.len(),
                found: f.len(),
            });
        }
        Ok(())
    }

    /// Samples a function of the moment coordinate.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> RadialFunction {
        RadialFunction::from(self.nodes().iter().map(|&t| f(t)).collect::<Vec<_>>())
    }

    pub fn derivative(&self, f: &RadialFunction) -> Vec<f64> {
        self.grid.derivative(f.values())
    }

    /// `φ_s = Θ φ_τ`, the derivative along `s = log|w|²`.
    pub fn fiber_derivative(&self, f: &RadialFunction) -> Vec<f64> {
        apply_annihilating(&self.flux, f.values())
    }

    /// `(Θ f_τ)_τ`.
    pub fn fiber_laplacian(&self, f: &RadialFunction) -> Vec<f64> {
        apply_annihilating(&self.stiffness, f.values())
    }

    /// Values and one-sided slopes `(f(τ₋), f(τ₊), f'(τ₋), f'(τ₊))`.
    pub fn endpoint_data(&self, f: &RadialFunction) -> EndpointData {
        let d = self.derivative(f);
        let last = self.len() - 1;
        EndpointData {
            values: (f[0], f[last]),
            slopes: (d[0], d[last]),
        }
    }

    /// Same background at a different grid size.
    pub fn regrid(&self, grid_size: usize) -> Result<Background> {
        self.spec.with_grid(grid_size).build()
    }

    /// Interpolates `f` onto another background's grid.
    pub fn transfer(&self, f: &RadialFunction, target: &Background) -> RadialFunction {
        RadialFunction::from(self.grid.resample(f.values(), &target.grid))
    }

    pub fn eval(&self, f: &RadialFunction, tau: f64) -> f64 {
        self.grid.interpolate(f.values(), tau)
    }

    pub fn sup_norm(&self, f: &RadialFunction) -> f64 {
        f.sup_norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointData {
    pub values: (f64, f64),
    pub slopes: (f64, f64),
}

/// Resets the diagonal so that every row sums to zero, as it must for an
/// operator that annihilates constants.
fn zero_row_sums(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for i in 0..m.nrows() {
        let off: f64 = (0..m.ncols()).filter(|&j| j != i).map(|j| m[(i, j)]).sum();
        m[(i, i)] = -off;
    }
    m
}

/// `(M v)_i = Σ_{j≠i} M_ij (v_j − v_i)` for a matrix with zero row sums.
/// Exact on constants and free of the cancellation in the plain product.
pub(crate) fn apply_annihilating(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| {
            let vi = v[i];
            (0..m.ncols())
                .filter(|&j| j != i)
                .map(|j| m[(i, j)] * (v[j] - vi))
                .sum()
        })
        .collect()
}

/// `c = −log((1/V)∫ e^f ω^n)`, so that `∫(e^{f+c} − 1) ω^n = 0`.
pub(crate) fn normalizing_log(mass: &[f64], volume: f64, f: &[f64]) -> Option<f64> {
    let shift = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return None;
    }
    let s: f64 = mass.iter().zip(f).map(|(w, v)| w * (v - shift).exp()).sum();
    let c = -(s / volume).ln() - shift;
    c.is_finite().then_some(c)
}
