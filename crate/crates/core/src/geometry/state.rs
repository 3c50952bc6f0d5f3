use super::background::{apply_annihilating, normalizing_log, Background, HoloField};
use super::radial::RadialFunction;
use crate::error::{LabError, Result};

/// Derived data of `ω_φ = ω + √−1∂∂̄φ` for a radial potential.
///
/// Writing `G = F + φ`, the moment coordinate of `ω_φ` is
/// `σ = G_s = τ + Θφ_τ` and its momentum profile is `G_ss = Θσ_τ`.
#[derive(Debug, Clone)]
pub struct MetricState {
    pub phi: RadialFunction,
    /// `σ = τ + Θ φ_τ`.
    pub sigma: Vec<f64>,
    /// `σ_τ = 1 + (Θ φ_τ)_τ`.
    pub dsigma: Vec<f64>,
    /// `ω_φ^n / ω^n = σ_τ (σ/τ)^{n−1}`.
    pub ratio: Vec<f64>,
    pub log_ratio: Vec<f64>,
    pub kappa: f64,
    /// `θ_X(φ) = θ_X + X(φ)`.
    pub theta_phi: RadialFunction,
    /// Ricci potential of `ω_φ`, normalized by `∫(e^{h_φ} − 1) ω_φ^n = 0`.
    pub h_phi: RadialFunction,
    /// `u = log(ω_φ^n/ω^n) + φ − h_ω + θ_X(φ)`.
    pub u: RadialFunction,
}

/// Which density multiplies an integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    None,
    /// `e^{θ_X(φ)}`.
    Theta,
}

impl Background {
    pub fn state(&self, phi: &RadialFunction, x: &HoloField) -> Result<MetricState> {
        self.check(phi)?;
        self.check(&x.theta)?;
        let n = self.dim();
        let tau = self.nodes();
        let (sigma, dsigma) = self.moment_map(phi);
        let mut ratio = Vec::with_capacity(tau.len());
        for i in 0..tau.len() {
            if !(dsigma[i] > 0.0) {
                return Err(LabError::PositivityLost {
                    node: i,
                    tau: tau[i],
                    value: dsigma[i],
                });
            }
            if n > 1 && !(sigma[i] > 0.0) {
                return Err(LabError::PositivityLost {
                    node: i,
                    tau: tau[i],
                    value: sigma[i],
                });
            }
            ratio.push(dsigma[i] * (sigma[i] / tau[i]).powi(n as i32 - 1));
        }
        let log_ratio: Vec<f64> = ratio.iter().map(|r| r.ln()).collect();

        let theta_phi = self.theta_from_moment(x, &sigma);

        let h = self.h_omega();
        let shifted: Vec<f64> = (0..tau.len()).map(|i| h[i] - phi[i]).collect();
        let c = normalizing_log(self.mass_weights(), self.volume(), &shifted)
            .ok_or_else(|| LabError::NormalizationFailed("Ricci potential of ω_φ".into()))?;
        let h_phi =
            RadialFunction::from((0..tau.len()).map(|i| shifted[i] - log_ratio[i] + c).collect::<Vec<_>>());
        let u = RadialFunction::from(
            (0..tau.len())
                .map(|i| log_ratio[i] + phi[i] - h[i] + theta_phi[i])
                .collect::<Vec<_>>(),
        );

        Ok(MetricState {
            phi: phi.clone(),
            sigma,
            dsigma,
            ratio,
            log_ratio,
            kappa: x.kappa,
            theta_phi,
            h_phi,
            u,
        })
    }

    pub fn reference_state(&self, x: &HoloField) -> MetricState {
        self.state(&RadialFunction::zeros(self.len()), x)
            .expect("reference metric is positive")
    }

    /// `(σ, σ_τ)` for the potential `φ`.
    pub(crate) fn moment_map(&self, phi: &RadialFunction) -> (Vec<f64>, Vec<f64>) {
        let flux = apply_annihilating(self.flux_matrix(), phi.values());
        let stiff = apply_annihilating(self.stiffness_matrix(), phi.values());
        let sigma = self.nodes().iter().zip(flux.iter()).map(|(t, f)| t + f).collect();
        let dsigma = stiff.iter().map(|s| 1.0 + s).collect();
        (sigma, dsigma)
    }

    /// `θ_X(φ) = κσ + c`: the potential of `X` shifts with the moment map.
    fn theta_from_moment(&self, x: &HoloField, sigma: &[f64]) -> RadialFunction {
        let tau = self.nodes();
        RadialFunction::from(
            (0..tau.len())
                .map(|i| x.theta[i] + x.kappa * (sigma[i] - tau[i]))
                .collect::<Vec<_>>(),
        )
    }

    /// `∫_M f · weight · ω_φ^n`.
    pub fn integrate(&self, f: &RadialFunction, state: &MetricState, weight: Weight) -> Result<f64> {
        self.check(f)?;
        self.check(&state.phi)?;
        let w = self.mass_weights();
        Ok((0..self.len())
            .map(|i| {
                let dens = match weight {
                    Weight::None => state.ratio[i],
                    Weight::Theta => state.ratio[i] * state.theta_phi[i].exp(),
                };
                w[i] * f[i] * dens
            })
            .sum())
    }

    /// `(1/V) ∫_M f · weight · ω_φ^n`.
    pub fn average(&self, f: &RadialFunction, state: &MetricState, weight: Weight) -> Result<f64> {
        Ok(self.integrate(f, state, weight)? / self.volume())
    }

    pub fn density_ratio(&self, phi: &RadialFunction) -> Result<Vec<f64>> {
        let zero = self.holo_field(0.0)?;
        Ok(self.state(phi, &zero)?.ratio)
    }

    pub fn theta_potential(&self, x: &HoloField, phi: &RadialFunction) -> Result<RadialFunction> {
        self.check(phi)?;
        self.check(&x.theta)?;
        let (sigma, _) = self.moment_map(phi);
        Ok(self.theta_from_moment(x, &sigma))
    }

    pub fn ricci_potential(&self, phi: &RadialFunction) -> Result<RadialFunction> {
        let zero = self.holo_field(0.0)?;
        Ok(self.state(phi, &zero)?.h_phi)
    }

    pub fn u_potential(&self, phi: &RadialFunction, x: &HoloField) -> Result<RadialFunction> {
        Ok(self.state(phi, x)?.u)
    }

    /// `(1/V) ∫ √−1∂a ∧ ∂̄b ∧ (√−1∂∂̄c)^j ∧ e^{θ_X(φ)} ω_φ^{n−1−j}`.
    ///
    /// For radial data `√−1∂a∧∂̄b = a_s b_s √−1∂s∧∂̄s`, so only the base
    /// components `c_s ω_B` and `σ ω_B` of the remaining factors survive and
    /// the form integrates to `(2π)^n ∫ Θ a_τ b_τ (Θc_τ)^j σ^{n−1−j} e^θ dτ`.
    pub fn wedge_ratio(
        &self,
        a: &RadialFunction,
        b: &RadialFunction,
        c: &RadialFunction,
        j: usize,
        state: &MetricState,
    ) -> Result<f64> {
        let n = self.dim();
        if j > n - 1 {
            return Err(LabError::DegreeOutOfRange {
                degree: j,
                min: 0,
                max: n - 1,
            });
        }
        for f in [a, b, c, &state.phi] {
            self.check(f)?;
        }
        let da = self.derivative(a);
        let db = self.derivative(b);
        let cs = if j > 0 {
            self.fiber_derivative(c)
        } else {
            vec![0.0; self.len()]
        };
        let theta = self.momentum();
        let w = self.fiber_weights();
        let total: f64 = (0..self.len())
            .map(|i| {
                w[i] * theta[i]
                    * da[i]
                    * db[i]
                    * cs[i].powi(j as i32)
                    * state.sigma[i].powi((n - 1 - j) as i32)
                    * state.theta_phi[i].exp()
            })
            .sum();
        Ok(total / self.volume())
    }

    /// `(Δ_φ + X) f = (w Θ f_τ)_τ / (w σ_τ)` with `w = e^{θ_X(φ)} σ^{n−1}`.
    pub fn weighted_laplacian(
        &self,
        state: &MetricState,
        f: &RadialFunction,
        x: &HoloField,
    ) -> Result<RadialFunction> {
        self.check(f)?;
        if x.kappa != state.kappa {
            return Err(LabError::InvalidInput(
                "holomorphic field does not match the metric state".into(),
            ));
        }
        let n = self.dim() as f64;
        let fs = self.fiber_derivative(f);
        let fss = self.fiber_laplacian(f);
        // (wΘf_τ)_τ/(wσ_τ) with w'/w = κσ_τ + (n−1)σ_τ/σ
        Ok(RadialFunction::from(
            (0..self.len())
                .map(|i| {
                    let base = if n > 1.0 { (n - 1.0) / state.sigma[i] } else { 0.0 };
                    fss[i] / state.dsigma[i] + (state.kappa + base) * fs[i]
                })
                .collect::<Vec<_>>(),
        ))
    }

    /// Eigenvalues of `ω_φ` relative to `ω` at each node: the fiber
    /// direction `σ_τ` and (for `n ≥ 2`) the base direction `σ/τ`.
    pub fn reduced_eigenvalues(&self, phi: &RadialFunction) -> Result<Vec<(f64, Option<f64>)>> {
        self.check(phi)?;
        let (sigma, dsigma) = self.moment_map(phi);
        let tau = self.nodes();
        Ok((0..self.len())
            .map(|i| {
                let base = (self.dim() > 1).then(|| sigma[i] / tau[i]);
                (dsigma[i], base)
            })
            .collect())
    }

    /// Smallest eigenvalue of `ω_φ` relative to `ω` over the nodes; positive
    /// iff `ω_φ` is Kähler.
    pub fn positivity_margin(&self, phi: &RadialFunction) -> f64 {
        match self.reduced_eigenvalues(phi) {
            Ok(eigs) => eigs
                .iter()
                .map(|(f, b)| b.map_or(*f, |b| f.min(b)))
                .fold(f64::INFINITY, f64::min),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}
