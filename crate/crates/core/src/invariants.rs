//! The holomorphic invariant `𝓕_X(Y)`, automorphism flows of the fiber
//! generator, and the soliton field.

use crate::error::{LabError, Result};
use crate::functionals::{Energies, PathSpec};
use crate::geometry::{Background, HoloField, MetricState, RadialFunction};
use serde::Serialize;

/// `𝓕_X(Y) = ∫ Y(h_g − θ_X(g)) e^{θ_X(g)} ω_g^n` at the metric of `state`,
/// whose field is `X`.
///
/// `h_g − θ_X(g) = −u` up to a constant and `Y = κ_Y ∂_s` on radial data.
pub fn tz_invariant(bg: &Background, y: &HoloField, state: &MetricState) -> Result<f64> {
    bg.check(&state.phi)?;
    if y.kappa == 0.0 {
        return Ok(0.0);
    }
    let us = bg.fiber_derivative(&state.u);
    let w = bg.mass_weights();
    Ok((0..bg.len())
        .map(|i| -y.kappa * us[i] * state.theta_phi[i].exp() * state.ratio[i] * w[i])
        .sum())
}

/// `𝓕_X(Y)` at the reference metric.
pub fn tz_invariant_reference(bg: &Background, x: &HoloField, y: &HoloField) -> Result<f64> {
    tz_invariant(bg, y, &bg.reference_state(x))
}

/// Potential of `Φ_t^* ω` for the flow of `Re(Y)`, `Y = κ_Y W`.
///
/// The flow is `s ↦ s + κ_Y t`, so `φ(t) = F(s + κ_Y t) − F(s)` read off at
/// the node's moment coordinate. Then `∂φ/∂t = κ_Y σ = θ_Y(φ) + c` with
/// `c` from [`flow_constant`].
pub fn flow_potential(bg: &Background, y: &HoloField, t: f64) -> Result<RadialFunction> {
    if y.kappa == 0.0 || t == 0.0 {
        return Ok(RadialFunction::zeros(bg.len()));
    }
    let a = y.kappa * t;
    let profile = bg.profile();
    let phi = bg.sample(|tau| profile.shift(tau, a).1);
    let margin = bg.positivity_margin(&phi);
    if !(margin > 0.0) || !phi.is_finite() {
        return Err(LabError::FlowLeftCone { t, margin });
    }
    Ok(phi)
}

/// The constant `c` in `∂φ/∂t = θ_Y(φ) + c` produced by [`flow_potential`].
pub fn flow_constant(bg: &Background, y: &HoloField) -> f64 {
    if y.kappa == 0.0 {
        return 0.0;
    }
    y.kappa * bg.nodes()[0] - y.theta[0]
}

/// `n` flow times, symmetric about zero, in `[−half_width, half_width]`.
pub fn symmetric_times(half_width: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| half_width * (2.0 * i as f64 / (n - 1) as f64 - 1.0))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowRecord {
    pub kappa_y: f64,
    pub kappa_x: f64,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub phis: Vec<RadialFunction>,
    /// `flow_constants[i]` is `c` at `times[i]`.
    pub flow_constants: Vec<f64>,
    /// `e_curves[k][i] = Ẽ_k(φ(times[i]))`, `k = 0..=n`.
    pub e_curves: Vec<Vec<f64>>,
    /// `g_curves[k−1][i] = G̃_k(φ(times[i]))`, `k = 1..=n`.
    pub g_curves: Vec<Vec<f64>>,
}

pub fn flow_record(en: &Energies, y: &HoloField, times: &[f64]) -> Result<FlowRecord> {
    let bg = en.background();
    let n = bg.dim();
    let mut rec = FlowRecord {
        kappa_y: y.kappa,
        kappa_x: en.field().kappa,
        times: times.to_vec(),
        phis: Vec::with_capacity(times.len()),
        flow_constants: Vec::with_capacity(times.len()),
        e_curves: vec![Vec::with_capacity(times.len()); n + 1],
        g_curves: vec![Vec::with_capacity(times.len()); n],
    };
    let c = flow_constant(bg, y);
    for &t in times {
        let phi = flow_potential(bg, y, t)?;
        let s = en.state(&phi)?;
        let e0 = en.e0_tilde(&PathSpec::linear(&phi))?;
        for k in 0..=n {
            rec.e_curves[k].push(en.e_k_from(&s, k, e0)?);
        }
        for k in 1..=n {
            rec.g_curves[k - 1].push(en.g_k_at(&s, k)?);
        }
        rec.flow_constants.push(c);
        rec.phis.push(phi);
    }
    Ok(rec)
}

/// Least-squares line through `(x, y)`: `(slope, intercept, max residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).abs())
        .fold(0.0, f64::max);
    (slope, intercept, resid)
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeReport {
    /// `𝓕_X(Y)` at the reference metric.
    pub f_xy: f64,
    pub volume: f64,
    pub n: usize,
    /// Fitted slope of `Ẽ_k` for `k = 0..=n`.
    pub slopes: Vec<f64>,
    /// `(k+1) n 𝓕_X(Y) / V`.
    pub stated: Vec<f64>,
    /// `(k+1) 𝓕_X(Y) / V`, obtained by differentiating `Ẽ₀` along `∂φ/∂t = θ_Y(φ) + c`.
    pub flow: Vec<f64>,
    pub stated_errors: Vec<f64>,
    pub flow_errors: Vec<f64>,
    /// `max_t |G̃_k(φ(t)) − G̃_k(φ(0))|` for `k = 1..=n`.
    pub g_drift: Vec<f64>,
    /// Largest deviation of `Ẽ_k` from its fitted line.
    pub fit_residuals: Vec<f64>,
}

pub fn flow_derivative_check(
    en: &Energies,
    y: &HoloField,
    times: &[f64],
) -> Result<(FlowRecord, SlopeReport)> {
    let bg = en.background();
    let n = bg.dim();
    let v = bg.volume();
    let rec = flow_record(en, y, times)?;
    let f_xy = tz_invariant(bg, y, en.reference())?;
    let mut report = SlopeReport {
        f_xy,
        volume: v,
        n,
        slopes: vec![],
        stated: vec![],
        flow: vec![],
        stated_errors: vec![],
        flow_errors: vec![],
        g_drift: vec![],
        fit_residuals: vec![],
    };
    for k in 0..=n {
        let (slope, _, resid) = linear_fit(times, &rec.e_curves[k]);
        let stated = (k + 1) as f64 * n as f64 * f_xy / v;
        let flow = (k + 1) as f64 * f_xy / v;
        report.slopes.push(slope);
        report.stated.push(stated);
        report.flow.push(flow);
        report.stated_errors.push((slope - stated).abs());
        report.flow_errors.push((slope - flow).abs());
        report.fit_residuals.push(resid);
    }
    let zero = en.reference();
    for k in 1..=n {
        let g0 = en.g_k_at(zero, k)?;
        let drift = rec.g_curves[k - 1]
            .iter()
            .map(|g| (g - g0).abs())
            .fold(0.0, f64::max);
        report.g_drift.push(drift);
    }
    Ok((rec, report))
}

/// `g(κ) = 𝓕_{κW}(W)` at the reference metric.
pub fn soliton_defect(bg: &Background, kappa: f64) -> Result<f64> {
    let x = bg.holo_field(kappa)?;
    let w = bg.holo_field(1.0)?;
    tz_invariant_reference(bg, &x, &w)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonField {
    pub kappa_star: f64,
    /// `g(κ*)`.
    pub residual: f64,
    pub bracket: (f64, f64),
    /// `(κ, g(κ))` on the scan grid.
    pub scan: Vec<(f64, f64)>,
    pub monotone_on_bracket: bool,
}

pub const SCAN_RANGE: (f64, f64) = (-3.0, 3.0);
const SCAN_POINTS: usize = 61;

/// Root of `g(κ)` by a sign scan over [`SCAN_RANGE`] and bisection.
pub fn find_soliton_field(bg: &Background) -> Result<SolitonField> {
    let (lo, hi) = SCAN_RANGE;
    let scan = (0..SCAN_POINTS)
        .map(|i| {
            let k = lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64;
            Ok((k, soliton_defect(bg, k)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let g_scale = scan.iter().map(|p| p.1.abs()).fold(0.0, f64::max).max(1.0);
    if let Some(&(k, g)) = scan.iter().find(|p| p.1.abs() <= 1e-14 * g_scale) {
        return Ok(SolitonField {
            kappa_star: k,
            residual: g,
            bracket: (k, k),
            monotone_on_bracket: true,
            scan,
        });
    }
    let idx = scan
        .windows(2)
        .position(|w| w[0].1.signum() != w[1].1.signum())
        .ok_or(LabError::NoBracket { lo, hi })?;
    let (mut a, mut ga) = scan[idx];
    let (mut b, _) = scan[idx + 1];
    let bracket = (a, b);
    let mut probes = vec![];
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = soliton_defect(bg, m)?;
        probes.push((m, gm));
        if gm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let ga_end = soliton_defect(bg, a)?;
    let gb_end = soliton_defect(bg, b)?;
    let (kappa_star, residual) = if ga_end.abs() <= gb_end.abs() {
        (a, ga_end)
    } else {
        (b, gb_end)
    };
    probes.push(scan[idx]);
    probes.push(scan[idx + 1]);
    probes.sort_by(|p, q| p.0.total_cmp(&q.0));
    let rising = probes.windows(2).all(|w| w[1].1 >= w[0].1);
    let falling = probes.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(SolitonField {
        kappa_star,
        residual,
        bracket,
        scan,
        monotone_on_bracket: rising || falling,
    })
}
