//! Damped Newton continuation for the complex Monge–Ampère family
//!
//! `ω_φ^n = e^{h_ω − θ_X(φ) − tφ − (1−t)g} ω^n`,
//!
//! solved in log form. `g = 0` is the plain continuity path; `g = sψ − c_s`
//! gives the deformed family in hatted variables.

use crate::error::{LabError, Result};
use crate::functionals::Energies;
use crate::geometry::{Background, HoloField, MetricState, RadialFunction, Weight};
use crate::spectral::{chebyshev_gauss_points, GaussChebyshevSeries};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Newton stops once the sup-norm residual is below this.
    pub tol: f64,
    /// A stalled iteration is still accepted below this.
    pub accept: f64,
    pub max_iter: usize,
    pub dt0: f64,
    pub dt_min: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            accept: 1e-10,
            max_iter: 40,
            dt0: 0.05,
            dt_min: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub t: f64,
    pub phi: RadialFunction,
    pub residual: f64,
    pub iterations: usize,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// One member of the family, fixed by its source term.
#[derive(Debug, Clone)]
pub struct Equation<'a> {
    bg: &'a Background,
    x: HoloField,
    source: Option<RadialFunction>,
}

impl<'a> Equation<'a> {
    pub fn new(bg: &'a Background, x: HoloField) -> Self {
        Self { bg, x, source: None }
    }

    pub fn with_source(mut self, g: RadialFunction) -> Self {
        self.source = Some(g);
        self
    }

    pub fn background(&self) -> &Background {
        self.bg
    }

    pub fn field(&self) -> &HoloField {
        &self.x
    }

    /// `log(ω_φ^n/ω^n) − h_ω + θ_X(φ) + tφ + (1−t)g`.
    pub fn residual(&self, state: &MetricState, t: f64) -> Vec<f64> {
        let h = self.bg.h_omega();
        (0..self.bg.len())
            .map(|i| {
                let g = self.source.as_ref().map_or(0.0, |g| g[i]);
                state.log_ratio[i] - h[i] + state.theta_phi[i] + t * state.phi[i] + (1.0 - t) * g
            })
            .collect()
    }

    fn jacobian(&self, state: &MetricState, t: f64) -> DMatrix<f64> {
        let n = self.bg.dim() as f64;
        let f = self.bg.flux_matrix();
        let s = self.bg.stiffness_matrix();
        let len = self.bg.len();
        DMatrix::from_fn(len, len, |i, j| {
            let base = if n > 1.0 { (n - 1.0) / state.sigma[i] } else { 0.0 };
            let mut v = s[(i, j)] / state.dsigma[i] + (base + self.x.kappa) * f[(i, j)];
            if i == j {
                v += t;
            }
            v
        })
    }

    fn newton_step(&self, state: &MetricState, r: &[f64], t: f64) -> Result<Vec<f64>> {
        let len = self.bg.len();
        let jac = self.jacobian(state, t);
        let delta = if t == 0.0 {
            // constants span the kernel: border with the weighted mean
            let mass = self.bg.mass_weights();
            let mut m = DMatrix::zeros(len + 1, len + 1);
            m.view_mut((0, 0), (len, len)).copy_from(&jac);
            for i in 0..len {
                m[(i, len)] = 1.0;
                m[(len, i)] =
                    mass[i] * state.ratio[i] * state.theta_phi[i].exp() / self.bg.volume();
            }
            let mut rhs = DVector::zeros(len + 1);
            for i in 0..len {
                rhs[i] = -r[i];
            }
            let sol = m.lu().solve(&rhs).ok_or(LabError::SingularLinearization { t })?;
            sol.as_slice()[..len].to_vec()
        } else {
            let rhs = DVector::from_iterator(len, r.iter().map(|v| -v));
            let sol = jac.lu().solve(&rhs).ok_or(LabError::SingularLinearization { t })?;
            sol.as_slice().to_vec()
        };
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(LabError::SingularLinearization { t });
        }
        Ok(delta)
    }

    /// Damped Newton from `init`. At `t = 0` the constant is fixed by
    /// `∫(φ − g) e^{θ_X(φ)} ω_φ^n = 0`, the value the path takes as `t → 0⁺`.
    pub fn solve(&self, t: f64, init: &RadialFunction, opts: &SolverOptions) -> Result<Solution> {
        if !(0.0..1.0).contains(&t) {
            return Err(LabError::InvalidInput(format!("t = {t} outside [0, 1)")));
        }
        let mut phi = init.clone();
        let mut state = self.bg.state(&phi, &self.x)?;
        let mut r = self.residual(&state, t);
        let mut rn = sup(&r);
        let mut iterations = 0;
        while rn > opts.tol {
            if iterations >= opts.max_iter {
                if rn <= opts.accept {
                    break;
                }
                return Err(LabError::NewtonDiverged {
                    t,
                    iterations,
                    residual: rn,
                });
            }
            iterations += 1;
            let delta = self.newton_step(&state, &r, t)?;
            let mut alpha = 1.0;
            let mut next = None;
            while alpha >= 1.0 / 1024.0 {
                let trial = phi.zip_with(&RadialFunction::from(delta.clone()), |a, d| a + alpha * d);
                if let Ok(s) = self.bg.state(&trial, &self.x) {
                    let rt = self.residual(&s, t);
                    let rtn = sup(&rt);
                    if rtn < (1.0 - 1e-4 * alpha) * rn {
                        next = Some((trial, s, rt, rtn));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match next {
                Some((p, s, rt, rtn)) => {
                    phi = p;
                    state = s;
                    r = rt;
                    rn = rtn;
                }
                None if rn <= opts.accept => break,
                None => {
                    return Err(LabError::NewtonDiverged {
                        t,
                        iterations,
                        residual: rn,
                    })
                }
            }
        }
        if t == 0.0 {
            let shifted = match &self.source {
                Some(g) => &phi - g,
                None => phi.clone(),
            };
            let c = self.bg.average(&shifted, &state, Weight::Theta)?;
            phi = phi.add_constant(-c);
            state = self.bg.state(&phi, &self.x)?;
            rn = sup(&self.residual(&state, t));
        }
        Ok(Solution {
            t,
            phi,
            residual: rn,
            iterations,
        })
    }

    /// Follows the family from `t = 0` through every target, in order.
    /// Returns the solutions at the targets.
    pub fn track(&self, targets: &[f64], opts: &SolverOptions) -> Result<Vec<Solution>> {
        let energies = Energies::new(self.bg, self.x.clone());
        let zero = RadialFunction::zeros(self.bg.len());
        let first = self.solve(0.0, &zero, opts)?;
        let mut history = vec![(0.0, energies.i_energy(&first.phi).unwrap_or(f64::NAN))];
        let mut prev: Option<Solution> = None;
        let mut cur = first.clone();
        let mut out = Vec::with_capacity(targets.len());
        let mut dt = opts.dt0;
        for &target in targets {
            if target < cur.t {
                return Err(LabError::InvalidInput("t grid must be increasing".into()));
            }
            while cur.t < target {
                let t_next = (cur.t + dt).min(target);
                let guess = match &prev {
                    Some(p) => {
                        let w = (t_next - cur.t) / (cur.t - p.t);
                        cur.phi.zip_with(&p.phi, |c, q| c + w * (c - q))
                    }
                    None => cur.phi.clone(),
                };
                let attempt = self.solve(t_next, &guess, opts).or_else(|e| match e {
                    // the secant guess may overshoot the cone; retry from the last point
                    LabError::PositivityLost { .. } => self.solve(t_next, &cur.phi, opts),
                    other => Err(other),
                });
                match attempt {
                    Ok(sol) => {
                        history.push((sol.t, energies.i_energy(&sol.phi).unwrap_or(f64::NAN)));
                        prev = Some(std::mem::replace(&mut cur, sol));
                        dt = (dt * 1.5).min(opts.dt0);
                    }
                    Err(
                        LabError::NewtonDiverged { .. }
                        | LabError::PositivityLost { .. }
                        | LabError::SingularLinearization { .. },
                    ) => {
                        dt *= 0.5;
                        if dt < opts.dt_min {
                            return Err(LabError::StepUnderflow {
                                last_t: cur.t,
                                history,
                            });
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
            out.push(if target == 0.0 { first.clone() } else { cur.clone() });
        }
        Ok(out)
    }
}

/// Where the path is sampled: `t = 0`, Chebyshev–Gauss points of `[0, 1]`
/// (for integrals in `t`) and a geometric tail `1 − h₀2^{−j}` (for limits).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathDesign {
    pub chebyshev_nodes: usize,
    pub tail_start: f64,
    pub tail_levels: usize,
}

impl Default for PathDesign {
    fn default() -> Self {
        Self {
            chebyshev_nodes: 24,
            tail_start: 0.128,
            tail_levels: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRole {
    Start,
    Chebyshev,
    Tail,
}

impl PathDesign {
    pub fn chebyshev_times(&self) -> Vec<f64> {
        chebyshev_gauss_points(self.chebyshev_nodes, 0.0, 1.0)
    }

    /// `h_j = 1 − t_j`.
    pub fn tail_gaps(&self) -> Vec<f64> {
        (0..self.tail_levels)
            .map(|j| self.tail_start * 0.5f64.powi(j as i32))
            .collect()
    }

    pub fn t_max(&self) -> f64 {
        1.0 - self.tail_gaps().last().copied().unwrap_or(self.tail_start)
    }

    /// Sorted sample times with their roles.
    pub fn schedule(&self) -> Vec<(f64, PointRole)> {
        let mut s = vec![(0.0, PointRole::Start)];
        s.extend(self.chebyshev_times().into_iter().map(|t| (t, PointRole::Chebyshev)));
        s.extend(self.tail_gaps().into_iter().map(|h| (1.0 - h, PointRole::Tail)));
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        s
    }
}

/// Functional monitors at an accepted point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monitors {
    pub i: f64,
    pub i_tilde_minus_j_tilde: f64,
    pub f_tilde: f64,
    /// `J̃ − (1/V)∫φ e^{θ_X} ω^n`.
    pub f0_tilde: f64,
    /// `Ẽ_k`, `k = 0..=n`.
    pub e: Vec<f64>,
    /// `Σ_{i<k} (−1)^{k−i} C(k+1, i) G̃_{k−i}`, `k = 0..=n`.
    pub g_combination: Vec<f64>,
    pub conservation_defect: f64,
    pub u_identity_defect: f64,
    /// Smallest cone margin over `2 ≤ k ≤ n`; absent when `n = 1`.
    pub cone_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityPoint {
    pub t: f64,
    pub role: PointRole,
    #[serde(skip)]
    pub phi: RadialFunction,
    pub residual: f64,
    pub iterations: usize,
    pub monitors: Monitors,
}

pub fn monitors(en: &Energies, phi: &RadialFunction, t: f64) -> Result<Monitors> {
    let bg = en.background();
    let n = bg.dim();
    let report = en.report(phi)?;
    let s = en.state(phi)?;
    let h = bg.h_omega();
    let conserved = h.zip_with(phi, |a, b| (a - t * b).exp());
    let conservation_defect = (bg.average(&conserved, en.reference(), Weight::None)? - 1.0).abs();
    let u_identity_defect = s.u.max_abs_diff(&((1.0 - t) * phi));
    let g_combination = (0..=n)
        .map(|k| en.g_combination_at(&s, k))
        .collect::<Result<Vec<_>>>()?;
    let cone_margin = if n >= 2 {
        let mut m = f64::INFINITY;
        for k in 2..=n {
            m = m.min(en.cone_margin_at(&s, k)?);
        }
        Some(m)
    } else {
        None
    };
    Ok(Monitors {
        i: report.i,
        i_tilde_minus_j_tilde: report.i_tilde - report.j_tilde,
        f_tilde: report.f_tilde,
        f0_tilde: report.f_tilde + en.log_term(phi)?,
        e: report.e,
        g_combination,
        conservation_defect,
        u_identity_defect,
        cone_margin,
    })
}

pub fn solve_at_t(
    bg: &Background,
    x: &HoloField,
    t: f64,
    init: &RadialFunction,
    opts: &SolverOptions,
) -> Result<ContinuityPoint> {
    let eq = Equation::new(bg, x.clone());
    let sol = eq.solve(t, init, opts)?;
    let en = Energies::new(bg, x.clone());
    Ok(ContinuityPoint {
        t,
        role: if t == 0.0 { PointRole::Start } else { PointRole::Chebyshev },
        monitors: monitors(&en, &sol.phi, t)?,
        phi: sol.phi,
        residual: sol.residual,
        iterations: sol.iterations,
    })
}

/// The continuity path sampled on `t_grid` (increasing, `sup < 1`).
pub fn continuity_path(
    bg: &Background,
    x: &HoloField,
    t_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<ContinuityPoint>> {
    let roles: Vec<_> = t_grid
        .iter()
        .map(|&t| (t, if t == 0.0 { PointRole::Start } else { PointRole::Chebyshev }))
        .collect();
    run_schedule(bg, x, &roles, opts)
}

fn run_schedule(
    bg: &Background,
    x: &HoloField,
    schedule: &[(f64, PointRole)],
    opts: &SolverOptions,
) -> Result<Vec<ContinuityPoint>> {
    let eq = Equation::new(bg, x.clone());
    let en = Energies::new(bg, x.clone());
    let times: Vec<f64> = schedule.iter().map(|s| s.0).collect();
    let sols = eq.track(&times, opts)?;
    sols.into_iter()
        .zip(schedule)
        .map(|(sol, &(t, role))| {
            Ok(ContinuityPoint {
                t,
                role,
                monitors: monitors(&en, &sol.phi, t)?,
                phi: sol.phi,
                residual: sol.residual,
                iterations: sol.iterations,
            })
        })
        .collect()
}

/// A continuity path sampled on a [`PathDesign`].
#[derive(Debug, Clone, Serialize)]
pub struct ContinuityRun {
    pub design: PathDesign,
    pub points: Vec<ContinuityPoint>,
}

pub fn continuity_run(
    bg: &Background,
    x: &HoloField,
    design: &PathDesign,
    opts: &SolverOptions,
) -> Result<ContinuityRun> {
    let points = run_schedule(bg, x, &design.schedule(), opts)?;
    Ok(ContinuityRun {
        design: *design,
        points,
    })
}

/// Value at `h = 0` of the polynomial through `(h_j, v_j)` (Neville).
pub fn richardson(h: &[f64], v: &[f64]) -> f64 {
    let mut p = v.to_vec();
    let m = p.len();
    for level in 1..m {
        for i in 0..m - level {
            let (hi, hj) = (h[i], h[i + level]);
            p[i] = (hi * p[i + 1] - hj * p[i]) / (hi - hj);
        }
    }
    p.first().copied().unwrap_or(f64::NAN)
}

/// Extrapolations from two cutoff sequences (all points, and all but the
/// coarsest) and their difference as an error estimate.
pub fn richardson_pair(h: &[f64], v: &[f64]) -> (f64, f64) {
    let full = richardson(h, v);
    let fine = richardson(&h[1..], &v[1..]);
    (full, (full - fine).abs())
}

/// Observed order `p` in `v(h) ≈ v₀ + c h^p` from the three finest points.
pub fn observed_order(h: &[f64], v: &[f64]) -> f64 {
    let m = v.len();
    if m < 3 {
        return f64::NAN;
    }
    let d1 = (v[m - 3] - v[m - 2]).abs();
    let d2 = (v[m - 2] - v[m - 1]).abs();
    (d1 / d2).ln() / (h[m - 3] / h[m - 2]).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathIdentities {
    /// Largest residual of the `Ẽ₀` path identity over the samples.
    pub energy_identity: f64,
    /// Largest residual of `F̃⁰(φ_t) = −(1/t)∫₀ᵗ(Ĩ−J̃)`.
    pub average_identity: f64,
    pub f_limit: f64,
    pub f_limit_error: f64,
    pub integral_to_one: f64,
    /// `|lim F̃ + ∫₀¹(Ĩ−J̃)|`.
    pub limit_defect: f64,
    /// Largest decrease of `Ĩ−J̃` between consecutive samples.
    pub monotone_violation: f64,
    /// Largest increase of `F̃⁰` between consecutive samples.
    pub f0_monotone_violation: f64,
    /// Extrapolated `Ẽ_k`, `k = 0..=n`.
    pub e_limits: Vec<f64>,
    pub e_limit_errors: Vec<f64>,
    pub f_order: f64,
    /// Largest relative size of the top Chebyshev coefficients of `Ĩ−J̃`.
    pub series_tail: f64,
}

impl ContinuityRun {
    fn role(&self, r: PointRole) -> Vec<&ContinuityPoint> {
        self.points.iter().filter(|p| p.role == r).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().fold(0.0, |m, p| m.max(p.residual))
    }

    pub fn last(&self) -> &ContinuityPoint {
        self.points.last().expect("non-empty run")
    }

    fn d_series(&self) -> Result<GaussChebyshevSeries> {
        let cheb = self.role(PointRole::Chebyshev);
        if cheb.len() != self.design.chebyshev_nodes || cheb.len() < 8 {
            return Err(LabError::InsufficientPathResolution(format!(
                "{} Chebyshev samples, need {} (at least 8)",
                cheb.len(),
                self.design.chebyshev_nodes
            )));
        }
        let vals: Vec<f64> = cheb.iter().map(|p| p.monitors.i_tilde_minus_j_tilde).collect();
        Ok(GaussChebyshevSeries::fit(0.0, 1.0, &vals))
    }

    fn tail(&self) -> Result<(Vec<f64>, Vec<&ContinuityPoint>)> {
        let tail = self.role(PointRole::Tail);
        if tail.len() < 3 {
            return Err(LabError::InsufficientPathResolution(format!(
                "{} tail samples, need at least 3",
                tail.len()
            )));
        }
        let h = tail.iter().map(|p| 1.0 - p.t).collect();
        Ok((h, tail))
    }

    /// `∫₀^τ (Ĩ−J̃) dt` from the Chebyshev samples.
    pub fn d_integral(&self, tau: f64) -> Result<f64> {
        Ok(self.d_series()?.integral_to(tau))
    }

    pub fn identities(&self, en: &Energies) -> Result<PathIdentities> {
        let series = self.d_series()?;
        let (h, tail) = self.tail()?;
        let start = self
            .points
            .iter()
            .find(|p| p.role == PointRole::Start)
            .ok_or_else(|| LabError::InsufficientPathResolution("no t = 0 sample".into()))?;
        let d0 = start.monitors.i_tilde_minus_j_tilde;
        let e00 = start.monitors.e[0];

        let mut energy_identity = 0.0f64;
        let mut average_identity = 0.0f64;
        for p in &self.points {
            let m = &p.monitors;
            let integral = series.integral_to(p.t);
            let r = m.e[0] - e00 + (1.0 - p.t) * m.i_tilde_minus_j_tilde - d0 + integral;
            energy_identity = energy_identity.max(r.abs());
            if p.t > 0.0 {
                let r2 = m.f0_tilde + integral / p.t;
                average_identity = average_identity.max(r2.abs());
            }
        }

        let mut monotone_violation = 0.0f64;
        let mut f0_monotone_violation = 0.0f64;
        for w in self.points.windows(2) {
            let (a, b) = (&w[0].monitors, &w[1].monitors);
            monotone_violation =
                monotone_violation.max(a.i_tilde_minus_j_tilde - b.i_tilde_minus_j_tilde);
            f0_monotone_violation = f0_monotone_violation.max(b.f0_tilde - a.f0_tilde);
        }

        let f_vals: Vec<f64> = tail.iter().map(|p| p.monitors.f_tilde).collect();
        let (f_limit, f_limit_error) = richardson_pair(&h, &f_vals);
        let integral_to_one = series.integral_to(1.0);
        let n = en.background().dim();
        let mut e_limits = Vec::with_capacity(n + 1);
        let mut e_limit_errors = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let v: Vec<f64> = tail.iter().map(|p| p.monitors.e[k]).collect();
            let (l, err) = richardson_pair(&h, &v);
            e_limits.push(l);
            e_limit_errors.push(err);
        }
        let c = series.coefficients();
        let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let top = c[c.len() - c.len() / 4..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(PathIdentities {
            energy_identity,
            average_identity,
            f_limit,
            f_limit_error,
            integral_to_one,
            limit_defect: (f_limit + integral_to_one).abs(),
            monotone_violation,
            f0_monotone_violation,
            e_limits,
            e_limit_errors,
            f_order: observed_order(&h, &f_vals),
            series_tail: if cmax > 0.0 { top / cmax } else { 0.0 },
        })
    }

    /// `|lim Ẽ_k − (k+1) lim F̃ − C_{ω,X,k} + ((k+1)/V)∫u₀e^{θ_X}ω^n|` for
    /// `k = 0..=n` (with `C_{ω,X,0} = 0`).
    pub fn infimum_defects(&self, en: &Energies) -> Result<Vec<f64>> {
        let ids = self.identities(en)?;
        let u0 = en.u0_average()?;
        let n = en.background().dim();
        (0..=n)
            .map(|k| {
                let c = if k == 0 { 0.0 } else { en.c_constant(k)? };
                let kk = (k + 1) as f64;
                Ok((ids.e_limits[k] - kk * ids.f_limit - c + kk * u0).abs())
            })
            .collect()
    }

    /// For each `k ≥ 1`: the smallest `c` with
    /// `Σ(…)G̃(φ_τ) − C ≤ (1−τ)² c I(φ_τ)` over the samples, and
    /// `|Σ(…)G̃ − C|` at the last sample.
    pub fn curvature_bound(&self, en: &Energies) -> Result<Vec<(f64, f64)>> {
        let n = en.background().dim();
        (1..=n)
            .map(|k| {
                let c = en.c_constant(k)?;
                let mut worst = f64::NEG_INFINITY;
                for p in self.points.iter().filter(|p| p.t > 0.0) {
                    let gap = p.monitors.g_combination[k] - c;
                    let scale = (1.0 - p.t).powi(2) * p.monitors.i;
                    if scale > 0.0 {
                        worst = worst.max(gap / scale);
                    }
                }
                let last = (self.last().monitors.g_combination[k] - c).abs();
                Ok((worst, last))
            })
            .collect()
    }
}

/// One `(s, t)` sample of the deformed family.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyPoint {
    pub s: f64,
    pub t: f64,
    #[serde(skip)]
    pub psi: RadialFunction,
    #[serde(skip)]
    pub phi_st: RadialFunction,
    pub c_s: f64,
    #[serde(skip)]
    pub phi_hat: RadialFunction,
    pub residual: f64,
    /// Residual of the un-hatted equation over `ω_s`, recomputed from `φ_{s,t}`.
    pub family_equation_defect: f64,
    /// `|(1/V)∫e^{h_s}ω_s^n − 1|`.
    pub h_s_defect: f64,
    /// `|(1/V)∫e^{θ_s}ω_s^n − 1|`.
    pub theta_s_defect: f64,
    /// `F̃⁰_ω(φ̂_{s,t})`.
    pub f0_hat: f64,
}

/// `c_s = −log((1/V)∫ e^{h_ω − sψ} ω^n)`.
pub fn family_constant(bg: &Background, psi: &RadialFunction, s: f64) -> f64 {
    let f = bg.h_omega().zip_with(psi, |h, p| (h - s * p).exp());
    let zero = RadialFunction::zeros(bg.len());
    let state = bg.state(&zero, &bg.holo_field(0.0).expect("zero field")).expect("reference");
    -bg.average(&f, &state, Weight::None).expect("grid").ln()
}

pub fn family_path(
    bg: &Background,
    x: &HoloField,
    psi: &RadialFunction,
    s_grid: &[f64],
    t_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<Vec<FamilyPoint>>> {
    bg.check(psi)?;
    bg.state(psi, x)?;
    let en = Energies::new(bg, x.clone());
    s_grid
        .iter()
        .map(|&s| {
            let c_s = family_constant(bg, psi, s);
            let spsi = s * psi;
            let g = spsi.add_constant(-c_s);
            let eq = Equation::new(bg, x.clone()).with_source(g.clone());
            let sols = eq.track(t_grid, opts)?;
            let omega_s = bg.state(&spsi, x)?;
            let log_s: Vec<f64> = omega_s.log_ratio.clone();
            let h_s = RadialFunction::from(
                (0..bg.len())
                    .map(|i| -log_s[i] - spsi[i] + bg.h_omega()[i] + c_s)
                    .collect::<Vec<_>>(),
            );
            let h_s_exp = h_s.map(f64::exp);
            let h_s_defect = (bg.average(&h_s_exp, &omega_s, Weight::None)? - 1.0).abs();
            let theta_s_defect =
                (bg.average(&RadialFunction::constant(bg.len(), 1.0), &omega_s, Weight::Theta)? - 1.0)
                    .abs();
            sols.into_iter()
                .map(|sol| {
                    let t = sol.t;
                    let phi_hat = sol.phi;
                    let phi_st = (&phi_hat - &spsi).add_constant(c_s);
                    // (ω_s + √−1∂∂̄φ)^n = e^{h_s − θ_s(φ) − tφ} ω_s^n
                    let st = bg.state(&phi_hat, x)?;
                    let mut defect = 0.0f64;
                    for i in 0..bg.len() {
                        let lhs = st.log_ratio[i] - log_s[i];
                        let rhs = h_s[i] - st.theta_phi[i] - t * phi_st[i];
                        defect = defect.max((lhs - rhs).abs());
                    }
                    Ok(FamilyPoint {
                        s,
                        t,
                        psi: psi.clone(),
                        phi_st,
                        c_s,
                        residual: sol.residual,
                        family_equation_defect: defect,
                        h_s_defect,
                        theta_s_defect,
                        f0_hat: en.f0_tilde(&phi_hat)?,
                        phi_hat,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}
