//! Measurements shared by the experiments and the acceptance checks. Each
//! suite returns raw defects; deciding pass or fail is left to the caller.

use krs_core::functionals::{Energies, PathSpec};
use krs_core::geometry::{BackendId, Background, HoloField, RadialFunction};
use krs_core::invariants::{flow_constant, flow_potential, tz_invariant};
use krs_core::sampling::{potential_pairs, potentials};
use krs_core::solver::{richardson, ContinuityRun, PathDesign, PointRole};
use krs_core::Result;
use serde::Serialize;

pub const SAMPLE_SIZE: usize = 20;
pub const PAIR_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityMeasures {
    pub eq25: f64,
    /// Smallest `Ẽ₀ − F̃ + (1/V)∫u₀e^{θ_X}ω^n`.
    pub eq27_min: f64,
    pub pali: f64,
    pub cocycle: f64,
    /// `|Ẽ₀(linear) − Ẽ₀(bent)|`, also against the reparametrized path.
    pub path_e0: f64,
    pub path_j: f64,
    pub constant_shift: f64,
    pub i_minus_j_min: f64,
    pub i_min: f64,
    /// Smallest `Ẽ_k − (k+1)Ẽ₀ − C_{ω,X,k}` over cone members, `k ≥ 2`.
    pub lemma_proof_min: Option<f64>,
    /// Smallest `Ẽ_k − (k+1)Ẽ₀ + C_{ω,X,k}` over the same members.
    pub lemma_statement_min: Option<f64>,
    pub cone_members: usize,
}

impl IdentityMeasures {
    /// The defects that should shrink under grid refinement.
    pub fn defects(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("eq25", self.eq25),
            ("pali", self.pali),
            ("cocycle", self.cocycle),
            ("path_e0", self.path_e0),
            ("path_j", self.path_j),
            ("constant_shift", self.constant_shift),
        ]
    }
}

pub const SHIFT: f64 = -2.3;

pub fn identity_measures(bg: &Background, seed: u64) -> Result<IdentityMeasures> {
    let en = Energies::soliton(bg);
    let n = bg.dim();
    let chi = 0.5 * &potentials(bg, seed.wrapping_add(92), 1)[0];
    let mut m = IdentityMeasures {
        eq25: 0.0,
        eq27_min: f64::INFINITY,
        pali: 0.0,
        cocycle: 0.0,
        path_e0: 0.0,
        path_j: 0.0,
        constant_shift: 0.0,
        i_minus_j_min: f64::INFINITY,
        i_min: f64::INFINITY,
        lemma_proof_min: None,
        lemma_statement_min: None,
        cone_members: 0,
    };
    for phi in potentials(bg, seed, SAMPLE_SIZE) {
        let d = en.identity_defects(&phi)?;
        m.eq25 = m.eq25.max(d.k_energy_f.abs());
        m.eq27_min = m.eq27_min.min(d.lower_bound_gap);
        m.pali = m.pali.max(d.pali.abs());
        m.i_minus_j_min = m.i_minus_j_min.min(d.i_minus_j);
        m.i_min = m.i_min.min(en.i_energy(&phi)?);

        let lin = PathSpec::linear(&phi);
        let e0 = en.e0_tilde(&lin)?;
        let e0_bent = en.e0_tilde(&PathSpec::bent(&phi, &chi))?;
        let e0_re = en.e0_tilde(&PathSpec::reparam(&phi))?;
        m.path_e0 = m.path_e0.max((e0 - e0_bent).abs()).max((e0 - e0_re).abs());
        let j = en.j_tilde(&lin)?;
        let j_bent = en.j_tilde(&PathSpec::bent(&phi, &chi))?;
        m.path_j = m.path_j.max((j - j_bent).abs());

        let a = en.report(&phi)?;
        let b = en.report(&phi.add_constant(SHIFT))?;
        let scalars = [(a.i, b.i), (a.i_tilde, b.i_tilde), (a.j_tilde, b.j_tilde), (a.f_tilde, b.f_tilde)];
        let lists = a.g.iter().zip(&b.g).chain(a.e.iter().zip(&b.e)).map(|(x, y)| (*x, *y));
        for (x, y) in scalars.into_iter().chain(lists) {
            m.constant_shift = m.constant_shift.max((x - y).abs());
        }

        for k in 2..=n {
            if en.cone_margin(&phi, k)? < 0.0 {
                continue;
            }
            m.cone_members += 1;
            let c = en.c_constant(k)?;
            let base = a.e[k] - (k + 1) as f64 * a.e0;
            let p = m.lemma_proof_min.get_or_insert(f64::INFINITY);
            *p = p.min(base - c);
            let s = m.lemma_statement_min.get_or_insert(f64::INFINITY);
            *s = s.min(base + c);
        }
    }
    for (phi, psi) in potential_pairs(bg, seed.wrapping_add(4), PAIR_COUNT) {
        for k in 0..=n {
            let lhs = en.e_k(&phi, k, &PathSpec::linear(&phi))? + en.e_k_relative(&phi, &psi, k)?;
            let rhs = en.e_k(&psi, k, &PathSpec::linear(&psi))?;
            m.cocycle = m.cocycle.max((lhs - rhs).abs());
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityMeasures {
    pub reached: f64,
    pub residual: f64,
    pub conservation: f64,
    pub u_identity: f64,
    /// Smallest cone margin over the path; `None` in dimension one.
    pub cone_min: Option<f64>,
    pub monotone_violation: f64,
    pub f0_monotone_violation: f64,
    pub energy_identity: f64,
    pub average_identity: f64,
    pub limit_defect: f64,
    pub f_limit: f64,
    pub f_limit_error: f64,
    pub f_order: f64,
    pub infimum: Vec<f64>,
    /// For `k ≥ 1`: the measured `c` and the extrapolated
    /// `|lim Σ(…)G̃ − C_{ω,X,k}|`.
    pub curvature: Vec<(f64, f64)>,
}

impl ContinuityMeasures {
    pub fn defects(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("residual", self.residual),
            ("conservation", self.conservation),
            ("u_identity", self.u_identity),
            ("eq_c1", self.energy_identity),
            ("average_identity", self.average_identity),
            ("eq_f1", self.limit_defect),
        ]
    }
}

pub fn continuity_measures(run: &ContinuityRun, en: &Energies) -> Result<ContinuityMeasures> {
    let ids = run.identities(en)?;
    let mut m = ContinuityMeasures {
        reached: run.last().t,
        residual: run.max_residual(),
        conservation: 0.0,
        u_identity: 0.0,
        cone_min: None,
        monotone_violation: ids.monotone_violation,
        f0_monotone_violation: ids.f0_monotone_violation,
        energy_identity: ids.energy_identity,
        average_identity: ids.average_identity,
        limit_defect: ids.limit_defect,
        f_limit: ids.f_limit,
        f_limit_error: ids.f_limit_error,
        f_order: ids.f_order,
        infimum: run.infimum_defects(en)?,
        curvature: vec![],
    };
    for p in &run.points {
        m.conservation = m.conservation.max(p.monitors.conservation_defect);
        m.u_identity = m.u_identity.max(p.monitors.u_identity_defect);
        if let Some(c) = p.monitors.cone_margin {
            m.cone_min = Some(m.cone_min.map_or(c, |v: f64| v.min(c)));
        }
    }
    let tail: Vec<_> = run.points.iter().filter(|p| p.role == PointRole::Tail).collect();
    let h: Vec<f64> = tail.iter().map(|p| 1.0 - p.t).collect();
    for (k, (c, _)) in (1..).zip(run.curvature_bound(en)?) {
        let v: Vec<f64> = tail.iter().map(|p| p.monitors.g_combination[k]).collect();
        let lim = richardson(&h, &v);
        m.curvature.push((c, (lim - en.c_constant(k)?).abs()));
    }
    Ok(m)
}

/// A [`PathDesign`] whose last tail point is `t_max`. Fewer than three tail
/// levels fit when `t_max ≤ 0.75`; the path identities then refuse to run.
pub fn design_for(t_max: f64) -> PathDesign {
    let d = PathDesign::default();
    let gap = 1.0 - t_max;
    let mut levels = d.tail_levels;
    while levels > 1 && gap * 2f64.powi(levels as i32 - 1) >= 0.5 {
        levels -= 1;
    }
    PathDesign {
        tail_start: gap * 2f64.powi(levels as i32 - 1),
        tail_levels: levels,
        ..d
    }
}

/// Largest `|𝓕_X(Y)(ω_φ) − 𝓕_X(Y)(ω)|` over seeded metrics `φ`.
pub fn metric_independence(bg: &Background, y: &HoloField, seed: u64, count: usize) -> Result<(f64, f64)> {
    let en = Energies::soliton(bg);
    let base = tz_invariant(bg, y, en.reference())?;
    let mut worst = 0.0f64;
    for phi in potentials(bg, seed, count) {
        let v = tz_invariant(bg, y, &en.state(&phi)?)?;
        worst = worst.max((v - base).abs());
    }
    Ok((base, worst))
}

/// Largest `|∂φ/∂t − θ_Y(φ) − c|` by central differences at `times`.
pub fn flow_fd_defect(bg: &Background, y: &HoloField, times: &[f64]) -> Result<f64> {
    let c = flow_constant(bg, y);
    let h = 1e-4;
    let mut worst = 0.0f64;
    for &t in times {
        let a = flow_potential(bg, y, t + h)?;
        let b = flow_potential(bg, y, t - h)?;
        let phi = flow_potential(bg, y, t)?;
        let theta = bg.theta_potential(y, &phi)?;
        for i in 0..bg.len() {
            worst = worst.max(((a[i] - b[i]) / (2.0 * h) - theta[i] - c).abs());
        }
    }
    Ok(worst)
}

/// RK4 for `Θ' = n − τ − Θ((n−1)/τ + κ)` from `Θ(τ₋) = 0` up to `tau`.
pub fn koiso_profile(backend: BackendId, kappa: f64, tau: f64) -> f64 {
    let n = backend.dim() as f64;
    let lo = backend.interval().0;
    let f = |t: f64, th: f64| {
        let curv = if n > 1.0 { (n - 1.0) / t } else { 0.0 };
        n - t - th * (curv + kappa)
    };
    let steps = 4000;
    let h = (tau - lo) / steps as f64;
    let (mut t, mut th) = (lo, 0.0);
    for _ in 0..steps {
        let k1 = f(t, th);
        let k2 = f(t + 0.5 * h, th + 0.5 * h * k1);
        let k3 = f(t + 0.5 * h, th + 0.5 * h * k2);
        let k4 = f(t + h, th + h * k3);
        th += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    th
}

/// The `κ` for which the Koiso profile closes up at `τ₊`, by shooting and
/// bisection on `[−3, 3]`.
pub fn koiso_shooting_kappa(backend: BackendId) -> Option<f64> {
    let hi = backend.interval().1;
    let end = |k: f64| koiso_profile(backend, k, hi);
    let (mut a, mut b) = (-3.0, 3.0);
    let fa = end(a);
    if fa.signum() == end(b).signum() {
        return None;
    }
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        let fm = end(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Number of matching significant digits, `−log₁₀|a−b|/|b|`.
pub fn matching_digits(a: f64, b: f64) -> f64 {
    if a == b {
        return 16.0;
    }
    let scale = if b.abs() < 1e-8 { 1.0 } else { b.abs() };
    (-((a - b).abs() / scale).log10()).min(16.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitonEndpoint {
    /// `max |Θ σ_τ − Θ_Koiso(σ)|` at the extrapolated `φ₁`.
    pub profile_error: f64,
    /// Sup-norm of the log-form equation at `t = 1`.
    pub residual: f64,
}

/// Extrapolates `φ_t` to `t = 1` from the tail and compares the new
/// momentum profile with the Koiso profile.
pub fn soliton_endpoint(run: &ContinuityRun, en: &Energies) -> Result<SolitonEndpoint> {
    let bg = en.background();
    let tail: Vec<_> = run.points.iter().filter(|p| p.role == PointRole::Tail).collect();
    let h: Vec<f64> = tail.iter().map(|p| 1.0 - p.t).collect();
    let phi1 = RadialFunction::from(
        (0..bg.len())
            .map(|i| richardson(&h, &tail.iter().map(|p| p.phi[i]).collect::<Vec<_>>()))
            .collect::<Vec<_>>(),
    );
    let s = en.state(&phi1)?;
    let kappa = en.field().kappa;
    let mut profile_error = 0.0f64;
    for i in 0..bg.len() {
        let new = bg.momentum()[i] * s.dsigma[i];
        profile_error = profile_error.max((new - koiso_profile(bg.backend(), kappa, s.sigma[i])).abs());
    }
    let eq = krs_core::solver::Equation::new(bg, en.field().clone());
    let residual = eq.residual(&s, 1.0).iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(SolitonEndpoint { profile_error, residual })
}

/// One row of a grid-doubling comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub name: String,
    pub coarse: f64,
    pub fine: f64,
    pub ratio: f64,
    /// The coarse defect is already at the rounding floor.
    pub at_floor: bool,
}

pub const ROUNDING_FLOOR: f64 = 1e-12;

pub fn refinement(coarse: &[(&'static str, f64)], fine: &[(&'static str, f64)]) -> Vec<Refinement> {
    coarse
        .iter()
        .zip(fine)
        .map(|(&(name, c), &(_, f))| Refinement {
            name: name.to_string(),
            coarse: c,
            fine: f,
            ratio: if f > 0.0 { c / f } else { f64::INFINITY },
            at_floor: c <= ROUNDING_FLOOR,
        })
        .collect()
}
