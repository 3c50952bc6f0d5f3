use crate::config::{BreakdownMode, Experiment, Kappa, RunConfig};
use crate::report::{Assertion, Curve, ExperimentReport, Status};
use crate::suites::*;
use krs_core::algebra::{identity_holds, p_expansion_coeffs, wedge_binomial_identity, MAX_DEGREE};
use krs_core::functionals::Energies;
use krs_core::geometry::{BackendId, Background, BackgroundSpec};
use krs_core::invariants::*;
use krs_core::sampling::potentials;
use krs_core::solver::*;
use krs_core::{LabError, Result};
use std::time::Instant;

pub fn run_experiment(cfg: &RunConfig) -> ExperimentReport {
    let start = Instant::now();
    let mut rep = ExperimentReport::new(cfg.experiment.name());
    let out = match cfg.experiment {
        Experiment::Identities => identities(cfg, &mut rep),
        Experiment::Continuity => continuity(cfg, &mut rep),
        Experiment::Family => family(cfg, &mut rep),
        Experiment::InvariantFlow => invariant_flow(cfg, &mut rep),
        Experiment::SolitonField => soliton_field(cfg, &mut rep),
        Experiment::Infimum => infimum(cfg, &mut rep),
        Experiment::Algebra => algebra(cfg, &mut rep),
        Experiment::All => Err(LabError::InvalidInput("`all` is not a single experiment".into())),
    };
    if let Err(e) = out {
        rep.status = Status::Error;
        rep.error = Some(e.to_string());
    }
    rep.settle();
    rep.seconds = start.elapsed().as_secs_f64();
    rep
}

fn build(cfg: &RunConfig, kappa: f64) -> Result<Background> {
    BackgroundSpec::new(cfg.backend, cfg.grid, kappa)
        .perturbed(cfg.perturbation())
        .build()
}

/// The configured field coefficient, solving for the soliton one if asked.
fn resolve_kappa(cfg: &RunConfig, rep: &mut ExperimentReport) -> Result<f64> {
    let k = match cfg.kappa {
        Kappa::Value(k) => k,
        Kappa::Named(_) => find_soliton_field(&build(cfg, 0.0)?)?.kappa_star,
    };
    rep.record("kappa", k);
    Ok(k)
}

/// Like [`resolve_kappa`], but swaps a zero coefficient on `calabi_fiber`
/// for the soliton one so that the path exists.
fn path_kappa(cfg: &RunConfig, rep: &mut ExperimentReport) -> Result<f64> {
    match (cfg.backend, cfg.kappa) {
        (BackendId::CalabiFiber, Kappa::Value(k)) if k == 0.0 => {
            let k = find_soliton_field(&build(cfg, 0.0)?)?.kappa_star;
            rep.record("kappa", k);
            rep.record("kappa_source", "soliton coefficient; no soliton exists at kappa = 0 here");
            Ok(k)
        }
        _ => resolve_kappa(cfg, rep),
    }
}

fn identities(cfg: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let kappa = resolve_kappa(cfg, rep)?;
    let bg = build(cfg, kappa)?;
    let m = identity_measures(&bg, cfg.seed)?;
    let t = |k: &str| cfg.tolerance(k);
    rep.assert(Assertion::at_most("k_energy_identity", "Eq2.5", m.eq25, t("eq25")));
    rep.assert(Assertion::nonnegative("k_energy_above_f", "Eq2.7", m.eq27_min, t("eq27")));
    rep.assert(Assertion::at_most("pali_formula", "Pali", m.pali, t("pali")));
    rep.assert(Assertion::at_most("cocycle", "Cocycle", m.cocycle, t("cocycle")));
    rep.assert(Assertion::at_most("e0_path_independence", "Eq2.1", m.path_e0, t("path_independence")));
    rep.assert(Assertion::at_most("j_path_independence", "Sec2:J", m.path_j, t("path_independence")));
    rep.assert(Assertion::at_most("constant_shift", "Eq2.4", m.constant_shift, t("constant_shift")));
    rep.assert(Assertion::nonnegative("i_minus_j", "Eq2.2", m.i_minus_j_min, t("i_minus_j")));
    rep.assert(Assertion::nonnegative("i_nonnegative", "Eq2.3", m.i_min, t("i_nonnegative")));
    if let Some(p) = m.lemma_proof_min {
        rep.assert(
            Assertion::nonnegative("lower_bound_proof_form", "Lem2.4", p, t("lemma_bound"))
                .with_note("E_k - (k+1)E_0 - C over cone members"),
        );
    }
    rep.record("measures", &m);
    Ok(())
}

fn path_curve(run_points: &[ContinuityPoint], n: usize) -> Curve {
    let mut header = vec!["t", "residual", "I", "Itilde_minus_Jtilde", "F_tilde"];
    let e_names: Vec<String> = (0..=n).map(|k| format!("E_{k}")).collect();
    header.extend(e_names.iter().map(String::as_str));
    header.extend(["conservation_defect", "u_defect"]);
    let mut c = Curve::new("continuity", &header);
    for p in run_points {
        let m = &p.monitors;
        let mut row = vec![p.t, p.residual, m.i, m.i_tilde_minus_j_tilde, m.f_tilde];
        row.extend(&m.e);
        row.extend([m.conservation_defect, m.u_identity_defect]);
        c.push(row);
    }
    c
}

fn assert_path(cfg: &RunConfig, rep: &mut ExperimentReport, m: &ContinuityMeasures) {
    let t = |k: &str| cfg.tolerance(k);
    rep.assert(Assertion::at_least("reached_t_max", "Sec3:open", m.reached, cfg.t_max));
    rep.assert(Assertion::at_most("ma_residual", "Eq3.1", m.residual, t("ma_residual")));
    rep.assert(Assertion::at_most("conservation", "Sec4:volume", m.conservation, t("conservation")));
    rep.assert(Assertion::at_most("u_identity", "Sec3:u", m.u_identity, t("u_identity")));
    if let Some(c) = m.cone_min {
        rep.assert(Assertion::nonnegative("cone_membership", "Eq2.9", c, t("cone")));
    }
    rep.assert(Assertion::at_most("i_minus_j_monotone", "Sec4:increasing", m.monotone_violation, t("monotone")));
    rep.assert(Assertion::at_most("f0_monotone", "CTZ:average", m.f0_monotone_violation, t("monotone")));
    rep.assert(Assertion::at_most("energy_path_identity", "eq:c1", m.energy_identity, t("path_identity")));
    rep.assert(Assertion::at_most("average_identity", "CTZ:average", m.average_identity, t("path_identity")));
    rep.assert(Assertion::at_most("limit_formula", "eq:f1", m.limit_defect, t("limit")));
}

/// Whether the Futaki-type obstruction predicts that the path breaks down.
fn breakdown_expected(cfg: &RunConfig, bg: &Background, rep: &mut ExperimentReport) -> Result<bool> {
    let w = bg.holo_field(1.0)?;
    let f = tz_invariant_reference(bg, bg.field(), &w)?;
    rep.record("invariant_f_x_w", f);
    Ok(match cfg.expect_breakdown {
        BreakdownMode::Always => true,
        BreakdownMode::Never => false,
        BreakdownMode::Auto => f.abs() > 1e-6 * bg.volume(),
    })
}

fn continuity(cfg: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let kappa = resolve_kappa(cfg, rep)?;
    let bg = build(cfg, kappa)?;
    let en = Energies::soliton(&bg);
    let expect = breakdown_expected(cfg, &bg, rep)?;
    rep.record("expect_breakdown", expect);
    let design = design_for(cfg.t_max);
    match continuity_run(&bg, bg.field(), &design, &SolverOptions::default()) {
        Ok(run) => {
            rep.curves.push(path_curve(&run.points, bg.dim()));
            if expect {
                rep.assert(
                    Assertion::holds("breakdown", "Thm1", false)
                        .with_note(format!("path reached t = {}", run.last().t)),
                );
                return Ok(());
            }
            let m = continuity_measures(&run, &en)?;
            assert_path(cfg, rep, &m);
            rep.record("measures", &m);
        }
        Err(LabError::StepUnderflow { last_t, history }) => {
            let mut c = Curve::new("breakdown", &["t", "I"]);
            for &(t, i) in &history {
                c.push(vec![t, i]);
            }
            rep.curves.push(c);
            rep.record("last_t", last_t);
            if !expect {
                return Err(LabError::StepUnderflow { last_t, history });
            }
            let growth = i_growth(&history);
            rep.assert(Assertion::holds("breakdown", "Thm1", last_t < cfg.t_max));
            rep.assert(Assertion::at_least("i_growth", "CTZ:C0", growth, 2.0));
            if rep.all_passed() {
                rep.status = Status::ExpectedBreakdown;
            }
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

/// `I` at the last accepted step over `I` halfway through the history.
fn i_growth(history: &[(f64, f64)]) -> f64 {
    match (history.get(history.len() / 2), history.last()) {
        (Some(a), Some(b)) if a.1 > 0.0 => b.1 / a.1,
        _ => 0.0,
    }
}

pub const FAMILY_S: [f64; 3] = [0.0, 0.5, 1.0];

fn family(cfg: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let kappa = path_kappa(cfg, rep)?;
    let bg = build(cfg, kappa)?;
    let en = Energies::soliton(&bg);
    let opts = SolverOptions::default();
    let psi = 0.5 * &potentials(&bg, cfg.seed, 1)[0];
    let design = design_for(cfg.t_max);
    let schedule = design.schedule();
    let times: Vec<f64> = schedule.iter().map(|s| s.0).collect();
    let fam = family_path(&bg, bg.field(), &psi, &FAMILY_S, &times, &opts)?;

    let mut curve = Curve::new("family", &["s", "t", "c_s", "residual", "equation_defect", "F0_hat", "deformation_defect"]);
    let (mut eq, mut norm, mut res) = (0.0f64, 0.0f64, 0.0f64);
    for slice in &fam {
        for (i, p) in slice.iter().enumerate() {
            eq = eq.max(p.family_equation_defect);
            norm = norm.max(p.h_s_defect).max(p.theta_s_defect);
            res = res.max(p.residual);
            let d = (p.f0_hat - fam[0][i].f0_hat).abs();
            curve.push(vec![p.s, p.t, p.c_s, p.residual, p.family_equation_defect, p.f0_hat, d]);
        }
    }
    rep.curves.push(curve);
    let t = |k: &str| cfg.tolerance(k);
    rep.assert(Assertion::at_most("ma_residual", "Eq4.1", res, t("ma_residual")));
    rep.assert(Assertion::at_most("family_equation", "Eq4.1", eq, t("family_equation")));
    rep.assert(Assertion::at_most("h_s_theta_s_normalization", "Sec4:h_s", norm, t("family_normalization")));

    let last = times.len() - 1;
    let tail: Vec<usize> = (0..times.len()).filter(|&i| schedule[i].1 == PointRole::Tail).collect();
    let h: Vec<f64> = tail.iter().map(|&i| 1.0 - times[i]).collect();
    let mut ratios = vec![];
    let mut limits = vec![];
    for slice in &fam[1..] {
        let d = |i: usize| (slice[i].f0_hat - fam[0][i].f0_hat).abs();
        let d0 = d(0);
        let ratio = if d0 > 0.0 { d(last) / d0 } else { 0.0 };
        let lim = richardson(&h, &tail.iter().map(|&i| d(i)).collect::<Vec<_>>());
        ratios.push((slice[0].s, ratio));
        limits.push((slice[0].s, if d0 > 0.0 { lim.abs() / d0 } else { 0.0 }));
    }
    let worst_ratio = ratios.iter().fold(0.0f64, |m, r| m.max(r.1));
    let worst_limit = limits.iter().fold(0.0f64, |m, r| m.max(r.1));
    rep.assert(
        Assertion::at_most("deformation_defect_decay", "Claim4.3", worst_ratio, t("deformation_ratio"))
            .with_note("defect at t_max over defect at t = 0"),
    );
    rep.assert(
        Assertion::at_most("deformation_defect_limit", "Claim4.3", worst_limit, 1e-8)
            .with_note("extrapolated limit as t -> 1 over defect at t = 0"),
    );
    rep.record("deformation_ratios", &ratios);
    rep.record("deformation_limits", &limits);

    let run = continuity_run(&bg, bg.field(), &design, &opts)?;
    let ids = run.identities(&en)?;
    let f_psi = en.f_tilde(&psi)?;
    rep.assert(Assertion::nonnegative("infimum_lower_bound", "Thm3", f_psi - ids.f_limit, t("lower_bound")));
    rep.record("f_tilde_psi", f_psi);
    rep.record("f_tilde_limit", ids.f_limit);
    Ok(())
}

pub const FLOW_HALF_WIDTH: f64 = 0.3;
pub const FLOW_TIMES: usize = 9;
pub const INDEPENDENCE_SAMPLES: usize = 6;
pub const INDEPENDENCE_GRID: usize = 96;

fn invariant_flow(cfg: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let kappa = resolve_kappa(cfg, rep)?;
    let bg = build(cfg, kappa)?;
    let en = Energies::soliton(&bg);
    let w = bg.holo_field(1.0)?;
    let n = bg.dim();
    let t = |k: &str| cfg.tolerance(k);
    let times = symmetric_times(FLOW_HALF_WIDTH, FLOW_TIMES);

    let fine_grid = cfg.grid.max(INDEPENDENCE_GRID);
    let fine = BackgroundSpec::new(cfg.backend, fine_grid, kappa)
        .perturbed(cfg.perturbation())
        .build()?;
    let (f_xy, drift) = metric_independence(&fine, &fine.holo_field(1.0)?, cfg.seed, INDEPENDENCE_SAMPLES)?;
    rep.record("independence_grid", fine_grid);
    rep.assert(Assertion::at_most("metric_independence", "Sec1:independent", drift, t("metric_independence")));
    rep.assert(Assertion::at_most("flow_velocity", "Eq5.3", flow_fd_defect(&bg, &w, &times)?, t("flow_fd")));

    let (rec, slopes) = flow_derivative_check(&en, &w, &times)?;
    let mut curve_header = vec!["t".to_string()];
    curve_header.extend((0..=n).map(|k| format!("E_{k}")));
    curve_header.extend((1..=n).map(|k| format!("G_{k}")));
    let header: Vec<&str> = curve_header.iter().map(String::as_str).collect();
    let mut curve = Curve::new("flow", &header);
    for (i, &tt) in rec.times.iter().enumerate() {
        let mut row = vec![tt];
        row.extend(rec.e_curves.iter().map(|c| c[i]));
        row.extend(rec.g_curves.iter().map(|c| c[i]));
        curve.push(row);
    }
    rep.curves.push(curve);

    let zero_field = f_xy.abs() <= 1e-12 * bg.volume();
    for k in 0..=n {
        let name = format!("slope_e{k}");
        if zero_field {
            rep.assert(Assertion::at_most(&name, "Lem5.1", slopes.slopes[k].abs(), t("slope_zero")));
        } else {
            let anchor = if k == 0 { "Lem5.1" } else { "Thm5.2" };
            rep.assert(
                Assertion::at_most(&name, anchor, slopes.stated_errors[k], t("slope"))
                    .with_note("against (k+1) n F_X(Y) / V"),
            );
        }
        rep.assert(
            Assertion::at_most(&format!("slope_e{k}_flow_derivative"), "Eq5.3", slopes.flow_errors[k], t("slope"))
                .with_note("against (k+1) F_X(Y) / V"),
        );
        rep.assert(Assertion::at_most(&format!("linear_fit_e{k}"), "Thm5.2", slopes.fit_residuals[k], t("linear_fit")));
    }
    for (k, d) in (1..).zip(&slopes.g_drift) {
        rep.assert(Assertion::at_most(&format!("g{k}_constant"), "eq:a4", *d, t("g_drift")));
    }
    rep.record("f_xy", f_xy);
    rep.record("kappa_star", find_soliton_field(&build(cfg, 0.0)?)?.kappa_star);
    rep.record("flow_constant", flow_constant(&bg, &w));
    rep.record("slopes", &slopes);
    Ok(())
}

fn soliton_field(cfg: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let t = |k: &str| cfg.tolerance(k);
    let probe = build(cfg, 0.0)?;
    let sf = find_soliton_field(&probe)?;
    let mut scan = Curve::new("soliton_scan", &["kappa", "g"]);
    for &(k, g) in &sf.scan {
        scan.push(vec![k, g]);
    }
    rep.curves.push(scan);
    rep.record("kappa_star", sf.kappa_star);
    rep.record("bracket", sf.bracket);
    rep.record("monotone_on_bracket", sf.monotone_on_bracket);
    rep.assert(Assertion::at_most("soliton_residual", "Sec1:obstruction", sf.residual.abs(), t("soliton_residual")));
    if let Some(shoot) = koiso_shooting_kappa(cfg.backend) {
        rep.record("kappa_shooting", shoot);
        let digits = matching_digits(sf.kappa_star, shoot);
        rep.assert(Assertion::at_least("shooting_agreement_digits", "Koiso", digits, t("shooting_digits")));
    } else {
        rep.assert(Assertion::holds("shooting_bracket", "Koiso", false));
    }

    let bg = build(cfg, sf.kappa_star)?;
    let en = Energies::soliton(&bg);
    let run = continuity_run(&bg, bg.field(), &design_for(cfg.t_max), &SolverOptions::default())?;
    rep.curves.push(path_curve(&run.points, bg.dim()));
    rep.assert(Assertion::at_least("soliton_path_reaches_t_max", "Thm1", run.last().t, cfg.t_max));
    let end = soliton_endpoint(&run, &en)?;
    rep.assert(Assertion::at_most("endpoint_profile", "Koiso", end.profile_error, 1e-6));
    rep.assert(Assertion::at_most("endpoint_residual", "Eq3.1", end.residual, 1e-6));

    let w = probe.holo_field(1.0)?;
    let f0 = tz_invariant_reference(&probe, probe.field(), &w)?;
    rep.record("invariant_f_0_w", f0);
    if f0.abs() > 1e-6 * probe.volume() {
        match continuity_run(&probe, probe.field(), &design_for(cfg.t_max), &SolverOptions::default()) {
            Err(LabError::StepUnderflow { last_t, history }) => {
                let mut c = Curve::new("breakdown", &["t", "I"]);
                for &(t, i) in &history {
                    c.push(vec![t, i]);
                }
                rep.curves.push(c);
                rep.record("breakdown_t", last_t);
                rep.assert(Assertion::holds("zero_field_breakdown", "Thm1", true));
                rep.assert(Assertion::at_least("zero_field_i_growth", "CTZ:C0", i_growth(&history), 2.0));
            }
            Ok(run) => rep.assert(
                Assertion::holds("zero_field_breakdown", "Thm1", false)
                    .with_note(format!("path reached t = {}", run.last().t)),
            ),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn infimum(cfg: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let kappa = path_kappa(cfg, rep)?;
    let bg = build(cfg, kappa)?;
    let en = Energies::soliton(&bg);
    let run = continuity_run(&bg, bg.field(), &design_for(cfg.t_max), &SolverOptions::default())?;
    let m = continuity_measures(&run, &en)?;
    for (k, d) in m.infimum.iter().enumerate() {
        rep.assert(Assertion::at_most(&format!("infimum_k{k}"), "Eq1.1", *d, cfg.tolerance("infimum")));
    }
    for (k, (c, lim)) in (1..).zip(&m.curvature) {
        rep.assert(Assertion::holds(&format!("curvature_bound_k{k}_finite"), "a2", c.is_finite()));
        rep.assert(Assertion::at_most(&format!("curvature_limit_k{k}"), "a2", *lim, cfg.tolerance("infimum")));
    }
    let n = bg.dim();
    let mut header = vec!["t".to_string(), "F_tilde".to_string()];
    header.extend((0..=n).map(|k| format!("E_{k}")));
    header.extend((1..=n).map(|k| format!("Gcomb_{k}")));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut c = Curve::new("infimum", &h);
    for p in &run.points {
        let mut row = vec![p.t, p.monitors.f_tilde];
        row.extend(&p.monitors.e);
        row.extend(&p.monitors.g_combination[1..]);
        c.push(row);
    }
    rep.curves.push(c);
    rep.record("f_limit", m.f_limit);
    rep.record("f_limit_error", m.f_limit_error);
    rep.record("observed_order", m.f_order);
    rep.record("measures", &m);
    Ok(())
}

pub const ALGEBRA_SAMPLES: usize = 64;

fn algebra(cfg: &RunConfig, rep: &mut ExperimentReport) -> Result<()> {
    let xs: Vec<f64> = (0..ALGEBRA_SAMPLES)
        .map(|i| -4.0 + 8.0 * (i as f64 + 0.5) / ALGEBRA_SAMPLES as f64)
        .collect();
    let mut c = Curve::new("algebra", &["k", "i", "a_i"]);
    let mut exact = true;
    let mut float = 0.0f64;
    let mut nonneg = true;
    for k in 1..=MAX_DEGREE {
        exact &= identity_holds(k);
        float = float.max(wedge_binomial_identity(k, &xs));
        if k >= 2 {
            let t = p_expansion_coeffs(k);
            nonneg &= t.all_nonnegative();
            for (i, a) in t.a_f64().into_iter().enumerate() {
                c.push(vec![k as f64, i as f64, a]);
            }
        }
    }
    rep.curves.push(c);
    rep.assert(Assertion::holds("identity_exact", "x1", exact));
    rep.assert(Assertion::at_most("identity_float", "x1", float, cfg.tolerance("algebra_float")));
    rep.assert(Assertion::holds("coefficients_nonnegative", "LemA1", nonneg));
    Ok(())
}
