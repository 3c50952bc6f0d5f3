mod common;

use common::integrate;
use krs_core::functionals::Energies;
use krs_core::geometry::{BackendId, Background, BackgroundSpec, RadialFunction, Weight};
use krs_core::invariants::{find_soliton_field, tz_invariant_reference};
use krs_core::sampling::potentials;
use krs_core::solver::*;
use krs_core::LabError;
use std::sync::OnceLock;

fn p1(grid: usize, eps: f64) -> Background {
    BackgroundSpec::new(BackendId::P1Radial, grid, 0.0)
        .perturbed(eps)
        .build()
        .unwrap()
}

fn calabi(grid: usize, kappa: f64) -> Background {
    BackgroundSpec::new(BackendId::CalabiFiber, grid, kappa).build().unwrap()
}

fn p1_run() -> &'static (Background, ContinuityRun) {
    static RUN: OnceLock<(Background, ContinuityRun)> = OnceLock::new();
    RUN.get_or_init(|| {
        let bg = p1(32, 0.5);
        let run = continuity_run(&bg, bg.field(), &PathDesign::default(), &SolverOptions::default()).unwrap();
        (bg, run)
    })
}

fn check_point(p: &ContinuityPoint) {
    assert!(p.residual <= 1e-10, "t={} residual {}", p.t, p.residual);
    assert!(p.monitors.conservation_defect <= 1e-8, "t={}", p.t);
    assert!(p.monitors.u_identity_defect <= 1e-8, "t={}", p.t);
    if let Some(m) = p.monitors.cone_margin {
        assert!(m >= -1e-10, "t={} cone margin {m}", p.t);
    }
}

#[test]
fn round_sphere_solution_is_zero() {
    let bg = p1(24, 0.0);
    let zero = RadialFunction::zeros(bg.len());
    for t in [0.0, 0.3, 0.9] {
        let p = solve_at_t(&bg, bg.field(), t, &zero, &SolverOptions::default()).unwrap();
        assert!(p.phi.sup_norm() <= 1e-12, "t={t}");
        check_point(&p);
    }
}

#[test]
fn start_point_is_resolved() {
    let opts = SolverOptions::default();
    let coarse = p1(32, 0.5);
    let fine = coarse.regrid(64).unwrap();
    let a = solve_at_t(&coarse, coarse.field(), 0.0, &RadialFunction::zeros(coarse.len()), &opts).unwrap();
    let b = solve_at_t(&fine, fine.field(), 0.0, &RadialFunction::zeros(fine.len()), &opts).unwrap();
    check_point(&a);
    check_point(&b);
    let mut worst = 0.0f64;
    for k in 0..=200 {
        let tau = 2.0 * k as f64 / 200.0;
        worst = worst.max((coarse.eval(&a.phi, tau) - fine.eval(&b.phi, tau)).abs());
    }
    assert!(worst <= 1e-8, "{worst}");
    // at t = 0 the constant is pinned by ∫φ e^{θ_X(φ)} ω_φ^n = 0
    let s = coarse.state(&a.phi, coarse.field()).unwrap();
    assert!(coarse.average(&a.phi, &s, Weight::Theta).unwrap().abs() <= 1e-10);
}

#[test]
fn midpoint_solution_satisfies_u_identity() {
    let bg = p1(32, 0.5);
    let path = continuity_path(&bg, bg.field(), &[0.0, 0.25, 0.5], &SolverOptions::default()).unwrap();
    let p = &path[2];
    assert_eq!(p.t, 0.5);
    check_point(p);
    let en = Energies::soliton(&bg);
    let s = en.state(&p.phi).unwrap();
    assert!(s.u.max_abs_diff(&(0.5 * &p.phi)) <= 1e-8);
}

#[test]
fn sphere_path_reaches_the_end() {
    let (_, run) = p1_run();
    assert!((run.last().t - 0.999).abs() < 1e-12);
    for p in &run.points {
        check_point(p);
    }
    for w in run.points.windows(2) {
        let (a, b) = (&w[0].monitors, &w[1].monitors);
        assert!(b.i_tilde_minus_j_tilde >= a.i_tilde_minus_j_tilde - 1e-9);
        assert!(b.f0_tilde <= a.f0_tilde + 1e-9);
    }
}

#[test]
fn sphere_path_identities() {
    let (bg, run) = p1_run();
    let en = Energies::soliton(bg);
    let ids = run.identities(&en).unwrap();
    assert!(ids.energy_identity <= 1e-6, "{ids:?}");
    assert!(ids.average_identity <= 1e-6, "{ids:?}");
    assert!(ids.limit_defect <= 1e-5, "{ids:?}");
    assert!(ids.monotone_violation <= 1e-9);
    assert!(ids.f0_monotone_violation <= 1e-9);
    assert!(ids.f_limit <= 0.0);
    for d in run.infimum_defects(&en).unwrap() {
        assert!(d <= 1e-5, "{d}");
    }
}

#[test]
fn trivial_path_has_zero_identities() {
    let bg = p1(24, 0.0);
    let en = Energies::soliton(&bg);
    let run = continuity_run(&bg, bg.field(), &PathDesign::default(), &SolverOptions::default()).unwrap();
    let ids = run.identities(&en).unwrap();
    for v in [
        ids.energy_identity,
        ids.average_identity,
        ids.f_limit,
        ids.integral_to_one,
        ids.limit_defect,
        ids.monotone_violation,
    ] {
        assert!(v.abs() <= 1e-12, "{ids:?}");
    }
}

#[test]
fn too_few_samples_are_rejected() {
    let bg = p1(24, 0.5);
    let design = PathDesign {
        chebyshev_nodes: 4,
        ..PathDesign::default()
    };
    let run = continuity_run(&bg, bg.field(), &design, &SolverOptions::default()).unwrap();
    let en = Energies::soliton(&bg);
    assert!(matches!(run.identities(&en), Err(LabError::InsufficientPathResolution(_))));
}

#[test]
fn curvature_combination_is_bounded_by_i() {
    let (bg, run) = p1_run();
    let en = Energies::soliton(bg);
    for (c, last) in run.curvature_bound(&en).unwrap() {
        assert!(c.is_finite());
        assert!(last <= 1e-3, "{last}");
    }
}

#[test]
fn blow_up_path_breaks_down_without_field() {
    let bg = calabi(32, 0.0);
    let w = bg.holo_field(1.0).unwrap();
    assert!(tz_invariant_reference(&bg, bg.field(), &w).unwrap().abs() > 1.0);
    match continuity_run(&bg, bg.field(), &PathDesign::default(), &SolverOptions::default()) {
        Err(LabError::StepUnderflow { last_t, history }) => {
            assert!(last_t < 0.99, "{last_t}");
            let (i0, i1) = (history[history.len() / 2].1, history.last().unwrap().1);
            assert!(i1 > 2.0 * i0, "{i0} -> {i1}");
        }
        other => panic!("expected breakdown, got {:?}", other.map(|r| r.last().t)),
    }
}

/// Koiso profile `Θ' = n − τ − Θ((n−1)/τ + κ)`, `Θ(τ₋) = 0`, as a function of
/// the moment coordinate, sampled by RK4.
fn koiso_profile(kappa: f64, tau: f64) -> f64 {
    let f = |t: f64, th: f64| 2.0 - t - th * (1.0 / t + kappa);
    let steps = 4000;
    let h = (tau - 1.0) / steps as f64;
    let (mut t, mut th) = (1.0, 0.0);
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

#[test]
fn soliton_path_reaches_the_soliton() {
    let probe = calabi(48, 0.0);
    let kappa = find_soliton_field(&probe).unwrap().kappa_star;
    let bg = calabi(48, kappa);
    let en = Energies::soliton(&bg);
    let run = continuity_run(&bg, bg.field(), &PathDesign::default(), &SolverOptions::default()).unwrap();
    assert!((run.last().t - 0.999).abs() < 1e-12);
    for p in &run.points {
        check_point(p);
    }
    for d in run.infimum_defects(&en).unwrap() {
        assert!(d <= 1e-5, "{d}");
    }

    // Extrapolate φ to t = 1 and compare the new profile Θ σ_τ, read as a
    // function of σ, with the Koiso profile.
    let tail: Vec<&ContinuityPoint> = run.points.iter().filter(|p| p.role == PointRole::Tail).collect();
    let h: Vec<f64> = tail.iter().map(|p| 1.0 - p.t).collect();
    let phi1 = RadialFunction::from(
        (0..bg.len())
            .map(|i| richardson(&h, &tail.iter().map(|p| p.phi[i]).collect::<Vec<_>>()))
            .collect::<Vec<_>>(),
    );
    let s = en.state(&phi1).unwrap();
    let mut profile_err = 0.0f64;
    for i in 0..bg.len() {
        let theta = bg.momentum()[i];
        let new = theta * s.dsigma[i];
        profile_err = profile_err.max((new - koiso_profile(kappa, s.sigma[i])).abs());
    }
    assert!(profile_err <= 1e-6, "{profile_err}");
    let residual = Equation::new(&bg, bg.field().clone())
        .residual(&s, 1.0)
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    assert!(residual <= 1e-6, "{residual}");
    // the Koiso profile closes up: ∫(2−σ)σe^{κσ}dσ = 0
    assert!(integrate(1.0, 3.0, 40, |x| (2.0 - x) * x * (kappa * x).exp()).abs() < 1e-9);
}

#[test]
fn family_without_deformation_is_the_continuity_path() {
    let bg = p1(24, 0.5);
    let zero = RadialFunction::zeros(bg.len());
    let ts = [0.0, 0.2, 0.5, 0.8];
    let fam = family_path(&bg, bg.field(), &zero, &[0.0, 0.5, 1.0], &ts, &SolverOptions::default()).unwrap();
    let path = continuity_path(&bg, bg.field(), &ts, &SolverOptions::default()).unwrap();
    for slice in &fam {
        for (fp, cp) in slice.iter().zip(&path) {
            assert_eq!(fp.c_s, 0.0);
            assert!(fp.phi_hat.max_abs_diff(&cp.phi) <= 1e-10);
            assert!(fp.phi_st.max_abs_diff(&cp.phi) <= 1e-10);
        }
    }
}

#[test]
fn family_deformation_and_lower_bound() {
    let bg = p1(32, 0.5);
    let en = Energies::soliton(&bg);
    let opts = SolverOptions::default();
    let psi = 0.5 * &potentials(&bg, 3, 1)[0];
    let design = PathDesign::default();
    let schedule = design.schedule();
    let times: Vec<f64> = schedule.iter().map(|s| s.0).collect();
    let fam = family_path(&bg, bg.field(), &psi, &[0.0, 0.5, 1.0], &times, &opts).unwrap();
    for slice in &fam {
        for p in slice {
            assert!(p.residual <= 1e-10);
            assert!(p.family_equation_defect <= 1e-8, "s={} t={}: {}", p.s, p.t, p.family_equation_defect);
            assert!(p.h_s_defect <= 1e-10 && p.theta_s_defect <= 1e-10);
            assert!(p.phi_hat.max_abs_diff(&(&p.phi_st + &(p.s * &psi)).add_constant(-p.c_s)) <= 1e-12);
        }
    }
    // |F̃⁰(φ̂_{s,t}) − F̃⁰(φ̂_{0,t})| vanishes to first order in 1 − t
    let tail: Vec<usize> = (0..times.len()).filter(|&i| schedule[i].1 == PointRole::Tail).collect();
    let h: Vec<f64> = tail.iter().map(|&i| 1.0 - times[i]).collect();
    for s in 1..fam.len() {
        let d = |i: usize| (fam[s][i].f0_hat - fam[0][i].f0_hat).abs();
        let d0 = d(0);
        let last = times.len() - 1;
        assert!(d0 > 0.0);
        assert!(d(last) <= 2e-3 * d0, "s={}: {d0} -> {}", fam[s][0].s, d(last));
        let v: Vec<f64> = tail.iter().map(|&i| d(i)).collect();
        let lim = richardson(&h, &v);
        assert!(lim.abs() <= 1e-8 * d0, "{lim}");
        let slopes: Vec<f64> = tail.iter().map(|&i| d(i) / (1.0 - times[i])).collect();
        assert!((slopes[slopes.len() - 1] / slopes[slopes.len() - 2] - 1.0).abs() < 1e-2);
    }

    let run = continuity_run(&bg, bg.field(), &design, &opts).unwrap();
    let ids = run.identities(&en).unwrap();
    let f_psi = en.f_tilde(&psi).unwrap();
    assert!(f_psi >= ids.f_limit - 1e-5, "{f_psi} < {}", ids.f_limit);
}
