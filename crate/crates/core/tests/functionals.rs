mod common;

use common::{profile_poly, trig_potentials, Trig};
use krs_core::functionals::*;
use krs_core::geometry::*;
use krs_core::invariants::find_soliton_field;
use krs_core::sampling::{potential_pairs, potentials};
use krs_core::LabError;

fn build(b: BackendId, grid: usize, kappa: f64, eps: f64) -> Background {
    BackgroundSpec::new(b, grid, kappa).perturbed(eps).build().unwrap()
}

fn suites() -> Vec<Background> {
    let calabi = build(BackendId::CalabiFiber, 64, 0.0, 0.0);
    let kstar = find_soliton_field(&calabi).unwrap().kappa_star;
    vec![
        build(BackendId::P1Radial, 64, 0.0, 0.5),
        build(BackendId::P1Radial, 64, 1.0, 0.5),
        build(BackendId::CalabiFiber, 96, 0.0, 0.3),
        build(BackendId::CalabiFiber, 96, kstar, 0.3),
    ]
}

#[test]
fn functionals_vanish_at_zero_and_on_constants() {
    for bg in suites() {
        let en = Energies::soliton(&bg);
        let zero = RadialFunction::zeros(bg.len());
        let r = en.report(&zero).unwrap();
        for v in [r.i, r.i_tilde, r.j_tilde, r.f_tilde, r.e0].iter().chain(&r.g).chain(&r.e) {
            assert!(v.abs() < 1e-13, "{v}");
        }
        let c = RadialFunction::constant(bg.len(), 1.4);
        assert!(en.i_energy(&c).unwrap().abs() < 1e-12);
        assert!(en.i_tilde(&c).unwrap().abs() < 1e-12);
        assert!(en.j_tilde(&PathSpec::linear(&c)).unwrap().abs() < 1e-12);
        assert!(en.e0_tilde(&PathSpec::linear(&c)).unwrap().abs() < 1e-12);
    }
}

#[test]
fn i_tilde_reduces_to_i_without_a_field() {
    let bg = build(BackendId::CalabiFiber, 48, 0.0, 0.2);
    let en = Energies::soliton(&bg);
    for phi in potentials(&bg, 1, 5) {
        assert_eq!(en.i_tilde(&phi).unwrap(), en.i_energy(&phi).unwrap());
    }
}

#[test]
fn values_match_the_refined_grid() {
    for (b, kappa) in [(BackendId::P1Radial, 1.0), (BackendId::CalabiFiber, -0.5)] {
        let bg = build(b, 64, kappa, 0.4);
        let fine = bg.regrid(256).unwrap();
        let (en, ef) = (Energies::soliton(&bg), Energies::soliton(&fine));
        for p in trig_potentials(&bg, 40, 4) {
            let (a, r) = (p.sample(&bg), p.sample(&fine));
            assert!((en.i_energy(&a).unwrap() - ef.i_energy(&r).unwrap()).abs() < 1e-9);
            assert!((en.f_tilde(&a).unwrap() - ef.f_tilde(&r).unwrap()).abs() < 1e-8);
            for k in 1..=b.dim() {
                assert!((en.g_k(&a, k).unwrap() - ef.g_k(&r, k).unwrap()).abs() < 1e-8);
            }
        }
        for k in 1..=b.dim() {
            assert!((en.c_constant(k).unwrap() - ef.c_constant(k).unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn identity_suite() {
    for bg in suites() {
        let en = Energies::soliton(&bg);
        let chi = 0.5 * &potentials(&bg, 99, 1)[0];
        for phi in potentials(&bg, 7, 20) {
            let d = en.identity_defects(&phi).unwrap();
            assert!(d.k_energy_f.abs() <= 1e-8, "{d:?}");
            assert!(d.lower_bound_gap >= -1e-8, "{d:?}");
            assert!(d.pali.abs() <= 1e-8, "{d:?}");
            assert!(d.i_minus_j >= -1e-10, "{d:?}");
            assert!(en.i_energy(&phi).unwrap() >= -1e-12);

            let (lin, bent) = (PathSpec::linear(&phi), PathSpec::bent(&phi, &chi));
            let reparam = PathSpec::reparam(&phi);
            let e0 = en.e0_tilde(&lin).unwrap();
            assert!((e0 - en.e0_tilde(&bent).unwrap()).abs() <= 1e-8);
            assert!((e0 - en.e0_tilde(&reparam).unwrap()).abs() <= 1e-8);
            assert!((en.j_tilde(&lin).unwrap() - en.j_tilde(&bent).unwrap()).abs() <= 1e-8);

            let a = en.report(&phi).unwrap();
            let b = en.report(&phi.add_constant(-2.3)).unwrap();
            let pairs = [(a.i, b.i), (a.i_tilde, b.i_tilde), (a.j_tilde, b.j_tilde), (a.f_tilde, b.f_tilde)];
            for (x, y) in pairs.into_iter().chain(a.g.iter().copied().zip(b.g.iter().copied())) {
                assert!((x - y).abs() <= 1e-9);
            }
            for (x, y) in a.e.iter().zip(&b.e) {
                assert!((x - y).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn report_recombines_exactly() {
    let bg = build(BackendId::CalabiFiber, 48, 0.3, 0.2);
    let en = Energies::soliton(&bg);
    let phi = &potentials(&bg, 5, 1)[0];
    let r = en.report(phi).unwrap();
    assert_eq!(r.e[0], r.e0);
    let e1 = -r.g[0] + 2.0 * r.e0;
    let e2 = r.g[1] - 3.0 * r.g[0] + 3.0 * r.e0;
    assert!((r.e[1] - e1).abs() <= 1e-15 * e1.abs().max(1.0));
    assert!((r.e[2] - e2).abs() <= 1e-14 * e2.abs().max(1.0));
}

#[test]
fn cocycle() {
    for bg in suites() {
        let en = Energies::soliton(&bg);
        for (phi, psi) in potential_pairs(&bg, 11, 10) {
            for k in 0..=bg.dim() {
                let lhs = en.e_k(&phi, k, &PathSpec::linear(&phi)).unwrap()
                    + en.e_k_relative(&phi, &psi, k).unwrap();
                let rhs = en.e_k(&psi, k, &PathSpec::linear(&psi)).unwrap();
                assert!((lhs - rhs).abs() <= 1e-7, "k={k}: {lhs} {rhs}");
            }
        }
    }
}

#[test]
fn pali_and_constant_at_k_one() {
    let bg = build(BackendId::CalabiFiber, 64, -0.4, 0.3);
    let en = Energies::soliton(&bg);
    let refs = en.reference();
    let u0 = bg.u0();
    let expected = -bg.wedge_ratio(u0, u0, u0, 0, refs).unwrap();
    assert!((en.c_constant(1).unwrap() - expected).abs() < 1e-15);
}

#[test]
fn round_sphere_special_values() {
    let bg = build(BackendId::P1Radial, 64, 0.0, 0.0);
    let en = Energies::soliton(&bg);
    assert!(en.c_constant(1).unwrap().abs() < 1e-20);
    for phi in potentials(&bg, 3, 10) {
        assert!(en.g_k(&phi, 1).unwrap() <= 0.0);
    }
}

#[test]
fn bent_path_that_leaves_the_cone_is_rejected() {
    let bg = build(BackendId::P1Radial, 48, 0.0, 0.0);
    let en = Energies::soliton(&bg);
    let phi = &potentials(&bg, 2, 1)[0];
    let chi = bg.sample(|t| 40.0 * t * t);
    assert!(matches!(
        en.e0_tilde(&PathSpec::bent(phi, &chi)),
        Err(LabError::PathLeavesCone { .. })
    ));
}

#[test]
fn lower_bound_for_curvature_energies() {
    let bg = build(BackendId::CalabiFiber, 96, 0.0, 0.3);
    let en = Energies::soliton(&bg);
    let c2 = en.c_constant(2).unwrap();
    let mut members = 0;
    let (mut proof_gap, mut statement_gap) = (f64::INFINITY, f64::INFINITY);
    for phi in potentials(&bg, 17, 40) {
        let phi = 0.2 * &phi;
        if en.cone_margin(&phi, 2).unwrap() < 0.0 {
            continue;
        }
        members += 1;
        let r = en.report(&phi).unwrap();
        proof_gap = proof_gap.min(r.e[2] - 3.0 * r.e0 - c2);
        statement_gap = statement_gap.min(r.e[2] - 3.0 * r.e0 + c2);
    }
    println!("members {members}, C_2 = {c2:e}, proof form {proof_gap:e}, statement form {statement_gap:e}");
    assert!(members >= 10);
    assert!(proof_gap >= -1e-8);
}

#[test]
fn cone_margin_at_reference_matches_closed_form() {
    let kappa = -0.4;
    let bg = build(BackendId::CalabiFiber, 64, kappa, 0.0);
    let en = Energies::soliton(&bg);
    let theta = profile_poly(1.0, 3.0, 0.0);
    for k in [2usize, 3, 5] {
        let shift = 1.0 + 2.0 / (k as f64 - 1.0);
        // u₀_τ = 1/τ + κ
        let oracle = bg
            .nodes()
            .iter()
            .map(|&t| {
                let us = theta.eval(t) * (1.0 / t + kappa);
                let fiber = theta.deriv().eval(t) * (1.0 / t + kappa) - theta.eval(t) / (t * t);
                (shift - fiber).min(shift - us / t)
            })
            .fold(f64::INFINITY, f64::min);
        let m = en.cone_margin(&RadialFunction::zeros(bg.len()), k).unwrap();
        assert!((m - oracle).abs() < 1e-10, "{m} {oracle}");
    }
    assert_eq!(en.cone_margin(&RadialFunction::zeros(bg.len()), 1).unwrap(), f64::INFINITY);
}

/// Eigenvalues of `√−1∂∂̄u` relative to `ω_φ` from exact derivatives, on the
/// unperturbed Calabi background without a field.
fn curvature_eigen_oracle(p: &Trig, t: f64) -> (f64, f64) {
    let th = profile_poly(1.0, 3.0, 0.0);
    let d = [th.eval(t), th.deriv().eval(t), th.deriv().deriv().eval(t), 0.0];
    let f = |k: u32| p.d(t, k);
    let s = t + d[0] * f(1);
    let s1 = 1.0 + d[1] * f(1) + d[0] * f(2);
    let s2 = d[2] * f(1) + 2.0 * d[1] * f(2) + d[0] * f(3);
    let s3 = d[3] * f(1) + 3.0 * d[2] * f(2) + 3.0 * d[1] * f(3) + d[0] * f(4);
    // u = log σ_τ + log σ + φ + const
    let u1 = s2 / s1 + s1 / s + f(1);
    let u2 = s3 / s1 - (s2 / s1).powi(2) + s2 / s - (s1 / s).powi(2) + f(2);
    ((d[1] * u1 + d[0] * u2) / s1, d[0] * u1 / s)
}

#[test]
fn strongly_curved_metric_leaves_the_cone() {
    let bg = build(BackendId::CalabiFiber, 96, 0.0, 0.0);
    let en = Energies::soliton(&bg);
    let p = Trig { terms: vec![(0.015, 9.0, 0.4)] };
    let phi = p.sample(&bg);
    assert!(bg.positivity_margin(&phi) > 0.0);
    for k in [2usize, 4] {
        let shift = 1.0 + 2.0 / (k as f64 - 1.0);
        let oracle = bg
            .nodes()
            .iter()
            .map(|&t| {
                let (a, b) = curvature_eigen_oracle(&p, t);
                (shift - a).min(shift - b)
            })
            .fold(f64::INFINITY, f64::min);
        let m = en.cone_margin(&phi, k).unwrap();
        assert!(oracle < 0.0 && m < 0.0, "{m} {oracle}");
        // four spectral derivatives of u: roundoff grows like N⁸ε
        assert!((m - oracle).abs() <= 1e-5 * oracle.abs().max(1.0), "{m} {oracle}");
    }
}

#[test]
fn properness_scatter_cases() {
    let bg = build(BackendId::P1Radial, 48, 0.0, 0.5);
    let en = Energies::soliton(&bg);
    let zero = RadialFunction::zeros(bg.len());
    assert_eq!(en.properness_scatter(&[zero], 1).unwrap(), vec![(0.0, 0.0)]);
    let consts: Vec<_> = [-1.0, 2.0].iter().map(|c| RadialFunction::constant(bg.len(), *c)).collect();
    for (i, e) in en.properness_scatter(&consts, 1).unwrap() {
        assert!(i.abs() < 1e-12 && e.abs() < 1e-12);
    }
    let table = en.properness_scatter(&potentials(&bg, 8, 6), 1).unwrap();
    assert!(table.iter().all(|(i, e)| i.is_finite() && e.is_finite()));
}
