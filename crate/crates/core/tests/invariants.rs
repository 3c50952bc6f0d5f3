mod common;

use common::{integrate, profile_poly, trig_potentials};
use krs_core::functionals::Energies;
use krs_core::geometry::{BackendId, Background, BackgroundSpec, RadialFunction};
use krs_core::invariants::*;
use std::f64::consts::PI;

fn calabi(grid: usize, eps: f64, kappa: f64) -> Background {
    BackgroundSpec::new(BackendId::CalabiFiber, grid, kappa)
        .perturbed(eps)
        .build()
        .unwrap()
}

fn p1(grid: usize, eps: f64, kappa: f64) -> Background {
    BackgroundSpec::new(BackendId::P1Radial, grid, kappa)
        .perturbed(eps)
        .build()
        .unwrap()
}

/// `𝓕_{κ_X W}(κ_Y W)` at the reference metric as a Gauss–Legendre integral
/// in the moment coordinate, with `dμ ∝ τ^{n−1}dτ` scaled to volume `V`.
fn futaki_oracle(backend: BackendId, eps: f64, kappa_x: f64, kappa_y: f64) -> f64 {
    let (lo, hi) = backend.interval();
    let n = backend.dim() as i32;
    let v = backend.volume();
    let nf = n as f64;
    let theta = profile_poly(lo, hi, eps);
    let dtheta = theta.deriv();
    let q = 80;
    let c = v / integrate(lo, hi, q, |t| t.powi(n - 1));
    let z = integrate(lo, hi, q, |t| c * t.powi(n - 1) * (kappa_x * t).exp());
    // Θ h' = n − τ − Θ' − (n−1)Θ/τ
    let theta_h = |t: f64| nf - t - dtheta.eval(t) - (nf - 1.0) * theta.eval(t) / t;
    kappa_y
        * integrate(lo, hi, q, |t| {
            let w = c * t.powi(n - 1) * v * (kappa_x * t).exp() / z;
            (theta_h(t) - kappa_x * theta.eval(t)) * w
        })
}

/// `Θ' = n − τ − Θ((n−1)/τ + κ)`, `Θ(τ₋) = 0`, by RK4; returns `Θ(τ₊)`.
fn koiso_endpoint(kappa: f64) -> f64 {
    let n = 2.0;
    let f = |t: f64, th: f64| n - t - th * ((n - 1.0) / t + kappa);
    let steps = 4000;
    let h = 2.0 / steps as f64;
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

/// The `κ` for which the Koiso profile closes up at `τ₊`, by shooting.
fn koiso_kappa() -> f64 {
    let (mut a, mut b) = (-3.0, 3.0);
    let fa = koiso_endpoint(a);
    assert!(fa.signum() != koiso_endpoint(b).signum());
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if koiso_endpoint(m).signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn round_sphere_invariant_vanishes() {
    let bg = p1(32, 0.0, 0.0);
    let en = Energies::soliton(&bg);
    for ky in [1.0, -0.7, 2.5] {
        let y = bg.holo_field(ky).unwrap();
        assert_eq!(tz_invariant(&bg, &y, en.reference()).unwrap(), 0.0);
    }
}

#[test]
fn invariant_matches_moment_integral() {
    assert!((futaki_oracle(BackendId::CalabiFiber, 0.0, 0.0, 1.0) + 16.0 * PI * PI / 3.0).abs() < 1e-10);
    for (backend, eps, kx, ky) in [
        (BackendId::CalabiFiber, 0.0, 0.0, 1.0),
        (BackendId::CalabiFiber, 0.3, 0.0, 1.0),
        (BackendId::CalabiFiber, 0.3, 0.8, -1.3),
        (BackendId::P1Radial, 0.5, 0.0, 1.0),
        (BackendId::P1Radial, 0.5, 1.0, 0.6),
    ] {
        let bg = BackgroundSpec::new(backend, 64, kx).perturbed(eps).build().unwrap();
        let y = bg.holo_field(ky).unwrap();
        let got = tz_invariant_reference(&bg, bg.field(), &y).unwrap();
        let want = futaki_oracle(backend, eps, kx, ky);
        assert!((got - want).abs() <= 1e-8, "{backend:?} eps={eps} kx={kx}: {got} vs {want}");
    }
}

#[test]
fn invariant_is_independent_of_the_metric() {
    for bg in [calabi(64, 0.3, 0.0), calabi(64, 0.0, 0.4), p1(64, 0.5, 1.0)] {
        let en = Energies::soliton(&bg);
        let y = bg.holo_field(1.0).unwrap();
        let base = tz_invariant(&bg, &y, en.reference()).unwrap();
        for phi in trig_potentials(&bg, 17, 6) {
            let s = en.state(&phi.sample(&bg)).unwrap();
            let v = tz_invariant(&bg, &y, &s).unwrap();
            assert!((v - base).abs() <= 1e-8, "{v} vs {base}");
        }
    }
}

#[test]
fn trivial_flows_are_zero() {
    let bg = calabi(32, 0.3, 0.0);
    let w = bg.holo_field(1.0).unwrap();
    let zero = bg.holo_field(0.0).unwrap();
    assert_eq!(flow_potential(&bg, &w, 0.0).unwrap(), RadialFunction::zeros(bg.len()));
    for t in [-0.3, 0.1, 0.7] {
        assert_eq!(flow_potential(&bg, &zero, t).unwrap(), RadialFunction::zeros(bg.len()));
    }
}

#[test]
fn flow_velocity_is_theta_plus_constant() {
    for bg in [calabi(48, 0.0, 0.0), calabi(48, 0.3, 0.0), p1(48, 0.5, 0.0)] {
        for ky in [1.0, -0.6] {
            let y = bg.holo_field(ky).unwrap();
            let c = flow_constant(&bg, &y);
            for t in [-0.25, 0.0, 0.15, 0.3] {
                let h = 1e-4;
                let a = flow_potential(&bg, &y, t + h).unwrap();
                let b = flow_potential(&bg, &y, t - h).unwrap();
                let phi = flow_potential(&bg, &y, t).unwrap();
                let theta = bg.theta_potential(&y, &phi).unwrap();
                let mut worst = 0.0f64;
                for i in 0..bg.len() {
                    let fd = (a[i] - b[i]) / (2.0 * h);
                    worst = worst.max((fd - theta[i] - c).abs());
                }
                assert!(worst <= 1e-6, "t={t} ky={ky}: {worst}");
            }
        }
    }
}

#[test]
fn flow_leaving_the_cone_is_reported() {
    let bg = calabi(32, 0.0, 0.0);
    let y = bg.holo_field(1.0).unwrap();
    assert!(flow_potential(&bg, &y, 60.0).is_err());
}

#[test]
fn sphere_energy_is_flat_along_rotations() {
    let bg = p1(64, 0.0, 0.0);
    let en = Energies::soliton(&bg);
    let y = bg.holo_field(1.0).unwrap();
    let (rec, rep) = flow_derivative_check(&en, &y, &symmetric_times(0.3, 9)).unwrap();
    assert_eq!(rec.phis[4], RadialFunction::zeros(bg.len()));
    assert!(rep.slopes[0].abs() <= 1e-7, "{}", rep.slopes[0]);
    assert!(rep.g_drift.iter().all(|d| *d <= 1e-7));
    assert!(rep.fit_residuals.iter().all(|r| *r <= 1e-7));
}

#[test]
fn calabi_energy_slopes_along_the_fiber_flow() {
    for eps in [0.0, 0.3] {
        let bg = calabi(64, eps, 0.0);
        let en = Energies::soliton(&bg);
        let w = bg.holo_field(1.0).unwrap();
        let (_, rep) = flow_derivative_check(&en, &w, &symmetric_times(0.3, 9)).unwrap();
        assert!(rep.f_xy.abs() > 1.0);
        for k in 0..=2 {
            assert!(rep.flow_errors[k] <= 1e-6, "k={k}: {:?}", rep);
            // the stated slope carries an extra factor n
            assert!((rep.stated[k] - 2.0 * rep.flow[k]).abs() <= 1e-12 * rep.flow[k].abs());
            assert!(rep.fit_residuals[k] <= 1e-7);
        }
        assert!(rep.g_drift.iter().all(|d| *d <= 1e-7), "{:?}", rep.g_drift);
    }
}

#[test]
fn slope_tracks_the_invariant_for_nonzero_field() {
    let bg = calabi(64, 0.3, 0.6);
    let en = Energies::soliton(&bg);
    let y = bg.holo_field(-0.8).unwrap();
    let (_, rep) = flow_derivative_check(&en, &y, &symmetric_times(0.2, 7)).unwrap();
    let want = futaki_oracle(BackendId::CalabiFiber, 0.3, 0.6, -0.8);
    assert!((rep.f_xy - want).abs() <= 1e-8);
    assert!(rep.flow_errors.iter().all(|e| *e <= 1e-6), "{:?}", rep.flow_errors);
}

#[test]
fn soliton_field_on_the_sphere_is_zero() {
    let sf = find_soliton_field(&p1(32, 0.5, 0.0)).unwrap();
    assert_eq!(sf.kappa_star, 0.0);
    assert!(sf.residual.abs() <= 1e-10);
}

#[test]
fn soliton_field_matches_koiso_shooting() {
    let shoot = koiso_kappa();
    assert!(koiso_endpoint(shoot).abs() < 1e-10);
    for eps in [0.0, 0.3] {
        let sf = find_soliton_field(&calabi(64, eps, 0.0)).unwrap();
        assert!(sf.residual.abs() <= 1e-10, "{}", sf.residual);
        assert!(sf.monotone_on_bracket);
        assert!(sf.bracket.0 <= sf.kappa_star && sf.kappa_star <= sf.bracket.1);
        let rel = (sf.kappa_star - shoot).abs() / shoot.abs();
        assert!(rel < 5e-5, "{} vs {shoot}", sf.kappa_star);
    }
}

#[test]
fn soliton_root_is_a_zero_of_the_moment_integral() {
    let sf = find_soliton_field(&calabi(64, 0.0, 0.0)).unwrap();
    assert!(futaki_oracle(BackendId::CalabiFiber, 0.0, sf.kappa_star, 1.0).abs() < 1e-9);
}
