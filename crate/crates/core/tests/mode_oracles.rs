//! Mode sums against independent oracles: the closed form of J, norms by a
//! local Simpson rule, and densities rebuilt directly from the monomial
//! basis.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use hyperbergman::modesum::{
    j_integral, ln_cusp_norm, rho_cusp_modes, rho_cylinder_modes, CuspSpec, CylinderSpec, SeriesCtl,
};

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// ∫_{−π/2}^{π/2} e^{2βs} cos^{2m} s ds = (2m)! sinh(πβ) / (4^m β Π_{j≤m}(j² + β²)).
fn j_closed(b: f64, n: u32, eta: f64) -> f64 {
    let m = n - 1;
    let beta = b / eta;
    let fact: f64 = (1..=2 * m).map(f64::from).product();
    let sh = if beta.abs() < 1e-12 {
        PI
    } else {
        (PI * beta).sinh() / beta
    };
    let prod: f64 = (1..=m).map(|j| (j * j) as f64 + beta * beta).product();
    eta * fact * sh / (4f64.powi(m as i32) * prod)
}

fn ctl() -> SeriesCtl {
    SeriesCtl::new(1e-14, 1e-16, 100_000).unwrap()
}

#[test]
fn j_matches_closed_form() {
    for n in [2u32, 3, 5] {
        for eta in [0.5, 1.0, 2.0] {
            for b in [-5.0, -1.0, 0.0, 0.3, 2.0, 10.0] {
                assert_relative_eq!(
                    j_integral(b, n, eta).unwrap(),
                    j_closed(b, n, eta),
                    max_relative = 1e-12
                );
            }
        }
    }
}

#[test]
fn closed_form_matches_simpson() {
    // Guards the oracle itself.
    for (b, n, eta) in [(0.7, 2, 1.0), (-1.3, 3, 0.5), (2.0, 4, 2.0)] {
        let lim = PI / (2.0 * eta);
        let q = simpson(
            |t| eta * eta * (2.0 * b * t).exp() * (eta * t).cos().powi(2 * n as i32 - 2),
            -lim,
            lim,
            20_000,
        );
        assert_relative_eq!(q, j_closed(b, n, eta), max_relative = 1e-10);
    }
}

/// ρ on the cylinder rebuilt from the basis z^a with norms 2π J(a − 𝔪).
fn rho_cylinder_direct(eta: f64, alpha: f64, n: u32, t: f64) -> f64 {
    let twist = (n as f64 * alpha).rem_euclid(1.0);
    (-200..=200)
        .map(|a| {
            let x = a as f64 - twist;
            (eta * t).cos().powi(2 * n as i32) * (2.0 * x * t).exp()
                / (2.0 * PI * j_closed(x, n, eta))
        })
        .sum()
}

#[test]
fn cylinder_density_matches_basis_sum() {
    for (eta, alpha, n, t) in [
        (1.0, 0.0, 3, 0.0),
        (0.5, 0.25, 2, 0.9),
        (2.0, 0.7, 5, -0.2),
        (1.3, 0.5, 8, 0.3),
    ] {
        let spec = CylinderSpec::with_any_twist(eta, alpha).unwrap();
        let v = rho_cylinder_modes(&spec, n, t, &ctl()).unwrap();
        assert_relative_eq!(
            v.value,
            rho_cylinder_direct(eta, alpha, n, t),
            max_relative = 1e-12
        );
        assert!(v.trunc_error < 1e-12);
    }
}

#[test]
fn cusp_norms_by_quadrature() {
    // ‖w^a‖² = 2π ∫_{−∞}^0 e^{2xτ} τ^{2n−2} dτ with the area form dτ dθ / τ².
    for n in [3u32, 4, 6] {
        for x in [0.3, 1.0, 2.5] {
            let q = 2.0
                * PI
                * simpson(
                    |s| (-2.0 * x * s).exp() * s.powi(2 * n as i32 - 2),
                    0.0,
                    80.0 / x,
                    40_000,
                );
            assert_relative_eq!(q, ln_cusp_norm(n, x).exp(), max_relative = 1e-9);
        }
    }
    // Level 3, first mode without twist.
    assert_relative_eq!(ln_cusp_norm(3, 1.0).exp(), 1.5 * PI, max_relative = 1e-14);
}

#[test]
fn cusp_density_matches_basis_sum() {
    for (alpha, n, tau) in [(0.0, 3, -1.0f64), (0.3, 4, -0.5), (0.9, 5, -2.0)] {
        let twist = (n as f64 * alpha).rem_euclid(1.0);
        let direct: f64 = (1..20_000)
            .map(|a| {
                let x = a as f64 - twist;
                (2.0 * n as f64 * (-tau).ln() + 2.0 * x * tau - ln_cusp_norm(n, x)).exp()
            })
            .sum();
        let v = rho_cusp_modes(&CuspSpec::with_any_twist(alpha).unwrap(), n, tau, &ctl()).unwrap();
        assert_relative_eq!(v.value, direct, max_relative = 1e-12);
    }
}

#[test]
fn cusp_tends_to_disk_value_away_from_puncture() {
    // As τ → 0 every loop lengthens, so ρ approaches (n − ½)/2π.
    let spec = CuspSpec::new(0.0).unwrap();
    let lead = 2.5 / (2.0 * PI);
    let near = rho_cusp_modes(&spec, 3, -0.2, &ctl()).unwrap().value;
    let far = rho_cusp_modes(&spec, 3, -0.01, &ctl()).unwrap().value;
    assert!((far - lead).abs() < (near - lead).abs());
}
