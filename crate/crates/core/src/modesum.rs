//! Spectral side: J-integrals, mode sums on the cylinder and the cusp, the
//! Fourier transform of 1/J, and an argument-principle zero count for J.
//!
//! Level `n` means the n-th tensor power of the bundle. With that convention
//!
//! ```text
//! J(b, n, η) = η² ∫_{−π/2η}^{π/2η} e^{2bt} cos^{2n−2}(ηt) dt
//! ```
//!
//! is the squared norm of the monomial z^b on the cylinder ℂ*_η with
//! t = log|z|, and
//!
//! ```text
//! ρ_n(t) = cos^{2n}(ηt)/(2π) Σ_{a∈ℤ} e^{2(a−𝔪)t} / J(a − 𝔪, n, η),   𝔪 = frac(nα).
//! ```
//!
//! On the cusp (τ = log|w| < 0) the monomial w^a has squared norm
//! 2π (2n−2)! / (2(a−𝔪))^{2n−1}, so
//!
//! ```text
//! ρ_n(τ) = τ^{2n} / (2π (2n−2)!) Σ_{a≥1} (2(a−𝔪))^{2n−1} e^{2(a−𝔪)τ}.
//! ```
//!
//! The summands of every series here are log-concave in the mode index (log J
//! is convex in b). Once the ratio of consecutive terms r drops below 1 the
//! remaining terms are dominated by a geometric series with ratio r, which
//! is the truncation certificate used throughout.

use std::f64::consts::PI;

use num_complex::Complex64 as Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgeo::log_cosh_complex;
use crate::quad::{self, QuadCtl};

/// Cylinder with core length 2πη and bundle twist α (core holonomy e^{2πiα}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderSpec {
    pub eta: f64,
    pub alpha: f64,
}

/// Fractional part of n·α in [0, 1).
pub fn fractional_twist(n: u32, alpha: f64) -> f64 {
    let x = n as f64 * alpha;
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::domain(format!(
            "twist alpha = {alpha} must lie in [0, 1)"
        )));
    }
    Ok(())
}

impl CylinderSpec {
    pub fn new(eta: f64, alpha: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::domain("eta must be positive"));
        }
        check_alpha(alpha)?;
        Ok(CylinderSpec { eta, alpha })
    }

    /// Accepts any real twist and reduces it into [0, 1).
    pub fn with_any_twist(eta: f64, alpha: f64) -> Result<Self> {
        Self::new(eta, fractional_twist(1, alpha))
    }

    pub fn twist(&self, n: u32) -> f64 {
        fractional_twist(n, self.alpha)
    }

    /// u = asinh(tan(ηt)): signed distance to the core geodesic.
    pub fn u_of_t(&self, t: f64) -> f64 {
        (self.eta * t).tan().asinh()
    }

    pub fn t_of_u(&self, u: f64) -> f64 {
        u.sinh().atan() / self.eta
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(t.is_finite() && (self.eta * t).abs() < 0.5 * PI) {
            return Err(Error::domain(format!(
                "t = {t} is outside the cylinder |ηt| < π/2"
            )));
        }
        Ok(())
    }
}

/// Cusp with bundle twist α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspSpec {
    pub alpha: f64,
}

impl CuspSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(CuspSpec { alpha })
    }

    pub fn with_any_twist(alpha: f64) -> Result<Self> {
        Self::new(fractional_twist(1, alpha))
    }

    pub fn twist(&self, n: u32) -> f64 {
        fractional_twist(n, self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesCtl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl SeriesCtl {
    pub fn new(rel_tol: f64, abs_tol: f64, max_terms: usize) -> Result<Self> {
        let ok = |x: f64| x > 0.0 && x < 1.0;
        if !ok(rel_tol) || !ok(abs_tol) {
            return Err(Error::domain("tolerances must lie in (0, 1)"));
        }
        if max_terms < 16 {
            return Err(Error::domain("max_terms must be at least 16"));
        }
        Ok(SeriesCtl {
            rel_tol,
            abs_tol,
            max_terms,
        })
    }
}

impl Default for SeriesCtl {
    fn default() -> Self {
        SeriesCtl {
            rel_tol: 1e-13,
            abs_tol: 1e-15,
            max_terms: 10_000,
        }
    }
}

/// A density or kernel magnitude with a bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub trunc_error: f64,
    pub terms_used: usize,
}

fn check_level(n: u32, min: u32) -> Result<()> {
    if n < min {
        return Err(Error::domain(format!(
            "level {n} is below the minimum {min}"
        )));
    }
    Ok(())
}

/// log J and its derivative in b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogJ {
    pub log_value: f64,
    /// ∂ log J / ∂b, in (−π/η, π/η).
    pub slope: f64,
    /// Bound on the relative error of exp(log_value).
    pub rel_error: f64,
}

/// Limit of ∂ log J/∂b as b → +∞.
pub fn slope_limit(eta: f64) -> f64 {
    PI / eta
}

/// Quadrature tolerance for J.
const J_REL_TOL: f64 = 1e-14;

/// log J(b, n, η), evaluated in a shifted variable so that large |b| cannot
/// overflow.
///
/// With s = π/(2η) − |t| the integral becomes
/// η² e^{|b|π/η} ∫_0^{π/η} e^{−2|b|s} sin^{2n−2}(ηs) ds. For large |b| the
/// integrand is negligible beyond s_max = (2n−2+80)/(2|b|); what is cut there
/// is bounded with the concavity of the log-integrand and reported in
/// `rel_error`.
pub fn log_j(b: f64, n: u32, eta: f64) -> Result<LogJ> {
    check_level(n, 2)?;
    if !(eta > 0.0 && eta.is_finite()) || !b.is_finite() {
        return Err(Error::domain("J needs finite b and positive eta"));
    }
    let beta = b.abs();
    let p = (2 * n - 2) as i32;
    let full = PI / eta;
    let cut = if beta > 0.0 {
        (p as f64 + 80.0) / (2.0 * beta)
    } else {
        f64::INFINITY
    };
    let smax = full.min(cut);
    let ctl = QuadCtl {
        rel_tol: J_REL_TOL,
        abs_tol: 0.0,
        initial_panels: 2,
        max_panels: 1 << 12,
    };
    let est = quad::integrate(
        |s: f64| {
            let w = (-2.0 * beta * s).exp() * (eta * s).sin().powi(p);
            (w, s * w)
        },
        0.0,
        smax,
        &ctl,
    )?;
    let (m0, m1) = est.value;
    if !(m0 > 0.0) {
        return Err(Error::numeric(
            format!("J({b}, {n}, {eta}) underflowed"),
            None,
        ));
    }
    let mut rel_error = est.error / m0 + 1e-15;
    if smax < full {
        // log-integrand f(s) = −2βs + p log(ηs) is concave with f'(smax) < 0
        let fprime = -2.0 * beta + p as f64 / smax;
        let tail = (-2.0 * beta * smax + p as f64 * (eta * smax).ln()).exp() / (-fprime);
        rel_error += tail / m0;
    }
    let log_value = 2.0 * eta.ln() + beta * full + m0.ln();
    let slope_abs = full - 2.0 * m1 / m0;
    Ok(LogJ {
        log_value,
        slope: if b < 0.0 { -slope_abs } else { slope_abs },
        rel_error,
    })
}

pub fn j_integral(b: f64, n: u32, eta: f64) -> Result<f64> {
    Ok(log_j(b, n, eta)?.log_value.exp())
}

/// J(z, n, 1) and ∂J/∂z for complex z, on the same Gauss–Legendre engine.
pub fn j_complex(z: Complex, n: u32) -> Result<(Complex, Complex)> {
    check_level(n, 2)?;
    let p = (2 * n - 2) as i32;
    let ctl = QuadCtl {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        initial_panels: 2,
        max_panels: 1 << 12,
    };
    let est = quad::integrate(
        |t: f64| {
            let w = (2.0 * z * t).exp() * t.cos().powi(p);
            (w, w * (2.0 * t))
        },
        -0.5 * PI,
        0.5 * PI,
        &ctl,
    )?;
    Ok(est.value)
}

struct SeriesSum {
    sum: Complex,
    tail: f64,
    terms: usize,
}

/// Sums exp(l(a) + iφ(a)) over a ≥ lo (or all of ℤ when lo is None), starting
/// from `start`, for log-concave magnitudes. `tol` maps the current partial
/// sum to the allowed total tail.
fn sum_log_concave<F>(
    mut term: F,
    start: i64,
    lo: Option<i64>,
    ctl: &SeriesCtl,
    tol_scale: f64,
) -> Result<SeriesSum>
where
    F: FnMut(i64) -> Result<(f64, f64)>,
{
    let mut sum = Complex::new(0.0, 0.0);
    let mut mag = 0.0;
    let mut terms = 0;
    let mut tail_total = 0.0;
    let start = lo.map_or(start, |l| start.max(l));
    let dirs: &[i64] = if lo.is_some() { &[1] } else { &[1, -1] };
    for &dir in dirs {
        let mut a = if dir == 1 { start } else { start - 1 };
        let mut prev: Option<f64> = None;
        loop {
            if terms >= ctl.max_terms {
                return Err(Error::numeric(
                    format!("series not converged after {terms} terms"),
                    Some(sum.re),
                ));
            }
            let (l, phase) = term(a)?;
            let t = l.exp();
            sum += Complex::from_polar(t, phase);
            mag += t;
            terms += 1;
            if let Some(pl) = prev {
                let r = (l - pl).exp();
                if r < 1.0 {
                    let tail = t * r / (1.0 - r);
                    let allowed =
                        tol_scale * (ctl.rel_tol * sum.norm().max(0.0) + ctl.abs_tol) / 4.0;
                    if tail <= allowed || t == 0.0 {
                        tail_total += tail;
                        break;
                    }
                }
            }
            prev = Some(l);
            a += dir;
        }
    }
    let _ = mag;
    Ok(SeriesSum {
        sum,
        tail: tail_total,
        terms,
    })
}

/// Runs `sum_log_concave`, tightening the per-side target until the total tail
/// meets rel_tol·|value| + abs_tol (matters when phases cancel).
fn certified_sum<F>(mut term: F, start: i64, lo: Option<i64>, ctl: &SeriesCtl) -> Result<SeriesSum>
where
    F: FnMut(i64) -> Result<(f64, f64)>,
{
    let mut scale = 1.0;
    loop {
        let s = sum_log_concave(&mut term, start, lo, ctl, scale)?;
        if s.tail <= ctl.rel_tol * s.sum.norm() + ctl.abs_tol || scale < 1e-12 {
            return Ok(s);
        }
        scale *= 1e-3;
    }
}

/// ρ_n on the twisted cylinder by mode summation.
pub fn rho_cylinder_modes(
    spec: &CylinderSpec,
    n: u32,
    t: f64,
    ctl: &SeriesCtl,
) -> Result<KernelValue> {
    check_level(n, 2)?;
    spec.check_t(t)?;
    let m = spec.twist(n);
    let pref = 2.0 * n as f64 * (spec.eta * t).cos().ln() - (2.0 * PI).ln();
    let mut qerr = 0.0;
    let s = certified_sum(
        |a| {
            let x = a as f64 - m;
            let lj = log_j(x, n, spec.eta)?;
            let l = pref + 2.0 * x * t - lj.log_value;
            qerr += l.exp() * lj.rel_error;
            Ok((l, 0.0))
        },
        0,
        None,
        ctl,
    )?;
    Ok(KernelValue {
        value: s.sum.re,
        trunc_error: s.tail + qerr,
        terms_used: s.terms,
    })
}

/// |K_n(x, y)|_{h^n} on the cylinder for x = (t1, θ1), y = (t2, θ2).
pub fn k_offdiag_cylinder_modes(
    spec: &CylinderSpec,
    n: u32,
    (t1, th1): (f64, f64),
    (t2, th2): (f64, f64),
    ctl: &SeriesCtl,
) -> Result<KernelValue> {
    check_level(n, 2)?;
    spec.check_t(t1)?;
    spec.check_t(t2)?;
    let m = spec.twist(n);
    let pref =
        n as f64 * ((spec.eta * t1).cos().ln() + (spec.eta * t2).cos().ln()) - (2.0 * PI).ln();
    let dth = th1 - th2;
    let mut qerr = 0.0;
    let s = certified_sum(
        |a| {
            let x = a as f64 - m;
            let lj = log_j(x, n, spec.eta)?;
            let l = pref + x * (t1 + t2) - lj.log_value;
            qerr += l.exp() * lj.rel_error;
            Ok((l, x * dth))
        },
        0,
        None,
        ctl,
    )?;
    Ok(KernelValue {
        value: s.sum.norm(),
        trunc_error: s.tail + qerr,
        terms_used: s.terms,
    })
}

/// ln(m!) by direct summation (exact enough for the small m used here).
pub fn ln_factorial(m: u32) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// ln of the squared norm of w^a on the cusp at level n, with x = a − 𝔪 > 0:
/// 2π (2n−2)! / (2x)^{2n−1}.
pub fn ln_cusp_norm(n: u32, x: f64) -> f64 {
    (2.0 * PI).ln() + ln_factorial(2 * n - 2) - (2 * n - 1) as f64 * (2.0 * x).ln()
}

/// ρ_n on the twisted cusp by mode summation; τ = log|w| < 0.
pub fn rho_cusp_modes(spec: &CuspSpec, n: u32, tau: f64, ctl: &SeriesCtl) -> Result<KernelValue> {
    check_level(n, 3)?;
    if !(tau < 0.0 && tau.is_finite()) {
        return Err(Error::domain(format!("tau = {tau} must be negative")));
    }
    let m = spec.twist(n);
    let pref = 2.0 * n as f64 * (-tau).ln();
    let s = certified_sum(
        |a| {
            let x = a as f64 - m;
            Ok((pref + 2.0 * x * tau - ln_cusp_norm(n, x), 0.0))
        },
        1,
        Some(1),
        ctl,
    )?;
    Ok(KernelValue {
        value: s.sum.re,
        trunc_error: s.tail + s.sum.re * 1e-15 * s.terms as f64,
        terms_used: s.terms,
    })
}

/// F(b) = ∫ cos(2πba) / J(a, n, 1) da by quadrature on [−A, A].
///
/// A is grown until 2/(J(A)·∂log J(A)) < abs_tol/2; that bounds both tails
/// because log J is convex. `terms_used` counts J evaluations.
pub fn f_numeric(b: f64, n: u32, ctl: &SeriesCtl) -> Result<KernelValue> {
    check_level(n, 2)?;
    if !b.is_finite() {
        return Err(Error::domain("b must be finite"));
    }
    let b = b.abs();
    let mut a_max: f64 = 4.0;
    let tail = loop {
        let lj = log_j(a_max, n, 1.0)?;
        let tail = 2.0 * (-lj.log_value).exp() / lj.slope;
        if tail < 0.5 * ctl.abs_tol {
            break tail;
        }
        a_max *= 1.5;
        if a_max > 1e4 {
            return Err(Error::numeric("Fourier integral tail does not decay", None));
        }
    };
    let mut evals = 0usize;
    let mut fail: Option<Error> = None;
    let qctl = QuadCtl {
        rel_tol: ctl.rel_tol.max(1e-14),
        abs_tol: 0.25 * ctl.abs_tol,
        initial_panels: ((4.0 * b * a_max).ceil() as usize).max(4),
        max_panels: 1 << 14,
    };
    let est = quad::integrate(
        |a: f64| {
            evals += 1;
            match log_j(a, n, 1.0) {
                Ok(lj) => (2.0 * PI * b * a).cos() * (-lj.log_value).exp(),
                Err(e) => {
                    fail.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        a_max,
        &qctl,
    )?;
    if let Some(e) = fail {
        return Err(e);
    }
    Ok(KernelValue {
        value: 2.0 * est.value,
        trunc_error: tail + 2.0 * est.error,
        terms_used: evals,
    })
}

/// (n − ½) cosh^{−2n}(πb) for |Im b| < ½.
pub fn f_closed(b: Complex, n: u32) -> Result<Complex> {
    check_level(n, 2)?;
    if !(b.im.abs() < 0.5) {
        return Err(Error::domain(format!(
            "|Im b| = {} is outside the strip |Im b| < 1/2",
            b.im.abs()
        )));
    }
    Ok((n as f64 - 0.5) * (-2.0 * n as f64 * log_cosh_complex(PI * b)).exp())
}

/// Both sides of Σ_a 1/J(a, n, η) = Σ_ξ F(ηξ), each with its certified tail.
pub fn poisson_sides(eta: f64, n: u32, ctl: &SeriesCtl) -> Result<(KernelValue, KernelValue)> {
    check_level(n, 2)?;
    let mut qerr = 0.0;
    let lhs = certified_sum(
        |a| {
            let lj = log_j(a as f64, n, eta)?;
            qerr += (-lj.log_value).exp() * lj.rel_error;
            Ok((-lj.log_value, 0.0))
        },
        0,
        None,
        ctl,
    )?;
    let lead = n as f64 - 0.5;
    let rhs = certified_sum(
        |xi| {
            let x = PI * eta * xi as f64;
            Ok((lead.ln() - 2.0 * n as f64 * crate::hypgeo::log_cosh(x), 0.0))
        },
        0,
        None,
        ctl,
    )?;
    Ok((
        KernelValue {
            value: lhs.sum.re,
            trunc_error: lhs.tail + qerr,
            terms_used: lhs.terms,
        },
        KernelValue {
            value: rhs.sum.re,
            trunc_error: rhs.tail,
            terms_used: rhs.terms,
        },
    ))
}

/// Axis-aligned rectangle [x0, x1] × [y0, y1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::domain("degenerate rectangle"));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }
}

/// (1/2πi) ∮ f'/f over the boundary of `rect`, rounded to an integer.
///
/// `f` returns (f(z), f'(z), scale); the contour is rejected when
/// |f(z)| < threshold · scale anywhere it is sampled, or when the integral is
/// not close to an integer.
pub fn winding_number<F>(mut f: F, rect: &Rect, threshold: f64) -> Result<i64>
where
    F: FnMut(Complex) -> Result<(Complex, Complex, f64)>,
{
    let corners = [
        Complex::new(rect.x0, rect.y0),
        Complex::new(rect.x1, rect.y0),
        Complex::new(rect.x1, rect.y1),
        Complex::new(rect.x0, rect.y1),
    ];
    let ctl = QuadCtl {
        rel_tol: 1e-10,
        abs_tol: 1e-10,
        initial_panels: 2,
        max_panels: 1 << 10,
    };
    let mut total = Complex::new(0.0, 0.0);
    for k in 0..4 {
        let (za, zb) = (corners[k], corners[(k + 1) % 4]);
        let dz = zb - za;
        let mut worst = f64::INFINITY;
        let mut fail: Option<Error> = None;
        let est = quad::integrate(
            |s: f64| {
                let z = za + dz * s;
                match f(z) {
                    Ok((v, dv, scale)) => {
                        worst = worst.min(v.norm() / scale);
                        dv / v * dz
                    }
                    Err(e) => {
                        fail.get_or_insert(e);
                        Complex::new(0.0, 0.0)
                    }
                }
            },
            0.0,
            1.0,
            &ctl,
        );
        if let Some(e) = fail {
            return Err(e);
        }
        if worst < threshold {
            return Err(Error::Contour(format!(
                "|f| drops to {worst:e} of its scale on edge {k}; perturb the box"
            )));
        }
        total += est
            .map_err(|e| Error::Contour(format!("edge {k}: {e}")))?
            .value;
    }
    let w = total / Complex::new(0.0, 2.0 * PI);
    let r = w.re.round();
    if (w.re - r).abs() > 1e-3 || w.im.abs() > 1e-3 {
        return Err(Error::Contour(format!(
            "winding integral {w} is not near an integer"
        )));
    }
    Ok(r as i64)
}

/// Relative size of |J(z)| against J(Re z) below which a contour is rejected.
pub const CONTOUR_THRESHOLD: f64 = 1e-8;

/// Number of zeros of J(·, n, 1) inside `rect` by the argument principle.
/// The box must stay within |Im z| ≤ n − ½.
pub fn zero_free_strip_check(n: u32, rect: &Rect) -> Result<i64> {
    check_level(n, 2)?;
    let half = n as f64 - 0.5;
    if rect.y0 < -half || rect.y1 > half {
        return Err(Error::domain(format!(
            "box leaves the strip |Im z| <= {half}"
        )));
    }
    winding_number(
        |z| {
            let (v, dv) = j_complex(z, n)?;
            let scale = j_integral(z.re, n, 1.0)?;
            Ok((v, dv, scale))
        },
        rect,
        CONTOUR_THRESHOLD,
    )
}

/// Control for [`zero_free_strip_check`]: counts the zeros of (z − z0)·J(z).
/// Returns 1 when the box is zero free and contains z0.
pub fn planted_zero_check(n: u32, rect: &Rect, z0: Complex) -> Result<i64> {
    check_level(n, 2)?;
    let half = n as f64 - 0.5;
    if rect.y0 < -half || rect.y1 > half {
        return Err(Error::domain(format!(
            "box leaves the strip |Im z| <= {half}"
        )));
    }
    winding_number(
        |z| {
            let (v, dv) = j_complex(z, n)?;
            let scale = j_integral(z.re, n, 1.0)?;
            let w = z - z0;
            Ok((v * w, dv * w + v, scale * (1.0 + z0.norm())))
        },
        rect,
        CONTOUR_THRESHOLD,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn j_simple_values() {
        assert_relative_eq!(j_integral(0.0, 2, 1.0).unwrap(), PI / 2.0, epsilon = 1e-14);
        // antiderivative of e^{2t} cos² t is e^{2t}(2 + cos 2t + sin 2t)/8,
        // which gives (e^{π} − e^{−π})/8 = sinh(π)/4 across (−π/2, π/2)
        assert_relative_eq!(
            j_integral(1.0, 2, 1.0).unwrap(),
            PI.sinh() / 4.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn j_scaling_identity() {
        let (b, n, eta) = (1.7, 4, 0.6);
        let lhs = j_integral(b, n, eta).unwrap();
        let rhs = eta * j_integral(b / eta, n, 1.0).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn j_even_and_slope() {
        for b in [0.3, 2.0, 15.0, 400.0] {
            let p = log_j(b, 3, 0.8).unwrap();
            let m = log_j(-b, 3, 0.8).unwrap();
            assert_eq!(p.log_value, m.log_value);
            assert_eq!(p.slope, -m.slope);
            // slope by central difference
            let h = 1e-4 * (1.0 + b);
            let fd = (log_j(b + h, 3, 0.8).unwrap().log_value
                - log_j(b - h, 3, 0.8).unwrap().log_value)
                / (2.0 * h);
            assert_relative_eq!(p.slope, fd, max_relative = 1e-6);
            assert!(p.slope < slope_limit(0.8));
        }
        // no overflow far out
        let far = log_j(5000.0, 2, 1.0).unwrap();
        assert!(far.log_value.is_finite() && far.log_value > 5000.0 * PI - 30.0);
        assert!(log_j(1.0, 1, 1.0).is_err());
    }

    #[test]
    fn cylinder_rho_symmetric_and_twist_periodic() {
        let ctl = SeriesCtl::default();
        let spec = CylinderSpec::new(1.0, 0.0).unwrap();
        let a = rho_cylinder_modes(&spec, 3, 0.3, &ctl).unwrap();
        let b = rho_cylinder_modes(&spec, 3, -0.3, &ctl).unwrap();
        assert_relative_eq!(a.value, b.value, max_relative = 1e-13);
        let s1 = CylinderSpec::with_any_twist(1.0, 0.37).unwrap();
        let s2 = CylinderSpec::with_any_twist(1.0, 1.37).unwrap();
        let v1 = rho_cylinder_modes(&s1, 4, 0.2, &ctl).unwrap();
        let v2 = rho_cylinder_modes(&s2, 4, 0.2, &ctl).unwrap();
        assert_relative_eq!(v1.value, v2.value, max_relative = 1e-13);
        assert!(CylinderSpec::new(1.0, 1.0).is_err());
        assert!(rho_cylinder_modes(&spec, 3, 1.6, &ctl).is_err());
    }

    #[test]
    fn wide_cylinder_approaches_disk_value() {
        let spec = CylinderSpec::new(6.0, 0.0).unwrap();
        let v = rho_cylinder_modes(&spec, 4, 0.0, &SeriesCtl::default()).unwrap();
        assert!((v.value - 3.5 / (2.0 * PI)).abs() < 1e-4);
        assert!(v.trunc_error <= 1e-13 * v.value + 1e-15);
    }

    #[test]
    fn offdiag_diagonal_and_symmetry() {
        let ctl = SeriesCtl::default();
        let spec = CylinderSpec::new(1.0, 0.25).unwrap();
        let d = rho_cylinder_modes(&spec, 5, 0.2, &ctl).unwrap();
        let k = k_offdiag_cylinder_modes(&spec, 5, (0.2, 1.0), (0.2, 1.0), &ctl).unwrap();
        assert_relative_eq!(d.value, k.value, max_relative = 1e-12);
        let xy = k_offdiag_cylinder_modes(&spec, 5, (0.1, 0.3), (-0.4, 2.0), &ctl).unwrap();
        let yx = k_offdiag_cylinder_modes(&spec, 5, (-0.4, 2.0), (0.1, 0.3), &ctl).unwrap();
        assert_relative_eq!(xy.value, yx.value, max_relative = 1e-12);
    }

    #[test]
    fn cusp_decays_deep() {
        let ctl = SeriesCtl::default();
        let spec = CuspSpec::new(0.0).unwrap();
        let mut last = f64::INFINITY;
        for tau in [-8.0, -12.0, -20.0, -40.0] {
            let v = rho_cusp_modes(&spec, 4, tau, &ctl).unwrap().value;
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-20);
        assert!(rho_cusp_modes(&spec, 4, 0.0, &ctl).is_err());
        assert!(rho_cusp_modes(&spec, 2, -1.0, &ctl).is_err());
    }

    #[test]
    fn cusp_norm_level3() {
        // 2π·4!/2⁵ at level 3, a = 1, α = 0
        assert_relative_eq!(ln_cusp_norm(3, 1.0).exp(), 1.5 * PI, max_relative = 1e-15);
    }

    #[test]
    fn fourier_closed_form() {
        assert_relative_eq!(f_closed(Complex::new(0.0, 0.0), 3).unwrap().re, 2.5);
        let v = f_closed(Complex::new(1.0, 0.0), 3).unwrap();
        assert_relative_eq!(v.re, 2.5 * PI.cosh().powi(-6), max_relative = 1e-14);
        assert!(f_closed(Complex::new(0.0, 0.5), 3).is_err());
        let far = f_closed(Complex::new(400.0, 0.1), 3).unwrap();
        assert!(far.norm() == 0.0 || far.norm().is_finite());
    }

    #[test]
    fn fourier_even() {
        let ctl = SeriesCtl::default();
        let a = f_numeric(0.7, 3, &ctl).unwrap().value;
        let b = f_numeric(-0.7, 3, &ctl).unwrap().value;
        assert_eq!(a, b);
    }

    #[test]
    fn zero_counts() {
        let r2 = Rect::new(-4.0, 4.0, -1.5, 1.5).unwrap();
        assert_eq!(zero_free_strip_check(2, &r2).unwrap(), 0);
        assert_eq!(
            planted_zero_check(2, &r2, Complex::new(0.7, 0.4)).unwrap(),
            1
        );
        // a box around the genuine zero at 2i, outside the strip
        let around = Rect::new(-0.5, 0.5, 1.6, 2.4).unwrap();
        let n = winding_number(
            |z| {
                let (v, dv) = j_complex(z, 2)?;
                Ok((v, dv, j_integral(z.re, 2, 1.0)?))
            },
            &around,
            CONTOUR_THRESHOLD,
        )
        .unwrap();
        assert_eq!(n, 1);
        assert!(zero_free_strip_check(2, &around).is_err());
    }

    #[test]
    fn rect_validation() {
        assert!(Rect::new(1.0, 0.0, 0.0, 1.0).is_err());
        let r = Rect::new(-1.0, 1.0, -2.0, 2.0).unwrap();
        assert!(zero_free_strip_check(2, &r).is_err());
    }
}
