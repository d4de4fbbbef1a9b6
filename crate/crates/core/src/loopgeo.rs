//! Geodesic loops at a point: lengths and holonomy angles.
//!
//! On the cylinder ℂ*_η the loop of winding m at signed core distance u has
//! sinh(ℓ/2) = sinh(mπη)·cosh u and turning phase
//! ϑ = 2·atan(sinh u · tanh(mπη)) ∈ (−π, π). Its holonomy angle (level one,
//! stored mod 1) is mα + ϑ/2π. On the cusp with τ = log|w| the loops have
//! sinh(ℓ/2) = |m|π/|τ| and ϑ = 2·atan(mπ/|τ|). For a Fuchsian quotient each
//! g ≠ 1 gives the loop of length d(p, g·p); its phase is the cylinder phase
//! of 𝔻/⟨g⟩ with mπη = ℓ_g/2 and u the signed distance of p to the axis of g,
//! measured positive on the right of the axis.
//!
//! [`holonomy_transport`] integrates the Chern connection of e^{−φ} along a
//! discretized closed path and serves as the independent check of all these
//! phase formulas.

use std::f64::consts::PI;

use num_complex::Complex64 as Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{orbit_ball, GroupPresentation, OrbitBall, Word};
use crate::hypgeo::{
    cayley, cayley_inv, geodesic_point_half_plane, DiskPoint, HalfPlanePoint, Kind, Point,
};
use crate::modesum::{CuspSpec, CylinderSpec};

/// Upper limit on the size of an explicitly enumerated family.
pub const MAX_LOOPS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Winding(i64),
    Word(Word),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicLoop {
    pub length: f64,
    /// Holonomy angle of the level-one bundle, in [0, 1).
    pub hol_angle: f64,
    pub provenance: Provenance,
    /// Signed distance u of the base point to the relevant closed geodesic.
    /// On quotients the axis is oriented by the loop's own element, so g and
    /// g⁻¹ report opposite signs; on the cylinder u is the fixed coordinate.
    pub axis_distance: Option<f64>,
    /// Turning phase ϑ in (−π, π).
    pub phase: f64,
    /// m·α part of the holonomy (mod 1); zero on Fuchsian quotients.
    pub twist_part: f64,
    /// Length of the closed geodesic freely homotopic to the loop (None on
    /// the cusp, where there is none).
    pub closed_length: Option<f64>,
}

/// How loops beyond the cutoff are bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailModel {
    /// Two-sided family indexed by m with ℓ_m ≥ step·|m| − offset, all |m| <
    /// first_excluded included.
    Linear {
        step: f64,
        offset: f64,
        first_excluded: u64,
    },
    /// Cusp family: cosh²(ℓ_m/2) = 1 + (c·m)², all |m| < first_excluded included.
    Cusp { c: f64, first_excluded: u64 },
    /// Orbit counting with injectivity radius at least `delta`.
    Packing { delta: Option<f64> },
    /// Nothing lies beyond the cutoff (the disk itself).
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopFamily {
    pub loops: Vec<GeodesicLoop>,
    pub cutoff: f64,
    pub complete: bool,
    pub tail: TailModel,
}

impl LoopFamily {
    /// The loop family of the disk: no loops at all.
    pub fn disk() -> Self {
        LoopFamily {
            loops: Vec::new(),
            cutoff: f64::INFINITY,
            complete: true,
            tail: TailModel::Empty,
        }
    }
}

pub(crate) fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

fn sort_loops(loops: &mut [GeodesicLoop]) {
    let key = |p: &Provenance| match p {
        Provenance::Winding(m) => (m.unsigned_abs() as i64 * 2 + (*m < 0) as i64, None),
        Provenance::Word(w) => (0, Some(w.clone())),
    };
    loops.sort_by(|a, b| {
        a.length
            .total_cmp(&b.length)
            .then_with(|| key(&a.provenance).cmp(&key(&b.provenance)))
    });
}

/// Cylinder phase ϑ for half-translation x = mπη (signed) and signed distance u.
pub fn cylinder_phase(x: f64, u: f64) -> f64 {
    2.0 * (u.sinh() * x.tanh()).atan()
}

/// Loop length on the cylinder from sinh(ℓ/2) = sinh|x|·cosh u.
pub fn cylinder_length(x: f64, u: f64) -> f64 {
    let x = x.abs();
    // asinh(sinh x cosh u) in log form when sinh x would overflow
    if x < 300.0 {
        2.0 * (x.sinh() * u.cosh()).asinh()
    } else {
        2.0 * (x + crate::hypgeo::log_cosh(u) + (0.5 * (1.0 - (-2.0 * x).exp())).ln() + 2f64.ln())
    }
}

/// Based loops of length ≤ R at the point with coordinate t on the cylinder.
pub fn loops_cylinder(spec: &CylinderSpec, t: f64, r: f64) -> Result<LoopFamily> {
    if !(t.is_finite() && (spec.eta * t).abs() < 0.5 * PI) {
        return Err(Error::domain(format!("t = {t} is outside the cylinder")));
    }
    if !(r > 0.0) {
        return Err(Error::domain("cutoff must be positive"));
    }
    let u = spec.u_of_t(t);
    if r / (2.0 * PI * spec.eta) > MAX_LOOPS as f64 {
        return Err(Error::domain(format!(
            "cutoff {r} would produce more than {MAX_LOOPS} loops"
        )));
    }
    let mut loops = Vec::new();
    let mut m: i64 = 1;
    loop {
        let x = m as f64 * PI * spec.eta;
        let len = cylinder_length(x, u);
        if len > r {
            break;
        }
        for s in [1i64, -1] {
            let mm = s * m;
            let xs = s as f64 * x;
            let phase = cylinder_phase(xs, u);
            let twist_part = frac(mm as f64 * spec.alpha);
            loops.push(GeodesicLoop {
                length: len,
                hol_angle: frac(twist_part + phase / (2.0 * PI)),
                provenance: Provenance::Winding(mm),
                axis_distance: Some(u),
                phase,
                twist_part,
                closed_length: Some(2.0 * x),
            });
        }
        m += 1;
    }
    sort_loops(&mut loops);
    Ok(LoopFamily {
        loops,
        cutoff: r,
        complete: true,
        tail: TailModel::Linear {
            step: 2.0 * PI * spec.eta,
            offset: 0.0,
            first_excluded: m as u64,
        },
    })
}

/// Based loops of length ≤ R on the cusp at τ = log|w| < 0.
pub fn loops_cusp(spec: &CuspSpec, tau: f64, r: f64) -> Result<LoopFamily> {
    if !(tau < 0.0 && tau.is_finite()) {
        return Err(Error::domain(format!("tau = {tau} must be negative")));
    }
    if !(r > 0.0) {
        return Err(Error::domain("cutoff must be positive"));
    }
    let c = PI / tau.abs();
    // the count grows like e^{R/2}
    if (0.5 * r).sinh() / c > MAX_LOOPS as f64 {
        return Err(Error::domain(format!(
            "cutoff {r} would produce more than {MAX_LOOPS} loops"
        )));
    }
    let mut loops = Vec::new();
    let mut m: i64 = 1;
    loop {
        let len = 2.0 * (m as f64 * c).asinh();
        if len > r {
            break;
        }
        for s in [1i64, -1] {
            let mm = s * m;
            let phase = 2.0 * (mm as f64 * c).atan();
            let twist_part = frac(mm as f64 * spec.alpha);
            loops.push(GeodesicLoop {
                length: len,
                hol_angle: frac(twist_part + phase / (2.0 * PI)),
                provenance: Provenance::Winding(mm),
                axis_distance: None,
                phase,
                twist_part,
                closed_length: None,
            });
        }
        m += 1;
    }
    sort_loops(&mut loops);
    Ok(LoopFamily {
        loops,
        cutoff: r,
        complete: true,
        tail: TailModel::Cusp {
            c,
            first_excluded: m as u64,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bundle {
    /// The canonical bundle with the metric induced by the hyperbolic metric;
    /// its holonomy along closed geodesics is trivial.
    Canonical,
}

/// Based loops of length ≤ R at p on 𝔻/Γ.
pub fn loops_fuchsian(
    g: &GroupPresentation,
    p: &Point,
    r: f64,
    bundle: Bundle,
) -> Result<LoopFamily> {
    let ball = match orbit_ball(g, p, r) {
        Ok(b) => b,
        Err(Error::Budget(b)) => *b,
        Err(e) => return Err(e),
    };
    loops_from_ball(&ball, p, r, bundle)
}

/// Loops at p from an orbit ball enumerated around a possibly different
/// basepoint b. Complete when the ball was complete and its radius is at least
/// R + 2·d(b, p).
pub fn loops_from_ball(ball: &OrbitBall, p: &Point, r: f64, bundle: Bundle) -> Result<LoopFamily> {
    let Bundle::Canonical = bundle;
    let p = p.in_model(ball.basepoint.model());
    let shift = ball.basepoint.dist(&p)?;
    let need = r + 2.0 * shift;
    let complete = ball.complete && ball.radius >= need - 1e-12;
    let upto = ball
        .elements
        .partition_point(|e| e.displacement <= need + 1e-9);
    let mut loops: Vec<GeodesicLoop> = ball.elements[..upto]
        .par_iter()
        .map(|e| -> Result<Option<GeodesicLoop>> {
            let len = e.map.displacement(&p)?;
            if len > r {
                return Ok(None);
            }
            if e.map.classify().kind != Kind::Hyperbolic {
                return Err(Error::Unsupported(format!(
                    "element {} is not hyperbolic; cusped quotients are not handled here",
                    e.word
                )));
            }
            let l = e.map.translation_length()?;
            // positive on the right of the axis, matching t > 0 on the cylinder
            let u = -e.map.axis()?.signed_distance(&p);
            let phase = cylinder_phase(0.5 * l, u);
            Ok(Some(GeodesicLoop {
                length: len,
                hol_angle: frac(phase / (2.0 * PI)),
                provenance: Provenance::Word(e.word.clone()),
                axis_distance: Some(u),
                phase,
                twist_part: 0.0,
                closed_length: Some(l),
            }))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    sort_loops(&mut loops);
    // With every loop of length ≤ R present, the injectivity radius at p is
    // half the shortest one, or at least R/2 when there is none.
    let delta = if complete {
        Some(0.5 * loops.first().map_or(r, |l| l.length.min(r)))
    } else {
        None
    };
    Ok(LoopFamily {
        loops,
        cutoff: r,
        complete,
        tail: TailModel::Packing { delta },
    })
}

/// Disk point over (t, θ) for the cylinder realised as 𝔻/⟨g⟩ with g the
/// translation by 2πη along the real diameter towards +1.
pub fn cylinder_point(spec: &CylinderSpec, t: f64, theta: f64) -> Result<DiskPoint> {
    let zeta = Complex::from_polar((spec.eta * theta).exp(), 0.5 * PI - spec.eta * t);
    Ok(cayley(HalfPlanePoint::new(zeta)?))
}

/// Half-plane coordinate ζ over the annulus point z = e^{t+iθ}.
fn cylinder_zeta(eta: f64, t: f64, theta: f64) -> Complex {
    Complex::from_polar((eta * theta).exp(), 0.5 * PI - eta * t)
}

/// Annulus coordinate z = e^{t+iθ} of a half-plane point ζ.
fn cylinder_z(eta: f64, zeta: Complex) -> Complex {
    let t = (0.5 * PI - zeta.arg()) / eta;
    let theta = zeta.norm().ln() / eta;
    Complex::from_polar(t.exp(), theta)
}

/// The geodesic loop of winding m at e^{t0}, as a path s ∈ [0, 1] ↦ z in the
/// annulus {e^{−π/2η} < |z| < e^{π/2η}}.
pub fn cylinder_loop_path(eta: f64, t0: f64, m: i64) -> impl Fn(f64) -> Complex {
    let psi = 0.5 * PI - eta * t0;
    let (r1, r2) = (1.0, (2.0 * PI * m as f64 * eta).exp());
    move |s| {
        if s == 0.0 || s == 1.0 {
            return Complex::from_polar(t0.exp(), 0.0);
        }
        cylinder_z(eta, ray_geodesic_point(r1, r2, psi, s))
    }
}

/// Point at fraction s along the half-plane geodesic from r1·e^{iψ} to
/// r2·e^{iψ}. Stays accurate when r2/r1 is huge, unlike a detour through the
/// disk.
fn ray_geodesic_point(r1: f64, r2: f64, psi: f64, s: f64) -> Complex {
    let cos = psi.cos();
    if cos.abs() < 1e-300 {
        return Complex::new(0.0, r1.powf(1.0 - s) * r2.powf(s));
    }
    // Feet of the semicircle: product r1·r2, midpoint (r1 + r2)/(2 cos ψ).
    let c = 0.5 * (r1 + r2) / cos;
    let far = c + c.signum() * (c * c - r1 * r2).max(0.0).sqrt();
    let near = r1 * r2 / far;
    // w ↦ (w − near)/(far − w) sends the geodesic onto the imaginary axis,
    // the lower half when the feet are negative.
    let height = |w: Complex| ((w - near) / (far - w)).norm();
    let (y1, y2) = (
        height(Complex::from_polar(r1, psi)),
        height(Complex::from_polar(r2, psi)),
    );
    let y = Complex::new(0.0, c.signum() * y1.powf(1.0 - s) * y2.powf(s));
    (near + far * y) / (1.0 + y)
}

/// The geodesic loop of winding m at log|w| = τ on the punctured disk, lifted
/// through w = e^{iz} to the half-plane.
pub fn cusp_loop_path(tau: f64, m: i64) -> impl Fn(f64) -> Complex {
    let a = HalfPlanePoint::new(Complex::new(0.0, -tau)).expect("tau < 0");
    let b = HalfPlanePoint::new(Complex::new(2.0 * PI * m as f64, -tau)).expect("tau < 0");
    move |s| {
        if s == 0.0 || s == 1.0 {
            return Complex::new(tau.exp(), 0.0);
        }
        (Complex::new(0.0, 1.0) * geodesic_point_half_plane(a, b, s).w()).exp()
    }
}

/// Level-one weight φ = −log h on the twisted cylinder:
/// h = cos²(η log|z|) |z|^{−2α}.
pub fn cylinder_weight(eta: f64, alpha: f64) -> impl Fn(Complex) -> f64 {
    move |z| {
        let t = z.norm().ln();
        -2.0 * (eta * t).cos().ln() + 2.0 * alpha * t
    }
}

/// Weight of the canonical bundle on the cylinder: the dual of the metric
/// η²|dz|²/(cos²(ηt)|z|²), up to the constant η².
pub fn canonical_cylinder_weight(eta: f64) -> impl Fn(Complex) -> f64 {
    move |z| {
        let t = z.norm().ln();
        -(z.norm_sqr() * (eta * t).cos().powi(2)).ln()
    }
}

/// Level-one weight on the twisted cusp: h = (log|w|)² |w|^{−2α}.
pub fn cusp_weight(alpha: f64) -> impl Fn(Complex) -> f64 {
    move |w| {
        let tau = w.norm().ln();
        -(tau * tau).ln() + 2.0 * alpha * tau
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TransportCtl {
    /// Target on successive Romberg diagonals, in radians.
    pub tol: f64,
    pub min_level: u32,
    pub max_level: u32,
    /// Finite-difference step relative to |z|.
    pub fd_step: f64,
}

impl Default for TransportCtl {
    fn default() -> Self {
        TransportCtl {
            tol: 1e-10,
            min_level: 4,
            max_level: 18,
            fd_step: 1e-3,
        }
    }
}

/// ∂φ/∂z by fourth-order central differences.
fn d_phi<F: Fn(Complex) -> f64>(phi: &F, z: Complex, rel: f64) -> Complex {
    let h = rel * z.norm().max(1e-3);
    let dx = |e: Complex| {
        (-phi(z + 2.0 * h * e) + 8.0 * phi(z + h * e) - 8.0 * phi(z - h * e) + phi(z - 2.0 * h * e))
            / (12.0 * h)
    };
    let fx = dx(Complex::new(1.0, 0.0));
    let fy = dx(Complex::new(0.0, 1.0));
    Complex::new(0.5 * fx, -0.5 * fy)
}

/// Im ∮ ∂φ along the closed path (the transport angle of e^{−φ}, in radians).
///
/// The chord-midpoint sum Σ φ_z((z_j + z_{j+1})/2)(z_{j+1} − z_j) has an error
/// expansion in even powers of the step, so Romberg extrapolation applies.
pub fn transport_angle<P, F>(path: P, phi: F, ctl: &TransportCtl) -> Result<f64>
where
    P: Fn(f64) -> Complex + Sync,
    F: Fn(Complex) -> f64 + Sync,
{
    if (path(1.0) - path(0.0)).norm() > 1e-10 {
        return Err(Error::domain("transport path is not closed"));
    }
    let rule = |steps: usize| -> f64 {
        let zs: Vec<Complex> = (0..=steps).map(|j| path(j as f64 / steps as f64)).collect();
        zs.par_windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                (d_phi(&phi, mid, ctl.fd_step) * (w[1] - w[0])).im
            })
            .sum()
    };
    let mut table: Vec<Vec<f64>> = Vec::new();
    for (i, level) in (ctl.min_level..=ctl.max_level).enumerate() {
        let mut row = vec![rule(1usize << level)];
        for j in 1..=i {
            let f = 4f64.powi(j as i32);
            let v = row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (f - 1.0);
            row.push(v);
        }
        if i >= 2 {
            let diff = (row[i] - table[i - 1][i - 1]).abs();
            if diff < ctl.tol {
                return Ok(row[i]);
            }
        }
        table.push(row);
    }
    Err(Error::numeric(
        "transport integral did not converge",
        table.last().map(|r| r[r.len() - 1]),
    ))
}

/// Holonomy angle of h^k = e^{−kφ} along the closed path, in [0, 1).
/// The holonomy is exp(∮ ∂(kφ)), a unit complex number since ∮ dφ = 0.
pub fn holonomy_transport<P, F>(path: P, phi: F, k: u32, ctl: &TransportCtl) -> Result<f64>
where
    P: Fn(f64) -> Complex + Sync,
    F: Fn(Complex) -> f64 + Sync,
{
    let a = transport_angle(path, phi, ctl)?;
    Ok(frac(k as f64 * a / (2.0 * PI)))
}

/// |e^{2πi x} − e^{2πi y}| for angles stored mod 1.
pub fn angle_gap(x: f64, y: f64) -> f64 {
    (Complex::from_polar(1.0, 2.0 * PI * x) - Complex::from_polar(1.0, 2.0 * PI * y)).norm()
}

/// Points in the half-plane over the annulus coordinate, exposed for tests of
/// the covering map.
pub fn cylinder_half_plane_point(eta: f64, t: f64, theta: f64) -> Result<HalfPlanePoint> {
    HalfPlanePoint::new(cylinder_zeta(eta, t, theta))
}

/// Holonomy angle (mod 1) of the winding-m loop at signed core distance u on
/// the twisted cylinder: (closed form, transport).
pub fn cylinder_holonomy_pair(
    eta: f64,
    alpha: f64,
    u: f64,
    m: i64,
    ctl: &TransportCtl,
) -> Result<(f64, f64)> {
    let spec = CylinderSpec::new(eta, alpha)?;
    let t = spec.t_of_u(u);
    let r = cylinder_length(m as f64 * PI * eta, u) * (1.0 + 1e-12);
    let fam = loops_cylinder(&spec, t, r)?;
    let l = fam
        .loops
        .iter()
        .find(|l| l.provenance == Provenance::Winding(m))
        .ok_or_else(|| Error::domain("winding must be nonzero"))?;
    let h = holonomy_transport(
        cylinder_loop_path(eta, t, m),
        cylinder_weight(eta, alpha),
        1,
        ctl,
    )?;
    Ok((l.hol_angle, h))
}

/// The same on the cusp at log|w| = τ.
pub fn cusp_holonomy_pair(alpha: f64, tau: f64, m: i64, ctl: &TransportCtl) -> Result<(f64, f64)> {
    let r = 2.0 * (m.unsigned_abs() as f64 * PI / tau.abs()).asinh() * (1.0 + 1e-12);
    let fam = loops_cusp(&CuspSpec::new(alpha)?, tau, r)?;
    let l = fam
        .loops
        .iter()
        .find(|l| l.provenance == Provenance::Winding(m))
        .ok_or_else(|| Error::domain("winding must be nonzero"))?;
    let h = holonomy_transport(cusp_loop_path(tau, m), cusp_weight(alpha), 1, ctl)?;
    Ok((l.hol_angle, h))
}

#[allow(dead_code)]
fn disk_to_annulus(eta: f64, p: DiskPoint) -> Complex {
    cylinder_z(eta, cayley_inv(p).w())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{cyclic_hyperbolic, genus2_group, orbit_ball};
    use crate::hypgeo::Model;
    use approx::assert_relative_eq;

    #[test]
    fn core_loops() {
        let spec = CylinderSpec::new(0.8, 0.3).unwrap();
        let fam = loops_cylinder(&spec, 0.0, 20.0).unwrap();
        for l in &fam.loops {
            let Provenance::Winding(m) = l.provenance else {
                panic!()
            };
            assert_relative_eq!(l.length, 2.0 * PI * 0.8 * m.abs() as f64, epsilon = 1e-12);
            assert_eq!(l.phase, 0.0);
            assert_relative_eq!(l.hol_angle, frac(m as f64 * 0.3), epsilon = 1e-15);
        }
        let count = (20.0 / (2.0 * PI * 0.8)).floor() as usize;
        assert_eq!(fam.loops.len(), 2 * count);
    }

    #[test]
    fn length_law_and_phase_formula() {
        let spec = CylinderSpec::new(1.1, 0.0).unwrap();
        for t in [-0.5, 0.2, 0.9] {
            let u = spec.u_of_t(t);
            let fam = loops_cylinder(&spec, t, 30.0).unwrap();
            for l in &fam.loops {
                let Provenance::Winding(m) = l.provenance else {
                    panic!()
                };
                let x = m as f64 * PI * spec.eta;
                let lhs = (0.5 * l.length).cosh().powi(2);
                let rhs = x.cosh().powi(2) * u.cosh().powi(2) - u.sinh().powi(2);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
                let sx = x.sinh().powi(2);
                let cos_formula =
                    1.0 - 2.0 * sx * u.sinh().powi(2) / (x.cosh().powi(2) + sx * u.sinh().powi(2));
                assert_relative_eq!(l.phase.cos(), cos_formula, epsilon = 1e-12);
                assert_eq!(l.phase.sin() > 0.0, (m as f64) * u > 0.0);
            }
        }
    }

    #[test]
    fn reflection_flips_phase() {
        let spec = CylinderSpec::new(1.0, 0.0).unwrap();
        let a = loops_cylinder(&spec, 0.3, 15.0).unwrap();
        let b = loops_cylinder(&spec, -0.3, 15.0).unwrap();
        for (x, y) in a.loops.iter().zip(&b.loops) {
            assert_eq!(x.provenance, y.provenance);
            assert_relative_eq!(x.length, y.length, epsilon = 1e-13);
            assert_relative_eq!(x.phase, -y.phase, epsilon = 1e-15);
        }
    }

    #[test]
    fn orientation_pairs() {
        let spec = CylinderSpec::new(0.7, 0.37).unwrap();
        let fam = loops_cylinder(&spec, 0.4, 25.0).unwrap();
        for pair in fam.loops.chunks(2) {
            assert_eq!(pair[0].length, pair[1].length);
            assert!(angle_gap(pair[0].hol_angle, frac(-pair[1].hol_angle)) < 1e-12);
        }
    }

    #[test]
    fn cusp_length() {
        let fam = loops_cusp(&CuspSpec::new(0.0).unwrap(), -PI, 3.0).unwrap();
        assert_relative_eq!(fam.loops[0].length, 2.0 * 1f64.asinh(), epsilon = 1e-15);
        assert!(loops_cusp(&CuspSpec::new(0.0).unwrap(), 0.5, 3.0).is_err());
        let fam = loops_cusp(&CuspSpec::new(0.3).unwrap(), -1.0, 12.0).unwrap();
        for pair in fam.loops.chunks(2) {
            assert_eq!(pair[0].length, pair[1].length);
            assert!(angle_gap(pair[0].hol_angle, frac(-pair[1].hol_angle)) < 1e-12);
        }
    }

    #[test]
    fn cyclic_group_reproduces_cylinder() {
        let eta = 0.9;
        let spec = CylinderSpec::new(eta, 0.0).unwrap();
        let g = cyclic_hyperbolic(eta).unwrap();
        for t in [-0.6, 0.0, 0.35] {
            let p = Point::Disk(cylinder_point(&spec, t, 0.4).unwrap());
            let a = loops_cylinder(&spec, t, 25.0).unwrap();
            let b = loops_fuchsian(&g, &p, 25.0, Bundle::Canonical).unwrap();
            assert_eq!(a.loops.len(), b.loops.len());
            for lb in &b.loops {
                let Provenance::Word(w) = &lb.provenance else {
                    panic!()
                };
                let m = w.letters().iter().map(|&l| l as i64).sum::<i64>();
                let la = a
                    .loops
                    .iter()
                    .find(|l| l.provenance == Provenance::Winding(m))
                    .unwrap();
                assert_relative_eq!(la.length, lb.length, max_relative = 1e-11);
                assert_relative_eq!(la.phase, lb.phase, epsilon = 1e-10);
                // Fuchsian u is measured against the axis oriented by the element itself
                let sign = m.signum() as f64;
                assert_relative_eq!(
                    sign * la.axis_distance.unwrap(),
                    lb.axis_distance.unwrap(),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn genus2_lengths_match_orbit() {
        let g = genus2_group();
        let p = Point::Disk(DiskPoint::new(Complex::new(0.21, -0.13)).unwrap());
        let fam = loops_fuchsian(&g, &p, 6.0, Bundle::Canonical).unwrap();
        let ball = orbit_ball(&g, &p, 6.0).unwrap();
        assert!(fam.complete);
        assert_eq!(fam.loops.len(), ball.elements.len());
        for l in &fam.loops {
            let Provenance::Word(w) = &l.provenance else {
                panic!()
            };
            let e = ball.elements.iter().find(|e| &e.word == w).unwrap();
            assert_relative_eq!(l.length, e.displacement, epsilon = 1e-10);
            // displacement law with the element's own axis data
            let lg = e.map.translation_length().unwrap();
            let u = l.axis_distance.unwrap();
            let lhs = (0.5 * l.length).cosh().powi(2);
            let rhs = (0.5 * lg).cosh().powi(2) * u.cosh().powi(2) - u.sinh().powi(2);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-9);
        }
    }

    #[test]
    fn non_primitive_phase_doubles_half_length() {
        let g = genus2_group();
        let p = Point::Disk(DiskPoint::new(Complex::new(0.1, 0.25)).unwrap());
        let h = g.evaluate(&"ab".parse().unwrap()).unwrap();
        let h2 = h * h;
        let u = -h.axis().unwrap().signed_distance(&p);
        let u2 = -h2.axis().unwrap().signed_distance(&p);
        assert_relative_eq!(u, u2, epsilon = 1e-10);
        let lh = h.translation_length().unwrap();
        let l2 = h2.translation_length().unwrap();
        assert_relative_eq!(l2, 2.0 * lh, max_relative = 1e-12);
        // the m = 2 loop on the cylinder 𝔻/⟨h⟩ with η = ℓ_h/2π
        let eta = lh / (2.0 * PI);
        let spec = CylinderSpec::new(eta, 0.0).unwrap();
        let cyl = loops_cylinder(&spec, spec.t_of_u(u), 40.0).unwrap();
        let m2 = cyl
            .loops
            .iter()
            .find(|l| l.provenance == Provenance::Winding(2))
            .unwrap();
        assert_relative_eq!(m2.phase, cylinder_phase(0.5 * l2, u2), epsilon = 1e-10);
        assert_relative_eq!(
            m2.length,
            h2.displacement(&p).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn covering_map_is_consistent() {
        let eta = 0.8;
        let spec = CylinderSpec::new(eta, 0.0).unwrap();
        let g = cyclic_hyperbolic(eta).unwrap().generators()[0];
        let p = cylinder_point(&spec, 0.3, 0.2).unwrap();
        let q = cylinder_point(&spec, 0.3, 0.2 + 2.0 * PI).unwrap();
        assert!((g.apply(p.z()) - q.z()).norm() < 1e-12);
        let z = disk_to_annulus(eta, p);
        assert_relative_eq!(z.norm().ln(), 0.3, epsilon = 1e-12);
        assert_relative_eq!(z.arg(), 0.2, epsilon = 1e-12);
        assert_eq!(g.model(), Model::Disk);
    }

    #[test]
    fn transport_simple_cases() {
        let ctl = TransportCtl::default();
        let circle = |s: f64| Complex::from_polar(1.0, 2.0 * PI * s);
        assert!(holonomy_transport(circle, |_| 3.0, 1, &ctl).unwrap() < 1e-12);
        // h_η = cos²(ηt) on the core circle: flat there
        let a = transport_angle(circle, cylinder_weight(1.0, 0.0), &ctl).unwrap();
        assert!(a.abs() < 1e-9);
        // canonical weight: ∮ ∂φ = −2πi on the core, so the holonomy is trivial
        let a = transport_angle(circle, canonical_cylinder_weight(1.0), &ctl).unwrap();
        assert_relative_eq!(a, -2.0 * PI, epsilon = 1e-8);
        let open = |s: f64| Complex::new(1.0 + s, 0.0);
        assert!(transport_angle(open, |_| 0.0, &ctl).is_err());
    }

    #[test]
    fn transport_matches_cylinder_formula() {
        let ctl = TransportCtl::default();
        let (eta, alpha) = (1.0, 0.0);
        let spec = CylinderSpec::new(eta, alpha).unwrap();
        let u: f64 = 0.5;
        let t = spec.t_of_u(u);
        let fam = loops_cylinder(&spec, t, 8.0).unwrap();
        let l = fam
            .loops
            .iter()
            .find(|l| l.provenance == Provenance::Winding(1))
            .unwrap();
        let h = holonomy_transport(
            cylinder_loop_path(eta, t, 1),
            cylinder_weight(eta, alpha),
            1,
            &ctl,
        )
        .unwrap();
        assert!(angle_gap(h, l.hol_angle) < 1e-6, "{h} vs {}", l.hol_angle);
    }

    #[test]
    fn transport_matches_cusp_formula() {
        let ctl = TransportCtl::default();
        for (tau, alpha, m) in [(-1.0, 0.0, 1i64), (-0.5, 0.3, -2), (-2.0, 0.3, 1)] {
            let fam = loops_cusp(&CuspSpec::new(alpha).unwrap(), tau, 20.0).unwrap();
            let l = fam
                .loops
                .iter()
                .find(|l| l.provenance == Provenance::Winding(m))
                .unwrap();
            let h =
                holonomy_transport(cusp_loop_path(tau, m), cusp_weight(alpha), 1, &ctl).unwrap();
            assert!(
                angle_gap(h, l.hol_angle) < 1e-6,
                "tau {tau} m {m}: {h} vs {}",
                l.hol_angle
            );
        }
    }
}
