//! The loop side: ρ_k as a sum over geodesic loops, off-diagonal bounds from
//! geodesic segments, extremum scans and the integral of ρ_k over a compact
//! quotient.
//!
//! ```text
//! ρ_k(p) = (k−½)/(2π) · (1 + Σ_γ cosh^{−2k}(ℓ_γ/2) cos(2πk α_γ))
//! ```
//!
//! Terms are formed as exp(−2k·log cosh(ℓ/2)), so large k·ℓ underflows
//! gracefully instead of overflowing. The part of the sum beyond the cutoff is
//! bounded according to the family's [`TailModel`].

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{orbit_ball, GroupPresentation, OrbitBall};
use crate::hypgeo::{log_cosh, DiskPoint, Point};
use crate::loopgeo::{
    cylinder_half_plane_point, loops_cylinder, loops_from_ball, Bundle, LoopFamily, Provenance,
    TailModel,
};
use crate::modesum::CylinderSpec;
use crate::quad::GaussLegendre;

/// (k − ½)/(2π), the density of the disk.
pub fn leading(k: u32) -> f64 {
    (k as f64 - 0.5) / (2.0 * PI)
}

/// cosh^{−p}(ℓ/2) in log form.
pub fn cosh_power(l: f64, p: f64) -> f64 {
    (-p * log_cosh(0.5 * l)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub rho: f64,
    pub leading: f64,
    /// Σ cosh^{−2k}(ℓ/2) cos(2πk α_γ) over the loops present.
    pub loop_correction: f64,
    /// Σ cosh^{−2k}(ℓ/2) over the loops present (no phases).
    pub abs_correction: f64,
    /// Bound on |ρ − computed ρ| due to loops beyond the cutoff.
    pub tail_bound: f64,
    pub terms: usize,
    pub complete: bool,
    pub certified: bool,
}

/// Bound on Σ cosh^{−p}(ℓ/2) over the loops (or segments) a family left out.
/// `present` is the number of members of length ≤ the cutoff, used to sharpen
/// the packing estimate. Returns None when nothing can be certified.
pub fn tail_sum_bound(tail: &TailModel, cutoff: f64, present: usize, p: f64) -> Option<f64> {
    match *tail {
        TailModel::Empty => Some(0.0),
        TailModel::Linear {
            step,
            offset,
            first_excluded,
        } => {
            // cosh^{−p}(ℓ/2) ≤ 2^p e^{−pℓ/2} and ℓ_m ≥ step·|m| − offset
            let q = 0.5 * p * step;
            let m = first_excluded as f64;
            let log_first = p * 2f64.ln() + 0.5 * p * offset - q * m;
            Some(2.0 * log_first.exp() / (1.0 - (-q).exp()))
        }
        TailModel::Cusp { c, first_excluded } => {
            if p <= 1.0 {
                return None;
            }
            // terms (1 + c²m²)^{−p/2}, decreasing in m: f(M) + ∫_M^∞ (cx)^{−p} dx
            let m = first_excluded.max(1) as f64;
            let first = (-0.5 * p * (c * m).powi(2).ln_1p()).exp();
            let integral = (-p * c.ln() + (1.0 - p) * m.ln()).exp() / (p - 1.0);
            Some(2.0 * (first + integral))
        }
        TailModel::Packing { delta } => {
            let delta = delta?;
            let h = 0.5 * p;
            if h <= 1.0 || !(delta > 0.0) || !cutoff.is_finite() {
                return None;
            }
            // Σ_{ℓ>R} g(ℓ) = −g(R)N(R) + ∫_R^∞ N(r)(−g′(r)) dr with
            // N(r) ≤ e^{r+δ}/(4 sinh²(δ/2)) and −g′ ≤ (p/2) 2^p e^{−pr/2}.
            let s2 = (0.5 * delta).sinh().powi(2);
            let log_int = delta + h.ln() + p * 2f64.ln()
                - (h - 1.0) * cutoff
                - (4.0 * s2).ln()
                - (h - 1.0).ln();
            let sharpen = cosh_power(cutoff, p) * present as f64;
            Some((log_int.exp() - sharpen).max(0.0))
        }
    }
}

fn min_level(tail: &TailModel) -> u32 {
    match tail {
        TailModel::Linear { .. } | TailModel::Cusp { .. } => 3,
        TailModel::Packing { .. } | TailModel::Empty => 2,
    }
}

/// ρ_k from a loop family. Requires k ≥ 3 on the cylinder and cusp models and
/// k ≥ 2 on compact quotients.
pub fn rho_trace(fam: &LoopFamily, k: u32) -> Result<TraceResult> {
    let need = min_level(&fam.tail);
    if k < need {
        return Err(Error::domain(format!(
            "level {k} is below the minimum {need} for this surface"
        )));
    }
    if fam.loops.windows(2).any(|w| w[0].length > w[1].length) {
        return Err(Error::domain("loops must be sorted by length"));
    }
    let p = 2.0 * k as f64;
    let mut corr = 0.0;
    let mut abs = 0.0;
    for l in &fam.loops {
        let w = cosh_power(l.length, p);
        let phase = 2.0 * PI * crate::loopgeo::frac(k as f64 * l.hol_angle);
        corr += w * phase.cos();
        abs += w;
    }
    let lead = leading(k);
    let present = fam.loops.iter().filter(|l| l.length <= fam.cutoff).count();
    let tail = tail_sum_bound(&fam.tail, fam.cutoff, present, p);
    let certified = fam.complete && tail.is_some();
    Ok(TraceResult {
        rho: lead * (1.0 + corr),
        leading: lead,
        loop_correction: corr,
        abs_correction: abs,
        tail_bound: tail.map_or(f64::INFINITY, |t| lead * t),
        terms: fam.loops.len(),
        complete: fam.complete,
        certified,
    })
}

/// A geodesic segment from x to y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFamily {
    pub segments: Vec<Segment>,
    pub cutoff: f64,
    pub complete: bool,
    pub tail: TailModel,
}

/// Segments on the cylinder between x = (t1, θ1) and y = (t2, θ2).
///
/// All windings within `first_excluded` of the nearest lift are kept, even
/// those slightly longer than R, so the linear tail model applies verbatim.
pub fn segments_cylinder(
    spec: &CylinderSpec,
    x: (f64, f64),
    y: (f64, f64),
    r: f64,
) -> Result<SegmentFamily> {
    let eta = spec.eta;
    let lift = |t: f64, th: f64| cylinder_half_plane_point(eta, t, th);
    for t in [x.0, y.0] {
        if !(t.is_finite() && (eta * t).abs() < 0.5 * PI) {
            return Err(Error::domain(format!("t = {t} is outside the cylinder")));
        }
    }
    let px = lift(x.0, x.1)?;
    let m0 = ((x.1 - y.1) / (2.0 * PI)).round() as i64;
    let dist_m = |m: i64| -> Result<f64> { Ok(px.dist(&lift(y.0, y.1 + 2.0 * PI * m as f64)?)) };
    let d0 = dist_m(m0)?;
    let step = 2.0 * PI * eta;
    let reach = ((r + d0) / step).ceil() as i64 + 1;
    let mut segments = Vec::new();
    for j in -reach + 1..reach {
        let m = m0 + j;
        segments.push(Segment {
            length: dist_m(m)?,
            provenance: Provenance::Winding(m),
        });
    }
    segments.sort_by(|a, b| a.length.total_cmp(&b.length));
    Ok(SegmentFamily {
        segments,
        cutoff: r,
        complete: true,
        tail: TailModel::Linear {
            step,
            offset: d0,
            first_excluded: reach as u64,
        },
    })
}

/// Segments x → y on a Fuchsian quotient from an orbit ball around b.
/// `delta_y` is a lower bound on the injectivity radius at y.
pub fn segments_from_ball(
    ball: &OrbitBall,
    x: &Point,
    y: &Point,
    r: f64,
    delta_y: Option<f64>,
) -> Result<SegmentFamily> {
    let model = ball.basepoint.model();
    let (x, y) = (x.in_model(model), y.in_model(model));
    let need = r + ball.basepoint.dist(&x)? + ball.basepoint.dist(&y)?;
    let complete = ball.complete && ball.radius >= need - 1e-12;
    let upto = ball
        .elements
        .partition_point(|e| e.displacement <= need + 1e-9);
    let mut segments: Vec<Segment> = std::iter::once(Ok(Segment {
        length: x.dist(&y)?,
        provenance: Provenance::Word(crate::fuchsian::Word(Vec::new())),
    }))
    .chain(ball.elements[..upto].iter().map(|e| {
        Ok(Segment {
            length: x.dist(&e.map.apply_point(&y)?)?,
            provenance: Provenance::Word(e.word.clone()),
        })
    }))
    .filter(|s: &Result<Segment>| s.as_ref().map_or(true, |s| s.length <= r))
    .collect::<Result<_>>()?;
    segments.sort_by(|a, b| a.length.total_cmp(&b.length));
    Ok(SegmentFamily {
        segments,
        cutoff: r,
        complete,
        tail: TailModel::Packing { delta: delta_y },
    })
}

/// The stated off-diagonal bound together with the pieces of the refined
/// estimate around the shortest segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffdiagBound {
    /// (k−½)/(2π) Σ cosh^{−k}(ℓ/2) plus tail.
    pub bound: f64,
    pub tail: f64,
    /// d(x, y): the shortest segment.
    pub distance: f64,
    /// Second shortest segment length.
    pub second: Option<f64>,
    /// (k−½)/(2π) cosh^{−2k}(d/2): the kernel of the disk at distance d.
    pub disk_term: f64,
    /// (k−½)/(2π) cosh^{−k}(d/2).
    pub literal_term: f64,
    /// (k−½)/(2π) Σ_{ℓ>d} cosh^{−k}(ℓ/2) plus tail.
    pub rest: f64,
    /// (k−½)/(2π) Σ_{ℓ>d} cosh^{−2k}(ℓ/2) plus tail.
    pub rest_sharp: f64,
    pub certified: bool,
}

impl OffdiagBound {
    /// | |K| − disk_term | ≤ rest, with `slack` for the error in |K|.
    pub fn refined_holds(&self, k_abs: f64, slack: f64) -> bool {
        (k_abs - self.disk_term).abs() <= self.rest + slack
    }

    /// The same with cosh^{−k}(d/2) as the leading term.
    pub fn literal_refined_holds(&self, k_abs: f64, slack: f64) -> bool {
        (k_abs - self.literal_term).abs() <= self.rest + slack
    }
}

pub fn offdiag_trace_bound(segs: &SegmentFamily, k: u32) -> Result<OffdiagBound> {
    if k < 3 {
        return Err(Error::domain("the off-diagonal bound needs k ≥ 3"));
    }
    let Some(first) = segs.segments.first() else {
        return Err(Error::domain("no segment between the points"));
    };
    if first.length < 1e-12 {
        return Err(Error::domain("the points coincide"));
    }
    let kf = k as f64;
    let lead = leading(k);
    let present = segs
        .segments
        .iter()
        .filter(|s| s.length <= segs.cutoff)
        .count();
    let tail_k = tail_sum_bound(&segs.tail, segs.cutoff, present, kf);
    let tail_2k = tail_sum_bound(&segs.tail, segs.cutoff, present, 2.0 * kf);
    let certified = segs.complete && tail_k.is_some();
    let (tk, t2k) = (
        tail_k.unwrap_or(f64::INFINITY),
        tail_2k.unwrap_or(f64::INFINITY),
    );
    let d = first.length;
    let rest: f64 = segs.segments[1..]
        .iter()
        .map(|s| cosh_power(s.length, kf))
        .sum();
    let rest2: f64 = segs.segments[1..]
        .iter()
        .map(|s| cosh_power(s.length, 2.0 * kf))
        .sum();
    let head = cosh_power(d, kf);
    Ok(OffdiagBound {
        bound: lead * (head + rest + tk),
        tail: lead * tk,
        distance: d,
        second: segs.segments.get(1).map(|s| s.length),
        disk_term: lead * cosh_power(d, 2.0 * kf),
        literal_term: lead * head,
        rest: lead * (rest + tk),
        rest_sharp: lead * (rest2 + t2k),
        certified,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremumCase {
    /// Holonomy 1 along the systole: ρ_k peaks there.
    Maximum,
    /// Holonomy −1: ρ_k has its minimum there.
    Minimum,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// (u, 0) on the cylinder, disk coordinates on a quotient.
    pub coord: [f64; 2],
    pub rho: f64,
    pub correction: f64,
    pub systole_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaReport {
    pub grid: String,
    pub points: usize,
    pub step: f64,
    pub case: ExtremumCase,
    pub argmax: Sample,
    pub argmin: Sample,
    pub systole: f64,
    pub l_prime: f64,
    /// (cosh(l₁/2)/cosh(l′/2))^k.
    pub predicted_radius: f64,
    /// The grid step exceeds the predicted radius.
    pub coarse: bool,
    pub certified: bool,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanSpec {
    pub u_max: f64,
    pub step: f64,
    /// Second length parameter; defaults to twice the systole.
    pub l_prime: Option<f64>,
    /// Loop cutoff; defaults to a value leaving a negligible tail.
    pub cutoff: Option<f64>,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec {
            u_max: 1.0,
            step: 0.02,
            l_prime: None,
            cutoff: None,
        }
    }
}

fn extremum_case(cos_systole: f64) -> ExtremumCase {
    if (cos_systole - 1.0).abs() < 1e-12 {
        ExtremumCase::Maximum
    } else if (cos_systole + 1.0).abs() < 1e-12 {
        ExtremumCase::Minimum
    } else {
        ExtremumCase::Neither
    }
}

/// Picks extrema by the loop correction rather than ρ itself: near the core
/// of a long cylinder the variation of ρ sits far below the rounding of the
/// constant leading term.
fn pick(samples: &[Sample]) -> (Sample, Sample) {
    let mut hi = samples[0];
    let mut lo = samples[0];
    for s in samples {
        if s.correction > hi.correction {
            hi = *s;
        }
        if s.correction < lo.correction {
            lo = *s;
        }
    }
    (hi, lo)
}

/// Scans ρ_k across the cylinder along u ∈ [−u_max, u_max], the core at u = 0.
pub fn scan_cylinder(spec: &CylinderSpec, k: u32, scan: &ScanSpec) -> Result<ExtremaReport> {
    if !(scan.step > 0.0 && scan.u_max >= 0.0) {
        return Err(Error::domain(
            "scan needs a positive step and nonnegative extent",
        ));
    }
    let l1 = 2.0 * PI * spec.eta;
    let lp = scan.l_prime.unwrap_or(2.0 * l1);
    let n = (scan.u_max / scan.step + 1e-9).floor() as i64;
    let cutoff = scan.cutoff.unwrap_or_else(|| {
        // loops beyond this are below e^{−60} relative
        let u = scan.u_max;
        (2.0 * (0.5 * l1).sinh().asinh()).max(60.0 / k as f64) + 2.0 * u + l1
    });
    let samples: Vec<Sample> = (-n..=n)
        .into_par_iter()
        .map(|j| {
            let u = j as f64 * scan.step;
            let fam = loops_cylinder(spec, spec.t_of_u(u), cutoff)?;
            let tr = rho_trace(&fam, k)?;
            Ok((
                Sample {
                    coord: [u, 0.0],
                    rho: tr.rho,
                    correction: tr.loop_correction,
                    systole_distance: Some(u.abs()),
                },
                tr.certified,
            ))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|(s, c)| {
            if !c {
                // every cylinder family carries a tail model
                unreachable!("cylinder families are always certified");
            }
            s
        })
        .collect();
    let (argmax, argmin) = pick(&samples);
    let predicted = ((0.5 * l1).cosh() / (0.5 * lp).cosh()).powi(k as i32);
    Ok(ExtremaReport {
        grid: format!("u in [-{}, {}] step {}", scan.u_max, scan.u_max, scan.step),
        points: samples.len(),
        step: scan.step,
        case: extremum_case((2.0 * PI * k as f64 * spec.alpha).cos()),
        argmax,
        argmin,
        systole: l1,
        l_prime: lp,
        predicted_radius: predicted,
        coarse: scan.step > predicted,
        certified: true,
        samples,
    })
}

/// Scans ρ_k over given points of a compact quotient with the canonical
/// bundle (trivial holonomy along closed geodesics, so the maximum case).
pub fn scan_quotient(
    g: &GroupPresentation,
    k: u32,
    points: &[Point],
    cutoff: f64,
    l_prime: Option<f64>,
) -> Result<ExtremaReport> {
    if points.is_empty() {
        return Err(Error::domain("no scan points"));
    }
    let origin = Point::Disk(DiskPoint::origin()).in_model(g.model());
    let shift = points
        .iter()
        .map(|p| origin.dist(p))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let ball = match orbit_ball(g, &origin, cutoff + 2.0 * shift) {
        Ok(b) => b,
        Err(Error::Budget(b)) => *b,
        Err(e) => return Err(e),
    };
    let systole = ball
        .elements
        .iter()
        .map(|e| e.map.translation_length())
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let lp = l_prime.unwrap_or(2.0 * systole);
    let rows = points
        .par_iter()
        .map(|p| {
            let fam = loops_from_ball(&ball, p, cutoff, Bundle::Canonical)?;
            let tr = rho_trace(&fam, k)?;
            let sd = fam
                .loops
                .iter()
                .filter(|l| l.closed_length.is_some_and(|c| c <= systole + 1e-9))
                .filter_map(|l| l.axis_distance.map(f64::abs))
                .fold(None, |acc: Option<f64>, u| {
                    Some(acc.map_or(u, |a| a.min(u)))
                });
            let z = p.to_disk().z();
            Ok((
                Sample {
                    coord: [z.re, z.im],
                    rho: tr.rho,
                    correction: tr.loop_correction,
                    systole_distance: sd,
                },
                tr.certified,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let certified = rows.iter().all(|r| r.1);
    let samples: Vec<Sample> = rows.into_iter().map(|r| r.0).collect();
    let (argmax, argmin) = pick(&samples);
    let predicted = ((0.5 * systole).cosh() / (0.5 * lp).cosh()).powi(k as i32);
    // nearest-neighbour spacing of the supplied points
    let step = samples
        .iter()
        .enumerate()
        .flat_map(|(i, a)| {
            samples[i + 1..]
                .iter()
                .map(move |b| (a.coord[0] - b.coord[0]).hypot(a.coord[1] - b.coord[1]))
        })
        .fold(f64::INFINITY, f64::min);
    Ok(ExtremaReport {
        grid: format!("{} supplied points", samples.len()),
        points: samples.len(),
        step,
        case: ExtremumCase::Maximum,
        argmax,
        argmin,
        systole,
        l_prime: lp,
        predicted_radius: predicted,
        coarse: step > predicted,
        certified,
        samples,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct DimCheckSpec {
    /// Gauss–Legendre nodes along each radial and angular direction of a
    /// polar triangle.
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Loop cutoff at every quadrature point.
    pub cutoff: f64,
}

impl DimCheckSpec {
    /// Cutoff leaving a pointwise tail near 1% of the correction at k = 2 and
    /// far less above.
    pub fn for_level(k: u32) -> Self {
        DimCheckSpec {
            radial_nodes: 8,
            angular_nodes: 8,
            cutoff: if k <= 2 { 8.0 } else { 6.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimCheck {
    pub integral: f64,
    /// Riemann–Roch value (2k − 1)(g − 1).
    pub target: f64,
    /// Quadrature of the leading term alone.
    pub leading_integral: f64,
    pub area: f64,
    /// Integral of the pointwise tail bounds.
    pub tail_integral: f64,
    pub points: usize,
    pub certified: bool,
}

/// ∫ ρ_k ω over the fundamental polygon of a compact quotient.
///
/// The polygon is split into 2·sides right triangles with apex at the centre.
/// A triangle is swept by geodesics from the centre to the point at arclength
/// σ along its side: with r_in the inradius, that point sits at
/// cosh r = cosh r_in cosh σ and angle tan φ = tanh σ / sinh r_in. Taking
/// r = λ·r(σ), the area element is λ-free sinh(λ r) r φ′(σ) dλ dσ, analytic
/// on the closed rectangle, so a tensor Gauss–Legendre rule converges fast.
/// Loops at the nodes of a triangle come from one orbit ball centred inside it.
pub fn dimension_check(g: &GroupPresentation, k: u32, spec: &DimCheckSpec) -> Result<DimCheck> {
    let Some(poly) = g.polygon() else {
        return Err(Error::Unsupported(
            "dimension check needs a fundamental polygon".into(),
        ));
    };
    if poly.sides % 4 != 0 {
        return Err(Error::Unsupported("polygon is not a 4g-gon".into()));
    }
    let genus = (poly.sides / 4) as f64;
    let ga = GaussLegendre::new(spec.angular_nodes);
    let gr = GaussLegendre::new(spec.radial_nodes);
    let half = PI / poly.sides as f64;
    let r_in = poly.inradius;
    let side_half = (poly.circumradius.cosh() / r_in.cosh()).acosh();
    let polar = |r: f64, phi: f64| -> Result<Point> {
        Ok(Point::Disk(DiskPoint::polar(r, phi)?).in_model(g.model()))
    };

    let mut acc = (0.0, 0.0, 0.0, 0.0);
    let mut points = 0;
    let mut certified = true;
    for side in 0..poly.sides {
        let psi = poly.phase + 2.0 * half * side as f64;
        for turn in [-1.0, 1.0] {
            // (point, weight) pairs of one triangle
            let mut nodes: Vec<(Point, f64)> = Vec::new();
            for (x, w) in ga.nodes().iter().zip(ga.weights()) {
                let sigma = 0.5 * side_half * (1.0 + x);
                let reach = (r_in.cosh() * sigma.cosh()).acosh();
                let q = sigma.tanh() / r_in.sinh();
                let phi = q.atan();
                let dphi = (1.0 - sigma.tanh().powi(2)) / r_in.sinh() / (1.0 + q * q);
                for (y, v) in gr.nodes().iter().zip(gr.weights()) {
                    let lam = 0.5 * (1.0 + y);
                    let r = lam * reach;
                    let weight = 0.25 * side_half * w * v * r.sinh() * reach * dphi;
                    nodes.push((polar(r, psi + turn * phi)?, weight));
                }
            }
            // one orbit ball per triangle, centred at the node nearest to
            // being a minimax centre of the triangle's corners
            let corners = [
                polar(0.0, psi)?,
                polar(poly.inradius, psi)?,
                polar(poly.circumradius, psi + turn * half)?,
            ];
            let spread = |c: &Point| -> Result<f64> {
                corners
                    .iter()
                    .try_fold(0.0f64, |m, q| Ok(m.max(c.dist(q)?)))
            };
            let mut centre = (f64::INFINITY, 0usize);
            for (i, (p, _)) in nodes.iter().enumerate() {
                let s = spread(p)?;
                if s < centre.0 {
                    centre = (s, i);
                }
            }
            let c = nodes[centre.1].0;
            let ball = match orbit_ball(g, &c, spec.cutoff + 2.0 * centre.0 + 1e-6) {
                Ok(b) => b,
                Err(Error::Budget(b)) => *b,
                Err(e) => return Err(e),
            };
            let vals = nodes
                .par_iter()
                .map(|(p, w)| {
                    let fam = loops_from_ball(&ball, p, spec.cutoff, Bundle::Canonical)?;
                    let tr = rho_trace(&fam, k)?;
                    Ok((
                        tr.rho * w,
                        tr.tail_bound * w,
                        tr.leading * w,
                        *w,
                        tr.certified,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            for v in &vals {
                acc.0 += v.0;
                acc.1 += v.1;
                acc.2 += v.2;
                acc.3 += v.3;
                certified &= v.4;
            }
            points += vals.len();
        }
    }
    Ok(DimCheck {
        integral: acc.0,
        target: (2.0 * k as f64 - 1.0) * (genus - 1.0),
        leading_integral: acc.2,
        area: acc.3,
        tail_integral: acc.1,
        points,
        certified,
    })
}

/// An n×n grid of cylinder points (t, θ): t evenly across |ηt| ≤ 0.6 and
/// θ evenly across [0, 2π).
pub fn cylinder_grid(eta: f64, n: usize) -> Vec<(f64, f64)> {
    let ts: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                0.0
            } else {
                (-0.6 + 1.2 * i as f64 / (n - 1) as f64) / eta
            }
        })
        .collect();
    let ths: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    ts.iter()
        .flat_map(|&t| ths.iter().map(move |&th| (t, th)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::genus2_group;
    use crate::loopgeo::loops_cusp;
    use crate::modesum::{
        k_offdiag_cylinder_modes, rho_cusp_modes, rho_cylinder_modes, CuspSpec, SeriesCtl,
    };
    use approx::assert_relative_eq;
    use num_complex::Complex64 as Complex;

    #[test]
    fn disk_value() {
        let tr = rho_trace(&LoopFamily::disk(), 4).unwrap();
        assert_eq!(tr.rho, 3.5 / (2.0 * PI));
        assert_eq!(tr.tail_bound, 0.0);
        assert!(tr.certified);
    }

    #[test]
    fn cylinder_matches_modes() {
        let ctl = SeriesCtl::default();
        for (eta, k, t, alpha) in [(1.0, 3, 0.0, 0.0), (0.5, 5, 0.4, 0.25), (2.0, 8, 0.1, 0.5)] {
            let spec = CylinderSpec::new(eta, alpha).unwrap();
            let fam = loops_cylinder(&spec, t, 40.0).unwrap();
            let tr = rho_trace(&fam, k).unwrap();
            let m = rho_cylinder_modes(&spec, k, t, &ctl).unwrap();
            assert!(
                (tr.rho - m.value).abs() <= tr.tail_bound + m.trunc_error + 1e-12,
                "eta {eta} k {k}: {} vs {}",
                tr.rho,
                m.value
            );
        }
    }

    #[test]
    fn cusp_matches_modes() {
        let ctl = SeriesCtl::default();
        for (tau, k, alpha) in [(-1.0, 4, 0.0), (-0.5, 3, 0.3), (-2.0, 5, 0.3)] {
            let spec = CuspSpec::new(alpha).unwrap();
            let fam = loops_cusp(&spec, tau, 20.0).unwrap();
            let tr = rho_trace(&fam, k).unwrap();
            let m = rho_cusp_modes(&spec, k, tau, &ctl).unwrap();
            assert!(tr.tail_bound < 1e-7, "tail {}", tr.tail_bound);
            assert!(
                (tr.rho - m.value).abs() < 1e-6,
                "tau {tau} k {k}: {} vs {}",
                tr.rho,
                m.value
            );
        }
    }

    #[test]
    fn level_preconditions() {
        let spec = CylinderSpec::new(1.0, 0.0).unwrap();
        let fam = loops_cylinder(&spec, 0.0, 10.0).unwrap();
        assert!(rho_trace(&fam, 2).is_err());
        assert!(rho_trace(&LoopFamily::disk(), 2).is_ok());
    }

    #[test]
    fn uncertified_without_delta() {
        let fam = LoopFamily {
            loops: Vec::new(),
            cutoff: 5.0,
            complete: true,
            tail: TailModel::Packing { delta: None },
        };
        let tr = rho_trace(&fam, 2).unwrap();
        assert!(!tr.certified);
        assert!(tr.tail_bound.is_infinite());
    }

    #[test]
    fn linear_tail_dominates_dropped_loops() {
        let spec = CylinderSpec::new(0.5, 0.0).unwrap();
        let k = 3;
        let full = loops_cylinder(&spec, 0.3, 80.0).unwrap();
        let cut = loops_cylinder(&spec, 0.3, 8.0).unwrap();
        let missing: f64 = full.loops[cut.loops.len()..]
            .iter()
            .map(|l| cosh_power(l.length, 2.0 * k as f64))
            .sum();
        let bound = tail_sum_bound(&cut.tail, cut.cutoff, cut.loops.len(), 6.0).unwrap();
        assert!(
            missing <= bound && bound < 100.0 * missing,
            "{missing} {bound}"
        );
    }

    #[test]
    fn correction_bound_decreases_in_k() {
        let spec = CylinderSpec::new(0.7, 0.0).unwrap();
        let fam = loops_cylinder(&spec, 0.2, 30.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 3..10 {
            let tr = rho_trace(&fam, k).unwrap();
            assert!(tr.abs_correction < prev);
            prev = tr.abs_correction;
        }
    }

    #[test]
    fn offdiag_on_core() {
        let spec = CylinderSpec::new(1.0, 0.0).unwrap();
        let segs = segments_cylinder(&spec, (0.0, 0.0), (0.0, 1.0), 30.0).unwrap();
        assert_relative_eq!(segs.segments[0].length, 1.0, epsilon = 1e-12);
        let k = 5;
        let b = offdiag_trace_bound(&segs, k).unwrap();
        let kv = k_offdiag_cylinder_modes(&spec, k, (0.0, 0.0), (0.0, 1.0), &SeriesCtl::default())
            .unwrap();
        assert!(kv.value <= b.bound);
        assert!(b.refined_holds(kv.value, kv.trunc_error));
        assert!(!b.literal_refined_holds(kv.value, kv.trunc_error));
    }

    #[test]
    fn quotient_segments_match_loops_on_diagonal_limit() {
        let g = genus2_group();
        let x = Point::Disk(DiskPoint::new(Complex::new(0.1, 0.05)).unwrap());
        let y = Point::Disk(DiskPoint::new(Complex::new(-0.2, 0.1)).unwrap());
        let ball = orbit_ball(&g, &Point::Disk(DiskPoint::origin()), 9.0).unwrap();
        let segs = segments_from_ball(&ball, &x, &y, 6.0, Some(1.0)).unwrap();
        assert!(segs.complete);
        assert_relative_eq!(
            segs.segments[0].length,
            x.dist(&y).unwrap(),
            epsilon = 1e-12
        );
        let b = offdiag_trace_bound(&segs, 3).unwrap();
        assert!(b.certified && b.bound > b.disk_term);
    }

    #[test]
    fn scan_cylinder_cases() {
        let spec = CylinderSpec::new(1.0, 0.0).unwrap();
        let r = scan_cylinder(&spec, 8, &ScanSpec::default()).unwrap();
        assert_eq!(r.case, ExtremumCase::Maximum);
        assert_eq!(r.argmax.coord[0], 0.0);
        let spec = CylinderSpec::new(1.0, 1.0 / 16.0).unwrap();
        let r = scan_cylinder(&spec, 8, &ScanSpec::default()).unwrap();
        assert_eq!(r.case, ExtremumCase::Minimum);
        assert_eq!(r.argmin.coord[0], 0.0);
    }
}
