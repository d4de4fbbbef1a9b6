//! Hyperbolic plane in the Poincaré disk and upper half-plane models.
//!
//! Both models carry the curvature −1 metric. Distances use the `asinh` form
//! sinh(d/2) = |z−w| / sqrt((1−|z|²)(1−|w|²)) in the disk and
//! sinh(d/2) = |z−w| / (2 sqrt(Im z Im w)) in the half-plane, which keep full
//! relative precision for tiny and for large distances.
//!
//! Isometries are unit-determinant matrices acting by Möbius transformations:
//! SU(1,1)-type `[[a, b], [b̄, ā]]` on the disk, real `SL(2,R)` on the
//! half-plane. The Cayley map w ↦ (w−i)/(w+i) identifies the two models.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex = Complex::new(0.0, 1.0);

/// Tolerance on |ad − bc − 1| relative to the squared entry scale.
pub const DET_TOL: f64 = 1e-12;
/// Band around |trace| = 2 classified as parabolic.
pub const PARABOLIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Disk,
    HalfPlane,
}

/// Point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiskPoint(Complex);

impl DiskPoint {
    pub fn new(z: Complex) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) || z.norm() >= 1.0 {
            return Err(Error::domain(format!("{z} is not inside the unit disk")));
        }
        Ok(DiskPoint(z))
    }

    pub fn origin() -> Self {
        DiskPoint(Complex::new(0.0, 0.0))
    }

    /// Point at hyperbolic distance `r` from 0 in direction `phi`.
    pub fn polar(r: f64, phi: f64) -> Result<Self> {
        DiskPoint::new(Complex::from_polar((0.5 * r).tanh(), phi))
    }

    pub fn z(&self) -> Complex {
        self.0
    }

    /// 1 − |z|², computed without cancellation near the boundary.
    fn conformal_gap(&self) -> f64 {
        let r = self.0.norm();
        (1.0 - r) * (1.0 + r)
    }

    pub fn dist(&self, other: &DiskPoint) -> f64 {
        let num = (self.0 - other.0).norm();
        2.0 * (num / (self.conformal_gap() * other.conformal_gap()).sqrt()).asinh()
    }

    /// Distance through tanh(d/2) = |(z−w)/(1−z̄w)|. Loses precision for large
    /// distances; kept as a cross-check of [`DiskPoint::dist`].
    pub fn dist_tanh(&self, other: &DiskPoint) -> f64 {
        let q = (self.0 - other.0) / (1.0 - self.0.conj() * other.0);
        2.0 * q.norm().atanh()
    }
}

/// Point of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPlanePoint(Complex);

impl HalfPlanePoint {
    pub fn new(w: Complex) -> Result<Self> {
        if !(w.re.is_finite() && w.im.is_finite()) || w.im <= 0.0 {
            return Err(Error::domain(format!("{w} is not in the upper half-plane")));
        }
        Ok(HalfPlanePoint(w))
    }

    pub fn w(&self) -> Complex {
        self.0
    }

    pub fn dist(&self, other: &HalfPlanePoint) -> f64 {
        let num = (self.0 - other.0).norm();
        2.0 * (num / (2.0 * (self.0.im * other.0.im).sqrt())).asinh()
    }
}

/// Half-plane to disk.
pub fn cayley(p: HalfPlanePoint) -> DiskPoint {
    let w = p.0;
    let z = (w - I) / (w + I);
    // |z| < 1 holds analytically; clamp the rare rounding overshoot far out.
    if z.norm() >= 1.0 {
        DiskPoint(z / (z.norm() * (1.0 + f64::EPSILON)))
    } else {
        DiskPoint(z)
    }
}

/// Disk to half-plane.
pub fn cayley_inv(p: DiskPoint) -> HalfPlanePoint {
    let z = p.0;
    let w = I * (1.0 + z) / (1.0 - z);
    let im = p.conformal_gap() / (1.0 - z).norm_sqr();
    HalfPlanePoint(Complex::new(w.re, im))
}

/// A point in either model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", content = "coord", rename_all = "kebab-case")]
pub enum Point {
    Disk(DiskPoint),
    HalfPlane(HalfPlanePoint),
}

impl Point {
    pub fn new(model: Model, c: Complex) -> Result<Self> {
        match model {
            Model::Disk => DiskPoint::new(c).map(Point::Disk),
            Model::HalfPlane => HalfPlanePoint::new(c).map(Point::HalfPlane),
        }
    }

    pub fn model(&self) -> Model {
        match self {
            Point::Disk(_) => Model::Disk,
            Point::HalfPlane(_) => Model::HalfPlane,
        }
    }

    pub fn coord(&self) -> Complex {
        match self {
            Point::Disk(p) => p.0,
            Point::HalfPlane(p) => p.0,
        }
    }

    pub fn to_disk(&self) -> DiskPoint {
        match self {
            Point::Disk(p) => *p,
            Point::HalfPlane(p) => cayley(*p),
        }
    }

    pub fn to_half_plane(&self) -> HalfPlanePoint {
        match self {
            Point::Disk(p) => cayley_inv(*p),
            Point::HalfPlane(p) => *p,
        }
    }

    pub fn in_model(&self, model: Model) -> Point {
        match model {
            Model::Disk => Point::Disk(self.to_disk()),
            Model::HalfPlane => Point::HalfPlane(self.to_half_plane()),
        }
    }

    pub fn dist(&self, other: &Point) -> Result<f64> {
        match (self, other) {
            (Point::Disk(a), Point::Disk(b)) => Ok(a.dist(b)),
            (Point::HalfPlane(a), Point::HalfPlane(b)) => Ok(a.dist(b)),
            _ => Err(Error::domain("points live in different models")),
        }
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            model: Model,
            coord: Complex,
        }
        let r = Raw::deserialize(d)?;
        Point::new(r.model, r.coord).map_err(serde::de::Error::custom)
    }
}

pub fn dist(p: &Point, q: &Point) -> Result<f64> {
    p.dist(q)
}

/// Boundary point: on the unit circle (disk) or the extended real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdealPoint {
    Finite(Complex),
    Infinity,
}

impl IdealPoint {
    fn to_half_plane(self, model: Model) -> IdealPoint {
        match (model, self) {
            (Model::HalfPlane, p) => p,
            (Model::Disk, IdealPoint::Finite(z)) => {
                if (z - 1.0).norm() < 1e-14 {
                    IdealPoint::Infinity
                } else {
                    IdealPoint::Finite(Complex::new((I * (1.0 + z) / (1.0 - z)).re, 0.0))
                }
            }
            (Model::Disk, IdealPoint::Infinity) => IdealPoint::Infinity,
        }
    }

    fn near(&self, other: &IdealPoint, tol: f64) -> bool {
        match (self, other) {
            (IdealPoint::Infinity, IdealPoint::Infinity) => true,
            (IdealPoint::Finite(a), IdealPoint::Finite(b)) => (a - b).norm() <= tol,
            _ => false,
        }
    }
}

/// Oriented geodesic between two ideal points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicAxis {
    pub model: Model,
    /// Start of the orientation (repelling fixed point for an axis of a map).
    pub from: IdealPoint,
    /// End of the orientation (attracting fixed point).
    pub to: IdealPoint,
}

impl GeodesicAxis {
    pub fn new(model: Model, from: IdealPoint, to: IdealPoint) -> Result<Self> {
        let on_boundary = |p: &IdealPoint| match (model, p) {
            (Model::Disk, IdealPoint::Finite(z)) => (z.norm() - 1.0).abs() < 1e-9,
            (Model::Disk, IdealPoint::Infinity) => false,
            (Model::HalfPlane, IdealPoint::Finite(z)) => z.im.abs() < 1e-9,
            (Model::HalfPlane, IdealPoint::Infinity) => true,
        };
        if !on_boundary(&from) || !on_boundary(&to) {
            return Err(Error::domain(
                "axis endpoints must be ideal points of the model",
            ));
        }
        if from.near(&to, 1e-12) {
            return Err(Error::domain("axis endpoints coincide"));
        }
        Ok(GeodesicAxis { model, from, to })
    }

    pub fn reversed(&self) -> Self {
        GeodesicAxis {
            model: self.model,
            from: self.to,
            to: self.from,
        }
    }

    /// Signed distance from `p`, positive on the left of the orientation.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        let w = p.to_half_plane().w();
        let a1 = self.from.to_half_plane(self.model);
        let a2 = self.to.to_half_plane(self.model);
        // Orientation-preserving map sending the axis to 0 → ∞.
        let zeta = match (a1, a2) {
            (IdealPoint::Finite(x1), IdealPoint::Finite(x2)) => {
                let s = (x1.re - x2.re).signum();
                s * (w - x1.re) / (w - x2.re)
            }
            (IdealPoint::Finite(x1), IdealPoint::Infinity) => w - x1.re,
            (IdealPoint::Infinity, IdealPoint::Finite(x2)) => -1.0 / (w - x2.re),
            (IdealPoint::Infinity, IdealPoint::Infinity) => unreachable!("validated distinct"),
        };
        (-zeta.re / zeta.im).asinh()
    }
}

pub fn signed_dist_to_axis(p: &Point, ax: &GeodesicAxis) -> f64 {
    ax.signed_distance(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

/// Trace classification. The identity is `Elliptic` with `identity` set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub kind: Kind,
    pub identity: bool,
}

/// Unit-determinant Möbius map tagged with its model.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct MobiusMap {
    m: [Complex; 4],
    model: Model,
}

#[derive(Serialize, Deserialize)]
struct RawMap {
    model: Model,
    matrix: [[f64; 2]; 4],
}

impl TryFrom<RawMap> for MobiusMap {
    type Error = Error;
    fn try_from(r: RawMap) -> Result<Self> {
        let c = |i: usize| Complex::new(r.matrix[i][0], r.matrix[i][1]);
        let m = MobiusMap::new(c(0), c(1), c(2), c(3), r.model)?;
        // keep the stored bits; `new` only projected them
        Ok(MobiusMap {
            m: [c(0), c(1), c(2), c(3)],
            model: m.model,
        })
    }
}

impl From<MobiusMap> for RawMap {
    fn from(m: MobiusMap) -> Self {
        RawMap {
            model: m.model,
            matrix: m.m.map(|c| [c.re, c.im]),
        }
    }
}

impl fmt::Debug for MobiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.m;
        write!(f, "MobiusMap<{:?}>[[{a}, {b}], [{c}, {d}]]", self.model)
    }
}

fn frob(m: &[Complex; 4]) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl MobiusMap {
    /// Checks det = 1 and the model's matrix structure, then fixes the sign.
    pub fn new(a: Complex, b: Complex, c: Complex, d: Complex, model: Model) -> Result<Self> {
        let m = [a, b, c, d];
        if m.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
            return Err(Error::domain("non-finite matrix entry"));
        }
        let scale = frob(&m).max(1.0);
        let det = a * d - b * c;
        if (det - 1.0).norm() > DET_TOL * scale * scale {
            return Err(Error::domain(format!("determinant {det} is not 1")));
        }
        let tol = 1e-10 * scale;
        match model {
            Model::Disk => {
                if (d - a.conj()).norm() > tol || (c - b.conj()).norm() > tol {
                    return Err(Error::domain("matrix does not preserve the unit disk"));
                }
            }
            Model::HalfPlane => {
                if m.iter().any(|x| x.im.abs() > tol) {
                    return Err(Error::domain("half-plane maps need real entries"));
                }
            }
        }
        Ok(Self::normalized(m, model))
    }

    /// Rescales an invertible matrix to determinant one, then as [`MobiusMap::new`].
    pub fn from_matrix(
        a: Complex,
        b: Complex,
        c: Complex,
        d: Complex,
        model: Model,
    ) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() == 0.0 || !det.norm().is_finite() {
            return Err(Error::domain("singular matrix"));
        }
        if model == Model::HalfPlane && (det.re <= 0.0 || det.im.abs() > 1e-12 * det.norm()) {
            return Err(Error::domain(
                "half-plane maps need positive real determinant",
            ));
        }
        let s = det.sqrt();
        Self::new(a / s, b / s, c / s, d / s, model)
    }

    /// Projects onto the exact model structure and fixes the sign. The
    /// determinant is left alone: recomputing it from large entries costs
    /// more precision than the drift it would remove.
    fn normalized(mut m: [Complex; 4], model: Model) -> Self {
        match model {
            Model::Disk => {
                let a = 0.5 * (m[0] + m[3].conj());
                let b = 0.5 * (m[1] + m[2].conj());
                m = [a, b, b.conj(), a.conj()];
            }
            Model::HalfPlane => {
                for x in m.iter_mut() {
                    x.im = 0.0;
                }
            }
        }
        // Sign: first entry of largest modulus gets positive real part (or
        // positive imaginary part when its real part vanishes).
        let mut k = 0;
        for i in 1..4 {
            if m[i].norm() > m[k].norm() {
                k = i;
            }
        }
        let lead = m[k];
        let flip = if lead.re.abs() > 1e-300 {
            lead.re < 0.0
        } else {
            lead.im < 0.0
        };
        if flip {
            for x in m.iter_mut() {
                *x = -*x;
            }
        }
        MobiusMap { m, model }
    }

    pub fn identity(model: Model) -> Self {
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        MobiusMap {
            m: [one, zero, zero, one],
            model,
        }
    }

    /// Disk translation by `d` along the diameter pointing at angle `theta`.
    pub fn disk_translation(theta: f64, d: f64) -> Self {
        let ch = Complex::new((0.5 * d).cosh(), 0.0);
        let sh = Complex::from_polar((0.5 * d).sinh(), theta);
        Self::normalized([ch, sh, sh.conj(), ch], Model::Disk)
    }

    /// Disk rotation z ↦ e^{iφ} z.
    pub fn disk_rotation(phi: f64) -> Self {
        let e = Complex::from_polar(1.0, 0.5 * phi);
        Self::normalized(
            [e, Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), e.conj()],
            Model::Disk,
        )
    }

    /// Half-plane dilation z ↦ λ² z, i.e. diag(λ, 1/λ).
    pub fn half_plane_dilation(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain("dilation factor must be positive"));
        }
        let z = Complex::new(0.0, 0.0);
        Ok(Self::normalized(
            [
                Complex::new(lambda, 0.0),
                z,
                z,
                Complex::new(1.0 / lambda, 0.0),
            ],
            Model::HalfPlane,
        ))
    }

    /// Half-plane translation z ↦ z + λ.
    pub fn half_plane_translation(lambda: f64) -> Self {
        let one = Complex::new(1.0, 0.0);
        Self::normalized(
            [one, Complex::new(lambda, 0.0), Complex::new(0.0, 0.0), one],
            Model::HalfPlane,
        )
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn entries(&self) -> [Complex; 4] {
        self.m
    }

    pub fn det(&self) -> Complex {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    pub fn trace(&self) -> Complex {
        self.m[0] + self.m[3]
    }

    pub fn apply(&self, z: Complex) -> Complex {
        let [a, b, c, d] = self.m;
        (a * z + b) / (c * z + d)
    }

    pub fn apply_point(&self, p: &Point) -> Result<Point> {
        if p.model() != self.model {
            return Err(Error::domain("point and map live in different models"));
        }
        let z = self.apply(p.coord());
        match self.model {
            Model::Disk => {
                let z = if z.norm() >= 1.0 {
                    z / (z.norm() * (1.0 + f64::EPSILON))
                } else {
                    z
                };
                Point::new(Model::Disk, z)
            }
            Model::HalfPlane => Point::new(
                Model::HalfPlane,
                Complex::new(z.re, z.im.max(f64::MIN_POSITIVE)),
            ),
        }
    }

    /// d(p, self·p), computed from the matrix conjugated so that p sits at
    /// the origin (disk) or at i (half-plane); this keeps full relative
    /// precision for large displacements.
    pub fn displacement(&self, p: &Point) -> Result<f64> {
        if p.model() != self.model {
            return Err(Error::domain("point and map live in different models"));
        }
        let [a, b, c, d] = self.m;
        let sh = match p {
            Point::Disk(q) => {
                let z = q.z();
                // (T⁻¹ g T)_{12} for T = [[1, z], [z̄, 1]]/sqrt(1 − |z|²)
                ((a * z + b - c * z * z - d * z) / q.conformal_gap()).norm()
            }
            Point::HalfPlane(q) => {
                let w = q.w();
                let (x, y) = (w.re, w.im);
                // h = S⁻¹ g S with S = [[√y, x/√y], [0, 1/√y]]
                let (a, b, c, d) = (a.re, b.re, c.re, d.re);
                let h11 = a - x * c;
                let h22 = c * x + d;
                let h12 = (a * x + b - x * (c * x + d)) / y;
                let h21 = c * y;
                0.5 * (h11 - h22).hypot(h12 + h21)
            }
        };
        Ok(2.0 * sh.asinh())
    }

    /// self ∘ other. Panics if the models differ.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        assert_eq!(
            self.model, other.model,
            "composing maps from different models"
        );
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = other.m;
        Self::normalized(
            [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h],
            self.model,
        )
    }

    pub fn inverse(&self) -> MobiusMap {
        let [a, b, c, d] = self.m;
        Self::normalized([d, -b, -c, a], self.model)
    }

    /// Relative Frobenius distance between the matrices, up to overall sign.
    pub fn matrix_distance(&self, other: &MobiusMap) -> f64 {
        let mut dm = 0.0;
        let mut dp = 0.0;
        for i in 0..4 {
            dm += (self.m[i] - other.m[i]).norm_sqr();
            dp += (self.m[i] + other.m[i]).norm_sqr();
        }
        dm.min(dp).sqrt() / frob(&self.m).max(frob(&other.m)).max(1.0)
    }

    pub fn is_identity(&self) -> bool {
        self.matrix_distance(&MobiusMap::identity(self.model)) <= 1e-12
    }

    pub fn classify(&self) -> Classification {
        if self.is_identity() {
            return Classification {
                kind: Kind::Elliptic,
                identity: true,
            };
        }
        let t = self.trace().norm();
        let kind = if (t - 2.0).abs() <= PARABOLIC_TOL {
            Kind::Parabolic
        } else if t < 2.0 {
            Kind::Elliptic
        } else {
            Kind::Hyperbolic
        };
        Classification {
            kind,
            identity: false,
        }
    }

    /// 2 log λ for the eigenvalue λ > 1.
    pub fn translation_length(&self) -> Result<f64> {
        let c = self.classify();
        if c.kind != Kind::Hyperbolic {
            return Err(Error::domain(format!(
                "translation length of a {:?} map",
                c.kind
            )));
        }
        let t = self.trace().norm();
        let lambda = 0.5 * (t + ((t - 2.0) * (t + 2.0)).sqrt());
        Ok(2.0 * lambda.ln())
    }

    /// Axis of a hyperbolic map, oriented repelling → attracting.
    pub fn axis(&self) -> Result<GeodesicAxis> {
        let c = self.classify();
        if c.kind != Kind::Hyperbolic {
            return Err(Error::domain(format!("axis of a {:?} map", c.kind)));
        }
        let [a, b, cc, d] = self.m;
        let scale = frob(&self.m);
        let derivative_at = |z: Complex| 1.0 / (cc * z + d).norm_sqr();
        let (p1, p2) = if self.model == Model::HalfPlane && cc.norm() <= 1e-14 * scale {
            (
                IdealPoint::Infinity,
                IdealPoint::Finite(Complex::new((b / (d - a)).re, 0.0)),
            )
        } else {
            let tr = a + d;
            let disc = ((tr - 2.0) * (tr + 2.0)).sqrt();
            // a − d ± disc, choosing the sign without cancellation first
            let (big, other) = if (a - d + disc).norm() >= (a - d - disc).norm() {
                (a - d + disc, a - d - disc)
            } else {
                (a - d - disc, a - d + disc)
            };
            let z1 = big / (2.0 * cc);
            // product of the roots is −b/c
            let z2 = if other.norm() > 1e-8 * big.norm() {
                other / (2.0 * cc)
            } else {
                -b / (cc * z1)
            };
            let fix = |z: Complex| match self.model {
                Model::Disk => z / z.norm(),
                Model::HalfPlane => Complex::new(z.re, 0.0),
            };
            (IdealPoint::Finite(fix(z1)), IdealPoint::Finite(fix(z2)))
        };
        let attracting_first = match p1 {
            IdealPoint::Infinity => match p2 {
                IdealPoint::Finite(z) => derivative_at(z) > 1.0,
                IdealPoint::Infinity => unreachable!(),
            },
            IdealPoint::Finite(z) => derivative_at(z) < 1.0,
        };
        if attracting_first {
            GeodesicAxis::new(self.model, p2, p1)
        } else {
            GeodesicAxis::new(self.model, p1, p2)
        }
    }

    /// Fixed-point residual |g(x) − x| of an ideal point (0 for ∞ when fixed).
    pub fn fixed_residual(&self, p: &IdealPoint) -> f64 {
        let [a, _, c, _] = self.m;
        match p {
            IdealPoint::Infinity => (c / a).norm(),
            IdealPoint::Finite(z) => (self.apply(*z) - z).norm(),
        }
    }

    /// The same isometry in the other model (conjugation by Cayley).
    pub fn to_model(&self, model: Model) -> MobiusMap {
        if model == self.model {
            return *self;
        }
        let one = Complex::new(1.0, 0.0);
        // C = [[1, −i], [1, i]], C⁻¹ ∝ [[i, i], [−1, 1]]
        let cm = [one, -I, one, I];
        let ci = [I, I, -one, one];
        let mul = |x: [Complex; 4], y: [Complex; 4]| {
            [
                x[0] * y[0] + x[1] * y[2],
                x[0] * y[1] + x[1] * y[3],
                x[2] * y[0] + x[3] * y[2],
                x[2] * y[1] + x[3] * y[3],
            ]
        };
        let p = match model {
            Model::Disk => mul(mul(cm, self.m), ci),
            Model::HalfPlane => mul(mul(ci, self.m), cm),
        };
        let det = p[0] * p[3] - p[1] * p[2];
        let s = det.sqrt();
        Self::normalized(p.map(|x| x / s), model)
    }
}

impl std::ops::Mul for MobiusMap {
    type Output = MobiusMap;
    fn mul(self, rhs: MobiusMap) -> MobiusMap {
        self.compose(&rhs)
    }
}

/// Point at fraction `s` of the geodesic from `p` to `q` (constant speed).
pub fn geodesic_point(p: DiskPoint, q: DiskPoint, s: f64) -> DiskPoint {
    let pz = p.z();
    let qz = (q.z() - pz) / (1.0 - pz.conj() * q.z());
    let r = qz.norm();
    if r == 0.0 {
        return p;
    }
    let d = 2.0 * r.atanh();
    let w = qz / r * (0.5 * s * d).tanh();
    let z = (w + pz) / (1.0 + pz.conj() * w);
    DiskPoint(if z.norm() >= 1.0 {
        z / (z.norm() * (1.0 + f64::EPSILON))
    } else {
        z
    })
}

/// Same as [`geodesic_point`] in half-plane coordinates.
pub fn geodesic_point_half_plane(p: HalfPlanePoint, q: HalfPlanePoint, s: f64) -> HalfPlanePoint {
    // Work around i so the disk picture is well conditioned.
    let shift = p.w().re;
    let scale = p.w().im;
    let to = |w: Complex| (w - shift) / scale;
    let a = HalfPlanePoint(to(p.w()));
    let b = HalfPlanePoint(to(q.w()));
    let m = cayley_inv(geodesic_point(cayley(a), cayley(b), s)).w();
    HalfPlanePoint(m * scale + shift)
}

/// log cosh(x) without overflow.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (0.5 * (1.0 + (-2.0 * a).exp())).ln()
}

/// log cosh of a complex argument, principal branch continued from the real
/// axis (valid while cosh has no zero on the segment, i.e. |Im w| < π/2).
pub fn log_cosh_complex(w: Complex) -> Complex {
    let w = if w.re < 0.0 { -w } else { w };
    w + (0.5 * (1.0 + (-2.0 * w).exp())).ln()
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}
