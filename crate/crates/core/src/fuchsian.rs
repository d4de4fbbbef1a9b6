//! Fuchsian groups given by generators, and orbit balls around a basepoint.
//!
//! Elements are reached by breadth-first search over freely reduced words,
//! multiplying generators on the right. A prefix whose orbit point leaves the
//! ball of radius `R + margin` is not extended. Duplicates (the same element
//! reached by two words, as happens in surface groups) are detected through
//! their orbit points on a spatial hash keyed by hyperboloid coordinates, then
//! confirmed on the normalized matrices.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgeo::{DiskPoint, Kind, MobiusMap, Model, Point};

/// Bumped whenever enumeration output could change; part of cache keys.
pub const ORBIT_FORMAT_VERSION: u32 = 1;

/// Word in the generators. Letter `j > 0` is generator `j − 1`, `−j` its inverse.
/// Displayed with `a, b, c, …` for generators and capitals for inverses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<i8>);

/// Dictionary order with a < A < b < B < …
impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let key = |l: &i8| 2 * (l.unsigned_abs() as u16) + (*l < 0) as u16;
        self.0.iter().map(key).cmp(other.0.iter().map(key))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Word {
    pub fn letters(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    /// Cancels adjacent inverse pairs.
    pub fn freely_reduced(&self) -> Word {
        let mut out: Vec<i8> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    fn validate(&self, generators: usize) -> Result<()> {
        for &l in &self.0 {
            if l == 0 || l.unsigned_abs() as usize > generators {
                return Err(Error::domain(format!(
                    "letter {l} out of range for {generators} generators"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.0 {
            let base = if l > 0 { b'a' } else { b'A' };
            write!(f, "{}", (base + l.unsigned_abs() - 1) as char)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                'a'..='z' => Ok((ch as u8 - b'a' + 1) as i8),
                'A'..='Z' => Ok(-((ch as u8 - b'A' + 1) as i8)),
                _ => Err(Error::domain(format!("bad letter {ch:?} in word"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Regular polygon centred at 0 in the disk whose side pairings are the
/// generators. Used for a sharper pruning margin and for quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularPolygon {
    pub sides: usize,
    /// Distance from the centre to a side midpoint.
    pub inradius: f64,
    /// Distance from the centre to a vertex.
    pub circumradius: f64,
    /// Direction of the first side midpoint.
    pub phase: f64,
}

#[derive(Debug, Clone)]
pub struct GroupPresentation {
    pub label: String,
    model: Model,
    generators: Vec<MobiusMap>,
    relator: Option<Word>,
    polygon: Option<RegularPolygon>,
}

impl GroupPresentation {
    pub fn new(
        label: impl Into<String>,
        generators: Vec<MobiusMap>,
        relator: Option<Word>,
    ) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::domain("a group needs at least one generator"));
        };
        if generators.len() > 26 {
            return Err(Error::domain("at most 26 generators are supported"));
        }
        let model = first.model();
        for g in &generators {
            if g.model() != model {
                return Err(Error::domain("generators live in different models"));
            }
            let c = g.classify();
            if c.identity || c.kind == Kind::Elliptic {
                return Err(Error::domain("generators must be parabolic or hyperbolic"));
            }
        }
        if let Some(r) = &relator {
            r.validate(generators.len())?;
        }
        Ok(GroupPresentation {
            label: label.into(),
            model,
            generators,
            relator,
            polygon: None,
        })
    }

    pub fn with_polygon(mut self, polygon: RegularPolygon) -> Self {
        self.polygon = Some(polygon);
        self
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn generators(&self) -> &[MobiusMap] {
        &self.generators
    }

    pub fn relator(&self) -> Option<&Word> {
        self.relator.as_ref()
    }

    pub fn polygon(&self) -> Option<&RegularPolygon> {
        self.polygon.as_ref()
    }

    /// Map of a single letter.
    pub fn letter(&self, l: i8) -> MobiusMap {
        let g = self.generators[l.unsigned_abs() as usize - 1];
        if l > 0 {
            g
        } else {
            g.inverse()
        }
    }

    pub fn evaluate(&self, w: &Word) -> Result<MobiusMap> {
        w.validate(self.generators.len())?;
        Ok(w.0.iter().fold(MobiusMap::identity(self.model), |acc, &l| {
            acc.compose(&self.letter(l))
        }))
    }

    /// Matrix distance of the relator word from the identity.
    pub fn relator_residual(&self) -> Option<f64> {
        let r = self.relator.as_ref()?;
        let m = self.evaluate(r).ok()?;
        Some(m.matrix_distance(&MobiusMap::identity(self.model)))
    }

    /// Largest d(p, s·p) over the generators.
    pub fn max_generator_displacement(&self, p: &Point) -> Result<f64> {
        let mut best: f64 = 0.0;
        for g in &self.generators {
            best = best.max(g.displacement(p)?);
        }
        Ok(best)
    }

    /// Pruning margin for [`orbit_ball`]: twice the largest generator
    /// displacement, tightened to circumradius + d(0, p) when the group has a
    /// fundamental polygon containing `p`. The polygon bound holds because the
    /// geodesic from p to g·p crosses a chain of edge-adjacent tiles h·O, each
    /// one generator apart, and every such tile has h·p within
    /// circumradius + d(0, p) of the geodesic.
    pub fn prune_margin(&self, p: &Point) -> Result<f64> {
        let generic = 2.0 * self.max_generator_displacement(p)?;
        if let (Some(poly), Model::Disk) = (&self.polygon, self.model) {
            if self.in_dirichlet_domain(p)? {
                let r0 = DiskPoint::origin().dist(&p.to_disk());
                return Ok(generic.min(poly.circumradius + r0 + 1e-9));
            }
        }
        Ok(generic)
    }

    /// Whether `p` is at least as close to 0 as to every s^{±1}(0).
    pub fn in_dirichlet_domain(&self, p: &Point) -> Result<bool> {
        let o = Point::new(self.model, Complex::new(0.0, 0.0))?;
        let d0 = p.dist(&o)?;
        for g in &self.generators {
            for h in [*g, g.inverse()] {
                if p.dist(&h.apply_point(&o)?)? < d0 - 1e-12 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Generator of translation length 2πη along the real diameter of the disk.
pub fn cyclic_hyperbolic(eta: f64) -> Result<GroupPresentation> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::domain("eta must be positive"));
    }
    GroupPresentation::new(
        format!("cyclic-hyperbolic(eta={eta:?})"),
        vec![MobiusMap::disk_translation(0.0, 2.0 * PI * eta)],
        None,
    )
}

/// Half-plane translation z ↦ z + λ.
pub fn cyclic_parabolic(lambda: f64) -> Result<GroupPresentation> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain("lambda must be positive"));
    }
    GroupPresentation::new(
        format!("cyclic-parabolic(lambda={lambda:?})"),
        vec![MobiusMap::half_plane_translation(lambda)],
        None,
    )
}

/// Inradius of the regular octagon with interior angles π/4: cosh r = cot(π/8).
pub fn genus2_inradius() -> f64 {
    (1.0 + 2f64.sqrt()).acosh()
}

/// Circumradius of the same octagon: cosh R = cot²(π/8).
pub fn genus2_circumradius() -> f64 {
    (1.0 + 2f64.sqrt()).powi(2).acosh()
}

/// Genus-2 surface group from the regular octagon with vertex angles π/4.
///
/// Generator j (j = 0..3) translates by twice the inradius along the diameter
/// at angle jπ/4, carrying the side facing angle jπ/4 + π onto the side facing
/// jπ/4. With capitals for inverses these opposite-side pairings satisfy the
/// single relation `aBcDAbCd = 1`.
pub fn genus2_group() -> GroupPresentation {
    let d = 2.0 * genus2_inradius();
    let gens = (0..4)
        .map(|j| MobiusMap::disk_translation(j as f64 * PI / 4.0, d))
        .collect();
    let relator: Word = "aBcDAbCd".parse().expect("static word");
    GroupPresentation::new("genus2-regular-octagon", gens, Some(relator))
        .expect("octagon generators are hyperbolic")
        .with_polygon(RegularPolygon {
            sides: 8,
            inradius: genus2_inradius(),
            circumradius: genus2_circumradius(),
            phase: 0.0,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitElement {
    pub word: Word,
    #[serde(rename = "matrix")]
    pub map: MobiusMap,
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitBall {
    pub version: u32,
    pub label: String,
    pub basepoint: Point,
    pub radius: f64,
    pub elements: Vec<OrbitElement>,
    /// `shells[N]` counts elements with displacement in (N − ½, N + ½].
    pub shells: Vec<usize>,
    pub complete: bool,
}

impl OrbitBall {
    /// Number of elements with displacement ≤ r.
    pub fn count_within(&self, r: f64) -> usize {
        self.elements.partition_point(|e| e.displacement <= r)
    }
}

/// Area-packing bound on #{g : d(p, g·p) ≤ R} (identity included) when the
/// injectivity radius at p is at least δ.
pub fn packing_bound(r: f64, delta: f64) -> f64 {
    ((0.5 * (r + delta)).sinh() / (0.5 * delta).sinh()).powi(2)
}

#[derive(Debug, Clone, Copy)]
pub struct OrbitCaps {
    pub max_elements: usize,
    pub max_depth: usize,
    /// Overrides [`GroupPresentation::prune_margin`].
    pub margin: Option<f64>,
}

impl Default for OrbitCaps {
    fn default() -> Self {
        OrbitCaps {
            max_elements: 2_000_000,
            max_depth: 64,
            margin: None,
        }
    }
}

struct Node {
    map: MobiusMap,
    word: Vec<i8>,
    disp: f64,
}

/// Hyperboloid (x, y) coordinates; Euclidean distance there dominates
/// hyperbolic distance, so equal orbit points land in neighbouring cells.
fn hyperboloid_xy(p: &Point) -> (f64, f64) {
    let z = p.to_disk().z();
    let r = z.norm();
    let gap = (1.0 - r) * (1.0 + r);
    (2.0 * z.re / gap, 2.0 * z.im / gap)
}

const CELL: f64 = 0.25;

fn cell_of(xy: (f64, f64)) -> (i64, i64) {
    ((xy.0 / CELL).floor() as i64, (xy.1 / CELL).floor() as i64)
}

/// All g ≠ 1 with d(p, g·p) ≤ R, with default caps and margin.
pub fn orbit_ball(g: &GroupPresentation, p: &Point, r: f64) -> Result<OrbitBall> {
    orbit_ball_with(g, p, r, &OrbitCaps::default())
}

pub fn orbit_ball_with(
    g: &GroupPresentation,
    p: &Point,
    r: f64,
    caps: &OrbitCaps,
) -> Result<OrbitBall> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain("orbit radius must be positive"));
    }
    let p = p.in_model(g.model());
    if caps.margin.is_none() && g.polygon.is_some() && !g.in_dirichlet_domain(&p)? {
        return orbit_ball_via_domain(g, &p, r, caps);
    }
    let margin = match caps.margin {
        Some(m) => m,
        None => g.prune_margin(&p)?,
    };
    let limit = r + margin;
    let id = MobiusMap::identity(g.model());

    let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut seen: Vec<(MobiusMap, (f64, f64))> = Vec::new();
    let xy0 = hyperboloid_xy(&p);
    cells.entry(cell_of(xy0)).or_default().push(0);
    seen.push((id, xy0));

    let letters: Vec<i8> = (1..=g.generators.len() as i8)
        .flat_map(|j| [j, -j])
        .collect();
    let letter_maps: Vec<MobiusMap> = letters.iter().map(|&l| g.letter(l)).collect();

    let mut elements: Vec<OrbitElement> = Vec::new();
    let mut frontier = vec![Node {
        map: id,
        word: Vec::new(),
        disp: 0.0,
    }];
    let mut complete = true;
    let mut depth = 0;

    'levels: while !frontier.is_empty() {
        if depth >= caps.max_depth {
            complete = false;
            break;
        }
        depth += 1;
        let candidates: Vec<Result<(Node, (f64, f64))>> = frontier
            .par_iter()
            .flat_map_iter(|node| {
                let last = node.word.last().copied();
                letters
                    .iter()
                    .zip(&letter_maps)
                    .filter(move |(&l, _)| Some(-l) != last)
                    .map(|(&l, s)| {
                        let map = node.map.compose(s);
                        let q = map.apply_point(&p)?;
                        let disp = map.displacement(&p)?;
                        let mut word = node.word.clone();
                        word.push(l);
                        Ok((Node { map, word, disp }, hyperboloid_xy(&q)))
                    })
            })
            .collect();

        let mut next = Vec::new();
        for c in candidates {
            let (node, xy) = c?;
            if node.disp > limit {
                continue;
            }
            let key = cell_of(xy);
            let mut dup = false;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = cells.get(&(key.0 + dx, key.1 + dy)) {
                        for &i in ids {
                            let (m, sxy) = &seen[i];
                            let close = (sxy.0 - xy.0).hypot(sxy.1 - xy.1)
                                <= 1e-6 * (1.0 + xy.0.hypot(xy.1));
                            if close && m.matrix_distance(&node.map) <= 1e-8 {
                                dup = true;
                                break 'search;
                            }
                        }
                    }
                }
            }
            if dup {
                continue;
            }
            cells.entry(key).or_default().push(seen.len());
            seen.push((node.map, xy));
            if node.disp <= r {
                elements.push(OrbitElement {
                    word: Word(node.word.clone()),
                    map: node.map,
                    displacement: node.disp,
                });
            }
            next.push(node);
            if seen.len() > caps.max_elements {
                complete = false;
                break 'levels;
            }
        }
        frontier = next;
    }

    elements.sort_by(|a, b| {
        a.displacement
            .total_cmp(&b.displacement)
            .then_with(|| a.word.cmp(&b.word))
    });
    let nshell = (r + 0.5).ceil() as usize + 1;
    let mut shells = vec![0usize; nshell];
    for e in &elements {
        let k = ((e.displacement - 0.5).ceil().max(0.0)) as usize;
        shells[k.min(nshell - 1)] += 1;
    }
    let ball = OrbitBall {
        version: ORBIT_FORMAT_VERSION,
        label: g.label.clone(),
        basepoint: p,
        radius: r,
        elements,
        shells,
        complete,
    };
    if complete {
        Ok(ball)
    } else {
        Err(Error::Budget(Box::new(ball)))
    }
}

/// A word h with h·p in the Dirichlet domain at 0, found by repeatedly
/// applying the generator that brings p closest to 0.
pub fn reduce_to_domain(g: &GroupPresentation, p: &Point) -> Result<(Word, Point)> {
    let o = Point::new(g.model, Complex::new(0.0, 0.0))?;
    let letters: Vec<i8> = (1..=g.generators.len() as i8)
        .flat_map(|j| [j, -j])
        .collect();
    let mut q = *p;
    let mut word: Vec<i8> = Vec::new();
    for _ in 0..10_000 {
        let d0 = q.dist(&o)?;
        let mut best = (d0 - 1e-12, None);
        for &l in &letters {
            let moved = g.letter(l).apply_point(&q)?;
            let d = moved.dist(&o)?;
            if d < best.0 {
                best = (d, Some((l, moved)));
            }
        }
        match best.1 {
            Some((l, moved)) => {
                // h ↦ s·h
                word.insert(0, l);
                q = moved;
            }
            None => return Ok((Word(word).freely_reduced(), q)),
        }
    }
    Err(Error::numeric(
        "reduction to the fundamental domain did not terminate",
        None,
    ))
}

/// Orbit ball at p enumerated at h·p inside the domain, where the polygon
/// margin applies, and conjugated back: g = h⁻¹ g′ h moves p as far as g′
/// moves h·p.
fn orbit_ball_via_domain(
    g: &GroupPresentation,
    p: &Point,
    r: f64,
    caps: &OrbitCaps,
) -> Result<OrbitBall> {
    let (hw, q) = reduce_to_domain(g, p)?;
    let h = g.evaluate(&hw)?;
    let hinv = h.inverse();
    let conj = |b: OrbitBall| -> OrbitBall {
        let mut elements = b
            .elements
            .into_iter()
            .map(|e| {
                let mut w = hw.inverse().0;
                w.extend(e.word.0);
                w.extend(hw.0.iter().copied());
                let map = hinv.compose(&e.map).compose(&h);
                // the displacement at h·p is the better conditioned one
                OrbitElement {
                    word: Word(w).freely_reduced(),
                    displacement: e.displacement,
                    map,
                }
            })
            .collect::<Vec<_>>();
        elements.sort_by(|a, b| {
            a.displacement
                .total_cmp(&b.displacement)
                .then_with(|| a.word.cmp(&b.word))
        });
        OrbitBall {
            basepoint: *p,
            elements,
            ..b
        }
    };
    match orbit_ball_with(g, &q, r, caps) {
        Ok(b) => Ok(conj(b)),
        Err(Error::Budget(b)) => Err(Error::Budget(Box::new(conj(*b)))),
        Err(e) => Err(e),
    }
}

/// Splits a word into its primitive root and multiplicity: for the freely
/// reduced word u·v·u⁻¹ with v cyclically reduced and v = rᵐ for the shortest
/// r, returns (u·r·u⁻¹, m).
pub fn primitive_decomposition(w: &Word) -> Result<(Word, u32)> {
    if w.0.contains(&0) {
        return Err(Error::domain("letter 0 is not a generator"));
    }
    let red = w.freely_reduced();
    if red.is_empty() {
        return Err(Error::domain("word reduces to the identity"));
    }
    let l = &red.0;
    let mut k = 0;
    while k < l.len() / 2 && l[k] == -l[l.len() - 1 - k] {
        k += 1;
    }
    let core = &l[k..l.len() - k];
    let n = core.len();
    let period = (1..=n)
        .find(|&p| n.is_multiple_of(p) && (p..n).all(|i| core[i] == core[i - p]))
        .unwrap_or(n);
    let mut root = l[..k].to_vec();
    root.extend_from_slice(&core[..period]);
    root.extend(l[..k].iter().rev().map(|x| -x));
    Ok((Word(root), (n / period) as u32))
}

pub fn primitive_decomposition_of(e: &OrbitElement) -> Result<(Word, u32)> {
    primitive_decomposition(&e.word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn disk(z: Complex) -> Point {
        Point::Disk(DiskPoint::new(z).unwrap())
    }

    #[test]
    fn word_round_trip() {
        let w: Word = "aBcD".parse().unwrap();
        assert_eq!(w.0, vec![1, -2, 3, -4]);
        assert_eq!(w.to_string(), "aBcD");
        assert_eq!(w.inverse().to_string(), "dCbA");
        assert!("a1".parse::<Word>().is_err());
    }

    #[test]
    fn genus2_relator() {
        let g = genus2_group();
        assert!(g.relator_residual().unwrap() < 1e-8);
        let l0 = g.generators()[0].translation_length().unwrap();
        for s in g.generators() {
            assert_eq!(s.classify().kind, Kind::Hyperbolic);
            assert_relative_eq!(s.translation_length().unwrap(), l0, epsilon = 1e-12);
        }
        // the naive commutator product is not the relation for this marking
        let comm = g.evaluate(&"abABcdCD".parse().unwrap()).unwrap();
        assert!(comm.matrix_distance(&MobiusMap::identity(Model::Disk)) > 1e-3);
    }

    #[test]
    fn genus2_octagon_geometry() {
        let g = genus2_group();
        let o = disk(Complex::new(0.0, 0.0));
        // each generator moves 0 by twice the inradius
        for s in g.generators() {
            assert_relative_eq!(
                s.displacement(&o).unwrap(),
                2.0 * genus2_inradius(),
                epsilon = 1e-12
            );
        }
        // vertex at angle π/8 and circumradius; its cycle under the pairings has 8 vertices
        let v = Complex::from_polar((0.5 * genus2_circumradius()).tanh(), PI / 8.0);
        let s = g.letter(1);
        let image = s.apply(Complex::from_polar(
            (0.5 * genus2_circumradius()).tanh(),
            PI - PI / 8.0,
        ));
        let on_octagon = (0..8).any(|j| {
            (image - Complex::from_polar(v.norm(), PI / 8.0 + j as f64 * PI / 4.0)).norm() < 1e-10
        });
        assert!(on_octagon);
    }

    #[test]
    fn cyclic_orbit_on_axis() {
        let g = cyclic_hyperbolic(1.0).unwrap();
        let o = disk(Complex::new(0.0, 0.0));
        let ball = orbit_ball(&g, &o, 2.0 * PI * 3.0 + 0.1).unwrap();
        assert_eq!(ball.elements.len(), 6);
        for (i, e) in ball.elements.iter().enumerate() {
            let m = (i / 2 + 1) as f64;
            assert_relative_eq!(e.displacement, 2.0 * PI * m, epsilon = 1e-12);
        }
        let words: Vec<String> = ball.elements.iter().map(|e| e.word.to_string()).collect();
        assert_eq!(words, ["a", "A", "aa", "AA", "aaa", "AAA"]);
    }

    #[test]
    fn cyclic_orbit_off_axis() {
        let eta = 0.7;
        let g = cyclic_hyperbolic(eta).unwrap();
        let u: f64 = 0.8;
        let p = disk(Complex::new(0.0, (0.5 * u).tanh()));
        let ball = orbit_ball(&g, &p, 20.0).unwrap();
        for e in &ball.elements {
            let m = e.word.len() as f64;
            let x = m * PI * eta;
            let want = (x.cosh().powi(2) * u.cosh().powi(2) - u.sinh().powi(2))
                .sqrt()
                .acosh()
                * 2.0;
            assert_relative_eq!(e.displacement, want, epsilon = 1e-9);
        }
        let count = (1..)
            .take_while(|&m| {
                let x = m as f64 * PI * eta;
                2.0 * (x.cosh().powi(2) * u.cosh().powi(2) - u.sinh().powi(2))
                    .sqrt()
                    .acosh()
                    <= 20.0
            })
            .count();
        assert_eq!(ball.elements.len(), 2 * count);
    }

    #[test]
    fn parabolic_orbit() {
        let g = cyclic_parabolic(2.0 * PI).unwrap();
        assert_eq!(g.generators()[0].entries()[1], Complex::new(2.0 * PI, 0.0));
        let p =
            Point::HalfPlane(crate::hypgeo::HalfPlanePoint::new(Complex::new(0.0, 1.0)).unwrap());
        let q = g.generators()[0].apply_point(&p).unwrap();
        assert_relative_eq!(q.coord().re, 2.0 * PI);
        let caps = OrbitCaps {
            margin: Some(0.5),
            ..OrbitCaps::default()
        };
        let ball = orbit_ball_with(&g, &p, 8.0, &caps).unwrap();
        assert_eq!(
            ball.elements.len(),
            2 * ((4.0f64).sinh() / PI).floor() as usize
        );
        for e in &ball.elements {
            // sinh(d/2) = |m|λ / 2 at height 1
            let m = e.word.len() as f64;
            assert_relative_eq!((0.5 * e.displacement).sinh(), m * PI, epsilon = 1e-10);
        }
    }

    #[test]
    fn primitive_roots() {
        let (r, m) = primitive_decomposition(&"aaa".parse().unwrap()).unwrap();
        assert_eq!((r.to_string(), m), ("a".to_string(), 3));
        let (r, m) = primitive_decomposition(&"aaaaa".parse().unwrap()).unwrap();
        assert_eq!((r.to_string(), m), ("a".to_string(), 5));
        let (r, m) = primitive_decomposition(&"abab".parse().unwrap()).unwrap();
        assert_eq!((r.to_string(), m), ("ab".to_string(), 2));
        let (r, m) = primitive_decomposition(&"cbbC".parse().unwrap()).unwrap();
        assert_eq!((r.to_string(), m), ("cbC".to_string(), 2));
        let (r, m) = primitive_decomposition(&"abc".parse().unwrap()).unwrap();
        assert_eq!((r.to_string(), m), ("abc".to_string(), 1));
        assert!(primitive_decomposition(&"aA".parse().unwrap()).is_err());
        assert!(primitive_decomposition(&Word(vec![1, 0])).is_err());

        let g = genus2_group();
        for w in ["abab", "cbbC", "aBaB", "abcabcabc"] {
            let w: Word = w.parse().unwrap();
            let (root, m) = primitive_decomposition(&w).unwrap();
            let lw = g.evaluate(&w).unwrap().translation_length().unwrap();
            let lr = g.evaluate(&root).unwrap().translation_length().unwrap();
            assert_relative_eq!(lw, m as f64 * lr, epsilon = 1e-8);
        }
    }

    #[test]
    fn genus2_small_ball_nonempty_and_words_evaluate() {
        let g = genus2_group();
        let o = disk(Complex::new(0.0, 0.0));
        let ball = orbit_ball(&g, &o, 3.5).unwrap();
        assert_eq!(ball.elements.len(), 8);
        let ball = orbit_ball(&g, &o, 6.0).unwrap();
        for e in &ball.elements {
            assert!(g.evaluate(&e.word).unwrap().matrix_distance(&e.map) < 1e-9);
            assert!(e.displacement <= 6.0);
        }
        for i in 0..ball.elements.len() {
            for j in 0..i {
                assert!(ball.elements[i].map.matrix_distance(&ball.elements[j].map) > 1e-8);
            }
        }
    }

    #[test]
    fn budget_returns_partial() {
        let g = genus2_group();
        let o = disk(Complex::new(0.0, 0.0));
        let caps = OrbitCaps {
            max_elements: 50,
            ..OrbitCaps::default()
        };
        match orbit_ball_with(&g, &o, 8.0, &caps) {
            Err(Error::Budget(b)) => {
                assert!(!b.complete);
                assert!(!b.elements.is_empty());
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let g = genus2_group();
        let p = disk(Complex::new(0.1, -0.2));
        let ball = orbit_ball(&g, &p, 5.0).unwrap();
        let s = serde_json::to_string(&ball).unwrap();
        let back: OrbitBall = serde_json::from_str(&s).unwrap();
        assert_eq!(back.elements.len(), ball.elements.len());
        for (a, b) in back.elements.iter().zip(&ball.elements) {
            assert_eq!(a.word, b.word);
            assert_eq!(a.displacement, b.displacement);
            assert!(a.map.matrix_distance(&b.map) == 0.0);
        }
        assert!(s.contains("\"basepoint\"") && s.contains("\"shells\""));
    }
}
