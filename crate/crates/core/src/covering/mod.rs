//! Crossing sequences: the lifts of a simple closed curve met by the segment
//! from the basepoint to its translate, computed in a reference Fuchsian structure.
//!
//! Conventions. The group acts on the right of the universal cover:
//! `x·A = ρ₀(A)⁻¹x`. The base lift of a curve is the axis of `ρ₀(core)`,
//! directed from the repelling to the attracting fixed point, and the lift
//! `N₀·u` is `ρ₀(u)⁻¹` applied to it. A crossing has sign `+1` when the
//! orientation of (segment direction, lift direction) agrees with `(e₁, e₂)`
//! at the origin.

mod frame;
pub mod oracle;
mod reference;
mod tube;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use frame::{crossing_sine, distance3, form3, origin3, point_on_line, FrameLine, V3};
pub use reference::{
    reference_structure, regular_circumradius, regular_generators, regular_inradius, ReferenceParams,
    ReferenceStructure,
};
use tube::{search, Piece};

use crate::minkowski::{self, BoundaryPoint, GeometryError, IsometryClass};
use crate::representation::RepresentationError;
use crate::surface_group::{Letter, Word, WordError};
use crate::tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoveringError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
    #[error("invalid reference structure: {0}")]
    InvalidReference(String),
    #[error("curve core `{0}` is not cyclically reduced")]
    NotCyclicallyReduced(Word),
    #[error("curve weight must be positive and finite, got {0}")]
    BadWeight(f64),
    #[error("reference image of `{0}` is not loxodromic")]
    NotLoxodromic(Word),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
}

/// A directed closed curve, given by a cyclically reduced word, with a weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedCurve {
    core: Word,
    weight: f64,
}

impl OrientedCurve {
    pub fn new(core: Word, weight: f64) -> Result<Self, CoveringError> {
        if core.is_empty() || !core.is_cyclically_reduced() {
            return Err(CoveringError::NotCyclicallyReduced(core));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(CoveringError::BadWeight(weight));
        }
        Ok(OrientedCurve { core, weight })
    }

    pub fn unit(core: Word) -> Result<Self, CoveringError> {
        OrientedCurve::new(core, 1.0)
    }

    pub fn parse(text: &str, genus: usize) -> Result<Self, CoveringError> {
        OrientedCurve::unit(Word::parse_for_genus(text, genus)?)
    }

    pub fn core(&self) -> &Word {
        &self.core
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn with_weight(&self, weight: f64) -> Result<Self, CoveringError> {
        OrientedCurve::new(self.core.clone(), weight)
    }

    /// The same curve with the opposite direction.
    pub fn reversed(&self) -> Self {
        OrientedCurve { core: self.core.invert(), weight: self.weight }
    }
}

/// One crossed lift `N₀·conjugator`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub conjugator: Word,
    pub sign: i8,
    /// Fraction of the segment length at which the crossing occurs.
    pub position: f64,
    /// Orbit point near the crossing: the lift is `ρ₀(conjugator·node)⁻¹` applied
    /// to the axis as seen from `node`, and passes near the origin there.
    #[serde(default, skip_serializing_if = "Word::is_empty")]
    pub node: Word,
}

/// Evidence that the search saw every relevant orbit point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchCertificate {
    pub visited: usize,
    pub radius: f64,
    /// Distance to the segment of the closest orbit point the search rejected.
    pub min_rejected_distance: f64,
}

impl SearchCertificate {
    /// True when every rejected orbit point lies beyond the covering radius,
    /// so every fundamental tile meeting the segment was examined.
    pub fn is_complete(&self, cover_radius: f64) -> bool {
        self.min_rejected_distance > cover_radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingSequence {
    pub curve: OrientedCurve,
    pub element: Word,
    pub crossings: Vec<Crossing>,
    pub certificate: SearchCertificate,
}

/// Crossings of one segment with several curves, merged in segment order.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentCrossings {
    /// `(index into the curve list, crossing)`.
    pub crossings: Vec<(usize, Crossing)>,
    pub certificate: SearchCertificate,
    /// Hyperbolic length of the segment.
    pub length: f64,
}

#[derive(Debug, Clone)]
struct LocalLift {
    plus: V3,
    normal: V3,
    word: Word,
}

/// A curve together with the lifts passing near the origin, ready for crossing queries.
#[derive(Debug, Clone)]
pub struct PreparedCurve {
    curve: OrientedCurve,
    repelling: V3,
    attracting: V3,
    length: f64,
    lifts: Vec<LocalLift>,
}

impl PreparedCurve {
    pub fn curve(&self) -> &OrientedCurve {
        &self.curve
    }

    /// Translation length of the core in the reference structure.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of distinct lifts within the local radius of the origin.
    pub fn local_lift_count(&self) -> usize {
        self.lifts.len()
    }

    pub fn axis(&self) -> (BoundaryPoint, BoundaryPoint) {
        (to_boundary(&self.repelling), to_boundary(&self.attracting))
    }

    /// Words `u` of the lifts `N₀·u` within the local radius of the origin.
    pub fn local_lift_words(&self) -> Vec<Word> {
        self.lifts.iter().map(|l| l.word.clone()).collect()
    }
}

fn to_v3(v: &DVector<f64>) -> V3 {
    V3::new(v[0], v[1], v[2])
}

fn to_boundary(v: &V3) -> BoundaryPoint {
    BoundaryPoint::normalize_unchecked(DVector::from_column_slice(v.as_slice()))
}

/// Piece of the line from `o` to `target`, or nothing when they coincide.
fn connector(target: &V3) -> Option<Piece> {
    let o = origin3();
    if distance3(&o, target) < 1e-9 {
        return None;
    }
    let (line, lo, hi) = FrameLine::through(&o, target);
    Some(Piece { line, lo, hi })
}

/// Tolerance for identifying the same crossing found from different orbit points.
const SAME_CROSSING: f64 = 1e-7;

impl ReferenceStructure {
    fn letters(&self) -> Vec<Letter> {
        Letter::all(self.genus())
    }

    /// Radius around the origin within which lifts are tabulated.
    fn lift_radius(&self) -> f64 {
        self.cover_radius() + 0.25
    }

    /// Computes the axis and the lifts near the origin.
    pub fn prepare(&self, curve: &OrientedCurve) -> Result<PreparedCurve, CoveringError> {
        if curve.core().rank_used() > self.presentation().rank() {
            return Err(WordError::OutOfRange { token: curve.core().to_string(), genus: self.genus() }.into());
        }
        let g = self.evaluate(curve.core());
        if minkowski::classify(&g) != IsometryClass::Loxodromic {
            return Err(CoveringError::NotLoxodromic(curve.core().clone()));
        }
        let (p, q) = minkowski::fixed_points(&g)?;
        let length = minkowski::translation_length(&g)?;
        let (rep, att) = (to_v3(p.vector()), to_v3(q.vector()));
        let axis = FrameLine::new(rep, att);
        let mut pieces = vec![Piece { line: axis, lo: -0.5 * length, hi: 0.5 * length }];
        let (foot, _) = point_on_line(&axis.minus, &axis.plus, 0.0);
        pieces.extend(connector(&foot));
        let radius = self.lift_radius();
        let tube = search(self.steps(), &self.letters(), &pieces, radius + self.cover_radius() + self.search_margin());
        let mut lifts = Vec::new();
        for (i, node) in tube.nodes.iter().enumerate() {
            let f = &node.frames[0];
            let (s, d) = f.fermi();
            if d.abs() <= radius && s >= -0.5 * length && s < 0.5 * length {
                let word = tube.word(i);
                let line = self.conjugate_axis(curve.core(), &word).unwrap_or(*f);
                lifts.push(LocalLift { plus: line.plus, normal: line.normal(), word });
            }
        }
        Ok(PreparedCurve { curve: curve.clone(), repelling: rep, attracting: att, length, lifts })
    }

    /// The lift `N₀·z` of the axis of `core`, as the axis of `ρ₀(z⁻¹·core·z)`.
    ///
    /// Tube frames accumulate error along the way, which matters when distinct
    /// lifts of a long curve fellow-travel; the fixed points of the conjugate do not.
    fn conjugate_axis(&self, core: &Word, z: &Word) -> Result<FrameLine, CoveringError> {
        let w = z.invert().concat(core).concat(z);
        let (p, q) = minkowski::fixed_points(&self.evaluate(&w))?;
        Ok(FrameLine::new(to_v3(p.vector()), to_v3(q.vector())))
    }

    /// Crossings of the segment `[from, to]` (hyperboloid points) with all lifts of the curves.
    pub fn path_crossings(
        &self,
        from: &DVector<f64>,
        to: &DVector<f64>,
        curves: &[&PreparedCurve],
    ) -> Result<SegmentCrossings, CoveringError> {
        self.crossings_between(&to_v3(from), &to_v3(to), curves)
    }

    /// Crossings of the segment from the basepoint `x̃₀` to `x̃₀·A = ρ₀(A)⁻¹x̃₀`.
    pub fn word_crossings(&self, a: &Word, curves: &[&PreparedCurve]) -> Result<SegmentCrossings, CoveringError> {
        let b = self.basepoint3();
        let target = self.word_matrix(&a.invert()) * b;
        self.crossings_between(&b, &target, curves)
    }

    fn crossings_between(&self, p: &V3, q: &V3, curves: &[&PreparedCurve]) -> Result<SegmentCrossings, CoveringError> {
        let radius = self.cover_radius() + self.search_margin();
        let length = distance3(p, q);
        if length < 1e-12 {
            let certificate = SearchCertificate { visited: 0, radius, min_rejected_distance: f64::INFINITY };
            return Ok(SegmentCrossings { crossings: Vec::new(), certificate, length: 0.0 });
        }
        let (line, sp, sq) = FrameLine::through(p, q);
        let mut pieces = vec![Piece { line, lo: sp, hi: sq }];
        pieces.extend(connector(p));
        let tube = search(self.steps(), &self.letters(), &pieces, radius);

        let mut raw: Vec<(f64, usize, i8, Word, Word)> = Vec::new();
        for (i, node) in tube.nodes.iter().enumerate() {
            let f = &node.frames[0];
            let mut node_word: Option<Word> = None;
            for (ci, curve) in curves.iter().enumerate() {
                for lift in &curve.lifts {
                    let a = form3(&f.minus, &lift.normal);
                    let b = form3(&f.plus, &lift.normal);
                    if a.abs() < 1e-10 && b.abs() < 1e-10 {
                        return Err(CoveringError::Degenerate("segment runs along a lift".into()));
                    }
                    if a * b >= 0.0 {
                        continue;
                    }
                    let s_loc = 0.5 * (-a / b).ln();
                    let s = s_loc + f.offset();
                    if s < sp - tolerance::SEP || s > sq + tolerance::SEP {
                        continue;
                    }
                    if (s - sp).abs() <= tolerance::SEP || (s - sq).abs() <= tolerance::SEP {
                        return Err(CoveringError::Degenerate("segment endpoint lies on a lift".into()));
                    }
                    let (x, t) = point_on_line(&f.minus, &f.plus, s_loc);
                    let sine = crossing_sine(&t, &lift.plus, &x);
                    if sine.abs() < tolerance::SEP {
                        return Err(CoveringError::Degenerate("segment tangent to a lift".into()));
                    }
                    let v = node_word.get_or_insert_with(|| tube.word(i));
                    let sign = if sine > 0.0 { 1 } else { -1 };
                    raw.push((s, ci, sign, lift.word.concat(&v.invert()), v.clone()));
                }
            }
        }
        raw.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

        // lifts of different curves may meet on the segment, so duplicates of one
        // lift need not be adjacent after sorting
        let mut crossings: Vec<(usize, Crossing)> = Vec::new();
        let mut found_at: Vec<f64> = Vec::new();
        for (s, ci, sign, word, node) in raw {
            let duplicate = (0..crossings.len())
                .rev()
                .take_while(|&k| s - found_at[k] < SAME_CROSSING)
                .find(|&k| crossings[k].0 == ci);
            if let Some(k) = duplicate {
                let prev = &mut crossings[k].1;
                if prev.sign != sign {
                    return Err(CoveringError::Degenerate("inconsistent crossing signs".into()));
                }
                if word < prev.conjugator {
                    prev.conjugator = word;
                    prev.node = node;
                }
                continue;
            }
            found_at.push(s);
            crossings.push((ci, Crossing { conjugator: word, sign, position: (s - sp) / (sq - sp), node }));
        }
        let certificate =
            SearchCertificate { visited: tube.nodes.len(), radius, min_rejected_distance: tube.min_rejected };
        Ok(SegmentCrossings { crossings, certificate, length })
    }
}

/// `(repelling, attracting)` endpoints of the axis of `ρ₀(w)`.
pub fn axis(w: &Word, reference: &ReferenceStructure) -> Result<(BoundaryPoint, BoundaryPoint), CoveringError> {
    let g = reference.evaluate(w);
    Ok(minkowski::fixed_points(&g)?)
}

/// The ordered signed lifts of `curve` crossed by `[x̃₀, x̃₀·A]`.
pub fn crossing_sequence(
    a: &Word,
    curve: &OrientedCurve,
    reference: &ReferenceStructure,
) -> Result<CrossingSequence, CoveringError> {
    let prepared = reference.prepare(curve)?;
    crossing_sequence_prepared(a, &prepared, reference)
}

pub fn crossing_sequence_prepared(
    a: &Word,
    curve: &PreparedCurve,
    reference: &ReferenceStructure,
) -> Result<CrossingSequence, CoveringError> {
    let seg = reference.word_crossings(a, &[curve])?;
    Ok(CrossingSequence {
        curve: curve.curve.clone(),
        element: a.clone(),
        crossings: seg.crossings.into_iter().map(|(_, c)| c).collect(),
        certificate: seg.certificate,
    })
}

/// Geometric intersection number of the geodesic representatives.
pub fn intersection_number(
    c1: &OrientedCurve,
    c2: &OrientedCurve,
    reference: &ReferenceStructure,
) -> Result<usize, CoveringError> {
    let p1 = reference.prepare(c1)?;
    let p2 = reference.prepare(c2)?;
    Ok(intersection_number_prepared(&p1, &p2, reference))
}

/// How the lifts of a second curve meet the base axis of a first one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisRelation {
    /// Transverse crossings over one period of the first curve.
    pub crossings: usize,
    /// Some lift of the second curve coincides with the base axis.
    pub coincident: bool,
    /// Lifts sharing an endpoint with the base axis to within rounding, so that
    /// whether they cross cannot be decided in double precision. Long curves
    /// whose lifts fellow-travel over most of their length end up here.
    pub unresolved: usize,
}

pub fn intersection_number_prepared(p1: &PreparedCurve, p2: &PreparedCurve, reference: &ReferenceStructure) -> usize {
    let rel = axis_relation(p1, p2, reference);
    if rel.coincident {
        rel.crossings / 2
    } else {
        rel.crossings
    }
}

pub fn axis_relation(p1: &PreparedCurve, p2: &PreparedCurve, reference: &ReferenceStructure) -> AxisRelation {
    let axis = FrameLine::new(p1.repelling, p1.attracting);
    let half = 0.5 * p1.length;
    let mut pieces = vec![Piece { line: axis, lo: -half, hi: half }];
    let (foot, _) = point_on_line(&axis.minus, &axis.plus, 0.0);
    pieces.extend(connector(&foot));
    let radius = reference.cover_radius() + reference.search_margin();
    let tube = search(reference.steps(), &reference.letters(), &pieces, radius);
    let mut hits: Vec<f64> = Vec::new();
    let mut coincident = false;
    let mut unresolved: Vec<f64> = Vec::new();
    for (i, node) in tube.nodes.iter().enumerate() {
        let f = reference.conjugate_axis(p1.curve.core(), &tube.word(i)).unwrap_or(node.frames[0]);
        let f = &f;
        let offset = node.frames[0].offset();
        for lift in &p2.lifts {
            let a = form3(&f.minus, &lift.normal);
            let b = form3(&f.plus, &lift.normal);
            if a.abs() < 1e-11 && b.abs() < 1e-11 {
                coincident = true;
                continue;
            }
            if a * b >= 0.0 {
                continue;
            }
            let s = 0.5 * (-a / b).ln() + offset;
            if s >= -half && s < half {
                if a.abs().min(b.abs()) < 1e-12 * a.abs().max(b.abs()) {
                    unresolved.push(s);
                    continue;
                }
                hits.push(s);
            }
        }
    }
    hits.sort_by(f64::total_cmp);
    hits.dedup_by(|x, y| (*x - *y).abs() < SAME_CROSSING);
    unresolved.sort_by(f64::total_cmp);
    unresolved.dedup_by(|x, y| (*x - *y).abs() < SAME_CROSSING);
    AxisRelation { crossings: hits.len(), coincident, unresolved: unresolved.len() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_ref() -> ReferenceStructure {
        reference_structure(2, &ReferenceParams::Regular).unwrap()
    }

    fn curve(s: &str) -> OrientedCurve {
        OrientedCurve::parse(s, 2).unwrap()
    }

    fn word(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn empty_word_has_no_crossings() {
        let r = default_ref();
        let seq = crossing_sequence(&Word::empty(), &curve("a1"), &r).unwrap();
        assert!(seq.crossings.is_empty());
    }

    #[test]
    fn generator_crossings_against_a1() {
        let r = default_ref();
        let c = curve("a1");
        assert!(crossing_sequence(&word("a2"), &c, &r).unwrap().crossings.is_empty());
        assert!(crossing_sequence(&word("b2"), &c, &r).unwrap().crossings.is_empty());
        assert!(crossing_sequence(&word("a1"), &c, &r).unwrap().crossings.is_empty());
        let seq = crossing_sequence(&word("b1"), &c, &r).unwrap();
        assert_eq!(seq.crossings.len(), 1);
        assert!(seq.crossings[0].conjugator.is_empty());
        assert!(seq.certificate.is_complete(r.cover_radius()));
    }

    #[test]
    fn segment_through_a_lift_intersection() {
        // passes where the base lifts of a1 and b1 meet
        let r = default_ref();
        let (a1, b1) = (r.prepare(&curve("a1")).unwrap(), r.prepare(&curve("b1")).unwrap());
        let seg = r.word_crossings(&word("A2 B2 a1 b1"), &[&a1, &b1]).unwrap();
        let curves: Vec<usize> = seg.crossings.iter().map(|(ci, _)| *ci).collect();
        assert_eq!(curves.len(), 2, "{:?}", seg.crossings);
        assert!(curves.contains(&0) && curves.contains(&1));
        assert!(seg.crossings.iter().all(|(_, c)| (c.position - 0.25).abs() < 1e-9));
    }

    #[test]
    fn intersection_numbers() {
        let r = default_ref();
        assert_eq!(intersection_number(&curve("a1"), &curve("a1"), &r).unwrap(), 0);
        assert_eq!(intersection_number(&curve("a1"), &curve("b1"), &r).unwrap(), 1);
        assert_eq!(intersection_number(&curve("b1"), &curve("a1"), &r).unwrap(), 1);
        assert_eq!(intersection_number(&curve("a1"), &curve("a2"), &r).unwrap(), 0);
    }

    #[test]
    fn axis_inversion_and_equivariance() {
        let r = default_ref();
        let w = word("a1 b2");
        let (p, q) = axis(&w, &r).unwrap();
        let (pi, qi) = axis(&w.invert(), &r).unwrap();
        assert!(p.angle_to(&qi) < 1e-10 && q.angle_to(&pi) < 1e-10);
        let u = word("b1 a2");
        let (pu, qu) = axis(&u.concat(&w).concat(&u.invert()), &r).unwrap();
        let g = r.evaluate(&u);
        assert!(pu.angle_to(&g.act_boundary(&p)) < 1e-9);
        assert!(qu.angle_to(&g.act_boundary(&q)) < 1e-9);
    }

    #[test]
    fn bad_curves_rejected() {
        assert!(matches!(OrientedCurve::unit(word("a1 b1 A1")), Err(CoveringError::NotCyclicallyReduced(_))));
        assert!(matches!(OrientedCurve::new(word("a1"), -1.0), Err(CoveringError::BadWeight(_))));
        assert!(OrientedCurve::unit(Word::empty()).is_err());
    }

    #[test]
    fn basepoint_on_a_lift_is_degenerate() {
        let r = default_ref();
        let c = curve("a1");
        let prepared = r.prepare(&c).unwrap();
        // put the basepoint on the base axis
        let (p, q) = prepared.axis();
        let mid = p.vector() + q.vector();
        let mid = &mid / (-minkowski::form(&mid, &mid)).sqrt();
        let moved = r.with_basepoint(&mid).unwrap();
        assert!(matches!(crossing_sequence(&word("b1"), &c, &moved), Err(CoveringError::Degenerate(_))));
    }
}
