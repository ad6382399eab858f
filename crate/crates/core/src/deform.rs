//! Twist and bend deformations along weighted multicurves.
//!
//! For a generator `A` whose segment crosses lifts `N₀·A₁, …, N₀·A_k` with
//! signs `s₁, …, s_k`, the deformed image is
//! `E(A) = ρ(A)·γ(L_k)^{s_k}⋯γ(L₁)^{s₁}` with `γ(Lᵢ) = ρ(Aᵢ)⁻¹·γ_c·ρ(Aᵢ)`,
//! where `γ_c` is the centralizer element chosen for the crossed curve.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covering::{
    axis_relation, reference_structure, CoveringError, OrientedCurve, PreparedCurve, ReferenceParams,
    ReferenceStructure,
};
use crate::minkowski::{self, form, GeometryError, GroupElement, LieVector};
pub use crate::representation::{Representation, RepresentationError};
use crate::surface_group::Word;
use crate::tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeformError {
    #[error(transparent)]
    Covering(#[from] CoveringError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
    #[error("centralizer element fails to commute with the curve image (defect {0:e})")]
    NotCommuting(f64),
    #[error("rotation parameters need n >= 3")]
    RotationInPlane,
    #[error("n = 4 rotation about `{0}` needs a plane selector")]
    MissingPlane(Word),
    #[error("curves `{0}` and `{1}` intersect {2} times")]
    Intersecting(Word, Word, usize),
    #[error("lifts of `{0}` fellow-travel too closely to certify disjointness in double precision")]
    Unresolved(Word),
    #[error("curves `{0}` and `{1}` are homotopic")]
    Homotopic(Word, Word),
    #[error("deformed relator residual {0:e} exceeds tolerance")]
    Relator(f64),
    #[error("base centralizer elements do not commute (defect {0:e})")]
    NonCommutingParameters(f64),
    #[error("{0}")]
    Invalid(String),
}

/// Rotation part of a centralizer parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxialRotation {
    pub angle: f64,
    /// For n = 4: a vector whose projection to the axis-orthogonal 3-space is
    /// the normal of the rotation plane. Derived from the curve image when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane: Option<Vec<f64>>,
}

/// Element of the centralizer of a loxodromic: translation along and rotation about its axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CentralizerParameter {
    #[serde(default)]
    pub translation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<AxialRotation>,
}

impl CentralizerParameter {
    pub fn twist(translation: f64) -> Self {
        CentralizerParameter { translation, rotation: None }
    }

    pub fn bend(angle: f64) -> Self {
        CentralizerParameter { translation: 0.0, rotation: Some(AxialRotation { angle, plane: None }) }
    }

    pub fn with_rotation(mut self, angle: f64, plane: Option<Vec<f64>>) -> Self {
        self.rotation = Some(AxialRotation { angle, plane });
        self
    }

    fn angle(&self) -> f64 {
        self.rotation.as_ref().map_or(0.0, |r| r.angle)
    }

    fn plane(&self) -> Option<DVector<f64>> {
        self.rotation.as_ref().and_then(|r| r.plane.as_ref()).map(|v| DVector::from_column_slice(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub curve: OrientedCurve,
    pub parameter: CentralizerParameter,
}

/// Disjoint, pairwise non-homotopic simple closed curves with parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedMulticurve {
    components: Vec<Component>,
}

impl WeightedMulticurve {
    /// Validates simplicity, disjointness and non-homotopy in the reference structure.
    pub fn new(components: Vec<Component>, reference: &ReferenceStructure) -> Result<Self, DeformError> {
        let prepared = components
            .iter()
            .map(|c| reference.prepare(&c.curve))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, p) in prepared.iter().enumerate() {
            let own = axis_relation(p, p, reference);
            if own.unresolved > 0 {
                return Err(DeformError::Unresolved(components[i].curve.core().clone()));
            }
            if own.crossings > 0 {
                let w = components[i].curve.core().clone();
                return Err(DeformError::Intersecting(w.clone(), w, own.crossings / 2));
            }
            for (j, q) in prepared.iter().enumerate().skip(i + 1) {
                let rel = axis_relation(p, q, reference);
                let (wi, wj) = (components[i].curve.core().clone(), components[j].curve.core().clone());
                if rel.unresolved > 0 {
                    return Err(DeformError::Unresolved(wi));
                }
                if rel.coincident {
                    return Err(DeformError::Homotopic(wi, wj));
                }
                if rel.crossings > 0 {
                    return Err(DeformError::Intersecting(wi, wj, rel.crossings));
                }
            }
        }
        Ok(WeightedMulticurve { components })
    }

    /// One curve, validated.
    pub fn single(
        curve: OrientedCurve,
        parameter: CentralizerParameter,
        reference: &ReferenceStructure,
    ) -> Result<Self, DeformError> {
        WeightedMulticurve::new(vec![Component { curve, parameter }], reference)
    }

    pub fn empty() -> Self {
        WeightedMulticurve { components: Vec::new() }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Same curves, parameters replaced (the curves are already validated).
    pub fn with_parameters(&self, parameters: Vec<CentralizerParameter>) -> Result<Self, DeformError> {
        if parameters.len() != self.components.len() {
            return Err(DeformError::Invalid("parameter count differs from component count".into()));
        }
        let components = self
            .components
            .iter()
            .zip(parameters)
            .map(|(c, parameter)| Component { curve: c.curve.clone(), parameter })
            .collect();
        Ok(WeightedMulticurve { components })
    }

    /// Every component reversed; deformations are unchanged by this.
    pub fn reversed(&self) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| Component { curve: c.curve.reversed(), parameter: c.parameter.clone() })
            .collect();
        WeightedMulticurve { components }
    }
}

/// Normal of the rotation plane of the elliptic part of `g`, inside the axis-orthogonal space.
fn elliptic_plane_normal(g: &GroupElement) -> Result<Option<DVector<f64>>, DeformError> {
    let (p, q) = minkowski::fixed_points(g)?;
    let (_, theta) = minkowski::loxodromic_factorization(g)?;
    let basis = minkowski::complement_basis(&p, &q);
    if basis.len() != 3 {
        return Ok(None);
    }
    let th = theta.matrix();
    let r = DMatrix::from_fn(3, 3, |i, j| form(&basis[i], &(th * &basis[j])));
    let anti = [r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]];
    let anorm = anti.iter().map(|x| x * x).sum::<f64>().sqrt();
    // 3 - trace = 2(1 - cos φ)
    let tr_gap = 3.0 - r.trace();
    if tr_gap < 1e-10 {
        return Ok(None);
    }
    let coeffs: Vec<f64> = if anorm > 1e-6 {
        anti.to_vec()
    } else {
        // half turn: the axis spans the columns of R + I
        let s = &r + DMatrix::identity(3, 3);
        let j = (0..3).max_by(|&a, &b| s.column(a).norm().total_cmp(&s.column(b).norm())).unwrap_or(0);
        s.column(j).iter().copied().collect()
    };
    let u = basis.iter().zip(&coeffs).fold(DVector::zeros(5), |acc, (b, c)| acc + b * *c);
    // orient so that the elliptic part turns positively in the plane
    let j = minkowski::rotation_generator(&p, &q, Some(&u))?;
    let turn: f64 = basis.iter().map(|b| form(&(j.matrix() * b), &(th * b))).sum();
    Ok(Some(if turn < 0.0 { -u } else { u }))
}

/// Base centralizer element `H(p, q, t·translation·weight)·exp(t·angle·J)` for the curve's image.
pub fn gamma_base(
    rho: &Representation,
    curve: &OrientedCurve,
    parameter: &CentralizerParameter,
    t: f64,
) -> Result<GroupElement, DeformError> {
    let g = rho.evaluate(curve.core());
    let x = centralizer_generator(&g, curve.core(), curve.weight(), parameter, parameter.plane())?;
    let gamma = x.exp(t);
    let defect = gamma.commutator_defect(&g);
    if defect > tolerance::COMMUTE {
        return Err(DeformError::NotCommuting(defect));
    }
    Ok(gamma)
}

/// Non-normality `‖g‖_F/|tr g|` beyond which a lift counts as far from the origin.
const FAR_LIFT: f64 = 1e2;

/// `length·T + angle·R` with `T`, `R` the unit translation and rotation about one axis.
#[derive(Debug, Clone)]
struct AxialGenerator {
    translation: LieVector,
    length: f64,
    rotation: Option<LieVector>,
    angle: f64,
}

impl AxialGenerator {
    fn lie(&self) -> LieVector {
        let x = self.translation.scale(self.length);
        match &self.rotation {
            Some(r) => x.add(&r.scale(self.angle)),
            None => x,
        }
    }

    fn adjoint(&self, g: &GroupElement) -> AxialGenerator {
        AxialGenerator {
            translation: self.translation.adjoint(g),
            length: self.length,
            rotation: self.rotation.as_ref().map(|r| r.adjoint(g)),
            angle: self.angle,
        }
    }

    fn exp(&self, s: f64) -> GroupElement {
        minkowski::exp_axial(&self.translation, s * self.length, self.rotation.as_ref(), s * self.angle)
    }
}

/// `translation·weight·v(p,q) + angle·J` for the curve image `g`.
fn centralizer_generator(
    g: &GroupElement,
    core: &Word,
    weight: f64,
    parameter: &CentralizerParameter,
    plane: Option<DVector<f64>>,
) -> Result<AxialGenerator, DeformError> {
    let (p, q) = minkowski::fixed_points(g)?;
    let mut x = AxialGenerator {
        translation: minkowski::lie_generator(&p, &q)?,
        length: parameter.translation * weight,
        rotation: None,
        angle: 0.0,
    };
    let angle = parameter.angle();
    if parameter.rotation.is_some() && angle != 0.0 {
        let n = g.dim();
        if n == 2 {
            return Err(DeformError::RotationInPlane);
        }
        let plane = match (n, plane) {
            (4, Some(h)) => Some(h),
            (4, None) => Some(elliptic_plane_normal(g)?.ok_or_else(|| DeformError::MissingPlane(core.clone()))?),
            _ => None,
        };
        x.rotation = Some(minkowski::rotation_generator(&p, &q, plane.as_ref())?);
        x.angle = angle;
    }
    Ok(x)
}

/// One crossed lift in a deformation plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedCrossing {
    pub component: usize,
    pub conjugator: Word,
    pub sign: i8,
    /// Orbit point near the crossed lift.
    #[serde(skip_serializing_if = "Word::is_empty")]
    pub node: Word,
}

/// Crossing data for a multicurve, independent of the representation being deformed.
#[derive(Debug, Clone)]
pub struct DeformationPlan {
    reference: ReferenceStructure,
    multicurve: WeightedMulticurve,
    prepared: Vec<PreparedCurve>,
    generators: Vec<Vec<PlannedCrossing>>,
}

/// Output of a deformation.
#[derive(Debug, Clone)]
pub struct Deformation {
    /// Re-orthonormalized images.
    pub representation: Representation,
    /// Images as multiplied out, before re-orthonormalization.
    pub raw: Vec<GroupElement>,
}

impl DeformationPlan {
    pub fn new(multicurve: &WeightedMulticurve, reference: &ReferenceStructure) -> Result<Self, DeformError> {
        let prepared = multicurve
            .components
            .iter()
            .map(|c| reference.prepare(&c.curve))
            .collect::<Result<Vec<_>, _>>()?;
        let mut plan = DeformationPlan {
            reference: reference.clone(),
            multicurve: multicurve.clone(),
            prepared,
            generators: Vec::new(),
        };
        plan.generators = reference
            .presentation()
            .generators()
            .iter()
            .map(|g| plan.crossings(g))
            .collect::<Result<_, _>>()?;
        Ok(plan)
    }

    pub fn multicurve(&self) -> &WeightedMulticurve {
        &self.multicurve
    }

    pub fn reference(&self) -> &ReferenceStructure {
        &self.reference
    }

    pub fn generator_crossings(&self) -> &[Vec<PlannedCrossing>] {
        &self.generators
    }

    fn prepared_refs(&self) -> Vec<&PreparedCurve> {
        self.prepared.iter().collect()
    }

    /// Crossings of the segment for an arbitrary element, in segment order.
    pub fn crossings(&self, a: &Word) -> Result<Vec<PlannedCrossing>, DeformError> {
        if self.prepared.is_empty() {
            return Ok(Vec::new());
        }
        let seg = self.reference.word_crossings(a, &self.prepared_refs())?;
        Ok(seg
            .crossings
            .into_iter()
            .map(|(component, c)| PlannedCrossing { component, conjugator: c.conjugator, sign: c.sign, node: c.node })
            .collect())
    }

    /// Crossings of the segment between two points of ℍ² (hyperboloid coordinates).
    pub fn path_crossings(&self, from: &DVector<f64>, to: &DVector<f64>) -> Result<Vec<PlannedCrossing>, DeformError> {
        if self.prepared.is_empty() {
            return Ok(Vec::new());
        }
        let seg = self.reference.path_crossings(from, to, &self.prepared_refs())?;
        Ok(seg
            .crossings
            .into_iter()
            .map(|(component, c)| PlannedCrossing { component, conjugator: c.conjugator, sign: c.sign, node: c.node })
            .collect())
    }

    /// Base centralizer element for every component.
    pub fn gammas(&self, rho: &Representation, t: f64) -> Result<Vec<GroupElement>, DeformError> {
        self.check_rho(rho)?;
        self.multicurve
            .components
            .iter()
            .map(|c| gamma_base(rho, &c.curve, &c.parameter, t))
            .collect()
    }

    fn check_rho(&self, rho: &Representation) -> Result<(), DeformError> {
        if rho.genus() != self.reference.genus() {
            return Err(DeformError::Invalid(format!(
                "representation genus {} differs from reference genus {}",
                rho.genus(),
                self.reference.genus()
            )));
        }
        Ok(())
    }

    /// Centralizer generator of every component's base lift; also checks `γ` commutes.
    fn base_generators(&self, rho: &Representation, t: f64) -> Result<Vec<AxialGenerator>, DeformError> {
        self.check_rho(rho)?;
        self.multicurve
            .components
            .iter()
            .map(|c| {
                gamma_base(rho, &c.curve, &c.parameter, t)?;
                let g = rho.evaluate(c.curve.core());
                centralizer_generator(&g, c.curve.core(), c.curve.weight(), &c.parameter, c.parameter.plane())
            })
            .collect()
    }

    /// The generator of the lift `N₀·u`, possibly as seen from the orbit point `v`
    /// near the crossing; the lifted generator is `Ad(ρ(v))` of it.
    ///
    /// Lifts near the origin are read off the axis of `ρ(u⁻¹cu)` with `v` empty.
    /// For a far lift that matrix is too far from normal for accurate fixed
    /// points, and the axis of `ρ(z⁻¹cz)`, `z = u·v`, is used instead.
    fn local_generator(
        &self,
        rho: &Representation,
        base: &[AxialGenerator],
        crossing: &PlannedCrossing,
    ) -> Result<(AxialGenerator, Word), DeformError> {
        let (u, v) = (&crossing.conjugator, &crossing.node);
        if u.is_empty() {
            return Ok((base[crossing.component].clone(), Word::empty()));
        }
        let c = &self.multicurve.components[crossing.component];
        let conjugated = |z: &Word| -> Result<AxialGenerator, DeformError> {
            let w = z.invert().concat(c.curve.core()).concat(z);
            let plane = c.parameter.plane().map(|h| rho.evaluate(z).inverse().act(&h));
            centralizer_generator(&rho.evaluate(&w), &w, c.curve.weight(), &c.parameter, plane)
        };
        let direct = rho.evaluate(&u.invert().concat(c.curve.core()).concat(u));
        if v.is_empty() || direct.matrix().norm() <= FAR_LIFT * direct.trace().abs().max(1.0) {
            return Ok((conjugated(u)?, Word::empty()));
        }
        let z = u.concat(v);
        if z.is_empty() {
            return Ok((base[crossing.component].clone(), v.clone()));
        }
        Ok((conjugated(&z)?, v.clone()))
    }

    /// `Ad(ρ(u)⁻¹)·X_c` for the lift `N₀·u`.
    fn lifted_generator(
        &self,
        rho: &Representation,
        base: &[AxialGenerator],
        crossing: &PlannedCrossing,
    ) -> Result<AxialGenerator, DeformError> {
        let (local, v) = self.local_generator(rho, base, crossing)?;
        Ok(if v.is_empty() { local } else { local.adjoint(&rho.evaluate(&v)) })
    }

    /// `ρ(prefix)·γ(L_k)^{s_k}⋯γ(L₁)^{s₁}`, multiplied out as
    /// `ρ(prefix·v_k)·exp(Y_k)·ρ(v_k⁻¹v_{k−1})⋯exp(Y₁)·ρ(v₁⁻¹)` with local generators
    /// `Y_i` at the orbit points `v_i`. Consecutive orbit points are close, so no
    /// factor is much larger than the result.
    fn crossing_product(
        &self,
        rho: &Representation,
        base: &[AxialGenerator],
        t: f64,
        prefix: &Word,
        crossings: &[PlannedCrossing],
    ) -> Result<GroupElement, DeformError> {
        let mut acc = GroupElement::identity(rho.dim());
        let mut hop = prefix.clone();
        for c in crossings.iter().rev() {
            let (y, v) = self.local_generator(rho, base, c)?;
            acc = acc.mul(&rho.evaluate(&hop.concat(&v))).mul(&y.exp(t * c.sign as f64));
            hop = v.invert();
        }
        Ok(acc.mul(&rho.evaluate(&hop)))
    }

    /// Deformed images of all generators, with the relator check.
    pub fn apply(&self, rho: &Representation, t: f64) -> Result<Deformation, DeformError> {
        if t == 0.0 {
            return Ok(Deformation { representation: rho.clone(), raw: rho.images().to_vec() });
        }
        let base = self.base_generators(rho, t)?;
        let raw: Vec<GroupElement> = self
            .generators
            .iter()
            .zip(rho.presentation().generators())
            .map(|(cs, g)| self.crossing_product(rho, &base, t, &g, cs))
            .collect::<Result<_, DeformError>>()?;
        let images = raw.iter().map(minkowski::reorthonormalize).collect();
        let representation = Representation::new(*rho.presentation(), images).map_err(|e| match e {
            RepresentationError::Relator(r) => DeformError::Relator(r),
            e => e.into(),
        })?;
        Ok(Deformation { representation, raw })
    }

    /// `E(ρ)(A)` computed from the crossings of `A` itself rather than from generators.
    pub fn element(&self, rho: &Representation, t: f64, a: &Word) -> Result<GroupElement, DeformError> {
        let base = self.base_generators(rho, t)?;
        let crossings = self.crossings(a)?;
        self.crossing_product(rho, &base, t, a, &crossings)
    }

    /// Product of centralizer elements over the lifts crossed from `from` to `to`.
    pub fn path_conjugator(
        &self,
        rho: &Representation,
        t: f64,
        from: &DVector<f64>,
        to: &DVector<f64>,
    ) -> Result<GroupElement, DeformError> {
        let base = self.base_generators(rho, t)?;
        let crossings = self.path_crossings(from, to)?;
        self.crossing_product(rho, &base, t, &Word::empty(), &crossings)
    }

    /// `u(A) = Σ sᵢ·Ad(ρ(Aᵢ)⁻¹)·X_c`.
    pub fn cocycle(&self, rho: &Representation, a: &Word) -> Result<LieVector, DeformError> {
        let base = self.base_generators(rho, 0.0)?;
        let mut u = LieVector::zero(rho.dim());
        for c in self.crossings(a)? {
            u = u.add(&self.lifted_generator(rho, &base, &c)?.lie().scale(c.sign as f64));
        }
        Ok(u)
    }

    /// The multicurve re-based on `E_t(ρ)`.
    ///
    /// Fixed points are always recomputed from the deformed images. An explicit
    /// n = 4 plane selector is transported by `ξ⁻¹`, where `ξ` is the product of
    /// centralizer elements over the lifts crossed between the basepoint and the
    /// base lift of the curve; this is the conjugator carrying `ρ` to `E_t(ρ)` on
    /// the stabilizer of that lift.
    pub fn rebase(&self, rho: &Representation, t: f64) -> Result<WeightedMulticurve, DeformError> {
        self.transport(rho, t, &self.multicurve)
    }

    /// `other` re-based on `E_t(ρ)` for this plan, as in [`Self::rebase`].
    pub fn transport(
        &self,
        rho: &Representation,
        t: f64,
        other: &WeightedMulticurve,
    ) -> Result<WeightedMulticurve, DeformError> {
        let mut parameters = Vec::new();
        for c in &other.components {
            let mut p = c.parameter.clone();
            if let (Some(rot), Some(h)) = (p.rotation.as_mut(), c.parameter.plane()) {
                let prepared = self.reference.prepare(&c.curve)?;
                let xi = self.lift_conjugator(rho, t, &prepared)?;
                let moved = xi.inverse().act(&h);
                rot.plane = Some(moved.iter().copied().collect());
            }
            parameters.push(p);
        }
        other.with_parameters(parameters)
    }

    /// `ξ` for the base lift of a prepared curve.
    pub fn lift_conjugator(
        &self,
        rho: &Representation,
        t: f64,
        prepared: &PreparedCurve,
    ) -> Result<GroupElement, DeformError> {
        let b = self.reference.basepoint();
        let (p, q) = prepared.axis();
        let (pv, qv) = (p.vector(), q.vector());
        // foot of the perpendicular from b, then pulled back towards b
        let c = form(pv, qv);
        let mid = (pv * (form(&b, qv) / c) + qv * (form(&b, pv) / c)) * -1.0;
        let foot = &mid / (-form(&mid, &mid)).sqrt();
        let d = minkowski::point_distance(&b, &foot);
        if d < 1e-9 {
            return Err(CoveringError::Degenerate("basepoint lies on a lift".into()).into());
        }
        let toward = (&b + &foot * form(&b, &foot)) / d.sinh();
        let eps: f64 = 1e-5;
        let near = &foot * eps.cosh() + toward * eps.sinh();
        self.path_conjugator(rho, t, &b, &near)
    }

    /// Plan for the same multicurve seen from another reference basepoint.
    pub fn with_reference(&self, reference: &ReferenceStructure) -> Result<Self, DeformError> {
        DeformationPlan::new(&self.multicurve, reference)
    }
}

/// `E_t(ρ)` along the multicurve.
pub fn deform(
    rho: &Representation,
    multicurve: &WeightedMulticurve,
    t: f64,
    reference: &ReferenceStructure,
) -> Result<Representation, DeformError> {
    Ok(DeformationPlan::new(multicurve, reference)?.apply(rho, t)?.representation)
}

pub fn infinitesimal_cocycle(
    rho: &Representation,
    multicurve: &WeightedMulticurve,
    a: &Word,
    reference: &ReferenceStructure,
) -> Result<LieVector, DeformError> {
    DeformationPlan::new(multicurve, reference)?.cocycle(rho, a)
}

pub fn rebase(
    rho: &Representation,
    multicurve: &WeightedMulticurve,
    t: f64,
    reference: &ReferenceStructure,
) -> Result<WeightedMulticurve, DeformError> {
    DeformationPlan::new(multicurve, reference)?.rebase(rho, t)
}

/// The Fuchsian structure of `base` followed by twists of the given lengths along
/// the given curves, applied in order.
pub fn twist_reference(base: &ReferenceStructure, twists: &[(Word, f64)]) -> Result<Representation, DeformError> {
    let mut rho = base.fuchsian().clone();
    for (core, length) in twists {
        let curve = OrientedCurve::unit(core.clone())?;
        let mc = WeightedMulticurve::single(curve, CentralizerParameter::twist(*length), base)?;
        rho = deform(&rho, &mc, 1.0, base)?;
    }
    Ok(rho)
}

/// Convenience: the default reference for a genus.
pub fn default_reference(genus: usize) -> Result<ReferenceStructure, DeformError> {
    Ok(reference_structure(genus, &ReferenceParams::Regular)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (ReferenceStructure, Representation) {
        let r = default_reference(2).unwrap();
        let rho = r.fuchsian().clone();
        (r, rho)
    }

    fn curve(s: &str) -> OrientedCurve {
        OrientedCurve::parse(s, 2).unwrap()
    }

    #[test]
    fn zero_parameter_is_identity() {
        let (r, rho) = setup();
        let mc = WeightedMulticurve::single(curve("a1"), CentralizerParameter::twist(0.7), &r).unwrap();
        let out = deform(&rho, &mc, 0.0, &r).unwrap();
        for (a, b) in out.images().iter().zip(rho.images()) {
            assert!(a.frobenius_distance(b) < 1e-14);
        }
    }

    #[test]
    fn twist_on_a1_changes_only_b1() {
        let (r, rho) = setup();
        let mc = WeightedMulticurve::single(curve("a1"), CentralizerParameter::twist(0.5), &r).unwrap();
        let plan = DeformationPlan::new(&mc, &r).unwrap();
        let out = plan.apply(&rho, 1.0).unwrap().representation;
        let gamma = gamma_base(&rho, &curve("a1"), &CentralizerParameter::twist(0.5), 1.0).unwrap();
        for i in [0, 2, 3] {
            assert!(out.image(i).frobenius_distance(rho.image(i)) < 1e-12, "generator {i}");
        }
        let s = plan.generator_crossings()[1][0].sign as i64;
        let predicted = rho.image(1).mul(&gamma.pow(s));
        assert!(out.image(1).frobenius_distance(&predicted) < 1e-10);
    }

    #[test]
    fn gamma_is_a_boost_along_the_axis() {
        let (_, rho) = setup();
        let c = curve("a1").with_weight(0.8).unwrap();
        let g = gamma_base(&rho, &c, &CentralizerParameter::twist(1.0), 0.5).unwrap();
        let (p, q) = minkowski::fixed_points(rho.image(0)).unwrap();
        let h = minkowski::hyperbolic_translation(&p, &q, 0.4).unwrap();
        assert!(g.frobenius_distance(&h) < 1e-10);
    }

    #[test]
    fn intersecting_or_repeated_curves_rejected() {
        let (r, _) = setup();
        let p = CentralizerParameter::twist(1.0);
        let comps = |a: &str, b: &str| {
            vec![
                Component { curve: curve(a), parameter: p.clone() },
                Component { curve: curve(b), parameter: p.clone() },
            ]
        };
        assert!(matches!(WeightedMulticurve::new(comps("a1", "b1"), &r), Err(DeformError::Intersecting(..))));
        assert!(matches!(WeightedMulticurve::new(comps("a1", "A1"), &r), Err(DeformError::Homotopic(..))));
        assert!(WeightedMulticurve::new(comps("a1", "a2"), &r).is_ok());
    }

    #[test]
    fn rotation_rejected_in_the_plane() {
        let (r, rho) = setup();
        let mc = WeightedMulticurve::single(curve("a1"), CentralizerParameter::bend(0.3), &r).unwrap();
        assert!(matches!(deform(&rho, &mc, 1.0, &r), Err(DeformError::RotationInPlane)));
    }
}
