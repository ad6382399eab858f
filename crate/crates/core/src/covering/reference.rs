//! Reference Fuchsian structures.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::frame::{distance3, form3, lorentz_inverse, origin3, M3, V3};
use super::CoveringError;
use crate::minkowski::{self, boost, rotation, GroupElement, IsometryClass};
use crate::representation::Representation;
use crate::surface_group::{Letter, SurfacePresentation, Word};

/// How to build a reference structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceParams {
    /// The regular 4g-gon group.
    #[default]
    Regular,
    /// User-supplied SO⁺(2,1) generator images, validated.
    Matrices(Vec<GroupElement>),
    /// The regular structure followed by twists along the given curves,
    /// each `(cyclically reduced core, twist length)`.
    Twisted(Vec<(Word, f64)>),
}

/// A marked hyperbolic structure on the surface used to compute crossing data.
#[derive(Debug, Clone)]
pub struct ReferenceStructure {
    fuchsian: Representation,
    basepoint: V3,
    cover_radius: f64,
    search_margin: f64,
    /// `ρ₀(l)⁻¹` for every letter, indexed by [`letter_code`].
    steps: Vec<M3>,
    /// `ρ₀(l)`, indexed by [`letter_code`].
    images: Vec<M3>,
}

pub(crate) fn letter_code(l: Letter) -> usize {
    2 * l.index() + l.inverse as usize
}

pub(crate) fn to_m3(g: &GroupElement) -> M3 {
    let m = g.matrix();
    M3::from_fn(|i, j| m[(i, j)])
}

/// Side-pairing of the regular 4g-gon taking side `i` to side `j`.
fn side_pairing(n_sides: usize, inradius: f64, i: usize, j: usize) -> GroupElement {
    let phi = |k: usize| 2.0 * PI * k as f64 / n_sides as f64;
    rotation(2, 0, 1, phi(j))
        .mul(&boost(2, 0, 2.0 * inradius))
        .mul(&rotation(2, 0, 1, PI - phi(i)))
}

/// Generators of the regular 4g-gon group with all angles `2π/4g`:
/// `a_k` pairs side `4k+2` with side `4k`, `b_k` pairs side `4k+1` with side `4k+3`.
pub fn regular_generators(genus: usize) -> Vec<GroupElement> {
    let n = 4 * genus;
    let inradius = regular_inradius(genus);
    (0..genus)
        .flat_map(|k| {
            [side_pairing(n, inradius, 4 * k + 2, 4 * k), side_pairing(n, inradius, 4 * k + 1, 4 * k + 3)]
        })
        .collect()
}

/// Inradius of the regular 4g-gon with interior angles `2π/4g`.
pub fn regular_inradius(genus: usize) -> f64 {
    let n = 4.0 * genus as f64;
    let alpha = 2.0 * PI / n;
    ((alpha / 2.0).cos() / (PI / n).sin()).acosh()
}

/// Circumradius of the same polygon; the covering radius of the orbit of its centre.
pub fn regular_circumradius(genus: usize) -> f64 {
    let n = 4.0 * genus as f64;
    let alpha = 2.0 * PI / n;
    (1.0 / ((PI / n).tan() * (alpha / 2.0).tan())).acosh()
}

fn validate(pres: SurfacePresentation, images: Vec<GroupElement>) -> Result<Representation, CoveringError> {
    if images.iter().any(|g| g.dim() != 2) {
        return Err(CoveringError::InvalidReference("reference matrices must lie in SO+(2,1)".into()));
    }
    let rep = Representation::new_unchecked(pres, images)?;
    let r = rep.relator_residual();
    if !(r < rep.relator_tolerance()) {
        return Err(CoveringError::InvalidReference(format!("relator residual {r:e}")));
    }
    for (i, g) in rep.images().iter().enumerate() {
        if minkowski::classify(g) != IsometryClass::Loxodromic {
            return Err(CoveringError::InvalidReference(format!("generator {i} is not loxodromic")));
        }
    }
    Ok(rep)
}

/// Builds a reference structure for the given genus.
pub fn reference_structure(genus: usize, params: &ReferenceParams) -> Result<ReferenceStructure, CoveringError> {
    let pres = SurfacePresentation::new(genus)?;
    match params {
        ReferenceParams::Regular => {
            let rep = validate(pres, regular_generators(genus))?;
            Ok(ReferenceStructure::assemble(rep, regular_circumradius(genus), 0.5))
        }
        ReferenceParams::Matrices(ms) => {
            let rep = validate(pres, ms.clone())?;
            Ok(ReferenceStructure::from_representation(rep))
        }
        ReferenceParams::Twisted(twists) => {
            let base = reference_structure(genus, &ReferenceParams::Regular)?;
            let rep = crate::deform::twist_reference(&base, twists)
                .map_err(|e| CoveringError::InvalidReference(format!("twisted reference: {e}")))?;
            let rep = validate(pres, rep.images().to_vec())?;
            Ok(ReferenceStructure::from_representation(rep))
        }
    }
}

impl ReferenceStructure {
    fn assemble(fuchsian: Representation, cover_radius: f64, search_margin: f64) -> Self {
        let letters = Letter::all(fuchsian.genus());
        let mut images = vec![M3::identity(); letters.len()];
        let mut steps = vec![M3::identity(); letters.len()];
        for l in letters {
            let g = to_m3(fuchsian.image(l.index()));
            let m = if l.inverse { lorentz_inverse(&g) } else { g };
            images[letter_code(l)] = m;
            steps[letter_code(l)] = lorentz_inverse(&m);
        }
        ReferenceStructure { fuchsian, basepoint: origin3(), cover_radius, search_margin, steps, images }
    }

    /// Structure for arbitrary validated Fuchsian matrices. The covering radius
    /// is estimated by sampling, and the search margin is widened to half the
    /// largest generator displacement because the generators need not be the
    /// side pairings of the Dirichlet domain.
    fn from_representation(rep: Representation) -> Self {
        let probe = ReferenceStructure::assemble(rep, 0.0, 0.0);
        let radius = probe.estimate_cover_radius();
        let max_disp = probe
            .images
            .iter()
            .map(|m| distance3(&origin3(), &(m * origin3())))
            .fold(0.0, f64::max);
        let margin = (0.5 * max_disp + 0.25).max(0.5);
        ReferenceStructure { cover_radius: radius + 0.25, search_margin: margin, ..probe }
    }

    /// Largest distance from sample points to the nearest orbit point of the origin.
    fn estimate_cover_radius(&self) -> f64 {
        let pres = *self.fuchsian.presentation();
        let orbit: Vec<V3> = pres.words_up_to(4).iter().map(|w| self.word_matrix(w) * origin3()).collect();
        let mut worst: f64 = 0.0;
        for ri in 1..=24 {
            let r = 4.0 * ri as f64 / 24.0;
            let count = 8 * ri;
            for k in 0..count {
                let th = 2.0 * PI * (k as f64 + 0.5 * (ri % 2) as f64) / count as f64;
                let x = V3::new(r.sinh() * th.cos(), r.sinh() * th.sin(), r.cosh());
                let nearest = orbit.iter().map(|p| distance3(p, &x)).fold(f64::INFINITY, f64::min);
                worst = worst.max(nearest);
            }
        }
        worst
    }

    pub fn fuchsian(&self) -> &Representation {
        &self.fuchsian
    }

    pub fn genus(&self) -> usize {
        self.fuchsian.genus()
    }

    pub fn presentation(&self) -> &SurfacePresentation {
        self.fuchsian.presentation()
    }

    pub fn basepoint(&self) -> DVector<f64> {
        DVector::from_column_slice(self.basepoint.as_slice())
    }

    pub(crate) fn basepoint3(&self) -> V3 {
        self.basepoint
    }

    pub fn cover_radius(&self) -> f64 {
        self.cover_radius
    }

    pub fn search_margin(&self) -> f64 {
        self.search_margin
    }

    /// Moves the basepoint to the hyperboloid point `p` (given as `(x, y, t)`).
    pub fn with_basepoint(&self, p: &DVector<f64>) -> Result<Self, CoveringError> {
        if p.len() != 3 {
            return Err(CoveringError::InvalidReference("basepoint must have 3 coordinates".into()));
        }
        let v = V3::new(p[0], p[1], p[2]);
        if (form3(&v, &v) + 1.0).abs() > 1e-9 || v.z <= 0.0 {
            return Err(CoveringError::InvalidReference("basepoint is not on the hyperboloid".into()));
        }
        Ok(ReferenceStructure { basepoint: v, ..self.clone() })
    }

    /// The basepoint moved from the origin by `(dx, dy)` in the tangent plane.
    pub fn with_basepoint_offset(&self, dx: f64, dy: f64) -> Self {
        let r = (dx * dx + dy * dy).sqrt();
        let v = if r == 0.0 {
            origin3()
        } else {
            V3::new(r.sinh() * dx / r, r.sinh() * dy / r, r.cosh())
        };
        ReferenceStructure { basepoint: v, ..self.clone() }
    }

    /// Overrides the search margin (diagnostics and harness self-tests).
    pub fn with_search_margin(&self, margin: f64) -> Self {
        ReferenceStructure { search_margin: margin, ..self.clone() }
    }

    pub(crate) fn steps(&self) -> &[M3] {
        &self.steps
    }

    /// `ρ₀(w)` as a 3×3 matrix.
    pub(crate) fn word_matrix(&self, w: &Word) -> M3 {
        w.letters().iter().fold(M3::identity(), |acc, &l| acc * self.images[letter_code(l)])
    }

    pub fn evaluate(&self, w: &Word) -> GroupElement {
        self.fuchsian.evaluate(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_octagon_constants() {
        assert!((regular_inradius(2) - 1.528_570_919).abs() < 1e-8);
        assert!((regular_circumradius(2) - 2.448_452_447).abs() < 1e-8);
    }

    #[test]
    fn regular_group_satisfies_relator() {
        let r = reference_structure(2, &ReferenceParams::Regular).unwrap();
        assert!(r.fuchsian().relator_residual() < 1e-8);
        assert_eq!(r.fuchsian().relator_tolerance(), 1e-8);
        for g in 3..=10 {
            let r = reference_structure(g, &ReferenceParams::Regular).unwrap();
            let rep = r.fuchsian();
            assert!(rep.relator_residual() < rep.relator_tolerance(), "genus {g}");
        }
    }

    #[test]
    fn generators_translate_at_most_twice_the_inradius() {
        let r = reference_structure(2, &ReferenceParams::Regular).unwrap();
        for g in r.fuchsian().images() {
            let l = minkowski::translation_length(g).unwrap();
            // side pairings of the regular octagon all have the same length
            let first = minkowski::translation_length(r.fuchsian().image(0)).unwrap();
            assert!((l - first).abs() < 1e-10);
            assert!(l > 0.0 && l <= 2.0 * regular_inradius(2) + 1e-9);
        }
    }

    #[test]
    fn explicit_matrices_pass_through_or_fail() {
        let gens = regular_generators(2);
        let r = reference_structure(2, &ReferenceParams::Matrices(gens.clone())).unwrap();
        assert_eq!(r.fuchsian().images(), &gens[..]);
        assert!((r.cover_radius() - regular_circumradius(2)).abs() < 0.3);

        let mut bad = gens.clone();
        let m = bad[1].matrix() * minkowski::boost(2, 0, 0.01).matrix();
        bad[1] = GroupElement::new(m).unwrap();
        assert!(matches!(
            reference_structure(2, &ReferenceParams::Matrices(bad)),
            Err(CoveringError::InvalidReference(_))
        ));
    }
}
