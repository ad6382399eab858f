use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minkowski::{self, GeometryError, GroupElement};
use crate::surface_group::{SurfacePresentation, Word};
use crate::tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepresentationError {
    #[error("expected {expected} generator images, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("generator images have mixed dimensions")]
    MixedDimensions,
    #[error("relator residual {0:e} exceeds tolerance")]
    Relator(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A homomorphism from the surface group into SO⁺(n,1), given on generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    presentation: SurfacePresentation,
    images: Vec<GroupElement>,
}

impl Representation {
    /// Validates dimensions and the relator residual against [`Self::relator_tolerance`].
    pub fn new(presentation: SurfacePresentation, images: Vec<GroupElement>) -> Result<Self, RepresentationError> {
        let rep = Representation::new_unchecked(presentation, images)?;
        let r = rep.relator_residual();
        if !(r < rep.relator_tolerance()) {
            return Err(RepresentationError::Relator(r));
        }
        Ok(rep)
    }

    /// Checks shape only; the relator residual is left to the caller.
    pub fn new_unchecked(
        presentation: SurfacePresentation,
        images: Vec<GroupElement>,
    ) -> Result<Self, RepresentationError> {
        if images.len() != presentation.rank() {
            return Err(RepresentationError::WrongCount { expected: presentation.rank(), got: images.len() });
        }
        let n = images[0].dim();
        if images.iter().any(|g| g.dim() != n) {
            return Err(RepresentationError::MixedDimensions);
        }
        Ok(Representation { presentation, images })
    }

    pub fn presentation(&self) -> &SurfacePresentation {
        &self.presentation
    }

    pub fn genus(&self) -> usize {
        self.presentation.genus()
    }

    pub fn dim(&self) -> usize {
        self.images[0].dim()
    }

    pub fn images(&self) -> &[GroupElement] {
        &self.images
    }

    pub fn image(&self, generator: usize) -> &GroupElement {
        &self.images[generator]
    }

    /// `ρ(w)`, multiplying left to right.
    pub fn evaluate(&self, w: &Word) -> GroupElement {
        let n = self.dim();
        let mut m = DMatrix::identity(n + 1, n + 1);
        for l in w.letters() {
            let g = &self.images[l.index()];
            if l.inverse {
                m *= g.inverse().matrix();
            } else {
                m *= g.matrix();
            }
        }
        GroupElement::from_matrix_unchecked(m)
    }

    /// `‖ρ(R) − I‖_F`.
    pub fn relator_residual(&self) -> f64 {
        let r = self.evaluate(&self.presentation.relator());
        r.frobenius_distance(&GroupElement::identity(self.dim()))
    }

    /// [`tolerance::HOM`], raised to the rounding floor of the relator product
    /// when the images are too large for it: `4g·ε·M²·max‖ρ(x)‖`, with `M` the
    /// largest norm of a prefix of the relator. Equal to `HOM` for the genus 2
    /// reference structures.
    pub fn relator_tolerance(&self) -> f64 {
        let n = self.dim();
        let mut acc = DMatrix::identity(n + 1, n + 1);
        let mut prefix: f64 = 0.0;
        for l in self.presentation.relator().letters() {
            acc *= self.evaluate(&Word::letter(*l)).matrix();
            prefix = prefix.max(acc.norm());
        }
        let largest = self.images.iter().map(|g| g.matrix().norm()).fold(0.0, f64::max);
        let floor = 4.0 * self.genus() as f64 * f64::EPSILON * prefix * prefix * largest;
        tolerance::HOM.max(floor)
    }

    /// Largest `group_distance` over generators, and whether any used the fallback.
    pub fn max_generator_distance(&self, other: &Representation) -> (f64, bool) {
        self.images.iter().zip(&other.images).fold((0.0, false), |(d, f), (a, b)| {
            let dist = minkowski::group_distance(a, b);
            (d.max(dist.value), f || dist.fallback)
        })
    }

    /// `g ρ g⁻¹`.
    pub fn conjugate(&self, g: &GroupElement) -> Representation {
        Representation {
            presentation: self.presentation,
            images: self.images.iter().map(|m| m.conjugate_by(g)).collect(),
        }
    }

    /// Block embedding into SO⁺(n,1).
    pub fn embed(&self, n: usize) -> Result<Representation, GeometryError> {
        let images = self.images.iter().map(|g| g.embed(n)).collect::<Result<Vec<_>, _>>()?;
        Ok(Representation { presentation: self.presentation, images })
    }

    pub fn map_images(&self, f: impl Fn(&GroupElement) -> GroupElement) -> Representation {
        Representation { presentation: self.presentation, images: self.images.iter().map(f).collect() }
    }
}
