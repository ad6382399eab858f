//! Twist, bend and earthquake deformations of closed surface group
//! representations into SO(n,1), n ∈ {2,3,4}.
//!
//! A deformation is driven by a weighted multicurve on the surface. Each
//! generator picks up a product of centralizer elements, one per lift of the
//! multicurve crossed by the segment from the basepoint to its translate in a
//! reference Fuchsian structure.

pub mod covering;
pub mod deform;
pub mod earthquake;
pub mod minkowski;
pub mod representation;
pub mod surface_group;
pub mod tolerance;
pub mod verify;
