//! Sequences of twist deformations along weighted curves approximating a
//! measured lamination, with an empirical Cauchy test on the results.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::covering::{axis, OrientedCurve, ReferenceStructure};
use crate::deform::{
    CentralizerParameter, Component, DeformError, DeformationPlan, Representation, WeightedMulticurve,
};
use crate::minkowski::{self, form};
use crate::surface_group::{Word, WordError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EarthquakeError {
    #[error(transparent)]
    Deform(#[from] DeformError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("Dehn twists are supported along a single generator curve, got `{0}`")]
    UnsupportedTwist(Word),
    #[error("the curve sequence is empty")]
    EmptySequence,
}

/// Generator index of a supported twisting curve: a single generator `a_k` or `b_k`.
fn twist_generator(d: &OrientedCurve) -> Result<usize, EarthquakeError> {
    match d.core().letters() {
        [l] if !l.inverse => Ok(l.index()),
        _ => Err(EarthquakeError::UnsupportedTwist(d.core().clone())),
    }
}

/// Images of the generators under the `power`-fold Dehn twist along the curve of
/// generator `g`. Twisting along `a_k` sends `b_k ↦ b_k a_k^power`, twisting along
/// `b_k` sends `a_k ↦ a_k b_k^power`; every other generator is fixed. Both keep the
/// relator word unchanged after free reduction.
fn twist_images(rank: usize, g: usize, power: i64) -> Vec<Word> {
    let mut images: Vec<Word> = (0..rank).map(Word::generator).collect();
    let partner = g ^ 1;
    images[partner] = Word::generator(partner).concat(&Word::generator(g).pow(power));
    images
}

/// Image of `w` under the `power`-fold Dehn twist along `d`, freely reduced.
pub fn dehn_twist_word(
    w: &Word,
    d: &OrientedCurve,
    power: i64,
    reference: &ReferenceStructure,
) -> Result<Word, EarthquakeError> {
    let g = twist_generator(d)?;
    let rank = reference.presentation().rank();
    if g >= rank || w.rank_used() > rank {
        return Err(WordError::OutOfRange { token: d.core().to_string(), genus: reference.genus() }.into());
    }
    Ok(w.substitute(&twist_images(rank, g, power)))
}

/// Curves `T_d^k(c)` for `k = 1..=count`, each weighted by the reciprocal of its
/// reference length and twisted by `twist`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DehnTwistRecipe {
    pub seed: Word,
    pub twisting: Word,
    pub count: usize,
    pub twist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LaminationApproximation {
    ExplicitList { multicurves: Vec<WeightedMulticurve> },
    DehnTwistRecipe(DehnTwistRecipe),
}

/// Expands the approximation into validated multicurves.
pub fn build_sequence(
    approximation: &LaminationApproximation,
    reference: &ReferenceStructure,
) -> Result<Vec<WeightedMulticurve>, EarthquakeError> {
    match approximation {
        LaminationApproximation::ExplicitList { multicurves } => Ok(multicurves.clone()),
        LaminationApproximation::DehnTwistRecipe(recipe) => {
            let d = OrientedCurve::unit(recipe.twisting.clone()).map_err(DeformError::from)?;
            (1..=recipe.count as i64)
                .map(|k| {
                    let (core, _) = dehn_twist_word(&recipe.seed, &d, k, reference)?.cyclic_reduce()?;
                    let length = minkowski::translation_length(&reference.evaluate(&core)).map_err(DeformError::from)?;
                    let curve = OrientedCurve::new(core, 1.0 / length).map_err(DeformError::from)?;
                    Ok(WeightedMulticurve::single(curve, CentralizerParameter::twist(recipe.twist), reference)?)
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converged,
    BudgetExhausted,
    Diverging,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthquakeOptions {
    /// Largest number of sequence terms evaluated.
    pub max_steps: usize,
    pub time_limit: Option<Duration>,
}

impl Default for EarthquakeOptions {
    fn default() -> Self {
        EarthquakeOptions { max_steps: 16, time_limit: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    /// `(k, max over generators of d(E_k, E_{k+1}))`, with `k` counted from 1.
    pub distances: Vec<(usize, f64)>,
    pub verdict: Verdict,
    pub final_representation: Representation,
    /// Number of sequence terms evaluated.
    pub steps: usize,
    /// Whether every crossing sequence used kept repelling and attracting endpoints apart.
    pub side_separation: bool,
}

/// Verdict for successive distances: converged when the last is below `tol` and the
/// final three do not increase; diverging when any distance exceeds ten times the
/// one two steps earlier.
pub fn verdict(distances: &[f64], tol: f64) -> Verdict {
    if distances.windows(3).any(|w| w[2] > 10.0 * w[0] && w[2] > tol) {
        return Verdict::Diverging;
    }
    let Some(&last) = distances.last() else {
        return Verdict::BudgetExhausted;
    };
    let tail = &distances[distances.len().saturating_sub(3)..];
    if last < tol && tail.windows(2).all(|w| w[1] <= w[0]) {
        Verdict::Converged
    } else {
        Verdict::BudgetExhausted
    }
}

/// `E_{l_k}(ρ)` for each term, all from the original `ρ`, with the Cauchy test.
pub fn earthquake_limit(
    rho: &Representation,
    approximation: &LaminationApproximation,
    tol: f64,
    reference: &ReferenceStructure,
) -> Result<ConvergenceReport, EarthquakeError> {
    earthquake_limit_with(rho, approximation, tol, reference, &EarthquakeOptions::default())
}

pub fn earthquake_limit_with(
    rho: &Representation,
    approximation: &LaminationApproximation,
    tol: f64,
    reference: &ReferenceStructure,
    options: &EarthquakeOptions,
) -> Result<ConvergenceReport, EarthquakeError> {
    let sequence = build_sequence(approximation, reference)?;
    if sequence.is_empty() {
        return Err(EarthquakeError::EmptySequence);
    }
    let start = Instant::now();
    let mut previous: Option<Representation> = None;
    let mut distances = Vec::new();
    let mut side_separation = true;
    let mut steps = 0;
    let mut out_of_budget = sequence.len() > options.max_steps;
    for mc in sequence.iter().take(options.max_steps) {
        if options.time_limit.is_some_and(|cap| start.elapsed() > cap) {
            out_of_budget = true;
            break;
        }
        let plan = DeformationPlan::new(mc, reference)?;
        side_separation &= plan_side_separation(&plan)?;
        let current = plan.apply(rho, 1.0)?.representation;
        if let Some(prev) = &previous {
            distances.push((steps, prev.max_generator_distance(&current).0));
        }
        previous = Some(current);
        steps += 1;
    }
    let final_representation = previous.ok_or(EarthquakeError::EmptySequence)?;
    let values: Vec<f64> = distances.iter().map(|d| d.1).collect();
    let mut v = verdict(&values, tol);
    if out_of_budget && v == Verdict::Converged {
        v = Verdict::BudgetExhausted;
    }
    Ok(ConvergenceReport { distances, verdict: v, final_representation, steps, side_separation })
}

/// Max-generator distance between deformations with component weights `weights`
/// and `weights + delta`.
pub fn weight_perturbation(
    rho: &Representation,
    multicurve: &WeightedMulticurve,
    weights: &[f64],
    delta: f64,
    reference: &ReferenceStructure,
) -> Result<f64, EarthquakeError> {
    let reweight = |shift: f64| -> Result<WeightedMulticurve, DeformError> {
        if weights.len() != multicurve.components().len() {
            return Err(DeformError::Invalid("weight count differs from component count".into()));
        }
        let components = multicurve
            .components()
            .iter()
            .zip(weights)
            .map(|(c, w)| {
                Ok(Component { curve: c.curve.with_weight(w + shift)?, parameter: c.parameter.clone() })
            })
            .collect::<Result<Vec<_>, DeformError>>()?;
        WeightedMulticurve::new(components, reference)
    };
    let a = DeformationPlan::new(&reweight(0.0)?, reference)?.apply(rho, 1.0)?.representation;
    let b = DeformationPlan::new(&reweight(delta)?, reference)?.apply(rho, 1.0)?.representation;
    Ok(a.max_generator_distance(&b).0)
}

/// For every generator segment of the plan: after orienting each crossed lift by
/// its sign, all repelling endpoints lie on one side of the segment's line and
/// all attracting endpoints on the other.
pub fn plan_side_separation(plan: &DeformationPlan) -> Result<bool, DeformError> {
    let reference = plan.reference();
    let cores: Vec<Word> = plan.multicurve().components().iter().map(|c| c.curve.core().clone()).collect();
    let axes = cores
        .iter()
        .map(|c| axis(c, reference))
        .collect::<Result<Vec<_>, _>>()?;
    let b = reference.basepoint();
    for (g, crossings) in reference.presentation().generators().iter().zip(plan.generator_crossings()) {
        if crossings.is_empty() {
            continue;
        }
        let e = reference.evaluate(&g.invert()).act(&b);
        let normal = eta_cross(&b, &e);
        let mut sides: Option<(f64, f64)> = None;
        for c in crossings {
            let to_lift = reference.evaluate(&c.conjugator).inverse();
            let (p, q) = &axes[c.component];
            let (mut rep, mut att) = (to_lift.act_boundary(p), to_lift.act_boundary(q));
            if c.sign < 0 {
                std::mem::swap(&mut rep, &mut att);
            }
            let side = (form(rep.vector(), &normal).signum(), form(att.vector(), &normal).signum());
            if side.0 == side.1 || sides.is_some_and(|s| s != side) {
                return Ok(false);
            }
            sides = Some(side);
        }
    }
    Ok(true)
}

fn eta_cross(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], -(a[0] * b[1] - a[1] * b[0])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::{default_reference, deform};

    fn curve(s: &str) -> OrientedCurve {
        OrientedCurve::parse(s, 2).unwrap()
    }

    #[test]
    fn zero_power_is_identity() {
        let r = default_reference(2).unwrap();
        let w: Word = "a1 b2 A1 b1".parse().unwrap();
        assert_eq!(dehn_twist_word(&w, &curve("a1"), 0, &r).unwrap(), w);
    }

    #[test]
    fn relator_is_preserved() {
        let r = default_reference(2).unwrap();
        let rel = r.presentation().relator();
        for d in ["a1", "b1", "a2", "b2"] {
            for k in -3..=3 {
                let img = dehn_twist_word(&rel, &curve(d), k, &r).unwrap();
                assert!(r.presentation().is_trivial(&img), "{d}^{k}: {img}");
                let m = r.fuchsian().evaluate(&img);
                assert!(m.frobenius_distance(&minkowski::GroupElement::identity(2)) < 1e-8);
            }
        }
    }

    #[test]
    fn twist_fixes_disjoint_generators() {
        let r = default_reference(2).unwrap();
        let d = curve("a1");
        for g in ["a1", "a2", "b2"] {
            let w: Word = g.parse().unwrap();
            assert_eq!(dehn_twist_word(&w, &d, 2, &r).unwrap(), w);
        }
        assert_eq!(dehn_twist_word(&"b1".parse().unwrap(), &d, 2, &r).unwrap().to_string(), "b1 a1 a1");
    }

    #[test]
    fn unsupported_twist_rejected() {
        let r = default_reference(2).unwrap();
        let w: Word = "b1".parse().unwrap();
        for d in ["a1 a2", "A1"] {
            assert!(matches!(dehn_twist_word(&w, &curve(d), 1, &r), Err(EarthquakeError::UnsupportedTwist(_))));
        }
    }

    #[test]
    fn recipe_lengths_increase_and_weights_decrease() {
        let r = default_reference(2).unwrap();
        let recipe = DehnTwistRecipe { seed: "b1".parse().unwrap(), twisting: "a1".parse().unwrap(), count: 4, twist: 1.0 };
        let seq = build_sequence(&LaminationApproximation::DehnTwistRecipe(recipe), &r).unwrap();
        assert_eq!(seq.len(), 4);
        let lengths: Vec<f64> = seq
            .iter()
            .map(|mc| minkowski::translation_length(&r.evaluate(mc.components()[0].curve.core())).unwrap())
            .collect();
        let weights: Vec<f64> = seq.iter().map(|mc| mc.components()[0].curve.weight()).collect();
        assert!(lengths.windows(2).all(|w| w[1] > w[0]));
        assert!(weights.windows(2).all(|w| w[1] < w[0]));
        for (l, w) in lengths.iter().zip(&weights) {
            assert!((l * w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_recipe_is_an_error_downstream() {
        let r = default_reference(2).unwrap();
        let recipe = DehnTwistRecipe { seed: "b1".parse().unwrap(), twisting: "a1".parse().unwrap(), count: 0, twist: 1.0 };
        let la = LaminationApproximation::DehnTwistRecipe(recipe);
        assert!(build_sequence(&la, &r).unwrap().is_empty());
        let err = earthquake_limit(r.fuchsian(), &la, 1e-6, &r).unwrap_err();
        assert_eq!(err, EarthquakeError::EmptySequence);
    }

    #[test]
    fn constant_sequence_converges_immediately() {
        let r = default_reference(2).unwrap();
        let mc = WeightedMulticurve::single(curve("a1"), CentralizerParameter::twist(0.4), &r).unwrap();
        let la = LaminationApproximation::ExplicitList { multicurves: vec![mc.clone(); 3] };
        let report = earthquake_limit(r.fuchsian(), &la, 1e-6, &r).unwrap();
        assert_eq!(report.distances, vec![(1, 0.0), (2, 0.0)]);
        assert_eq!(report.verdict, Verdict::Converged);
        assert!(report.side_separation);
        let direct = deform(r.fuchsian(), &mc, 1.0, &r).unwrap();
        assert_eq!(report.final_representation, direct);
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(verdict(&[], 1e-6), Verdict::BudgetExhausted);
        assert_eq!(verdict(&[1e-3, 1e-5, 1e-7], 1e-6), Verdict::Converged);
        assert_eq!(verdict(&[1e-3, 1e-7, 1e-6 * 0.5], 1e-6), Verdict::BudgetExhausted);
        assert_eq!(verdict(&[1e-2, 1e-1, 1.0], 1e-6), Verdict::Diverging);
    }

    #[test]
    fn budget_caps_the_sequence() {
        let r = default_reference(2).unwrap();
        let mc = WeightedMulticurve::single(curve("a1"), CentralizerParameter::twist(0.4), &r).unwrap();
        let la = LaminationApproximation::ExplicitList { multicurves: vec![mc; 4] };
        let opts = EarthquakeOptions { max_steps: 2, time_limit: None };
        let report = earthquake_limit_with(r.fuchsian(), &la, 1e-6, &r, &opts).unwrap();
        assert_eq!(report.steps, 2);
        assert_eq!(report.verdict, Verdict::BudgetExhausted);
    }
}
