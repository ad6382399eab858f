//! Residual checks for deformations, and the fixtures they run on.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::covering::oracle::{compare, compare_topological, lift_table};
use crate::covering::{CoveringError, CrossingSequence, OrientedCurve, ReferenceStructure};
use crate::deform::{
    deform, gamma_base, CentralizerParameter, Component, DeformError, DeformationPlan, Representation,
    WeightedMulticurve,
};
use crate::earthquake::{plan_side_separation, weight_perturbation, EarthquakeError};
use crate::minkowski::{self, GroupElement};
use crate::surface_group::Word;
use crate::tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Deform(#[from] DeformError),
    #[error(transparent)]
    Earthquake(#[from] EarthquakeError),
    #[error("oracle budget exceeded: {0}")]
    OracleBudget(String),
    #[error("{0}")]
    Invalid(String),
}

impl From<CoveringError> for VerifyError {
    fn from(e: CoveringError) -> Self {
        VerifyError::Deform(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Inputs needed to replay the check; only recorded on failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, residual: f64, threshold: f64, witness: impl FnOnce() -> Value) -> Self {
        let pass = residual < threshold;
        CheckResult { name: name.into(), residual, threshold, pass, witness: (!pass).then(witness) }
    }
}

fn max_distance(a: &[GroupElement], b: &[GroupElement]) -> f64 {
    a.iter().zip(b).map(|(x, y)| minkowski::group_distance(x, y).value).fold(0.0, f64::max)
}

/// `‖ρ(R) − I‖_F` against [`tolerance::HOM`].
pub fn check_homomorphism(rep: &Representation) -> CheckResult {
    CheckResult::new("homomorphism", rep.relator_residual(), tolerance::HOM, || json!({ "representation": rep }))
}

/// `E(A⁻¹)` against `E(A)⁻¹` for each word, both from the crossings of the word itself.
pub fn check_inverse(
    rho: &Representation,
    mc: &WeightedMulticurve,
    t: f64,
    words: &[Word],
    reference: &ReferenceStructure,
) -> Result<CheckResult, VerifyError> {
    let plan = DeformationPlan::new(mc, reference)?;
    let mut worst: f64 = 0.0;
    for a in words {
        let direct = plan.element(rho, t, &a.invert())?;
        let inverted = plan.element(rho, t, a)?.inverse();
        worst = worst.max(minkowski::group_distance(&direct, &inverted).value);
    }
    Ok(CheckResult::new("inverse", worst, tolerance::INVERSE, || {
        json!({ "representation": rho, "multicurve": mc, "t": t, "words": words })
    }))
}

/// `E_t(E_s(ρ))`, the second step using the multicurve re-based on `E_s(ρ)`, against `E_{s+t}(ρ)`.
pub fn check_flow(
    rho: &Representation,
    mc: &WeightedMulticurve,
    s: f64,
    t: f64,
    reference: &ReferenceStructure,
) -> Result<CheckResult, VerifyError> {
    let plan = DeformationPlan::new(mc, reference)?;
    let first = plan.apply(rho, s)?.representation;
    let rebased = plan.rebase(rho, s)?;
    let composed = deform(&first, &rebased, t, reference)?;
    let direct = plan.apply(rho, s + t)?.representation;
    let residual = max_distance(composed.images(), direct.images());
    Ok(CheckResult::new("flow", residual, tolerance::FLOW, || {
        json!({ "representation": rho, "multicurve": mc, "s": s, "t": t })
    }))
}

/// Both orders of applying two parameter sets on the same curves. The base
/// centralizer elements must commute component by component.
pub fn check_commutativity(
    rho: &Representation,
    mc: &WeightedMulticurve,
    params_a: Vec<CentralizerParameter>,
    params_b: Vec<CentralizerParameter>,
    reference: &ReferenceStructure,
) -> Result<CheckResult, VerifyError> {
    let mc_a = mc.with_parameters(params_a)?;
    let mc_b = mc.with_parameters(params_b)?;
    for (ca, cb) in mc_a.components().iter().zip(mc_b.components()) {
        let ga = gamma_base(rho, &ca.curve, &ca.parameter, 1.0)?;
        let gb = gamma_base(rho, &cb.curve, &cb.parameter, 1.0)?;
        let defect = ga.commutator_defect(&gb);
        if defect > tolerance::COMMUTE {
            return Err(DeformError::NonCommutingParameters(defect).into());
        }
    }
    let plan_a = DeformationPlan::new(&mc_a, reference)?;
    let plan_b = DeformationPlan::new(&mc_b, reference)?;
    let after_a = plan_a.apply(rho, 1.0)?.representation;
    let ab = deform(&after_a, &plan_a.transport(rho, 1.0, &mc_b)?, 1.0, reference)?;
    let after_b = plan_b.apply(rho, 1.0)?.representation;
    let ba = deform(&after_b, &plan_b.transport(rho, 1.0, &mc_a)?, 1.0, reference)?;
    let residual = max_distance(ab.images(), ba.images());
    Ok(CheckResult::new("commutativity", residual, tolerance::FLOW, || {
        json!({ "representation": rho, "first": mc_a, "second": mc_b })
    }))
}

/// Deformation from a basepoint moved by `offset` (in the tangent plane at the
/// origin) against `g·E·g⁻¹`, `g` the product over the lifts between the two basepoints.
pub fn check_basepoint(
    rho: &Representation,
    mc: &WeightedMulticurve,
    offset: (f64, f64),
    reference: &ReferenceStructure,
) -> Result<CheckResult, VerifyError> {
    let moved = reference.with_basepoint_offset(offset.0, offset.1);
    let plan = DeformationPlan::new(mc, reference)?;
    let original = plan.apply(rho, 1.0)?.representation;
    let shifted = DeformationPlan::new(mc, &moved)?.apply(rho, 1.0)?.representation;
    let g = plan.path_conjugator(rho, 1.0, &reference.basepoint(), &moved.basepoint())?;
    let predicted: Vec<GroupElement> = original.images().iter().map(|e| e.conjugate_by(&g)).collect();
    let residual = max_distance(shifted.images(), &predicted);
    Ok(CheckResult::new("basepoint", residual, tolerance::BASEPOINT, || {
        json!({ "representation": rho, "multicurve": mc, "offset": [offset.0, offset.1] })
    }))
}

/// Radius and word length of the brute-force lift table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSettings {
    pub radius: f64,
    pub word_radius: usize,
    /// Positions are diagnostic; they only need to agree to this fraction of the segment.
    pub position_tolerance: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings { radius: 3.5, word_radius: 8, position_tolerance: 1e-4 }
    }
}

/// Crossing sequences of `a` against every curve, from one tube search.
fn search_sequences(
    reference: &ReferenceStructure,
    a: &Word,
    curves: &[OrientedCurve],
    prepared: &[&crate::covering::PreparedCurve],
) -> Result<Vec<CrossingSequence>, VerifyError> {
    let seg = reference.word_crossings(a, prepared)?;
    if !seg.certificate.is_complete(reference.cover_radius()) {
        return Err(VerifyError::OracleBudget(format!("tube search for `{a}` is not certified complete")));
    }
    Ok(curves
        .iter()
        .enumerate()
        .map(|(ci, c)| CrossingSequence {
            curve: c.clone(),
            element: a.clone(),
            crossings: seg.crossings.iter().filter(|(k, _)| *k == ci).map(|(_, x)| x.clone()).collect(),
            certificate: seg.certificate,
        })
        .collect())
}

const WITNESS_LIMIT: usize = 20;

/// Mismatches between the tube search and the brute-force lift table.
pub fn check_crossing_oracle(
    words: &[Word],
    curves: &[OrientedCurve],
    reference: &ReferenceStructure,
    settings: &OracleSettings,
) -> Result<CheckResult, VerifyError> {
    let prepared = curves.iter().map(|c| reference.prepare(c)).collect::<Result<Vec<_>, _>>()?;
    let prepared_refs: Vec<_> = prepared.iter().collect();
    let tables = curves
        .iter()
        .map(|c| lift_table(reference, c, settings.radius, settings.word_radius))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(t) = tables.iter().find(|t| !t.is_saturated()) {
        return Err(VerifyError::OracleBudget(format!(
            "lift table for `{}` not saturated at word length {}",
            t.curve().core(),
            settings.word_radius
        )));
    }
    let mut witnesses = Vec::new();
    let mut mismatches = 0usize;
    for a in words {
        let sequences = search_sequences(reference, a, curves, &prepared_refs)?;
        for (seq, table) in sequences.iter().zip(&tables) {
            let oracle = table.crossings(reference, a)?;
            if !oracle.covered {
                return Err(VerifyError::OracleBudget(format!(
                    "segment of `{a}` needs table radius {:.3}",
                    oracle.required_radius
                )));
            }
            let cmp = compare(reference.presentation(), seq, &oracle, settings.position_tolerance);
            mismatches += cmp.mismatches;
            witnesses.extend(cmp.witnesses.into_iter().take(WITNESS_LIMIT.saturating_sub(witnesses.len())));
        }
    }
    Ok(CheckResult::new("crossing-oracle", mismatches as f64, tolerance::MISMATCH, || {
        json!({ "words": words.len(), "curves": curves, "settings": settings, "mismatches": witnesses })
    }))
}

/// Coset and sign sequences in two reference structures with the same marking.
pub fn check_reference_independence(
    words: &[Word],
    curves: &[OrientedCurve],
    first: &ReferenceStructure,
    second: &ReferenceStructure,
) -> Result<CheckResult, VerifyError> {
    let p1 = curves.iter().map(|c| first.prepare(c)).collect::<Result<Vec<_>, _>>()?;
    let p2 = curves.iter().map(|c| second.prepare(c)).collect::<Result<Vec<_>, _>>()?;
    let (r1, r2): (Vec<_>, Vec<_>) = (p1.iter().collect(), p2.iter().collect());
    let mut witnesses = Vec::new();
    let mut mismatches = 0usize;
    for a in words {
        let s1 = search_sequences(first, a, curves, &r1)?;
        let s2 = search_sequences(second, a, curves, &r2)?;
        for (x, y) in s1.iter().zip(&s2) {
            let cmp = compare_topological(first.presentation(), x, y);
            mismatches += cmp.mismatches;
            witnesses.extend(cmp.witnesses.into_iter().take(WITNESS_LIMIT.saturating_sub(witnesses.len())));
        }
    }
    Ok(CheckResult::new("reference-independence", mismatches as f64, tolerance::MISMATCH, || {
        json!({ "words": words.len(), "curves": curves, "mismatches": witnesses })
    }))
}

/// `u(AB) = Ad(ρ(B)⁻¹)u(A) + u(B)`.
pub fn check_cocycle(
    rho: &Representation,
    mc: &WeightedMulticurve,
    a: &Word,
    b: &Word,
    reference: &ReferenceStructure,
) -> Result<CheckResult, VerifyError> {
    let plan = DeformationPlan::new(mc, reference)?;
    let uab = plan.cocycle(rho, &a.concat(b))?;
    let ua = plan.cocycle(rho, a)?;
    let ub = plan.cocycle(rho, b)?;
    let predicted = ua.adjoint(&rho.evaluate(b).inverse()).add(&ub);
    let residual = uab.sub(&predicted).norm();
    Ok(CheckResult::new("cocycle", residual, tolerance::COCYCLE, || {
        json!({ "representation": rho, "multicurve": mc, "a": a, "b": b })
    }))
}

/// Errors `‖(1/h)·log(ρ(A)⁻¹E^h(A)) − u(A)‖` at `h` and `h/2`.
pub fn first_order_errors(
    rho: &Representation,
    mc: &WeightedMulticurve,
    a: &Word,
    h: f64,
    reference: &ReferenceStructure,
) -> Result<(f64, f64), VerifyError> {
    let plan = DeformationPlan::new(mc, reference)?;
    let u = plan.cocycle(rho, a)?;
    let base = rho.evaluate(a).inverse();
    let error = |step: f64| -> Result<f64, VerifyError> {
        let moved = plan.element(rho, step, a)?;
        let log = minkowski::log_group(&base.mul(&moved)).map_err(DeformError::from)?;
        Ok(log.scale(1.0 / step).sub(&u).norm())
    };
    Ok((error(h)?, error(0.5 * h)?))
}

/// Below this the finite-difference error is rounding, and `u(A)` is exact.
const FIRST_ORDER_FLOOR: f64 = 1e-9;

/// The finite-difference error halves with `h`.
pub fn check_first_order(
    rho: &Representation,
    mc: &WeightedMulticurve,
    a: &Word,
    h: f64,
    reference: &ReferenceStructure,
) -> Result<CheckResult, VerifyError> {
    let (e1, e2) = first_order_errors(rho, mc, a, h, reference)?;
    let residual = if e1 < FIRST_ORDER_FLOOR { 0.0 } else { (e1 / e2 / 2.0 - 1.0).abs() };
    Ok(CheckResult::new("first-order", residual, tolerance::HALVING, || {
        json!({ "representation": rho, "multicurve": mc, "a": a, "h": h, "errors": [e1, e2] })
    }))
}

/// `|tr E(ρ)(cᵏ) − tr ρ(cᵏ)|` for every component `c` and `k = 1..=powers`, with
/// `E(ρ)` evaluated on the deformed generator images.
pub fn check_curve_trace(
    rho: &Representation,
    mc: &WeightedMulticurve,
    powers: i64,
    reference: &ReferenceStructure,
) -> Result<CheckResult, VerifyError> {
    let deformed = deform(rho, mc, 1.0, reference)?;
    let mut worst: f64 = 0.0;
    for comp in mc.components() {
        for k in 1..=powers {
            let ck = comp.curve.core().pow(k);
            worst = worst.max((deformed.evaluate(&ck).trace() - rho.evaluate(&ck).trace()).abs());
        }
    }
    Ok(CheckResult::new("curve-trace", worst, tolerance::TRACE, || {
        json!({ "representation": rho, "multicurve": mc, "powers": powers })
    }))
}

/// Weight perturbation distance scales linearly: `d(δ)/d(δ/2)` within a factor 2 of 2.
pub fn check_weight_scaling(
    rho: &Representation,
    mc: &WeightedMulticurve,
    delta: f64,
    reference: &ReferenceStructure,
) -> Result<CheckResult, VerifyError> {
    let weights: Vec<f64> = mc.components().iter().map(|c| c.curve.weight()).collect();
    let d1 = weight_perturbation(rho, mc, &weights, delta, reference)?;
    let d2 = weight_perturbation(rho, mc, &weights, 0.5 * delta, reference)?;
    let residual = (d1 / d2 / 2.0).log2().abs();
    let residual = if residual.is_nan() { f64::INFINITY } else { residual };
    Ok(CheckResult::new("weight-scaling", residual, tolerance::LINEAR_SCALING, || {
        json!({ "representation": rho, "multicurve": mc, "delta": delta, "distances": [d1, d2] })
    }))
}

/// Reversing every curve leaves the deformation unchanged.
pub fn check_orientation(
    rho: &Representation,
    mc: &WeightedMulticurve,
    reference: &ReferenceStructure,
) -> Result<CheckResult, VerifyError> {
    let forward = deform(rho, mc, 1.0, reference)?;
    let backward = deform(rho, &mc.reversed(), 1.0, reference)?;
    let residual = max_distance(forward.images(), backward.images());
    Ok(CheckResult::new("orientation", residual, tolerance::FLOW, || {
        json!({ "representation": rho, "multicurve": mc })
    }))
}

/// Signed lifts crossed by each generator segment separate repelling from attracting endpoints.
pub fn check_side_separation(
    mc: &WeightedMulticurve,
    reference: &ReferenceStructure,
) -> Result<CheckResult, VerifyError> {
    let plan = DeformationPlan::new(mc, reference)?;
    let ok = plan_side_separation(&plan)?;
    Ok(CheckResult::new("side-separation", if ok { 0.0 } else { 1.0 }, tolerance::MISMATCH, || {
        json!({ "multicurve": mc })
    }))
}

/// A representation to check, with an n = 4 plane selector for rotations.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub rho: Representation,
    /// Spatial direction transverse to the image of the Fuchsian plane.
    pub plane: Option<Vec<f64>>,
}

impl Fixture {
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// A centralizer parameter with the fixture's plane selector attached to any rotation.
    pub fn parameter(&self, translation: f64, angle: f64) -> CentralizerParameter {
        let p = CentralizerParameter::twist(translation);
        if self.dim() < 3 || angle == 0.0 {
            return p;
        }
        let plane = if self.dim() == 4 { self.plane.clone() } else { None };
        p.with_rotation(angle, plane)
    }
}

pub fn fuchsian_fixture(reference: &ReferenceStructure) -> Fixture {
    Fixture { name: "fuchsian".into(), rho: reference.fuchsian().clone(), plane: None }
}

/// The reference embedded into SO⁺(n,1), conjugated by a seeded random isometry,
/// and bent by `bend` along a₁ when `n ≥ 3`.
pub fn bent_fixture(
    reference: &ReferenceStructure,
    n: usize,
    bend: f64,
    seed: u64,
) -> Result<Fixture, VerifyError> {
    bent_fixture_along(reference, n, "a1", bend, seed)
}

/// As [`bent_fixture`], bending along the simple closed curve `curve`.
pub fn bent_fixture_along(
    reference: &ReferenceStructure,
    n: usize,
    curve: &str,
    bend: f64,
    seed: u64,
) -> Result<Fixture, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = minkowski::random_isometry(&mut rng, n, 0.5);
    let rho = reference.fuchsian().embed(n).map_err(DeformError::from)?.conjugate(&g);
    let plane = (n >= 3).then(|| {
        let mut e = DVector::zeros(n + 1);
        e[n - 1] = 1.0;
        g.act(&e).iter().copied().collect::<Vec<f64>>()
    });
    let mut fixture = Fixture { name: format!("bent-n{n}-seed{seed}"), rho, plane };
    if n >= 3 && bend != 0.0 {
        let core = OrientedCurve::parse(curve, reference.genus())?;
        let mc = WeightedMulticurve::single(core, fixture.parameter(0.0, bend), reference)?;
        fixture.rho = deform(&fixture.rho, &mc, 1.0, reference)?;
    }
    Ok(fixture)
}

/// Simple multicurves on the genus-2 surface used by randomized checks.
pub const SAMPLE_MULTICURVES: &[&[&str]] =
    &[&["a1"], &["b1"], &["a2"], &["b2"], &["a1", "a2"], &["b1", "b2"], &["a1", "b2"], &["a1 b1"]];

/// A validated multicurve from words, with unit weights and the given parameters.
pub fn multicurve(
    cores: &[&str],
    parameters: Vec<CentralizerParameter>,
    reference: &ReferenceStructure,
) -> Result<WeightedMulticurve, VerifyError> {
    let components = cores
        .iter()
        .zip(parameters)
        .map(|(w, parameter)| Ok(Component { curve: OrientedCurve::parse(w, reference.genus())?, parameter }))
        .collect::<Result<Vec<_>, CoveringError>>()?;
    Ok(WeightedMulticurve::new(components, reference)?)
}

/// A seeded random configuration: Fuchsian or bent fixture in dimension 2, 3 or
/// 4, a sample multicurve, and twist and bend magnitudes at most `magnitude`.
pub fn random_configuration(
    reference: &ReferenceStructure,
    seed: u64,
    magnitude: f64,
) -> Result<(Fixture, WeightedMulticurve), VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4usize);
    let fixture = if n == 2 {
        fuchsian_fixture(reference)
    } else {
        let bend = rng.random_range(-0.3..0.3);
        bent_fixture(reference, n, bend, rng.random())?
    };
    let cores = SAMPLE_MULTICURVES[rng.random_range(0..SAMPLE_MULTICURVES.len())];
    let parameters = cores
        .iter()
        .map(|_| {
            let t = rng.random_range(-magnitude..magnitude);
            let angle = if n >= 3 { rng.random_range(-magnitude..magnitude) } else { 0.0 };
            fixture.parameter(t, angle)
        })
        .collect();
    let mc = multicurve(cores, parameters, reference)?;
    Ok((fixture, mc))
}

/// Which checks [`run_suite`] performs, and how hard.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOptions {
    /// Check names to run; all when `None`.
    pub checks: Option<Vec<String>>,
    pub seed: u64,
    pub random_trials: usize,
    /// Longest word compared against the crossing oracle.
    pub oracle_word_length: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { checks: None, seed: 0, random_trials: 5, oracle_word_length: 3 }
    }
}

pub const CHECK_NAMES: &[&str] = &[
    "homomorphism",
    "inverse",
    "flow",
    "commutativity",
    "basepoint",
    "crossing-oracle",
    "cocycle",
    "first-order",
    "curve-trace",
    "weight-scaling",
    "orientation",
    "side-separation",
];

/// Runs the selected checks on seeded fixtures over a genus-2 reference.
pub fn run_suite(reference: &ReferenceStructure, options: &SuiteOptions) -> Result<Vec<CheckResult>, VerifyError> {
    if reference.genus() != 2 {
        return Err(VerifyError::Invalid("the verify suite uses genus-2 fixtures".into()));
    }
    if let Some(unknown) = options.checks.iter().flatten().find(|c| !CHECK_NAMES.contains(&c.as_str())) {
        return Err(VerifyError::Invalid(format!("unknown check `{unknown}`")));
    }
    let wanted = |name: &str| options.checks.as_ref().is_none_or(|c| c.iter().any(|x| x == name));
    let word = |s: &str| -> Word { s.parse().expect("fixed word") };
    let fuchsian = fuchsian_fixture(reference);
    let rho = &fuchsian.rho;
    let twist_a1 = multicurve(&["a1"], vec![CentralizerParameter::twist(0.3)], reference)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut results = Vec::new();

    if wanted("homomorphism") {
        results.push(check_homomorphism(rho));
        for trial in 0..options.random_trials {
            let (fx, mc) = random_configuration(reference, options.seed.wrapping_add(trial as u64), 2.0)?;
            let mut r = check_homomorphism(&deform(&fx.rho, &mc, 1.0, reference)?);
            r.name = format!("homomorphism[{}]", fx.name);
            results.push(r);
        }
    }
    if wanted("inverse") {
        let words = [word("b1"), word("a1 b1 a2"), word("B2 a1 b1 b1")];
        results.push(check_inverse(rho, &twist_a1, 1.0, &words, reference)?);
    }
    if wanted("flow") {
        results.push(check_flow(rho, &twist_a1, 0.3, 0.3, reference)?);
        results.push(check_flow(rho, &twist_a1, 0.3, -0.3, reference)?);
    }
    if wanted("commutativity") {
        let fx = bent_fixture(reference, 3, 0.1, options.seed)?;
        let a1 = multicurve(&["a1"], vec![CentralizerParameter::default()], reference)?;
        results.push(check_commutativity(
            &fx.rho,
            &a1,
            vec![fx.parameter(0.4, 0.0)],
            vec![fx.parameter(0.0, 0.3)],
            reference,
        )?);
        let pair = multicurve(&["a1", "a2"], vec![CentralizerParameter::default(); 2], reference)?;
        results.push(check_commutativity(
            rho,
            &pair,
            vec![CentralizerParameter::twist(0.5), CentralizerParameter::twist(0.0)],
            vec![CentralizerParameter::twist(0.0), CentralizerParameter::twist(-0.7)],
            reference,
        )?);
    }
    if wanted("basepoint") {
        for _ in 0..options.random_trials {
            let offset = (rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
            results.push(check_basepoint(rho, &twist_a1, offset, reference)?);
        }
    }
    if wanted("crossing-oracle") {
        let words = reference.presentation().words_up_to(options.oracle_word_length);
        let curves = ["a1", "b1", "a2"]
            .iter()
            .map(|c| OrientedCurve::parse(c, 2))
            .collect::<Result<Vec<_>, _>>()?;
        results.push(check_crossing_oracle(&words, &curves, reference, &OracleSettings::default())?);
    }
    if wanted("cocycle") {
        let pair = multicurve(&["a1", "b2"], vec![CentralizerParameter::twist(0.4); 2], reference)?;
        results.push(check_cocycle(rho, &pair, &word("b1 a2"), &word("a1 b1"), reference)?);
        results.push(check_cocycle(rho, &pair, &word("b1"), &word("a2"), reference)?);
    }
    if wanted("first-order") {
        let pair = multicurve(&["a1", "b2"], vec![CentralizerParameter::twist(0.4); 2], reference)?;
        results.push(check_first_order(rho, &pair, &word("b1 a2 a1 b1"), 1e-4, reference)?);
    }
    if wanted("curve-trace") {
        results.push(check_curve_trace(rho, &twist_a1, 5, reference)?);
        let mixed = multicurve(&["a1 b1"], vec![CentralizerParameter::twist(0.6)], reference)?;
        // tr (a1 b1)^k reaches 4e6 at k = 5, where rounding alone exceeds the threshold
        results.push(check_curve_trace(rho, &mixed, 3, reference)?);
        let fx = bent_fixture(reference, 3, 0.2, options.seed)?;
        let bend_b2 = multicurve(&["b2"], vec![fx.parameter(0.5, 0.7)], reference)?;
        results.push(check_curve_trace(&fx.rho, &bend_b2, 5, reference)?);
    }
    if wanted("weight-scaling") {
        results.push(check_weight_scaling(rho, &twist_a1, 1e-3, reference)?);
    }
    if wanted("orientation") {
        results.push(check_orientation(rho, &twist_a1, reference)?);
    }
    if wanted("side-separation") {
        let mc = multicurve(&["a1 b1"], vec![CentralizerParameter::twist(1.0)], reference)?;
        results.push(check_side_separation(&mc, reference)?);
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::default_reference;

    #[test]
    fn corrupted_generator_fails_homomorphism() {
        let r = default_reference(2).unwrap();
        assert!(check_homomorphism(r.fuchsian()).pass);
        let mut m = r.fuchsian().image(0).matrix().clone();
        m[(0, 0)] += 1e-3;
        let mut images = r.fuchsian().images().to_vec();
        images[0] = GroupElement::from_matrix_unchecked(m);
        let bad = Representation::new_unchecked(*r.presentation(), images).unwrap();
        let res = check_homomorphism(&bad);
        assert!(!res.pass);
        assert!(res.witness.is_some());
    }

    #[test]
    fn trivial_flows() {
        let r = default_reference(2).unwrap();
        let mc = multicurve(&["a1"], vec![CentralizerParameter::twist(1.0)], &r).unwrap();
        let zero = check_flow(r.fuchsian(), &mc, 0.0, 0.4, &r).unwrap();
        assert!(zero.residual < 1e-12);
        let back = check_flow(r.fuchsian(), &mc, 0.4, -0.4, &r).unwrap();
        assert!(back.pass, "{back:?}");
    }

    #[test]
    fn empty_multicurve_has_zero_cocycle() {
        let r = default_reference(2).unwrap();
        let mc = WeightedMulticurve::empty();
        let a: Word = "b1 a2".parse().unwrap();
        let b: Word = "a1".parse().unwrap();
        assert_eq!(check_cocycle(r.fuchsian(), &mc, &a, &b, &r).unwrap().residual, 0.0);
        assert_eq!(check_first_order(r.fuchsian(), &mc, &a, 1e-4, &r).unwrap().residual, 0.0);
    }

    #[test]
    fn single_crossing_cocycle_is_the_generator() {
        let r = default_reference(2).unwrap();
        let mc = multicurve(&["a1"], vec![CentralizerParameter::twist(0.7)], &r).unwrap();
        let plan = DeformationPlan::new(&mc, &r).unwrap();
        let b1: Word = "b1".parse().unwrap();
        let u = plan.cocycle(r.fuchsian(), &b1).unwrap();
        let crossings = plan.crossings(&b1).unwrap();
        assert_eq!(crossings.len(), 1);
        let (p, q) = minkowski::fixed_points(&r.fuchsian().evaluate(&"a1".parse().unwrap())).unwrap();
        let x = minkowski::lie_generator(&p, &q).unwrap().scale(0.7 * crossings[0].sign as f64);
        assert!(u.sub(&x).norm() < 1e-12);
        let (e1, _) = first_order_errors(r.fuchsian(), &mc, &b1, 1e-4, &r).unwrap();
        assert!(e1 < 1e-9);
    }

    #[test]
    fn basepoint_in_the_same_component_needs_no_conjugator() {
        let r = default_reference(2).unwrap();
        let mc = multicurve(&["a1"], vec![CentralizerParameter::twist(0.5)], &r).unwrap();
        let plan = DeformationPlan::new(&mc, &r).unwrap();
        let moved = r.with_basepoint_offset(0.05, 0.02);
        assert!(plan.path_crossings(&r.basepoint(), &moved.basepoint()).unwrap().is_empty());
        let res = check_basepoint(r.fuchsian(), &mc, (0.05, 0.02), &r).unwrap();
        assert!(res.residual < 1e-12, "{res:?}");
    }

    #[test]
    fn empty_word_set_passes_the_oracle_check() {
        let r = default_reference(2).unwrap();
        let curves = vec![OrientedCurve::parse("a1", 2).unwrap()];
        let res = check_crossing_oracle(&[], &curves, &r, &OracleSettings::default()).unwrap();
        assert!(res.pass);
        assert_eq!(res.residual, 0.0);
    }

    #[test]
    fn shrunken_search_margin_is_caught() {
        let r = default_reference(2).unwrap();
        let sabotaged = r.with_search_margin(-1.5);
        let curves = vec![OrientedCurve::parse("b1", 2).unwrap(), OrientedCurve::parse("a2", 2).unwrap()];
        let words = r.presentation().words_up_to(3);
        match check_crossing_oracle(&words, &curves, &sabotaged, &OracleSettings::default()) {
            Ok(res) => {
                assert!(!res.pass);
                assert!(res.witness.unwrap()["mismatches"].as_array().is_some_and(|w| !w.is_empty()));
            }
            Err(e) => assert!(matches!(e, VerifyError::OracleBudget(_)), "{e}"),
        }
    }

    #[test]
    fn noncommuting_planes_rejected() {
        let r = default_reference(2).unwrap();
        let fx = bent_fixture(&r, 4, 0.0, 3).unwrap();
        let mc = multicurve(&["a1"], vec![CentralizerParameter::default()], &r).unwrap();
        let h1 = fx.plane.clone().unwrap();
        // a second selector inside the complement, not parallel to the first
        let mut e = DVector::zeros(5);
        e[2] = 1.0;
        let h2: Vec<f64> = fx.rho.image(0).act(&e).iter().zip(&h1).map(|(a, b)| a + 0.5 * b).collect();
        let pa = CentralizerParameter::bend(0.3).with_rotation(0.3, Some(h1));
        let pb = CentralizerParameter::bend(0.2).with_rotation(0.2, Some(h2));
        let err = check_commutativity(&fx.rho, &mc, vec![pa], vec![pb], &r).unwrap_err();
        assert!(matches!(err, VerifyError::Deform(DeformError::NonCommutingParameters(_))), "{err}");
    }

    #[test]
    fn default_suite_passes() {
        let r = default_reference(2).unwrap();
        let results = run_suite(&r, &SuiteOptions::default()).unwrap();
        for res in &results {
            assert!(res.pass, "{res:?}");
        }
        assert!(results.len() > CHECK_NAMES.len());
    }
}
