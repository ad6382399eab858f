use proptest::prelude::*;
use quake_core::covering::{crossing_sequence, OrientedCurve, ReferenceStructure};
use quake_core::deform::{default_reference, deform, CentralizerParameter, DeformationPlan};
use quake_core::minkowski::group_distance;
use quake_core::surface_group::{Letter, Word};
use quake_core::verify::{self, multicurve, random_configuration};
use std::sync::OnceLock;

fn reference() -> &'static ReferenceStructure {
    static R: OnceLock<ReferenceStructure> = OnceLock::new();
    R.get_or_init(|| default_reference(2).unwrap())
}

fn words(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0usize..4, prop::bool::ANY), 0..=max_len)
        .prop_map(|ls| Word::from_letters(ls.into_iter().map(|(g, pos)| Letter::new(g, if pos { 1 } else { -1 }))))
}

const SIMPLE: [&str; 5] = ["a1", "b1", "a2", "b2", "a1 b1"];

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn deformations_are_homomorphisms(seed in any::<u64>()) {
        let r = reference();
        let (fx, mc) = random_configuration(r, seed, 2.0).unwrap();
        let out = deform(&fx.rho, &mc, 1.0, r).unwrap();
        prop_assert!(out.relator_residual() < out.relator_tolerance(), "{}", out.relator_residual());
    }

    #[test]
    fn twist_flow_composes(s in -1.0f64..1.0, t in -1.0f64..1.0, core in 0usize..5) {
        let r = reference();
        let mc = multicurve(&[SIMPLE[core]], vec![CentralizerParameter::twist(1.0)], r).unwrap();
        let res = verify::check_flow(r.fuchsian(), &mc, s, t, r).unwrap();
        prop_assert!(res.pass, "{res:?}");
    }

    #[test]
    fn evaluation_is_multiplicative(u in words(4), v in words(4)) {
        let rho = reference().fuchsian();
        let (gu, gv) = (rho.evaluate(&u), rho.evaluate(&v));
        let lhs = rho.evaluate(&u.concat(&v));
        let scale = gu.matrix().norm() * gv.matrix().norm();
        prop_assert!(lhs.frobenius_distance(&gu.mul(&gv)) < 1e-12 * scale);
    }

    #[test]
    fn inverse_segments_cross_as_often(a in words(5), core in 0usize..5) {
        let r = reference();
        let curve = OrientedCurve::parse(SIMPLE[core], 2).unwrap();
        let forward = crossing_sequence(&a, &curve, r).unwrap();
        let backward = crossing_sequence(&a.invert(), &curve, r).unwrap();
        prop_assert_eq!(forward.crossings.len(), backward.crossings.len());
        let sum = |s: &[quake_core::covering::Crossing]| s.iter().map(|c| c.sign as i64).sum::<i64>();
        prop_assert_eq!(sum(&forward.crossings), -sum(&backward.crossings));
    }

    #[test]
    fn deformed_words_match_deformed_generators(a in words(3), t in -1.5f64..1.5) {
        let r = reference();
        let mc = multicurve(&["a1", "b2"], vec![CentralizerParameter::twist(t), CentralizerParameter::twist(-t)], r).unwrap();
        let plan = DeformationPlan::new(&mc, r).unwrap();
        let direct = plan.element(r.fuchsian(), 1.0, &a).unwrap();
        let via_generators = plan.apply(r.fuchsian(), 1.0).unwrap().representation.evaluate(&a);
        // the log-based distance has a rounding floor of about ε·‖A‖²
        let floor = 10.0 * f64::EPSILON * via_generators.matrix().norm().powi(2);
        prop_assert!(group_distance(&direct, &via_generators).value < floor.max(1e-8));
    }
}

#[test]
fn zero_time_is_the_identity() {
    let r = reference();
    let mc = multicurve(&["b1"], vec![CentralizerParameter::twist(0.9)], r).unwrap();
    assert_eq!(&deform(r.fuchsian(), &mc, 0.0, r).unwrap(), r.fuchsian());
}

#[test]
fn opposite_twists_cancel() {
    let r = reference();
    let forward = multicurve(&["a2"], vec![CentralizerParameter::twist(0.7)], r).unwrap();
    let once = deform(r.fuchsian(), &forward, 1.0, r).unwrap();
    let rebased = quake_core::deform::rebase(r.fuchsian(), &forward, 1.0, r).unwrap();
    let back = deform(&once, &rebased, -1.0, r).unwrap();
    let (d, _) = back.max_generator_distance(r.fuchsian());
    assert!(d < 1e-8, "{d}");
}
