//! Randomized invariants over generated surfaces, models and connections.

use std::collections::BTreeSet;
use std::sync::Arc;

use bdiv_core::bdivisor::{delta_divisor, partial_discrepancy_at, CartierBDivisor, Region};
use bdiv_core::bounds::{hom_irr_bound_check, recognition_obstruction};
use bdiv_core::charcycle::{
    cc_connection, cycle_from_euler, euler_of_cycle, global_chi, index_pairing, LagrangianCycle,
};
use bdiv_core::connection::{ExpConnection, IrrAnalysis};
use bdiv_core::fixtures::{random_connection, random_pair, random_scenario};
use bdiv_core::geometry::{DPosition, DivisorOnX, MarkedPoint, SurfacePair};
use bdiv_core::scenario::Scenario;
use bdiv_core::valtree::{evaluate_on_x, probe_valuations, Branch, DivValuation, Model, ModelDivisor};
use bdiv_core::Q;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

fn random_model(rng: &mut ChaCha8Rng, pair: &Arc<SurfacePair>, steps: usize) -> Model {
    let mut m = Model::new(pair.clone());
    for k in 0..steps {
        let mut centers = m.double_points();
        for b in m.branches() {
            centers.push(m.free_point(&b, &format!("t{k}")).expect("free point"));
        }
        let c = centers.choose(rng).expect("some center").clone();
        m = m.blow_up(c, format!("E{}", k + 1)).expect("fresh center");
    }
    m
}

fn random_divisor(rng: &mut ChaCha8Rng, pair: &SurfacePair, d_only: bool) -> DivisorOnX {
    let curves: Vec<&str> = pair
        .curves
        .iter()
        .filter(|c| !d_only || c.in_d)
        .map(|c| c.id.as_str())
        .collect();
    DivisorOnX::from_ints(
        curves
            .into_iter()
            .map(|c| (c, rng.gen_range(-3..=3)))
            .collect::<Vec<_>>(),
    )
}

fn random_cycle(rng: &mut ChaCha8Rng, pair: &SurfacePair) -> LagrangianCycle {
    let mut z = LagrangianCycle {
        zero_section: rng.gen_range(-3..=3),
        ..Default::default()
    };
    for c in pair.d_curves() {
        z.add_curve(&c.id, rng.gen_range(-3..=3));
    }
    for p in &pair.points {
        if pair.position(p) != DPosition::OffD {
            z.add_point(&p.id, rng.gen_range(-3..=3));
        }
    }
    z
}

fn setup(seed: u64) -> (ChaCha8Rng, Arc<SurfacePair>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pair = Arc::new(random_pair(&mut rng));
    (rng, pair)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn euler_characteristic_closes_over_strata(seed in any::<u64>()) {
        let (_, pair) = setup(seed);
        let curves: i64 = pair
            .d_curves()
            .map(|c| pair.stratum_euler(&BTreeSet::from([c.id.clone()])).unwrap())
            .sum();
        let doubles = pair.d_singular_points().count() as i64;
        prop_assert_eq!(pair.chi_top, pair.euler_open_complement() + curves + doubles);
    }

    #[test]
    fn complement_depends_only_on_the_d_flags(seed in any::<u64>(), which in 0usize..6) {
        let (_, pair) = setup(seed);
        let i = which % pair.curves.len();
        let toggle = |p: &SurfacePair| {
            let mut curves = p.curves.clone();
            curves[i].in_d = !curves[i].in_d;
            SurfacePair::new(p.chi_top, curves, p.points.clone())
        };
        if let Ok(once) = toggle(&pair) {
            let twice = toggle(&once).unwrap();
            prop_assert_eq!(twice.euler_open_complement(), pair.euler_open_complement());
        }
    }

    #[test]
    fn exceptional_multiplicity_of_d_is_at_most_two(seed in any::<u64>(), steps in 1usize..8) {
        let (mut rng, pair) = setup(seed);
        let m = random_model(&mut rng, &pair, steps);
        let smooth_d = pair.d_singular_points().next().is_none();
        for n in m.nodes() {
            let d = n.d_branches(&pair);
            prop_assert!(d <= 2);
            // A smooth D has at most one branch through any point of X.
            if smooth_d && n.depth() == 1 {
                prop_assert!(d <= 1);
            }
        }
    }

    #[test]
    fn pullback_is_linear_and_pushes_forward_to_itself(seed in any::<u64>(), steps in 0usize..7, a in -3i64..=3, b in -3i64..=3) {
        let (mut rng, pair) = setup(seed);
        let w = random_model(&mut rng, &pair, steps);
        let z = random_divisor(&mut rng, &pair, false);
        let v = random_divisor(&mut rng, &pair, false);
        let x = Model::new(pair.clone());
        let up = |d: &DivisorOnX| ModelDivisor::on_x(pair.clone(), d).unwrap().total_transform(&w).unwrap();
        let combo = z.scaled(q(a)).plus(&v.scaled(q(b)));
        let lhs = up(&combo);
        let rhs = up(&z).scaled(q(a)).plus(&up(&v).scaled(q(b))).unwrap();
        for br in w.branches() {
            prop_assert_eq!(lhs.coeff(&br), rhs.coeff(&br));
        }
        prop_assert_eq!(up(&z).pushforward(&x).unwrap().to_x(), z.clone());
        // The coefficient of a node is the valuation, whatever model contains it.
        for n in w.nodes() {
            let val = DivValuation::Exceptional(n.clone());
            prop_assert_eq!(up(&z).coeff(&Branch::Exc(n.clone())), evaluate_on_x(&z, &val));
            let alone = Model::chain_model(pair.clone(), n).with_chain(n);
            let there = ModelDivisor::on_x(pair.clone(), &z).unwrap().total_transform(&alone).unwrap();
            prop_assert_eq!(there.coeff(&Branch::Exc(n.clone())), evaluate_on_x(&z, &val));
        }
    }

    #[test]
    fn delta_vanishes_on_pullback_systems(seed in any::<u64>()) {
        let (mut rng, pair) = setup(seed);
        let z = CartierBDivisor::from_x(pair.clone(), &random_divisor(&mut rng, &pair, true)).unwrap();
        prop_assert!(delta_divisor(&z).unwrap().is_empty());
        let w = random_model(&mut rng, &pair, 3);
        for v in probe_valuations(&w, 1) {
            prop_assert_eq!(partial_discrepancy_at(&z, &v).unwrap(), q(0));
        }
    }

    #[test]
    fn index_pairing_is_linear(seed in any::<u64>(), k in -4i64..=4) {
        let (mut rng, pair) = setup(seed);
        let a = random_cycle(&mut rng, &pair);
        let b = random_cycle(&mut rng, &pair);
        let ip = |z: &LagrangianCycle| index_pairing(&pair, z).unwrap();
        prop_assert_eq!(ip(&a.plus(&b)), ip(&a) + ip(&b));
        prop_assert_eq!(ip(&a.scaled(k)), k * ip(&a));
    }

    #[test]
    fn euler_morphism_is_invertible(seed in any::<u64>()) {
        let (mut rng, pair) = setup(seed);
        let z = random_cycle(&mut rng, &pair);
        let f = euler_of_cycle(&pair, &z).unwrap();
        prop_assert_eq!(cycle_from_euler(&pair, &f).unwrap(), z);
    }

    #[test]
    fn hom_bound_on_random_pairs(seed in any::<u64>()) {
        let (mut rng, pair) = setup(seed);
        let m1 = random_connection(&mut rng, &pair).build();
        let m2 = random_connection(&mut rng, &pair).build();
        for (a, b) in [(&m1, &m2), (&m2, &m1), (&m1, &m1)] {
            let r = hom_irr_bound_check(a, b, &pair);
            prop_assert!(r.holds, "{:?}", r);
        }
    }

    #[test]
    fn sup_formula_for_a_single_boundary_curve(seed in any::<u64>()) {
        let (mut rng, pair) = setup(seed);
        let mut curves = pair.curves.clone();
        for (i, c) in curves.iter_mut().enumerate() {
            c.in_d = i == 0;
        }
        let pair = Arc::new(SurfacePair::new(pair.chi_top, curves, pair.points.clone()).unwrap());
        let m = random_connection(&mut rng, &pair).build();
        let d = DivisorOnX::from_ints([(pair.curves[0].id.as_str(), 1)]);
        let along = m.irr_along(&DivValuation::PrimeOnX(pair.curves[0].id.clone()));
        let model = m.resolve_turning_points(&pair, 64).unwrap();
        let mut sup = q(along);
        for v in probe_valuations(&model, 2) {
            let dv = evaluate_on_x(&d, &v);
            if dv > q(0) {
                let ratio = q(m.irr_along(&v)) / dv;
                prop_assert!(ratio <= q(along), "{:?}: {} > {}", v, ratio, along);
                sup = sup.max(ratio);
            }
        }
        prop_assert_eq!(sup, q(along));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cc_depends_only_on_rank_and_irregularity(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let m = &s.connections["M"];
        // Doubling every coefficient tag keeps the exponents of all values
        // and of all their differences.
        let retagged = ExpConnection::new(
            m.summands
                .iter()
                .map(|e| {
                    let mut e = e.clone();
                    e.value = e.value.plus(&e.value);
                    e
                })
                .collect(),
        );
        let a = IrrAnalysis::new(m, &s.pair, 64).unwrap();
        let b = IrrAnalysis::new(&retagged, &s.pair, 64).unwrap();
        for v in probe_valuations(a.model(), 2) {
            prop_assert_eq!(m.irr_along(&v), retagged.irr_along(&v));
        }
        prop_assert_eq!(cc_connection(&a).unwrap(), cc_connection(&b).unwrap());
    }

    #[test]
    fn marking_a_point_on_one_curve_leaves_chi_unchanged(seed in any::<u64>(), which in 0usize..6) {
        let s = random_scenario(seed);
        let a = IrrAnalysis::new(&s.connections["M"], &s.pair, 64).unwrap();
        let mut file = s.file().clone();
        let c = file.surface.curves[which % file.surface.curves.len()].id.clone();
        file.surface.points.push(MarkedPoint::new("Extra", &[&c]));
        let t = Scenario::from_file(file).unwrap();
        let b = IrrAnalysis::new(&t.connections["M"], &t.pair, 64).unwrap();
        let chi = global_chi(&a).unwrap();
        prop_assert_eq!(global_chi(&b).unwrap(), chi);
        prop_assert_eq!(index_pairing(&t.pair, &cc_connection(&b).unwrap()).unwrap(), chi);
    }

    #[test]
    fn delta_integral_is_additive_over_points(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let a = IrrAnalysis::new(&s.connections["M"], &s.pair, 64).unwrap();
        let points: Q = a.delta.point_integrals(&a.pair).values().sum();
        prop_assert_eq!(a.delta.integral(&Region::All, &a.pair), points);
        let split = a.delta.integral(&Region::SmoothLocusOfD, &a.pair) + a.delta.integral(&Region::SingularLocusOfD, &a.pair);
        prop_assert_eq!(split, points);
    }

    #[test]
    fn recognition_obstruction_is_bounded(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let m1 = s.connections["M"].clone();
        let m2 = random_connection(&mut rng, &s.pair).build();
        let obstruction = recognition_obstruction(&m1, &m2, &s.pair);
        let mut bound = q(s.pair.d_singular_points().count() as i64);
        for a in [&m1, &m2] {
            for b in [&m1, &m2] {
                let h = IrrAnalysis::on_own_resolution(&ExpConnection::hom(a, b), &s.pair, 64).unwrap();
                bound += h.delta.integral(&Region::SmoothLocusOfD, &s.pair);
            }
        }
        prop_assert!(q(obstruction.len() as i64) <= bound, "{} > {}", obstruction.len(), bound);
    }

    #[test]
    fn scenarios_round_trip(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let again = Scenario::from_json_str(&s.to_json()).unwrap();
        prop_assert_eq!(again.file(), s.file());
        prop_assert_eq!(again.to_json(), s.to_json());
    }
}
