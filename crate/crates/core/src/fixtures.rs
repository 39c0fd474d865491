//! The shipped scenarios and a seeded generator of random valid ones.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Curve, MarkedPoint, SurfacePair};
use crate::scenario::{ConnectionSpec, Options, Scenario, ScenarioFile, SummandSpec};

pub const SCEN_A_JSON: &str = include_str!("../../../fixtures/scen_a.json");
pub const SCEN_B_JSON: &str = include_str!("../../../fixtures/scen_b.json");
pub const SCEN_C_JSON: &str = include_str!("../../../fixtures/scen_c.json");

/// Three lines in `D`, `φ = z²/(xy)`.
pub fn scen_a() -> Scenario {
    Scenario::from_json_str(SCEN_A_JSON).expect("shipped fixture")
}

/// `D = Lx + Lz`, auxiliary `Ly`, `φ = yz/x²`.
pub fn scen_b() -> Scenario {
    Scenario::from_json_str(SCEN_B_JSON).expect("shipped fixture")
}

/// `D = Lx + Linf`, auxiliary `Ly`, `φ = y/x`.
pub fn scen_c() -> Scenario {
    Scenario::from_json_str(SCEN_C_JSON).expect("shipped fixture")
}

pub fn shipped() -> Vec<(&'static str, Scenario)> {
    vec![("SCEN-A", scen_a()), ("SCEN-B", scen_b()), ("SCEN-C", scen_c())]
}

/// A random simple-normal-crossing configuration of at most six curves.
pub fn random_pair(rng: &mut impl Rng) -> SurfacePair {
    let n = rng.gen_range(2..=6);
    let mut curves: Vec<Curve> = (0..n)
        .map(|i| Curve::new(format!("C{i}"), rng.gen_range(0..=2), rng.gen_bool(0.6)))
        .collect();
    if !curves.iter().any(|c| c.in_d) {
        curves.choose_mut(rng).expect("nonempty").in_d = true;
    }
    let mut points = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..rng.gen_range(0..=2) {
                points.push(MarkedPoint::new(
                    format!("P{i}{j}_{k}"),
                    &[&curves[i].id, &curves[j].id],
                ));
            }
        }
        for k in 0..rng.gen_range(0..=1) {
            points.push(MarkedPoint::new(format!("S{i}_{k}"), &[&curves[i].id]));
        }
    }
    SurfacePair::new(rng.gen_range(1..=8), curves, points).expect("generated pair is valid")
}

/// A random monomial connection on `pair`: one to three summands of total
/// rank at most three, exponents in `[-4, 4]`, poles only along `D`.
pub fn random_connection(rng: &mut impl Rng, pair: &SurfacePair) -> ConnectionSpec {
    let ranks: &[u32] = [&[1][..], &[2], &[3], &[1, 1], &[1, 2], &[1, 1, 1]]
        .choose(rng)
        .expect("nonempty");
    let summands = ranks
        .iter()
        .enumerate()
        .map(|(i, rank)| {
            let mut exponents = BTreeMap::new();
            for c in &pair.curves {
                if rng.gen_bool(0.5) {
                    let e = if c.in_d {
                        rng.gen_range(-4..=4)
                    } else {
                        rng.gen_range(0..=4)
                    };
                    if e != 0 {
                        exponents.insert(c.id.clone(), e);
                    }
                }
            }
            SummandSpec {
                rank: *rank,
                exponents,
                coeff: format!("c{i}"),
            }
        })
        .collect();
    ConnectionSpec { summands }
}

/// A random valid scenario with one connection `M` and one effective divisor
/// `R` on `D`.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let surface = random_pair(&mut rng);
    let connection = random_connection(&mut rng, &surface);
    let divisor: BTreeMap<String, i64> = surface
        .d_curves()
        .map(|c| (c.id.clone(), rng.gen_range(0..=3)))
        .filter(|(_, a)| *a != 0)
        .collect();
    let file = ScenarioFile {
        surface,
        connections: BTreeMap::from([("M".to_string(), connection)]),
        divisors: BTreeMap::from([("R".to_string(), divisor)]),
        options: Options::default(),
    };
    Scenario::from_file(file).expect("generated scenario is valid")
}

pub fn random_corpus(count: usize, seed: u64) -> Vec<Scenario> {
    (0..count as u64)
        .map(|i| random_scenario(seed.wrapping_add(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse() {
        for (name, s) in shipped() {
            assert_eq!(s.pair.curves.len(), 3, "{name}");
            assert_eq!(s.pair.points.len(), 3, "{name}");
            assert_eq!(s.connections.len(), 1, "{name}");
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = random_scenario(7);
        let b = random_scenario(7);
        assert_eq!(a.to_json(), b.to_json());
        for s in random_corpus(50, 1) {
            assert!(s.pair.curves.len() <= 6);
            assert!(s.connections["M"].rank() <= 3);
        }
    }
}
