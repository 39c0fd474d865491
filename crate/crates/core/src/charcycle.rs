//! Lagrangian cycles on `T*X` supported over `D`, the Euler morphism, and the
//! closed-form characteristic cycles and Euler characteristics.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::Serialize;

use crate::bdivisor::Region;
use crate::connection::IrrAnalysis;
use crate::error::{Error, Result};
use crate::geometry::{DPosition, DivisorOnX, SurfacePair};
use crate::valtree::DivValuation;
use crate::Q;

/// `zero_section·T*_X X + Σ m_C·T*_C X + Σ m_P·T*_P X`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LagrangianCycle {
    pub zero_section: i64,
    pub conormal_curves: BTreeMap<String, i64>,
    pub conormal_points: BTreeMap<String, i64>,
}

/// A function constant on `U`, on each open curve stratum, and at each point.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConstructibleFunction {
    pub on_u: i64,
    pub on_curve_stratum: BTreeMap<String, i64>,
    pub on_point: BTreeMap<String, i64>,
}

fn bump(map: &mut BTreeMap<String, i64>, key: &str, a: i64) {
    let e = map.entry(key.to_string()).or_insert(0);
    *e += a;
    if *e == 0 {
        map.remove(key);
    }
}

fn integral(q: Q, what: &str) -> Result<i64> {
    if q.is_integer() {
        Ok(q.to_integer())
    } else {
        Err(Error::NonIntegral(what.to_string()))
    }
}

impl LagrangianCycle {
    pub fn is_zero(&self) -> bool {
        self.zero_section == 0 && self.conormal_curves.is_empty() && self.conormal_points.is_empty()
    }

    pub fn plus(&self, other: &LagrangianCycle) -> LagrangianCycle {
        let mut out = self.clone();
        out.zero_section += other.zero_section;
        for (c, a) in &other.conormal_curves {
            bump(&mut out.conormal_curves, c, *a);
        }
        for (p, a) in &other.conormal_points {
            bump(&mut out.conormal_points, p, *a);
        }
        out
    }

    pub fn scaled(&self, k: i64) -> LagrangianCycle {
        let mut out = LagrangianCycle {
            zero_section: self.zero_section * k,
            ..Default::default()
        };
        for (c, a) in &self.conormal_curves {
            bump(&mut out.conormal_curves, c, a * k);
        }
        for (p, a) in &self.conormal_points {
            bump(&mut out.conormal_points, p, a * k);
        }
        out
    }

    pub fn add_point(&mut self, p: &str, a: i64) {
        bump(&mut self.conormal_points, p, a);
    }

    pub fn add_curve(&mut self, c: &str, a: i64) {
        bump(&mut self.conormal_curves, c, a);
    }
}

/// `LC(R)` for `R` supported on the curves `boundary` (normally `D`): the sum
/// over strata of the coefficients of the curves containing them.
fn lc_over(pair: &SurfacePair, r: &DivisorOnX, boundary: &BTreeSet<String>) -> Result<LagrangianCycle> {
    r.check_refs(pair)?;
    for (c, a) in &r.coeffs {
        if !a.is_zero() && !boundary.contains(c) {
            return Err(Error::SupportOffD(c.clone()));
        }
    }
    let mut out = LagrangianCycle::default();
    for c in boundary {
        out.add_curve(c, integral(r.coeff(c), c)?);
    }
    for p in &pair.points {
        if p.is_double() && p.on.iter().all(|c| boundary.contains(c)) {
            let a: Q = p.on.iter().map(|c| r.coeff(c)).sum();
            out.add_point(&p.id, integral(a, &p.id)?);
        }
    }
    Ok(out)
}

fn d_set(pair: &SurfacePair) -> BTreeSet<String> {
    pair.d_curves().map(|c| c.id.clone()).collect()
}

pub fn lc_cycle(pair: &SurfacePair, r: &DivisorOnX) -> Result<LagrangianCycle> {
    lc_over(pair, r, &d_set(pair))
}

/// Points of `X` where a constructible function may jump: points of `D` and
/// the conormal points of `cycle`.
fn special_points<'a>(pair: &'a SurfacePair, cycle: Option<&'a LagrangianCycle>) -> BTreeSet<&'a str> {
    let mut pts: BTreeSet<&str> = pair
        .points
        .iter()
        .filter(|p| pair.position(p) != DPosition::OffD)
        .map(|p| p.id.as_str())
        .collect();
    if let Some(c) = cycle {
        pts.extend(c.conormal_points.keys().map(String::as_str));
    }
    pts
}

/// The Euler morphism: `T*_X X ↦ 1`, `T*_C X ↦ −1_C`, `T*_P X ↦ 1_P`.
pub fn euler_of_cycle(pair: &SurfacePair, cycle: &LagrangianCycle) -> Result<ConstructibleFunction> {
    let mut f = ConstructibleFunction {
        on_u: cycle.zero_section,
        ..Default::default()
    };
    for c in pair.d_curves() {
        f.on_curve_stratum.insert(
            c.id.clone(),
            cycle.zero_section - cycle.conormal_curves.get(&c.id).copied().unwrap_or(0),
        );
    }
    for c in cycle.conormal_curves.keys() {
        if !pair.in_d(c) {
            pair.curve(c)?;
            return Err(Error::SupportOffD(c.clone()));
        }
    }
    for p in special_points(pair, Some(cycle)) {
        let point = pair.point(p)?;
        let curves: i64 = point
            .on
            .iter()
            .map(|c| cycle.conormal_curves.get(c).copied().unwrap_or(0))
            .sum();
        let own = cycle.conormal_points.get(p).copied().unwrap_or(0);
        f.on_point.insert(p.to_string(), cycle.zero_section - curves + own);
    }
    Ok(f)
}

/// Inverse of [`euler_of_cycle`], solved stratum by stratum from `U` down.
pub fn cycle_from_euler(pair: &SurfacePair, f: &ConstructibleFunction) -> Result<LagrangianCycle> {
    let mut out = LagrangianCycle {
        zero_section: f.on_u,
        ..Default::default()
    };
    for c in pair.d_curves() {
        let v = f.on_curve_stratum.get(&c.id).copied().unwrap_or(f.on_u);
        out.add_curve(&c.id, f.on_u - v);
    }
    for (p, v) in &f.on_point {
        let point = pair.point(p)?;
        let curves: i64 = point
            .on
            .iter()
            .map(|c| out.conormal_curves.get(c).copied().unwrap_or(0))
            .sum();
        out.add_point(p, v - f.on_u + curves);
    }
    Ok(out)
}

/// `∫ f dχ` over the stratification by `U`, open curve strata of `D`, and the
/// listed points.
pub fn euler_integral(pair: &SurfacePair, f: &ConstructibleFunction) -> Result<i64> {
    let mut total = f.on_u * pair.euler_open_complement();
    for c in pair.d_curves() {
        let fc = f.on_curve_stratum.get(&c.id).copied().unwrap_or(f.on_u);
        let mut chi = pair.stratum_euler(&BTreeSet::from([c.id.clone()]))?;
        // Smooth points of D listed separately are cut out of the open stratum.
        for p in f.on_point.keys() {
            let point = pair.point(p)?;
            if point.on.contains(&c.id) && pair.d_multiplicity(point) == 1 {
                chi -= 1;
            }
        }
        total += fc * chi;
    }
    for (p, v) in &f.on_point {
        let point = pair.point(p)?;
        total += match pair.d_multiplicity(point) {
            0 => v - f.on_u,
            _ => *v,
        };
    }
    for p in pair.d_singular_points() {
        if !f.on_point.contains_key(&p.id) {
            return Err(Error::UnknownPoint(p.id.clone()));
        }
    }
    Ok(total)
}

/// Intersection with the zero section:
/// `zero·χ(X) − Σ m_C·χ(C) + Σ m_P`.
pub fn index_pairing(pair: &SurfacePair, cycle: &LagrangianCycle) -> Result<i64> {
    let mut total = cycle.zero_section * pair.chi_top;
    for (c, m) in &cycle.conormal_curves {
        total -= m * pair.curve(c)?.euler();
    }
    for (p, m) in &cycle.conormal_points {
        pair.point(p)?;
        total += m;
    }
    Ok(total)
}

/// `CC(O_X(*D))`: the zero section plus every conormal of a stratum of `D`.
pub fn cc_structure_sheaf(pair: &SurfacePair) -> LagrangianCycle {
    let mut out = LagrangianCycle {
        zero_section: 1,
        ..Default::default()
    };
    for c in pair.d_curves() {
        out.add_curve(&c.id, 1);
    }
    for p in pair.d_singular_points() {
        out.add_point(&p.id, 1);
    }
    out
}

fn delta_points(a: &IrrAnalysis) -> Result<BTreeMap<String, i64>> {
    a.delta
        .point_integrals(&a.pair)
        .into_iter()
        .map(|(p, q)| Ok((p.clone(), integral(q, &p)?)))
        .collect()
}

/// `rank·CC(O_X(*D)) + LC(Irr(X,M)) + Σ_P (∫_P δ Irr M)·T*_P X`.
pub fn cc_connection(a: &IrrAnalysis) -> Result<LagrangianCycle> {
    let mut out = cc_structure_sheaf(&a.pair)
        .scaled(a.connection.rank())
        .plus(&lc_cycle(&a.pair, &a.irr_on_x)?);
    for (p, m) in delta_points(a)? {
        out.add_point(&p, m);
    }
    Ok(out)
}

/// Euler characteristic of the local solution complex at a point of `D`.
pub fn local_solution_euler(a: &IrrAnalysis, p: &str) -> Result<i64> {
    let point = a.pair.point(p)?;
    let delta = integral(a.delta_at_point(p), p)?;
    match a.pair.position(point) {
        DPosition::OffD => Err(Error::PointOffD(p.to_string())),
        DPosition::Singular => Ok(delta),
        DPosition::Smooth => {
            let z = point.on.iter().find(|c| a.pair.in_d(c)).expect("one D-curve");
            Ok(delta - a.connection.irr_along(&DivValuation::PrimeOnX(z.clone())))
        }
    }
}

/// `rank·χ(U) + ⟨LC(Irr(X,M)), T*_X X⟩ + ∫ δ Irr M`.
pub fn global_chi(a: &IrrAnalysis) -> Result<i64> {
    let lc = lc_cycle(&a.pair, &a.irr_on_x)?;
    let delta = integral(a.delta.integral(&Region::All, &a.pair), "δ")?;
    Ok(a.connection.rank() * a.pair.euler_open_complement() + index_pairing(&a.pair, &lc)? + delta)
}

/// Euler characteristic of a rank-`rank` connection on a genus-`genus` curve
/// minus `punctures` points, with the given irregularities at the punctures.
/// `None` when the number of irregularities does not match.
pub fn curve_gos(genus: u32, punctures: usize, rank: i64, irregularities: &[i64]) -> Option<i64> {
    if irregularities.len() != punctures {
        return None;
    }
    Some(rank * (2 - 2 * genus as i64 - punctures as i64) - irregularities.iter().sum::<i64>())
}

/// Characteristic cycle of the solutions restricted to the reduced divisor
/// `z ⊆ D`, built from `Irr(X,M)` on the components of `z`.
pub fn cc_sol_restricted(a: &IrrAnalysis, z: &DivisorOnX) -> Result<LagrangianCycle> {
    let pair = &a.pair;
    z.check_supported_on_d(pair)?;
    let comps: BTreeSet<String> = z
        .coeffs
        .iter()
        .filter(|(_, q)| !q.is_zero())
        .map(|(c, _)| c.clone())
        .collect();
    for c in &comps {
        if z.coeff(c) != Q::from_integer(1) {
            return Err(Error::NonIntegral(format!("{c} must have coefficient 1")));
        }
    }
    let mut out = lc_over(pair, &a.irr_on_x.restricted_to(&comps), &comps)?;
    for (p, m) in delta_points(a)? {
        if pair.point(&p)?.on.iter().any(|c| comps.contains(c)) {
            out.add_point(&p, m);
        }
    }
    for p in pair.d_singular_points() {
        let on_z: Vec<&String> = p.on.iter().filter(|c| comps.contains(*c)).collect();
        if let [c] = on_z.as_slice() {
            out.add_point(&p.id, a.connection.irr_along(&DivValuation::PrimeOnX((*c).clone())));
        }
    }
    Ok(out)
}
