//! Explicit bounds and their per-instance validators.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::bdivisor::{fdeg, Region};
use crate::connection::{ExpConnection, IrrAnalysis};
use crate::error::{Error, Result};
use crate::geometry::{DPosition, DivisorOnX, SurfacePair};
use crate::valtree::{evaluate_on_x, probe_valuations, DivValuation};
use crate::{q_str, Q};

/// One instantiated inequality `value ≤ bound` at a named place.
#[derive(Clone, Debug, Serialize)]
pub struct Instance {
    pub at: String,
    pub value: String,
    pub bound: String,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub name: String,
    #[serde(serialize_with = "ser_q")]
    pub bound_value: Q,
    #[serde(serialize_with = "ser_q")]
    pub attained_value: Q,
    pub holds: bool,
    pub certificate: Vec<Instance>,
}

fn ser_q<S: serde::Serializer>(q: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q_str(q))
}

impl BoundReport {
    fn new(name: &str, bound_value: Q, attained_value: Q, certificate: Vec<Instance>) -> Self {
        let holds = attained_value <= bound_value && certificate.iter().all(|i| i.holds);
        BoundReport {
            name: name.to_string(),
            bound_value,
            attained_value,
            holds,
            certificate,
        }
    }
}

fn instance(at: String, value: Q, bound: Q) -> Instance {
    Instance {
        at,
        value: q_str(&value),
        bound: q_str(&bound),
        holds: value <= bound,
    }
}

/// Checks `slope(v) ≤ 2·fdeg(Irr(X,M))·f(v)` on the determination model and
/// two levels of probes; the attained value is the largest `slope(v)/f(v)`.
pub fn slope_bound_certificate(a: &IrrAnalysis, f: &DivisorOnX) -> Result<BoundReport> {
    let pair = &a.pair;
    if let Some((c, _)) = f.coeffs.iter().find(|(_, q)| q.is_negative()) {
        return Err(Error::NotEffective(c.clone()));
    }
    f.check_supported_on_d(pair)?;
    let outside: Vec<String> = a
        .connection
        .turning_points_on_x(pair)
        .into_iter()
        .filter(|p| {
            let point = pair.point(p).expect("turning point is marked");
            point.on.iter().all(|c| f.coeff(c).is_zero())
        })
        .collect();
    if !outside.is_empty() {
        return Err(Error::TurningOutsideZeroLocus(outside));
    }
    let r = Q::from_integer(2) * fdeg(&a.irr_on_x, pair)?;
    let model = a.model();
    let mut attained = Q::zero();
    let mut cert = Vec::new();
    for v in probe_valuations(model, 2) {
        let slope = a.connection.slope_along(&v);
        let fv = evaluate_on_x(f, &v);
        if fv.is_positive() {
            attained = attained.max(slope / fv);
        }
        cert.push(instance(valuation_name(a, &v), slope, r * fv));
    }
    Ok(BoundReport::new("slope", r, attained, cert))
}

fn valuation_name(a: &IrrAnalysis, v: &DivValuation) -> String {
    match v {
        DivValuation::PrimeOnX(c) => c.clone(),
        DivValuation::Exceptional(n) => a.model().branch_name(&crate::valtree::Branch::Exc(n.clone())),
    }
}

/// `Irr(X, Hom(M1,M2)) ≤ r2²·Irr(X,M1) + r1²·Irr(X,M2)` along every curve,
/// and `rank Hom = r1·r2 ≤ max(r1,r2)²`.
pub fn hom_irr_bound_check(m1: &ExpConnection, m2: &ExpConnection, pair: &SurfacePair) -> BoundReport {
    let (r1, r2) = (m1.rank(), m2.rank());
    let hom = ExpConnection::hom(m1, m2);
    let lhs = hom.irr_on_x(pair);
    let rhs = m1
        .irr_on_x(pair)
        .scaled(Q::from_integer(r2 * r2))
        .plus(&m2.irr_on_x(pair).scaled(Q::from_integer(r1 * r1)));
    let mut cert: Vec<Instance> = pair
        .curves
        .iter()
        .map(|c| instance(c.id.clone(), lhs.coeff(&c.id), rhs.coeff(&c.id)))
        .collect();
    let r = r1.max(r2);
    cert.push(instance(
        "rank".into(),
        Q::from_integer(hom.rank()),
        Q::from_integer(r * r),
    ));
    let total = |d: &DivisorOnX| d.coeffs.values().sum::<Q>();
    BoundReport::new("hom-irr", total(&rhs), total(&lhs), cert)
}

/// Whether `∫_P (δ Irr M + δ Irr End M) > 0` at a smooth point `P` of `D`.
pub fn turning_criterion(m: &IrrAnalysis, end: &IrrAnalysis, p: &str) -> Result<bool> {
    Ok(criterion_integral(m, end, p)?.is_positive())
}

pub fn criterion_integral(m: &IrrAnalysis, end: &IrrAnalysis, p: &str) -> Result<Q> {
    let point = m.pair.point(p)?;
    match m.pair.position(point) {
        DPosition::Smooth => Ok(m.delta_at_point(p) + end.delta_at_point(p)),
        DPosition::OffD => Err(Error::PointOffD(p.to_string())),
        DPosition::Singular => Err(Error::PointNotSmoothOnD(p.to_string())),
    }
}

/// `|TL(M)| ≤ |D^sing| + ∫_{D^sm} (δ Irr M + δ Irr End M)`.
pub fn turning_count_bound(m: &IrrAnalysis, end: &IrrAnalysis) -> BoundReport {
    let pair = &m.pair;
    let turning = m.connection.turning_points_on_x(pair);
    let sing = pair.d_singular_points().count() as i64;
    let smooth = m.delta.integral(&Region::SmoothLocusOfD, pair) + end.delta.integral(&Region::SmoothLocusOfD, pair);
    let bound = Q::from_integer(sing) + smooth;
    let cert = turning
        .iter()
        .map(|p| Instance {
            at: p.clone(),
            value: "turning".into(),
            bound: format!("{:?}", pair.position(pair.point(p).expect("marked"))),
            holds: true,
        })
        .collect();
    BoundReport::new("turning-count", bound, Q::from_integer(turning.len() as i64), cert)
}

/// Variables of a bound polynomial in `(R, r)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Var {
    /// Coefficient of `R` along a curve.
    Curve(String),
    Rank,
}

/// A polynomial with rational coefficients in the coefficients of `R` and in `r`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundPolynomial {
    terms: BTreeMap<BTreeMap<Var, u32>, Q>,
}

impl BoundPolynomial {
    pub fn constant(c: Q) -> Self {
        let mut p = BoundPolynomial::default();
        p.add_term(BTreeMap::new(), c);
        p
    }

    pub fn var(v: Var) -> Self {
        let mut p = BoundPolynomial::default();
        p.add_term(BTreeMap::from([(v, 1)]), Q::from_integer(1));
        p
    }

    /// `fdeg(R)` over the components of `D`.
    pub fn fdeg(pair: &SurfacePair) -> Self {
        let mut p = BoundPolynomial::default();
        for c in pair.d_curves() {
            p = p.plus(&BoundPolynomial::var(Var::Curve(c.id.clone())));
        }
        p
    }

    fn add_term(&mut self, mono: BTreeMap<Var, u32>, c: Q) {
        let e = self.terms.entry(mono.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&mono);
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn times(&self, other: &Self) -> Self {
        let mut out = BoundPolynomial::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (v, e) in m2 {
                    *m.entry(v.clone()).or_insert(0) += e;
                }
                out.add_term(m, c1 * c2);
            }
        }
        out
    }

    pub fn scaled(&self, k: Q) -> Self {
        self.times(&BoundPolynomial::constant(k))
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(BoundPolynomial::constant(Q::from_integer(1)), |acc, _| acc.times(self))
    }

    pub fn evaluate(&self, r_div: &DivisorOnX, rank: Q) -> Q {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.iter().fold(*c, |acc, (v, e)| {
                    let x = match v {
                        Var::Curve(id) => r_div.coeff(id),
                        Var::Rank => rank,
                    };
                    (0..*e).fold(acc, |a, _| a * x)
                })
            })
            .sum()
    }

    /// Non-normative default `L(R, r) = |D^sing| + 3·fdeg(R)·r²`.
    pub fn default_lefschetz(pair: &SurfacePair) -> Self {
        let sing = pair.d_singular_points().count() as i64;
        BoundPolynomial::constant(Q::from_integer(sing)).plus(
            &BoundPolynomial::fdeg(pair)
                .times(&BoundPolynomial::var(Var::Rank).pow(2))
                .scaled(Q::from_integer(3)),
        )
    }
}

/// `K(R, r) = L(2r²·R, 4r²) + 1`.
pub fn lefschetz_count(l: &BoundPolynomial, r_div: &DivisorOnX, r: i64) -> Q {
    let s = Q::from_integer(2 * r * r);
    l.evaluate(&r_div.scaled(s), Q::from_integer(4 * r * r)) + Q::from_integer(1)
}

/// Points a recognizing curve must avoid: turning points of every
/// `Hom(Ma, Mb)` together with the double points of `D`.
pub fn recognition_obstruction(m1: &ExpConnection, m2: &ExpConnection, pair: &Arc<SurfacePair>) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = pair.d_singular_points().map(|p| p.id.clone()).collect();
    for a in [m1, m2] {
        for b in [m1, m2] {
            out.extend(ExpConnection::hom(a, b).turning_points_on_x(pair));
        }
    }
    out
}
