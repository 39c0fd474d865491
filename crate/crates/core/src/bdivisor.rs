use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{DivisorOnX, SurfacePair};
use crate::valtree::{evaluate_on_x, probe_valuations, Base, Branch, DivValuation, Model, ModelDivisor, NodeId};
use crate::Q;

/// Sum of the coefficients of a divisor supported on `D`.
pub fn fdeg(div: &DivisorOnX, pair: &SurfacePair) -> Result<Q> {
    div.check_supported_on_d(pair)?;
    Ok(div.coeffs.values().sum())
}

/// A b-divisor given by one divisor on a determination model and evaluated
/// everywhere else by pullback.
#[derive(Clone, Debug)]
pub struct CartierBDivisor {
    divisor: ModelDivisor,
}

impl CartierBDivisor {
    pub fn new(divisor: ModelDivisor) -> Self {
        CartierBDivisor { divisor }
    }

    /// The pullback system of a divisor on `X`.
    pub fn from_x(pair: Arc<SurfacePair>, div: &DivisorOnX) -> Result<Self> {
        Ok(CartierBDivisor::new(ModelDivisor::on_x(pair, div)?))
    }

    pub fn determination(&self) -> &Model {
        &self.divisor.model
    }

    pub fn divisor(&self) -> &ModelDivisor {
        &self.divisor
    }

    pub fn pair(&self) -> &SurfacePair {
        self.divisor.model.pair()
    }

    pub fn evaluate(&self, v: &DivValuation) -> Q {
        self.divisor.value_at(v)
    }

    /// The component on `w`: the value along each of its curves.
    pub fn incarnation(&self, w: &Model) -> ModelDivisor {
        let mut out = ModelDivisor::zero(w.clone());
        for b in w.branches() {
            out.set(b.clone(), self.evaluate(&b.valuation()));
        }
        out
    }

    /// Nonzero only over `D`, checked on the determination model.
    pub fn check_xd_support(&self) -> Result<()> {
        let model = &self.divisor.model;
        for (b, a) in &self.divisor.coeffs {
            if !a.is_zero() && !b.is_over_d(model.pair()) {
                return Err(Error::NotXDBDivisor(model.branch_name(b)));
            }
        }
        Ok(())
    }

    pub fn plus(&self, other: &CartierBDivisor) -> Result<CartierBDivisor> {
        if !self.determination().same_surface(other.determination()) {
            return Err(Error::ModelMismatch("b-divisors over different surfaces".into()));
        }
        let mut common = self.determination().clone();
        for n in other.determination().nodes() {
            common = common.with_chain(n);
        }
        let a = self.incarnation(&common);
        let b = other.incarnation(&common);
        Ok(CartierBDivisor::new(a.plus(&b)?))
    }

    pub fn scaled(&self, k: Q) -> CartierBDivisor {
        CartierBDivisor::new(self.divisor.scaled(k))
    }
}

/// A finitely supported function on divisorial valuations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeilBDivisor {
    pub values: BTreeMap<DivValuation, Q>,
}

/// Where the centers of valuations are collected by [`WeilBDivisor::integral`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    All,
    Point(String),
    Curve(String),
    SmoothLocusOfD,
    SingularLocusOfD,
}

impl WeilBDivisor {
    pub fn insert(&mut self, v: DivValuation, a: Q) {
        if a.is_zero() {
            self.values.remove(&v);
        } else {
            self.values.insert(v, a);
        }
    }

    pub fn get(&self, v: &DivValuation) -> Q {
        self.values.get(v).copied().unwrap_or_else(Q::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_effective(&self) -> bool {
        self.values.values().all(|a| !a.is_negative())
    }

    /// Sum of the values at valuations centered in `region` of `X`.
    pub fn integral(&self, region: &Region, pair: &SurfacePair) -> Q {
        self.values
            .iter()
            .filter(|(v, _)| center_in(v, region, pair))
            .map(|(_, a)| *a)
            .sum()
    }

    /// Integrals over every marked point carrying mass.
    pub fn point_integrals(&self, pair: &SurfacePair) -> BTreeMap<String, Q> {
        let mut out = BTreeMap::new();
        for (v, a) in &self.values {
            if let Some(p) = v.node().and_then(|n| n.root_point()) {
                let e = out.entry(p.to_string()).or_insert_with(Q::zero);
                *e += a;
            }
        }
        out.retain(|p, a| !a.is_zero() && pair.point(p).is_ok());
        out
    }
}

fn center_in(v: &DivValuation, region: &Region, pair: &SurfacePair) -> bool {
    let curves: Vec<String> = match v {
        DivValuation::PrimeOnX(c) => vec![c.clone()],
        DivValuation::Exceptional(n) => n.root_curves(),
    };
    let on_d = curves.iter().filter(|c| pair.in_d(c)).count();
    match region {
        Region::All => true,
        Region::Point(p) => v.node().and_then(|n| n.root_point()) == Some(p.as_str()),
        Region::Curve(c) => curves.contains(c),
        Region::SmoothLocusOfD => match v {
            DivValuation::PrimeOnX(c) => pair.in_d(c),
            DivValuation::Exceptional(_) => on_d == 1,
        },
        Region::SingularLocusOfD => matches!(v, DivValuation::Exceptional(_)) && on_d == 2,
    }
}

/// `δZ(v)`: how far the incarnation on the model just below `v` overestimates
/// `Z(v)`. Zero on curves of `X` and at centers where two branches of the
/// total transform of `D` cross.
pub fn partial_discrepancy_at(z: &CartierBDivisor, v: &DivValuation) -> Result<Q> {
    z.check_xd_support()?;
    Ok(discrepancy_unchecked(z, v))
}

fn discrepancy_unchecked(z: &CartierBDivisor, v: &DivValuation) -> Q {
    let n = match v {
        DivValuation::PrimeOnX(_) => return Q::zero(),
        DivValuation::Exceptional(n) => n,
    };
    if n.d_branches(z.pair()) >= 2 {
        return Q::zero();
    }
    let predicted: Q = n.incident().iter().map(|b| z.evaluate(&b.valuation())).sum();
    predicted - z.evaluate(v)
}

/// `δZ` on the nodes of the determination model; it vanishes elsewhere.
pub fn delta_divisor(z: &CartierBDivisor) -> Result<WeilBDivisor> {
    z.check_xd_support()?;
    let mut w = WeilBDivisor::default();
    for n in z.determination().nodes() {
        let v = DivValuation::Exceptional(n.clone());
        let d = discrepancy_unchecked(z, &v);
        w.insert(v, d);
    }
    Ok(w)
}

/// Outcome of a bounded nefness probe.
#[derive(Clone, Debug)]
pub struct NefProbe {
    pub nef: bool,
    pub depth: usize,
    pub models_checked: usize,
    pub valuations_checked: usize,
    /// First `(W, v)` with `Z(v) > Z(W)(v)`, with both sides.
    pub witness: Option<NefWitness>,
}

#[derive(Clone, Debug)]
pub struct NefWitness {
    pub model: Model,
    pub valuation: DivValuation,
    pub value: Q,
    pub incarnation_value: Q,
}

/// Checks `Z ≤ Z(W)` for every intermediate model `W` of the determination
/// model, at its curves and at probes up to `depth` blow-ups over `D`.
///
/// This can refute nefness but only certifies it up to the probed depth.
pub fn is_nef_probe(z: &CartierBDivisor, depth: usize, exec: Execution) -> NefProbe {
    const IDEAL_CAP: usize = 512;
    let models = z.determination().intermediate_models(IDEAL_CAP);
    let vals = probe_valuations(z.determination(), depth);
    let values: Vec<Q> = exec.map(&vals, |v| z.evaluate(v));
    let per_model = exec.map(&models, |w| {
        let inc = CartierBDivisor::new(z.incarnation(w));
        vals.iter().zip(&values).find_map(|(v, a)| {
            let b = inc.evaluate(v);
            (*a > b).then(|| NefWitness {
                model: w.clone(),
                valuation: v.clone(),
                value: *a,
                incarnation_value: b,
            })
        })
    });
    let witness = per_model.into_iter().flatten().next();
    NefProbe {
        nef: witness.is_none(),
        depth,
        models_checked: models.len(),
        valuations_checked: vals.len(),
        witness,
    }
}

/// A failure of `R(v) ≤ 2·fdeg(R)·Z(v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EstimateViolation {
    pub node: NodeId,
    pub lhs: Q,
    pub rhs: Q,
}

/// Verifies `R(v) ≤ 2·fdeg(R)·Z(v)` along a chain whose every center lies on
/// the strict transform of a component of `Z`.
///
/// The chain is given root first; each node must be based on the previous
/// one.
pub fn check_multiplicity_estimate(
    pair: &SurfacePair,
    r: &DivisorOnX,
    zdiv: &DivisorOnX,
    chain: &[NodeId],
) -> Result<Option<EstimateViolation>> {
    let deg = fdeg(r, pair)?;
    zdiv.check_refs(pair)?;
    let bound = Q::from_integer(2) * deg;
    for (i, n) in chain.iter().enumerate() {
        let linked = match (i, n.base()) {
            (0, Base::Node(_)) => false,
            (0, _) => true,
            (_, Base::Node(p)) => *p == chain[i - 1],
            _ => false,
        };
        if !linked {
            return Err(Error::ModelMismatch(format!("node {i} does not continue the chain")));
        }
        let on_z = n
            .incident()
            .iter()
            .any(|b| matches!(b, Branch::Curve(c) if !zdiv.coeff(c).is_zero()));
        if !on_z {
            return Err(Error::NotAdmissible(format!("{n:?}")));
        }
        let v = DivValuation::Exceptional(n.clone());
        let lhs = evaluate_on_x(r, &v);
        let rhs = bound * evaluate_on_x(zdiv, &v);
        if lhs > rhs {
            return Ok(Some(EstimateViolation {
                node: n.clone(),
                lhs,
                rhs,
            }));
        }
    }
    Ok(None)
}
