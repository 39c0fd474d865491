//! Exponential-type connections `⊕ E^φ ⊗ R` with monomial irregular values.
//!
//! Coefficient tags are generic constants: terms with the same exponents add
//! their tags formally and only cancel when the formal sum is zero.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::bdivisor::{delta_divisor, CartierBDivisor, WeilBDivisor};
use crate::error::{Error, Result};
use crate::geometry::{DivisorOnX, SurfacePair};
use crate::valtree::{Branch, DivValuation, Model, ModelDivisor, NodeId};
use crate::Q;

pub type Exponents = BTreeMap<String, i64>;
pub type TagSum = BTreeMap<String, i64>;

pub const DEFAULT_MAX_BLOWUPS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub exponents: Exponents,
    pub coeff_tag: String,
}

impl Monomial {
    pub fn new<'a>(exponents: impl IntoIterator<Item = (&'a str, i64)>, tag: &str) -> Self {
        Monomial {
            exponents: exponents
                .into_iter()
                .filter(|(_, e)| *e != 0)
                .map(|(c, e)| (c.to_string(), e))
                .collect(),
            coeff_tag: tag.to_string(),
        }
    }
}

/// A formal ℤ-combination of tagged monomials. Constant terms are dropped:
/// `E^c` is trivial.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Combination {
    terms: BTreeMap<Exponents, TagSum>,
}

impl Combination {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(m: &Monomial) -> Self {
        let mut c = Combination::zero();
        let exps: Exponents = m
            .exponents
            .iter()
            .filter(|(_, e)| **e != 0)
            .map(|(k, e)| (k.clone(), *e))
            .collect();
        if !exps.is_empty() {
            c.terms.insert(exps, TagSum::from([(m.coeff_tag.clone(), 1)]));
        }
        c
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, TagSum> {
        &self.terms
    }

    fn add_scaled(&mut self, other: &Combination, k: i64) {
        for (exps, tags) in &other.terms {
            let entry = self.terms.entry(exps.clone()).or_default();
            for (t, a) in tags {
                *entry.entry(t.clone()).or_insert(0) += k * a;
            }
            entry.retain(|_, a| *a != 0);
            if entry.is_empty() {
                self.terms.remove(exps);
            }
        }
    }

    pub fn minus(&self, other: &Combination) -> Combination {
        let mut out = self.clone();
        out.add_scaled(other, -1);
        out
    }

    pub fn plus(&self, other: &Combination) -> Combination {
        let mut out = self.clone();
        out.add_scaled(other, 1);
        out
    }

    /// Order along `v`; `None` for the zero combination.
    pub fn valuation(&self, v: &DivValuation) -> Option<i64> {
        self.terms.keys().map(|e| v.exponent_of(e)).min()
    }

    /// Curves along which some term has a pole.
    pub fn pole_curves(&self) -> BTreeSet<&str> {
        self.terms
            .keys()
            .flat_map(|e| e.iter().filter(|(_, x)| **x < 0).map(|(c, _)| c.as_str()))
            .collect()
    }

    pub fn curves(&self) -> BTreeSet<&str> {
        self.terms.keys().flat_map(|e| e.keys().map(String::as_str)).collect()
    }

    /// Passes when every term is regular at the point, or when one term's
    /// pole vector dominates all others and is nowhere negative.
    fn is_good_on(&self, branches: &[Branch]) -> bool {
        let vectors: Vec<Vec<i64>> = self
            .terms
            .keys()
            .map(|e| branches.iter().map(|b| -b.exponent_of(e)).collect())
            .collect();
        if vectors.iter().all(|v| v.iter().all(|x| *x <= 0)) {
            return true;
        }
        let max: Vec<i64> = (0..branches.len())
            .map(|i| vectors.iter().map(|v| v[i]).max().unwrap_or(0))
            .collect();
        max.iter().all(|x| *x >= 0) && vectors.contains(&max)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpSummand {
    pub value: Combination,
    pub rank: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpConnection {
    pub summands: Vec<ExpSummand>,
}

impl ExpConnection {
    pub fn new(summands: Vec<ExpSummand>) -> Self {
        ExpConnection { summands }
    }

    pub fn from_monomials(terms: impl IntoIterator<Item = (u32, Monomial)>) -> Self {
        ExpConnection::new(
            terms
                .into_iter()
                .map(|(rank, m)| ExpSummand {
                    value: Combination::monomial(&m),
                    rank,
                })
                .collect(),
        )
    }

    pub fn regular(rank: u32) -> Self {
        ExpConnection::new(vec![ExpSummand {
            value: Combination::zero(),
            rank,
        }])
    }

    pub fn rank(&self) -> i64 {
        self.summands.iter().map(|s| s.rank as i64).sum()
    }

    pub fn is_regular(&self) -> bool {
        self.summands.iter().all(|s| s.value.is_zero())
    }

    pub fn validate(&self, pair: &SurfacePair) -> Result<()> {
        if self.summands.is_empty() {
            return Err(Error::EmptyConnection);
        }
        for (i, s) in self.summands.iter().enumerate() {
            if s.rank == 0 {
                return Err(Error::ZeroRank(i));
            }
            for c in s.value.curves() {
                pair.curve(c)?;
            }
            for c in s.value.pole_curves() {
                if !pair.in_d(c) {
                    return Err(Error::PoleOffD(c.to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn direct_sum(&self, other: &ExpConnection) -> ExpConnection {
        let mut s = self.summands.clone();
        s.extend(other.summands.iter().cloned());
        ExpConnection::new(s)
    }

    /// Irregularity number along `v`: `Σ rank · pole order`.
    pub fn irr_along(&self, v: &DivValuation) -> i64 {
        self.summands
            .iter()
            .map(|s| s.rank as i64 * s.value.valuation(v).map_or(0, |o| (-o).max(0)))
            .sum()
    }

    /// Largest pole order along `v` over the summands.
    pub fn slope_along(&self, v: &DivValuation) -> Q {
        let m = self
            .summands
            .iter()
            .map(|s| s.value.valuation(v).map_or(0, |o| (-o).max(0)))
            .max()
            .unwrap_or(0);
        Q::from_integer(m)
    }

    /// `Σ_F irr_along(v_F)·F` over the curves of `w`.
    pub fn generic_irr_divisor(&self, w: &Model) -> ModelDivisor {
        let mut d = ModelDivisor::zero(w.clone());
        for b in w.branches() {
            let a = self.irr_along(&b.valuation());
            d.set(b, Q::from_integer(a));
        }
        d
    }

    /// `Irr(X, M)` as a divisor on `X`.
    pub fn irr_on_x(&self, pair: &SurfacePair) -> DivisorOnX {
        let mut d = DivisorOnX::new();
        for c in &pair.curves {
            d.add(
                &c.id,
                Q::from_integer(self.irr_along(&DivValuation::PrimeOnX(c.id.clone()))),
            );
        }
        d
    }

    fn distinct_values(&self) -> Vec<&Combination> {
        let zero = Combination::zero();
        let mut set: BTreeSet<&Combination> = self.summands.iter().map(|s| &s.value).collect();
        set.remove(&zero);
        set.into_iter().collect()
    }

    /// Goodness at a point lying on `branches`.
    pub fn is_good_at(&self, branches: &[Branch]) -> bool {
        let values = self.distinct_values();
        for (i, f) in values.iter().enumerate() {
            if !f.is_good_on(branches) {
                return false;
            }
            for g in &values[i + 1..] {
                if !f.minus(g).is_good_on(branches) {
                    return false;
                }
            }
        }
        true
    }

    /// Points of `w` over `D` where the connection is not good. Free points on
    /// a single branch always pass, so only crossings are examined.
    pub fn turning_locus(&self, w: &Model) -> Vec<NodeId> {
        w.double_points()
            .into_iter()
            .filter(|c| c.d_branches(w.pair()) > 0 && !self.is_good_at(c.incident()))
            .collect()
    }

    /// Turning marked points of `X`.
    pub fn turning_points_on_x(&self, pair: &Arc<SurfacePair>) -> Vec<String> {
        self.turning_locus(&Model::new(pair.clone()))
            .iter()
            .filter_map(|c| c.root_point().map(str::to_string))
            .collect()
    }

    /// Blows up turning points until none remain: marked points in id order,
    /// each resolved depth first through its satellite points.
    pub fn resolve_turning_points(&self, pair: &Arc<SurfacePair>, max_blowups: usize) -> Result<Model> {
        let mut model = Model::new(pair.clone());
        let mut roots = self.turning_locus(&model);
        roots.sort_by(|a, b| a.root_point().cmp(&b.root_point()));
        for root in roots {
            let name = model.describe(&root);
            let mut used = 0;
            model = self.resolve_at(model, root, &mut used, max_blowups, &name)?;
        }
        Ok(model)
    }

    fn resolve_at(&self, model: Model, center: NodeId, used: &mut usize, budget: usize, root: &str) -> Result<Model> {
        if *used >= budget {
            return Err(Error::ResolutionBudgetExceeded {
                root: root.to_string(),
                budget,
                partial: Box::new(model),
            });
        }
        *used += 1;
        let label = format!("E{}", model.len() + 1);
        let mut model = model.blow_up(center.clone(), label)?;
        let mut branches = center.incident().to_vec();
        branches.sort_by_key(|b| model.branch_name(b));
        for b in branches {
            let child = NodeId::new(
                model.pair(),
                crate::valtree::Base::Node(center.clone()),
                [Branch::Exc(center.clone()), b],
                None,
            )?;
            if child.d_branches(model.pair()) > 0 && !self.is_good_at(child.incident()) {
                model = self.resolve_at(model, child, used, budget, root)?;
            }
        }
        Ok(model)
    }

    /// `Hom(M1, M2)`: values `ψ_β − φ_α` with rank `r_α·r_β`.
    pub fn hom(m1: &ExpConnection, m2: &ExpConnection) -> ExpConnection {
        let mut out = Vec::new();
        for a in &m1.summands {
            for b in &m2.summands {
                out.push(ExpSummand {
                    value: b.value.minus(&a.value),
                    rank: a.rank * b.rank,
                });
            }
        }
        ExpConnection::new(out)
    }

    pub fn end(&self) -> ExpConnection {
        ExpConnection::hom(self, self)
    }

    /// The irregularity b-divisor, determined on the joint resolution of the
    /// connection and its endomorphisms.
    pub fn irr_bdivisor(&self, pair: &Arc<SurfacePair>, max_blowups: usize) -> Result<CartierBDivisor> {
        let model = self.direct_sum(&self.end()).resolve_turning_points(pair, max_blowups)?;
        Ok(CartierBDivisor::new(self.generic_irr_divisor(&model)))
    }
}

/// Everything the cycle and χ formulas need about one connection.
#[derive(Clone, Debug)]
pub struct IrrAnalysis {
    pub pair: Arc<SurfacePair>,
    pub connection: ExpConnection,
    pub irr: CartierBDivisor,
    pub irr_on_x: DivisorOnX,
    pub delta: WeilBDivisor,
}

impl IrrAnalysis {
    pub fn new(m: &ExpConnection, pair: &Arc<SurfacePair>, max_blowups: usize) -> Result<Self> {
        m.validate(pair)?;
        let irr = m.irr_bdivisor(pair, max_blowups)?;
        let delta = delta_divisor(&irr)?;
        Ok(IrrAnalysis {
            pair: pair.clone(),
            connection: m.clone(),
            irr_on_x: m.irr_on_x(pair),
            irr,
            delta,
        })
    }

    /// Like [`IrrAnalysis::new`] but determined on the resolution of `m`
    /// alone. Goodness of `m` already makes its irregularity Cartier, so δ is
    /// the same; only the joint model's extra nodes are missing.
    pub fn on_own_resolution(m: &ExpConnection, pair: &Arc<SurfacePair>, max_blowups: usize) -> Result<Self> {
        m.validate(pair)?;
        let model = m.resolve_turning_points(pair, max_blowups)?;
        let irr = CartierBDivisor::new(m.generic_irr_divisor(&model));
        let delta = delta_divisor(&irr)?;
        Ok(IrrAnalysis {
            pair: pair.clone(),
            connection: m.clone(),
            irr_on_x: m.irr_on_x(pair),
            irr,
            delta,
        })
    }

    pub fn model(&self) -> &Model {
        self.irr.determination()
    }

    pub fn delta_at_point(&self, p: &str) -> Q {
        self.delta
            .integral(&crate::bdivisor::Region::Point(p.to_string()), &self.pair)
    }

    /// Longest chain of the determination model above the given marked point.
    pub fn resolution_depth(&self, p: &str) -> usize {
        self.model()
            .nodes()
            .iter()
            .filter(|n| n.root_point() == Some(p))
            .map(|n| n.depth())
            .max()
            .unwrap_or(0)
    }
}
