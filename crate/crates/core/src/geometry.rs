//! Abstract surface pairs `(X, D)`.
//!
//! A surface is described only by what the downstream formulas consume: its
//! topological Euler characteristic, a configuration of smooth curves with
//! genera (each flagged as a component of the pole divisor `D` or as an
//! auxiliary curve), and the marked points where curves meet. The listed
//! double points *define* the intersection pairing; no realizability check is
//! made.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Q;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curve {
    pub id: String,
    pub genus: u32,
    #[serde(rename = "in_D")]
    pub in_d: bool,
}

impl Curve {
    pub fn new(id: impl Into<String>, genus: u32, in_d: bool) -> Self {
        Curve {
            id: id.into(),
            genus,
            in_d,
        }
    }

    /// Euler characteristic of the complete curve.
    pub fn euler(&self) -> i64 {
        2 - 2 * self.genus as i64
    }
}

/// A point of `X` lying on one curve, or on two curves crossing transversally.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkedPoint {
    pub id: String,
    pub on: Vec<String>,
}

impl MarkedPoint {
    pub fn new(id: impl Into<String>, on: &[&str]) -> Self {
        MarkedPoint {
            id: id.into(),
            on: on.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn is_double(&self) -> bool {
        self.on.len() == 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfacePair {
    #[serde(rename = "euler_characteristic")]
    pub chi_top: i64,
    pub curves: Vec<Curve>,
    pub points: Vec<MarkedPoint>,
}

/// Where a marked point sits relative to `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DPosition {
    OffD,
    Smooth,
    Singular,
}

impl SurfacePair {
    /// Builds and validates a pair. Point incidences are stored sorted.
    pub fn new(chi_top: i64, curves: Vec<Curve>, points: Vec<MarkedPoint>) -> Result<Self> {
        let mut pair = SurfacePair {
            chi_top,
            curves,
            points,
        };
        for p in &mut pair.points {
            p.on.sort();
        }
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for id in self
            .curves
            .iter()
            .map(|c| &c.id)
            .chain(self.points.iter().map(|p| &p.id))
        {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for p in &self.points {
            if p.on.len() >= 3 {
                return Err(Error::TripleIncidence(p.id.clone()));
            }
            if p.on.is_empty() || (p.on.len() == 2 && p.on[0] == p.on[1]) {
                return Err(Error::DegenerateIncidence(p.id.clone()));
            }
            for c in &p.on {
                self.curve(c)?;
            }
        }
        Ok(())
    }

    pub fn curve(&self, id: &str) -> Result<&Curve> {
        self.curves
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::UnknownCurveRef(id.to_string()))
    }

    pub fn point(&self, id: &str) -> Result<&MarkedPoint> {
        self.points
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::UnknownPoint(id.to_string()))
    }

    pub fn has_curve(&self, id: &str) -> bool {
        self.curves.iter().any(|c| c.id == id)
    }

    pub fn in_d(&self, curve: &str) -> bool {
        self.curves.iter().any(|c| c.id == curve && c.in_d)
    }

    pub fn d_curves(&self) -> impl Iterator<Item = &Curve> {
        self.curves.iter().filter(|c| c.in_d)
    }

    /// Number of curves of `D` through the point.
    pub fn d_multiplicity(&self, p: &MarkedPoint) -> usize {
        p.on.iter().filter(|c| self.in_d(c)).count()
    }

    pub fn position(&self, p: &MarkedPoint) -> DPosition {
        match self.d_multiplicity(p) {
            0 => DPosition::OffD,
            1 => DPosition::Smooth,
            _ => DPosition::Singular,
        }
    }

    /// Double points of `D`, i.e. `D^sing`.
    pub fn d_singular_points(&self) -> impl Iterator<Item = &MarkedPoint> {
        self.points.iter().filter(|p| self.d_multiplicity(p) == 2)
    }

    pub fn points_on<'a>(&'a self, curve: &'a str) -> impl Iterator<Item = &'a MarkedPoint> + 'a {
        self.points.iter().filter(move |p| p.on.iter().any(|c| c == curve))
    }

    /// Intersection number of two distinct curves: the listed common points.
    pub fn intersection(&self, a: &str, b: &str) -> usize {
        self.points
            .iter()
            .filter(|p| p.is_double() && p.on.iter().any(|c| c == a) && p.on.iter().any(|c| c == b))
            .count()
    }

    /// `χ(U)` for `U = X \ D`, by inclusion–exclusion over the strata of `D`.
    pub fn euler_open_complement(&self) -> i64 {
        let curves: i64 = self.d_curves().map(Curve::euler).sum();
        self.chi_top - curves + self.d_singular_points().count() as i64
    }

    /// Euler characteristic of the open stratum `D_I°`.
    pub fn stratum_euler(&self, ids: &BTreeSet<String>) -> Result<i64> {
        for id in ids {
            if !self.curve(id)?.in_d {
                return Err(Error::SupportOffD(id.clone()));
            }
        }
        let ids: Vec<&String> = ids.iter().collect();
        Ok(match ids.as_slice() {
            [] => self.euler_open_complement(),
            [c] => {
                let removed = self.points_on(c).filter(|p| self.d_multiplicity(p) == 2).count() as i64;
                self.curve(c)?.euler() - removed
            }
            [a, b] => self.intersection(a, b) as i64,
            _ => 0,
        })
    }
}

/// A divisor on `X` with rational coefficients along configuration curves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DivisorOnX {
    pub coeffs: BTreeMap<String, Q>,
}

impl DivisorOnX {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ints<'a>(terms: impl IntoIterator<Item = (&'a str, i64)>) -> Self {
        let mut d = DivisorOnX::new();
        for (c, a) in terms {
            d.add(c, Q::from_integer(a));
        }
        d
    }

    pub fn add(&mut self, curve: &str, a: Q) {
        let e = self.coeffs.entry(curve.to_string()).or_insert_with(Q::zero);
        *e += a;
        if e.is_zero() {
            self.coeffs.remove(curve);
        }
    }

    pub fn coeff(&self, curve: &str) -> Q {
        self.coeffs.get(curve).copied().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(Zero::is_zero)
    }

    pub fn is_effective(&self) -> bool {
        self.coeffs.values().all(|a| !a.is_negative())
    }

    pub fn scaled(&self, k: Q) -> Self {
        let mut d = DivisorOnX::new();
        for (c, a) in &self.coeffs {
            d.add(c, *a * k);
        }
        d
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut d = self.clone();
        for (c, a) in &other.coeffs {
            d.add(c, *a);
        }
        d
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.coeffs
            .keys()
            .chain(other.coeffs.keys())
            .all(|c| self.coeff(c) <= other.coeff(c))
    }

    pub fn check_refs(&self, pair: &SurfacePair) -> Result<()> {
        for c in self.coeffs.keys() {
            pair.curve(c)?;
        }
        Ok(())
    }

    pub fn check_supported_on_d(&self, pair: &SurfacePair) -> Result<()> {
        for (c, a) in &self.coeffs {
            if !pair.curve(c)?.in_d && !a.is_zero() {
                return Err(Error::SupportOffD(c.clone()));
            }
        }
        Ok(())
    }

    /// Restriction to the given set of curves.
    pub fn restricted_to(&self, curves: &BTreeSet<String>) -> Self {
        DivisorOnX {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(c, _)| curves.contains(*c))
                .map(|(c, a)| (c.clone(), *a))
                .collect(),
        }
    }
}
