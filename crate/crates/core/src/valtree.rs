//! Infinitely-near points and iterated point blow-ups.
//!
//! A node is identified by its *center*: the point of the previous model that
//! was blown up, described combinatorially by its base (a marked point of `X`,
//! a generic point of `X`, or the exceptional divisor of a parent node), the
//! branches passing through it, and a position tag for free points. Node
//! identity is structural, so the same chain of centers always denotes the
//! same divisorial valuation regardless of the model it was built in.
//!
//! Models are immutable: [`Model::blow_up`] returns a new model.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::geometry::{DivisorOnX, SurfacePair};
use crate::Q;

/// A curve on a model: the strict transform of a curve of `X` or of an
/// exceptional divisor.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    Curve(String),
    Exc(NodeId),
}

impl Branch {
    pub fn curve(id: &str) -> Self {
        Branch::Curve(id.to_string())
    }

    /// Multiplicity of `D` along this branch; positive iff the branch lies in
    /// the total transform of `D`.
    pub fn d_mult(&self, pair: &SurfacePair) -> i64 {
        match self {
            Branch::Curve(c) => pair.in_d(c) as i64,
            Branch::Exc(n) => n
                .curve_mults()
                .iter()
                .filter(|(c, _)| pair.in_d(c))
                .map(|(_, m)| m)
                .sum(),
        }
    }

    pub fn is_over_d(&self, pair: &SurfacePair) -> bool {
        self.d_mult(pair) > 0
    }

    pub fn valuation(&self) -> DivValuation {
        match self {
            Branch::Curve(c) => DivValuation::PrimeOnX(c.clone()),
            Branch::Exc(n) => DivValuation::Exceptional(n.clone()),
        }
    }

    /// Order of vanishing of a monomial along this branch.
    pub fn exponent_of(&self, exponents: &BTreeMap<String, i64>) -> i64 {
        match self {
            Branch::Curve(c) => exponents.get(c).copied().unwrap_or(0),
            Branch::Exc(n) => n.exponent_of(exponents),
        }
    }
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Curve(c) => write!(f, "{c}"),
            Branch::Exc(n) => write!(f, "E{n:?}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    /// A listed marked point of `X`.
    Marked(String),
    /// A point of `X` that is not marked: on at most one curve, located by its tag.
    Free,
    /// A point on the exceptional divisor of the parent node.
    Node(NodeId),
}

pub struct InfNearNode {
    base: Base,
    incident: Vec<Branch>,
    position_tag: Option<String>,
    curve_mults: BTreeMap<String, i64>,
    depth: usize,
    hash: u64,
}

impl InfNearNode {
    pub fn base(&self) -> &Base {
        &self.base
    }

    /// Branches through the blown-up point, sorted.
    pub fn incident(&self) -> &[Branch] {
        &self.incident
    }

    pub fn position_tag(&self) -> Option<&str> {
        self.position_tag.as_deref()
    }

    /// Multiplicity of the total transform of each curve of `X` along the
    /// exceptional divisor of this node.
    pub fn curve_mults(&self) -> &BTreeMap<String, i64> {
        &self.curve_mults
    }

    /// Number of blow-ups in the chain ending at this node.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn exponent_of(&self, exponents: &BTreeMap<String, i64>) -> i64 {
        if exponents.len() < self.curve_mults.len() {
            exponents
                .iter()
                .map(|(c, e)| e * self.curve_mults.get(c).copied().unwrap_or(0))
                .sum()
        } else {
            self.curve_mults
                .iter()
                .map(|(c, m)| m * exponents.get(c).copied().unwrap_or(0))
                .sum()
        }
    }

    fn key(&self) -> (&Base, &[Branch], &Option<String>) {
        (&self.base, &self.incident, &self.position_tag)
    }
}

impl PartialEq for InfNearNode {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && self.key() == other.key()
    }
}

impl Eq for InfNearNode {}

impl PartialOrd for InfNearNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for InfNearNode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.depth.cmp(&other.depth).then_with(|| self.key().cmp(&other.key()))
    }
}

impl Hash for InfNearNode {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

/// Structural handle to a node; cheap to clone and compare.
#[derive(Clone)]
pub struct NodeId(Arc<InfNearNode>);

impl std::ops::Deref for NodeId {
    type Target = InfNearNode;
    fn deref(&self) -> &InfNearNode {
        &self.0
    }
}

impl PartialEq for NodeId {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl Eq for NodeId {}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.cmp(&other.0)
    }
}

impl Hash for NodeId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", describe_center(self, &|_| None))
    }
}

impl NodeId {
    /// Validates a center against the intrinsic transform rules and builds the node.
    ///
    /// For a node based on a parent, the parent's exceptional divisor must be
    /// incident, and any second branch must be one of the branches through
    /// the parent's center (strict transforms meet the new divisor at distinct
    /// points, so no other curve meets it).
    pub fn new(
        pair: &SurfacePair,
        base: Base,
        incident: impl IntoIterator<Item = Branch>,
        position_tag: Option<String>,
    ) -> Result<NodeId> {
        let incident: BTreeSet<Branch> = incident.into_iter().collect();
        let incident: Vec<Branch> = incident.into_iter().collect();
        if incident.len() > 2 {
            return Err(Error::IllegalIncidence(format!(
                "{} branches through one point",
                incident.len()
            )));
        }
        for b in &incident {
            if let Branch::Curve(c) = b {
                if !pair.has_curve(c) {
                    return Err(Error::UnknownBranch(c.clone()));
                }
            }
        }
        let depth = match &base {
            Base::Marked(p) => {
                let point = pair.point(p)?;
                let expected: Vec<Branch> = point.on.iter().map(|c| Branch::curve(c)).collect();
                if expected != incident {
                    return Err(Error::IllegalIncidence(format!(
                        "marked point `{p}` lies on {:?}, not {:?}",
                        point.on, incident
                    )));
                }
                if position_tag.is_some() {
                    return Err(Error::IllegalIncidence(format!(
                        "marked point `{p}` takes no position tag"
                    )));
                }
                1
            }
            Base::Free => {
                if incident.len() > 1 || incident.iter().any(|b| matches!(b, Branch::Exc(_))) {
                    return Err(Error::IllegalIncidence(
                        "a free point of X lies on at most one curve; intersections must be marked".into(),
                    ));
                }
                if position_tag.as_deref().is_none_or(str::is_empty) {
                    return Err(Error::IllegalIncidence("free points need a position tag".into()));
                }
                1
            }
            Base::Node(parent) => {
                let own = Branch::Exc(parent.clone());
                if !incident.contains(&own) {
                    return Err(Error::IllegalIncidence(
                        "a point on an exceptional divisor must list that divisor".into(),
                    ));
                }
                match incident.iter().find(|b| **b != own) {
                    Some(other) => {
                        if !parent.incident.contains(other) {
                            return Err(Error::IllegalIncidence(format!(
                                "{other:?} does not meet the exceptional divisor of {parent:?}"
                            )));
                        }
                        if position_tag.is_some() {
                            return Err(Error::IllegalIncidence("satellite points take no position tag".into()));
                        }
                    }
                    None => {
                        if position_tag.as_deref().is_none_or(str::is_empty) {
                            return Err(Error::IllegalIncidence("free points need a position tag".into()));
                        }
                    }
                }
                parent.depth + 1
            }
        };
        let mut curve_mults = BTreeMap::new();
        for b in &incident {
            match b {
                Branch::Curve(c) => *curve_mults.entry(c.clone()).or_insert(0) += 1,
                Branch::Exc(n) => {
                    for (c, m) in &n.curve_mults {
                        *curve_mults.entry(c.clone()).or_insert(0) += m;
                    }
                }
            }
        }
        let mut h = DefaultHasher::new();
        base.hash(&mut h);
        incident.hash(&mut h);
        position_tag.hash(&mut h);
        Ok(NodeId(Arc::new(InfNearNode {
            base,
            incident,
            position_tag,
            curve_mults,
            depth,
            hash: h.finish(),
        })))
    }

    pub fn parent(&self) -> Option<&NodeId> {
        match &self.base {
            Base::Node(p) => Some(p),
            _ => None,
        }
    }

    pub fn root(&self) -> &NodeId {
        let mut n = self;
        while let Some(p) = n.parent() {
            n = p;
        }
        n
    }

    /// Root-first chain of blow-ups realizing this node's valuation.
    pub fn chain(&self) -> Vec<NodeId> {
        let mut out = vec![self.clone()];
        let mut n = self;
        while let Some(p) = n.parent() {
            out.push(p.clone());
            n = p;
        }
        out.reverse();
        out
    }

    /// Curves of `X` through the root center.
    pub fn root_curves(&self) -> Vec<String> {
        self.root()
            .incident
            .iter()
            .filter_map(|b| match b {
                Branch::Curve(c) => Some(c.clone()),
                Branch::Exc(_) => None,
            })
            .collect()
    }

    /// Marked point of `X` under this node, if the root center is marked.
    pub fn root_point(&self) -> Option<&str> {
        match &self.root().base {
            Base::Marked(p) => Some(p),
            _ => None,
        }
    }

    /// Number of incident branches lying over `D`.
    pub fn d_branches(&self, pair: &SurfacePair) -> usize {
        self.incident.iter().filter(|b| b.is_over_d(pair)).count()
    }
}

fn describe_center(n: &NodeId, label: &dyn Fn(&NodeId) -> Option<String>) -> String {
    let branch = |b: &Branch| match b {
        Branch::Curve(c) => c.clone(),
        Branch::Exc(m) => label(m).unwrap_or_else(|| format!("E[{}]", describe_center(m, label))),
    };
    match &n.base {
        Base::Marked(p) => p.clone(),
        Base::Free => {
            let on = n.incident.first().map(branch).unwrap_or_else(|| "X".into());
            format!("{on}:{}", n.position_tag.as_deref().unwrap_or(""))
        }
        Base::Node(parent) => {
            let e = branch(&Branch::Exc(parent.clone()));
            match n.incident.iter().find(|b| **b != Branch::Exc(parent.clone())) {
                Some(other) => format!("{e}∩{}", branch(other)),
                None => format!("{e}:{}", n.position_tag.as_deref().unwrap_or("")),
            }
        }
    }
}

/// A divisorial valuation of `X`: order along a configuration curve, or along
/// the exceptional divisor of a node (Zariski's correspondence).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum DivValuation {
    PrimeOnX(String),
    Exceptional(NodeId),
}

impl DivValuation {
    /// Multiplicity of the total transform of `curve` along this valuation.
    pub fn curve_mult(&self, curve: &str) -> i64 {
        match self {
            DivValuation::PrimeOnX(c) => (c == curve) as i64,
            DivValuation::Exceptional(n) => n.curve_mults.get(curve).copied().unwrap_or(0),
        }
    }

    pub fn exponent_of(&self, exponents: &BTreeMap<String, i64>) -> i64 {
        match self {
            DivValuation::PrimeOnX(c) => exponents.get(c).copied().unwrap_or(0),
            DivValuation::Exceptional(n) => n.exponent_of(exponents),
        }
    }

    pub fn node(&self) -> Option<&NodeId> {
        match self {
            DivValuation::Exceptional(n) => Some(n),
            DivValuation::PrimeOnX(_) => None,
        }
    }

    pub fn d_value(&self, pair: &SurfacePair) -> i64 {
        match self {
            DivValuation::PrimeOnX(c) => pair.in_d(c) as i64,
            DivValuation::Exceptional(n) => Branch::Exc(n.clone()).d_mult(pair),
        }
    }
}

/// Multiplicity of a divisor on `X` along a valuation (pullback evaluation).
pub fn evaluate_on_x(div: &DivisorOnX, v: &DivValuation) -> Q {
    div.coeffs
        .iter()
        .map(|(c, a)| *a * Q::from_integer(v.curve_mult(c)))
        .sum()
}

/// User-facing description of a point to blow up, with branches named by
/// curve id or node label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlowUpSpec {
    pub base: BaseRef,
    pub incident: Vec<String>,
    pub position_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseRef {
    Marked(String),
    Free,
    Node(String),
}

/// A modification of `X` obtained by finitely many point blow-ups; `X` itself
/// when empty.
#[derive(Clone)]
pub struct Model {
    pair: Arc<SurfacePair>,
    order: Vec<NodeId>,
    labels: BTreeMap<NodeId, String>,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.order.iter().map(|n| &self.labels[n]))
            .finish()
    }
}

impl Model {
    pub fn new(pair: Arc<SurfacePair>) -> Self {
        Model {
            pair,
            order: Vec::new(),
            labels: BTreeMap::new(),
        }
    }

    pub fn pair(&self) -> &SurfacePair {
        &self.pair
    }

    pub fn pair_arc(&self) -> &Arc<SurfacePair> {
        &self.pair
    }

    /// Nodes in construction order (every node after its ancestors).
    pub fn nodes(&self) -> &[NodeId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, n: &NodeId) -> bool {
        self.labels.contains_key(n)
    }

    pub fn label(&self, n: &NodeId) -> Option<&str> {
        self.labels.get(n).map(String::as_str)
    }

    pub fn node_by_label(&self, label: &str) -> Option<&NodeId> {
        self.labels.iter().find(|(_, l)| *l == label).map(|(n, _)| n)
    }

    pub fn same_surface(&self, other: &Model) -> bool {
        Arc::ptr_eq(&self.pair, &other.pair) || *self.pair == *other.pair
    }

    /// Human-readable name for a point or node, using this model's labels.
    pub fn describe(&self, center: &NodeId) -> String {
        describe_center(center, &|n| self.label(n).map(str::to_string))
    }

    pub fn branch_name(&self, b: &Branch) -> String {
        match b {
            Branch::Curve(c) => c.clone(),
            Branch::Exc(n) => self
                .label(n)
                .map(str::to_string)
                .unwrap_or_else(|| format!("E[{}]", self.describe(n))),
        }
    }

    /// All curves of the model: strict transforms of curves of `X`, then
    /// exceptional divisors in construction order.
    pub fn branches(&self) -> Vec<Branch> {
        self.pair
            .curves
            .iter()
            .map(|c| Branch::curve(&c.id))
            .chain(self.order.iter().cloned().map(Branch::Exc))
            .collect()
    }

    pub fn has_branch(&self, b: &Branch) -> bool {
        match b {
            Branch::Curve(c) => self.pair.has_curve(c),
            Branch::Exc(n) => self.contains(n),
        }
    }

    pub fn children<'a>(&'a self, n: &'a NodeId) -> impl Iterator<Item = &'a NodeId> + 'a {
        self.order.iter().filter(move |m| m.parent() == Some(n))
    }

    pub fn roots(&self) -> impl Iterator<Item = &NodeId> {
        self.order.iter().filter(|m| m.parent().is_none())
    }

    /// Blows up the point described by `center`.
    pub fn blow_up(&self, center: NodeId, label: impl Into<String>) -> Result<Model> {
        let label = label.into();
        if self.contains(&center) {
            return Err(Error::IllegalIncidence(format!(
                "{} has already been blown up",
                self.describe(&center)
            )));
        }
        match &center.base {
            Base::Node(p) if !self.contains(p) => {
                return Err(Error::IllegalIncidence(format!(
                    "parent {} is not in the model",
                    self.describe(p)
                )))
            }
            Base::Marked(p) => {
                self.pair.point(p)?;
            }
            _ => {}
        }
        for b in center.incident() {
            if !self.has_branch(b) {
                return Err(Error::UnknownBranch(self.branch_name(b)));
            }
        }
        if self.pair.has_curve(&label) || self.node_by_label(&label).is_some() || self.pair.point(&label).is_ok() {
            return Err(Error::DuplicateId(label));
        }
        let mut m = self.clone();
        m.order.push(center.clone());
        m.labels.insert(center, label);
        Ok(m)
    }

    fn resolve_branch(&self, name: &str) -> Result<Branch> {
        if self.pair.has_curve(name) {
            Ok(Branch::curve(name))
        } else if let Some(n) = self.node_by_label(name) {
            Ok(Branch::Exc(n.clone()))
        } else {
            Err(Error::UnknownBranch(name.to_string()))
        }
    }

    /// Resolves a label-based spec into a center of this model.
    pub fn center(&self, spec: &BlowUpSpec) -> Result<NodeId> {
        let base = match &spec.base {
            BaseRef::Marked(p) => Base::Marked(p.clone()),
            BaseRef::Free => Base::Free,
            BaseRef::Node(l) => Base::Node(
                self.node_by_label(l)
                    .cloned()
                    .ok_or_else(|| Error::UnknownBranch(l.clone()))?,
            ),
        };
        let incident = spec
            .incident
            .iter()
            .map(|s| self.resolve_branch(s))
            .collect::<Result<Vec<_>>>()?;
        NodeId::new(&self.pair, base, incident, spec.position_tag.clone())
    }

    pub fn blow_up_spec(&self, spec: &BlowUpSpec, label: impl Into<String>) -> Result<(Model, NodeId)> {
        let c = self.center(spec)?;
        Ok((self.blow_up(c.clone(), label)?, c))
    }

    /// `self ⊆ other`: same surface and every node of `self` is in `other`.
    pub fn is_submodel_of(&self, other: &Model) -> bool {
        self.same_surface(other) && self.order.iter().all(|n| other.contains(n))
    }

    /// Keeps the nodes selected by `keep`; the selection must be parent-closed.
    pub fn restrict(&self, keep: impl Fn(&NodeId) -> bool) -> Result<Model> {
        let mut m = Model::new(self.pair.clone());
        for n in &self.order {
            if keep(n) {
                if let Some(p) = n.parent() {
                    if !m.contains(p) {
                        return Err(Error::ModelMismatch(format!(
                            "{} kept without its parent",
                            self.describe(n)
                        )));
                    }
                }
                m.order.push(n.clone());
                m.labels.insert(n.clone(), self.labels[n].clone());
            }
        }
        Ok(m)
    }

    /// The model on which `n`'s center is a point: the chain of `n` minus `n`.
    pub fn chain_model(pair: Arc<SurfacePair>, n: &NodeId) -> Model {
        let mut m = Model::new(pair);
        let chain = n.chain();
        for (i, c) in chain[..chain.len() - 1].iter().enumerate() {
            m.order.push(c.clone());
            m.labels.insert(c.clone(), format!("C{}", i + 1));
        }
        m
    }

    /// Scratch copy with the chain of `n` adjoined.
    pub fn with_chain(&self, n: &NodeId) -> Model {
        let mut m = self.clone();
        for c in n.chain() {
            if !m.contains(&c) {
                let label = format!("~{}", m.order.len() + 1);
                m.order.push(c.clone());
                m.labels.insert(c, label);
            }
        }
        m
    }

    /// Points of the model lying on two branches (not yet blown up).
    pub fn double_points(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut roots: BTreeSet<&str> = BTreeSet::new();
        for n in &self.order {
            if let Base::Marked(p) = &n.base {
                roots.insert(p);
            }
        }
        for p in &self.pair.points {
            if p.is_double() && !roots.contains(p.id.as_str()) {
                let c = NodeId::new(
                    &self.pair,
                    Base::Marked(p.id.clone()),
                    p.on.iter().map(|c| Branch::curve(c)),
                    None,
                )
                .expect("validated pair");
                out.push(c);
            }
        }
        for n in &self.order {
            for b in n.incident() {
                let c = NodeId::new(
                    &self.pair,
                    Base::Node(n.clone()),
                    [Branch::Exc(n.clone()), b.clone()],
                    None,
                )
                .expect("satellite of a valid node");
                if !self.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }

    /// A free point on the given branch, identified by `tag`.
    pub fn free_point(&self, b: &Branch, tag: &str) -> Result<NodeId> {
        match b {
            Branch::Curve(c) => NodeId::new(&self.pair, Base::Free, [b.clone()], Some(format!("{c}:{tag}"))),
            Branch::Exc(n) => NodeId::new(&self.pair, Base::Node(n.clone()), [b.clone()], Some(tag.to_string())),
        }
    }

    /// Sub-models `W ⊆ self` used when probing nefness: all parent-closed
    /// subsets when there are at most `cap` of them, otherwise construction
    /// prefixes. The ancestor model of every node is always included.
    pub fn intermediate_models(&self, cap: usize) -> Vec<Model> {
        let mut sets: Vec<BTreeSet<NodeId>> = match ideals(&self.order, cap) {
            Some(all) => all,
            None => (0..=self.order.len())
                .map(|k| self.order[..k].iter().cloned().collect())
                .collect(),
        };
        for n in &self.order {
            let mut s: BTreeSet<NodeId> = n.chain().into_iter().collect();
            s.remove(n);
            sets.push(s);
        }
        sets.sort();
        sets.dedup();
        sets.into_iter()
            .map(|s| self.restrict(|n| s.contains(n)).expect("ideal is parent-closed"))
            .collect()
    }
}

/// Parent-closed subsets of a forest given in construction order, or `None`
/// when there are more than `cap`.
fn ideals(order: &[NodeId], cap: usize) -> Option<Vec<BTreeSet<NodeId>>> {
    let mut out: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new()];
    for n in order {
        let mut extra = Vec::new();
        for s in &out {
            if n.parent().is_none_or(|p| s.contains(p)) {
                let mut t = s.clone();
                t.insert(n.clone());
                extra.push(t);
            }
        }
        out.extend(extra);
        if out.len() > cap {
            return None;
        }
    }
    Some(out)
}

/// A divisor on a model, with coefficients along its branches.
#[derive(Clone, Debug)]
pub struct ModelDivisor {
    pub model: Model,
    pub coeffs: BTreeMap<Branch, Q>,
}

impl ModelDivisor {
    pub fn zero(model: Model) -> Self {
        ModelDivisor {
            model,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn on_x(pair: Arc<SurfacePair>, div: &DivisorOnX) -> Result<Self> {
        div.check_refs(&pair)?;
        let mut d = ModelDivisor::zero(Model::new(pair));
        for (c, a) in &div.coeffs {
            d.set(Branch::curve(c), *a);
        }
        Ok(d)
    }

    pub fn new(model: Model, coeffs: impl IntoIterator<Item = (Branch, Q)>) -> Result<Self> {
        let mut d = ModelDivisor::zero(model);
        for (b, a) in coeffs {
            if !d.model.has_branch(&b) {
                return Err(Error::ModelMismatch(format!(
                    "{} is not a branch of the model",
                    d.model.branch_name(&b)
                )));
            }
            let cur = d.coeff(&b);
            d.set(b, cur + a);
        }
        Ok(d)
    }

    pub fn set(&mut self, b: Branch, a: Q) {
        if a.is_zero() {
            self.coeffs.remove(&b);
        } else {
            self.coeffs.insert(b, a);
        }
    }

    pub fn coeff(&self, b: &Branch) -> Q {
        self.coeffs.get(b).copied().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Pullback to a model extending this one: each new exceptional divisor
    /// receives the sum of the coefficients of the branches through its center.
    pub fn total_transform(&self, target: &Model) -> Result<ModelDivisor> {
        if !self.model.is_submodel_of(target) {
            return Err(Error::ModelMismatch(
                "target does not extend the divisor's model".into(),
            ));
        }
        let mut out = ModelDivisor {
            model: target.clone(),
            coeffs: self.coeffs.clone(),
        };
        for n in target.nodes() {
            if self.model.contains(n) {
                continue;
            }
            let a: Q = n.incident().iter().map(|b| out.coeff(b)).sum();
            out.set(Branch::Exc(n.clone()), a);
        }
        Ok(out)
    }

    /// Push-forward to a sub-model: forget the exceptional divisors it lacks.
    pub fn pushforward(&self, target: &Model) -> Result<ModelDivisor> {
        if !target.is_submodel_of(&self.model) {
            return Err(Error::ModelMismatch(
                "target is not a sub-model of the divisor's model".into(),
            ));
        }
        Ok(ModelDivisor {
            model: target.clone(),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(b, _)| target.has_branch(b))
                .map(|(b, a)| (b.clone(), *a))
                .collect(),
        })
    }

    /// Multiplicity along `v` of the pullback of this divisor.
    pub fn value_at(&self, v: &DivValuation) -> Q {
        match v {
            DivValuation::PrimeOnX(c) => self.coeff(&Branch::curve(c)),
            DivValuation::Exceptional(n) => {
                let mut memo = HashMap::new();
                self.value_at_node(n, &mut memo)
            }
        }
    }

    fn value_at_node(&self, n: &NodeId, memo: &mut HashMap<NodeId, Q>) -> Q {
        if self.model.contains(n) {
            return self.coeff(&Branch::Exc(n.clone()));
        }
        if let Some(v) = memo.get(n) {
            return *v;
        }
        let mut total = Q::zero();
        for b in n.incident() {
            total += match b {
                Branch::Curve(c) => self.coeff(&Branch::curve(c)),
                Branch::Exc(m) => self.value_at_node(m, memo),
            };
        }
        memo.insert(n.clone(), total);
        total
    }

    /// The divisor on `X` obtained by forgetting all exceptional divisors.
    pub fn to_x(&self) -> DivisorOnX {
        let mut d = DivisorOnX::new();
        for (b, a) in &self.coeffs {
            if let Branch::Curve(c) = b {
                d.add(c, *a);
            }
        }
        d
    }

    pub fn plus(&self, other: &ModelDivisor) -> Result<ModelDivisor> {
        if self.model.order != other.model.order || !self.model.same_surface(&other.model) {
            return Err(Error::ModelMismatch("divisors live on different models".into()));
        }
        let mut out = self.clone();
        for (b, a) in &other.coeffs {
            let cur = out.coeff(b);
            out.set(b.clone(), cur + a);
        }
        Ok(out)
    }

    pub fn scaled(&self, k: Q) -> ModelDivisor {
        let mut out = ModelDivisor::zero(self.model.clone());
        for (b, a) in &self.coeffs {
            out.set(b.clone(), *a * k);
        }
        out
    }
}

/// Probe centers over `D`: the double points of `model` touching `D` and one
/// free point per branch of the total transform of `D`, then `depth - 1`
/// further levels of satellite and free points above each probe.
pub fn probe_nodes(model: &Model, depth: usize) -> Vec<NodeId> {
    if depth == 0 {
        return Vec::new();
    }
    let pair = model.pair();
    let mut level: Vec<NodeId> = model
        .double_points()
        .into_iter()
        .filter(|c| c.d_branches(pair) > 0)
        .collect();
    for b in model.branches() {
        if b.is_over_d(pair) {
            level.push(model.free_point(&b, "probe").expect("free point on a model branch"));
        }
    }
    let mut out = Vec::new();
    for _ in 1..depth {
        let mut next = Vec::new();
        for n in &level {
            for b in n.incident() {
                next.push(
                    NodeId::new(pair, Base::Node(n.clone()), [Branch::Exc(n.clone()), b.clone()], None)
                        .expect("satellite of a probe"),
                );
            }
            next.push(
                NodeId::new(
                    pair,
                    Base::Node(n.clone()),
                    [Branch::Exc(n.clone())],
                    Some("probe".into()),
                )
                .expect("free point on a probe"),
            );
        }
        out.append(&mut level);
        level = next;
    }
    out.append(&mut level);
    out
}

/// Every valuation attached to the branches of `model` plus the probes of
/// the given depth above it.
pub fn probe_valuations(model: &Model, depth: usize) -> Vec<DivValuation> {
    model
        .branches()
        .into_iter()
        .map(|b| b.valuation())
        .chain(probe_nodes(model, depth).into_iter().map(DivValuation::Exceptional))
        .collect()
}
