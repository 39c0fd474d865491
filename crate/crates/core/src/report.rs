//! Per-connection reports in structured, text and DOT form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::bdivisor::Region;
use crate::bounds::{
    hom_irr_bound_check, lefschetz_count, recognition_obstruction, slope_bound_certificate, turning_count_bound,
    BoundPolynomial, BoundReport,
};
use crate::charcycle::{cc_connection, global_chi, index_pairing, LagrangianCycle};
use crate::connection::{ExpConnection, IrrAnalysis};
use crate::error::Result;
use crate::geometry::{DPosition, DivisorOnX};
use crate::q_str;
use crate::scenario::Scenario;
use crate::valtree::DivValuation;

#[derive(Clone, Debug, Serialize)]
pub struct NodeRow {
    pub label: String,
    pub center: String,
    pub parent: Option<String>,
    pub incident: Vec<String>,
    pub irr: i64,
    pub delta: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TurningRow {
    pub point: String,
    pub d_singular: bool,
    pub resolution_depth: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaSummary {
    pub per_point: BTreeMap<String, String>,
    pub smooth_locus: String,
    pub singular_locus: String,
    pub total: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiRow {
    pub route_a: i64,
    pub route_b: i64,
    pub consistent: bool,
}

/// `K(R, r)` for the default polynomial at `R = Irr(X,M)`, next to the
/// points a recognizing curve must avoid. The polynomial is a heuristic, so
/// this row never affects consistency.
#[derive(Clone, Debug, Serialize)]
pub struct LefschetzRow {
    pub polynomial: &'static str,
    pub count: String,
    pub obstruction: Vec<String>,
}

pub fn lefschetz_row(s: &Scenario, a: &IrrAnalysis) -> LefschetzRow {
    let l = BoundPolynomial::default_lefschetz(&s.pair);
    LefschetzRow {
        polynomial: "L(R,r) = |D^sing| + 3·fdeg(R)·r² (non-normative default)",
        count: q_str(&lefschetz_count(&l, &a.irr_on_x, a.connection.rank())),
        obstruction: recognition_obstruction(&a.connection, &a.connection, &s.pair)
            .into_iter()
            .collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionReport {
    pub connection: String,
    pub rank: i64,
    pub irr_on_x: BTreeMap<String, String>,
    pub nodes: Vec<NodeRow>,
    pub turning: Vec<TurningRow>,
    pub delta: DeltaSummary,
    pub cc: LagrangianCycle,
    pub chi: ChiRow,
    pub bounds: Vec<BoundReport>,
    pub lefschetz: LefschetzRow,
    pub probe_depth: usize,
    pub consistency: &'static str,
}

fn div_map(d: &DivisorOnX) -> BTreeMap<String, String> {
    d.coeffs.iter().map(|(c, a)| (c.clone(), q_str(a))).collect()
}

pub fn node_rows(a: &IrrAnalysis) -> Vec<NodeRow> {
    let model = a.model();
    model
        .nodes()
        .iter()
        .map(|n| {
            let v = DivValuation::Exceptional(n.clone());
            NodeRow {
                label: model.label(n).unwrap_or("?").to_string(),
                center: model.describe(n),
                parent: n.parent().map(|p| model.label(p).unwrap_or("?").to_string()),
                incident: n.incident().iter().map(|b| model.branch_name(b)).collect(),
                irr: a.connection.irr_along(&v),
                delta: q_str(&a.delta.get(&v)),
            }
        })
        .collect()
}

pub fn turning_rows(a: &IrrAnalysis) -> Vec<TurningRow> {
    a.connection
        .turning_points_on_x(&a.pair)
        .into_iter()
        .map(|p| {
            let point = a.pair.point(&p).expect("marked");
            TurningRow {
                d_singular: a.pair.position(point) == DPosition::Singular,
                resolution_depth: a.resolution_depth(&p),
                point: p,
            }
        })
        .collect()
}

pub fn delta_summary(a: &IrrAnalysis) -> DeltaSummary {
    let pair = &a.pair;
    DeltaSummary {
        per_point: a
            .delta
            .point_integrals(pair)
            .iter()
            .map(|(p, q)| (p.clone(), q_str(q)))
            .collect(),
        smooth_locus: q_str(&a.delta.integral(&Region::SmoothLocusOfD, pair)),
        singular_locus: q_str(&a.delta.integral(&Region::SingularLocusOfD, pair)),
        total: q_str(&a.delta.integral(&Region::All, pair)),
    }
}

pub fn chi_row(a: &IrrAnalysis) -> Result<ChiRow> {
    let route_a = global_chi(a)?;
    let route_b = index_pairing(&a.pair, &cc_connection(a)?)?;
    Ok(ChiRow {
        route_a,
        route_b,
        consistent: route_a == route_b,
    })
}

/// Bound reports: turning count, `End` irregularity, and the slope
/// certificate when a test divisor is given.
pub fn bound_reports(
    s: &Scenario,
    a: &IrrAnalysis,
    end: &IrrAnalysis,
    f: Option<&DivisorOnX>,
) -> Result<Vec<BoundReport>> {
    let mut out = vec![
        turning_count_bound(a, end),
        hom_irr_bound_check(&a.connection, &a.connection, &s.pair),
    ];
    if let Some(f) = f {
        out.push(slope_bound_certificate(a, f)?);
    }
    Ok(out)
}

pub fn connection_report(
    s: &Scenario,
    name: &str,
    m: &ExpConnection,
    f: Option<&DivisorOnX>,
) -> Result<ConnectionReport> {
    let a = IrrAnalysis::new(m, &s.pair, s.options.max_blowups)?;
    let end = IrrAnalysis::on_own_resolution(&m.end(), &s.pair, s.options.max_blowups)?;
    let chi = chi_row(&a)?;
    let bounds = bound_reports(s, &a, &end, f)?;
    let consistent = chi.consistent && bounds.iter().all(|b| b.holds);
    Ok(ConnectionReport {
        connection: name.to_string(),
        rank: m.rank(),
        irr_on_x: div_map(&a.irr_on_x),
        nodes: node_rows(&a),
        turning: turning_rows(&a),
        delta: delta_summary(&a),
        cc: cc_connection(&a)?,
        chi,
        bounds,
        lefschetz: lefschetz_row(s, &a),
        probe_depth: s.options.probe_depth,
        consistency: if consistent { "ok" } else { "FAILED" },
    })
}

pub fn irr_text(r: &ConnectionReport) -> String {
    let mut out = String::new();
    let irr: Vec<String> = r.irr_on_x.iter().map(|(c, a)| format!("{a}·{c}")).collect();
    let _ = writeln!(
        out,
        "Irr(X,{}) = {}",
        r.connection,
        if irr.is_empty() { "0".into() } else { irr.join(" + ") }
    );
    let _ = writeln!(out, "determination model: {} blow-ups", r.nodes.len());
    for n in &r.nodes {
        let _ = writeln!(out, "  {:<4} center {:<10} irr {}", n.label, n.center, n.irr);
    }
    out
}

pub fn delta_text(r: &ConnectionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "δ Irr {} support:", r.connection);
    let mut any = false;
    for n in r.nodes.iter().filter(|n| n.delta != "0") {
        any = true;
        let _ = writeln!(out, "  {:<4} center {:<10} δ = {}", n.label, n.center, n.delta);
    }
    if !any {
        let _ = writeln!(out, "  (empty)");
    }
    for (p, q) in &r.delta.per_point {
        let _ = writeln!(out, "∫_{p} δ = {q}");
    }
    let _ = writeln!(
        out,
        "∫ over D^sm = {}, over D^sing = {}, total = {}",
        r.delta.smooth_locus, r.delta.singular_locus, r.delta.total
    );
    out
}

pub fn turning_text(r: &ConnectionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "turning points of {}: {}", r.connection, r.turning.len());
    for t in &r.turning {
        let kind = if t.d_singular {
            "D-singular"
        } else {
            "smooth point of D"
        };
        let _ = writeln!(out, "  {} ({kind}), resolution depth {}", t.point, t.resolution_depth);
    }
    out
}

pub fn cc_text(r: &ConnectionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "CC({}):", r.connection);
    let _ = writeln!(out, "  zero section  {}", r.cc.zero_section);
    for (c, a) in &r.cc.conormal_curves {
        let _ = writeln!(out, "  T*_{c}X  {a}");
    }
    for (p, a) in &r.cc.conormal_points {
        let _ = writeln!(out, "  T*_{p}X  {a}");
    }
    out
}

pub fn chi_text(r: &ConnectionReport) -> String {
    let c = &r.chi;
    if c.consistent {
        format!("chi = {} (route A = route B = {})\n", c.route_a, c.route_b)
    } else {
        format!("chi FAILED (route A = {}, route B = {})\n", c.route_a, c.route_b)
    }
}

pub fn bounds_text(r: &ConnectionReport) -> String {
    let mut out = String::new();
    for b in &r.bounds {
        let _ = writeln!(
            out,
            "{:<44} attained {:>4} ≤ bound {:>4}  {}",
            b.name,
            q_str(&b.attained_value),
            q_str(&b.bound_value),
            if b.holds { "ok" } else { "VIOLATED" }
        );
    }
    let _ = writeln!(
        out,
        "K(Irr(X,{}), {}) = {}  [{}]",
        r.connection, r.rank, r.lefschetz.count, r.lefschetz.polynomial
    );
    let _ = writeln!(out, "recognition obstruction: {}", r.lefschetz.obstruction.join(", "));
    out
}

pub fn full_text(r: &ConnectionReport) -> String {
    let mut out = format!("== connection {} (rank {}) ==\n", r.connection, r.rank);
    for part in [
        irr_text(r),
        turning_text(r),
        delta_text(r),
        cc_text(r),
        chi_text(r),
        bounds_text(r),
    ] {
        out.push_str(&part);
    }
    let _ = writeln!(out, "probe depth {}; consistency {}", r.probe_depth, r.consistency);
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT digraph of the determination forest, nodes labelled with the
/// irregularity and δ at their exceptional divisors.
pub fn emit_dot(a: &IrrAnalysis, name: &str) -> String {
    let model = a.model();
    let mut out = format!("digraph \"{}\" {{\n", dot_escape(name));
    if !model.is_empty() {
        out.push_str("  node [shape=box];\n");
    }
    for n in model.nodes() {
        let label = model.label(n).unwrap_or("?");
        let v = DivValuation::Exceptional(n.clone());
        let incident: Vec<String> = n.incident().iter().map(|b| model.branch_name(b)).collect();
        let _ = writeln!(
            out,
            "  \"{}\" [label=\"{}: irr={}, δ={}\", tooltip=\"center {}; branches {}\"];",
            dot_escape(label),
            dot_escape(label),
            a.connection.irr_along(&v),
            q_str(&a.delta.get(&v)),
            dot_escape(&model.describe(n)),
            dot_escape(&incident.join(", "))
        );
    }
    for n in model.nodes() {
        if let Some(p) = n.parent() {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\";",
                dot_escape(model.label(p).unwrap_or("?")),
                dot_escape(model.label(n).unwrap_or("?"))
            );
        }
    }
    out.push_str("}\n");
    out
}
