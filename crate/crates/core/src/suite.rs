//! Consistency suites run by the `check` command and the acceptance harness.
//!
//! Every check instantiates an identity or inequality on concrete data and
//! records whether it held.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::bdivisor::{delta_divisor, is_nef_probe, partial_discrepancy_at, CartierBDivisor, Region};
use crate::bounds::{criterion_integral, hom_irr_bound_check, recognition_obstruction, turning_count_bound};
use crate::charcycle::{cc_connection, euler_of_cycle, global_chi, index_pairing, local_solution_euler};
use crate::connection::{ExpConnection, IrrAnalysis};
use crate::error::Result;
use crate::exec::Execution;
use crate::geometry::{DPosition, DivisorOnX, SurfacePair};
use crate::scenario::{Options, Scenario};
use crate::valtree::{evaluate_on_x, probe_valuations, DivValuation};
use crate::{q_str, Q};

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: String,
    pub subject: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, subject: &str, passed: bool, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.to_string(),
            subject: subject.to_string(),
            passed,
            detail: detail.into(),
        }
    }

    fn from_result(name: &str, subject: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((ok, d)) => CheckOutcome::new(name, subject, ok, d),
            Err(e) => CheckOutcome::new(name, subject, false, format!("error: {e}")),
        }
    }
}

/// `M` and `End M` analysed once and shared by all per-connection checks.
pub struct Analysed {
    pub m: IrrAnalysis,
    pub end: IrrAnalysis,
}

impl Analysed {
    pub fn new(m: &ExpConnection, pair: &Arc<SurfacePair>, opts: &Options) -> Result<Self> {
        Ok(Analysed {
            m: IrrAnalysis::new(m, pair, opts.max_blowups)?,
            end: IrrAnalysis::new(&m.end(), pair, opts.max_blowups)?,
        })
    }
}

pub fn two_route_chi(a: &IrrAnalysis) -> Result<(bool, String)> {
    let route_a = global_chi(a)?;
    let route_b = index_pairing(&a.pair, &cc_connection(a)?)?;
    Ok((route_a == route_b, format!("route A = {route_a}, route B = {route_b}")))
}

/// The Euler function of the cycle: rank on `U`, `−irr` on open curves of
/// `D`, and the local solution Euler characteristic at each point of `D`.
pub fn euler_route(a: &IrrAnalysis) -> Result<(bool, String)> {
    let pair = &a.pair;
    let f = euler_of_cycle(pair, &cc_connection(a)?)?;
    let mut bad = Vec::new();
    if f.on_u != a.connection.rank() {
        bad.push(format!("U: {} ≠ rank", f.on_u));
    }
    for c in pair.d_curves() {
        let want = -a.connection.irr_along(&DivValuation::PrimeOnX(c.id.clone()));
        if f.on_curve_stratum[&c.id] != want {
            bad.push(format!("{}: {} ≠ {want}", c.id, f.on_curve_stratum[&c.id]));
        }
    }
    for p in &pair.points {
        if pair.position(p) == DPosition::OffD {
            continue;
        }
        let want = local_solution_euler(a, &p.id)?;
        if f.on_point[&p.id] != want {
            bad.push(format!("{}: {} ≠ {want}", p.id, f.on_point[&p.id]));
        }
    }
    Ok((bad.is_empty(), bad.join("; ")))
}

/// `δ Irr M` is effective and lives on exceptional divisors over marked
/// points of `D`.
pub fn delta_effective(a: &IrrAnalysis) -> (bool, String) {
    let confined = a.delta.values.keys().all(|v| {
        v.node()
            .is_some_and(|n| a.model().contains(n) && n.root_point().is_some() && n.d_branches(&a.pair) <= 1)
    });
    let ok = a.delta.is_effective() && confined;
    (ok, format!("{} valuations in the support", a.delta.values.len()))
}

/// `Irr M ≤ Irr(X, M)` pulled back, at every probe of the given depth.
pub fn semicontinuity(a: &IrrAnalysis, depth: usize, exec: Execution) -> (bool, String) {
    let vals = probe_valuations(a.model(), depth);
    let bad = exec.map(&vals, |v| a.irr.evaluate(v) > evaluate_on_x(&a.irr_on_x, v));
    let n = bad.iter().filter(|b| **b).count();
    (n == 0, format!("{} probes, {n} violations", vals.len()))
}

/// The b-divisor is Cartier on its determination model: its pullback agrees
/// with the irregularity computed directly at every probe.
pub fn cartier_on_resolution(a: &IrrAnalysis, depth: usize, exec: Execution) -> (bool, String) {
    let vals = probe_valuations(a.model(), depth);
    let bad = exec.map(&vals, |v| {
        a.irr.evaluate(v) != Q::from_integer(a.connection.irr_along(v))
    });
    let n = bad.iter().filter(|b| **b).count();
    (n == 0, format!("{} probes, {n} mismatches", vals.len()))
}

pub fn nef(a: &IrrAnalysis, depth: usize, exec: Execution) -> (bool, String) {
    let p = is_nef_probe(&a.irr, depth, exec);
    let detail = match &p.witness {
        None => format!(
            "depth {}, {} models, {} probes",
            p.depth, p.models_checked, p.valuations_checked
        ),
        Some(w) => format!(
            "value {} exceeds incarnation {} at {:?}",
            q_str(&w.value),
            q_str(&w.incarnation_value),
            w.valuation
        ),
    };
    (p.nef, detail)
}

/// At each smooth marked point of `D`, positivity of the δ-integral of
/// `M ⊕ End M` matches turning.
pub fn turning_criterion_agrees(an: &Analysed) -> Result<(bool, String)> {
    let pair = &an.m.pair;
    let turning: BTreeSet<String> = an.m.connection.turning_points_on_x(pair).into_iter().collect();
    let mut bad = Vec::new();
    let mut checked = 0;
    for p in &pair.points {
        if pair.position(p) != DPosition::Smooth {
            continue;
        }
        checked += 1;
        let integral = criterion_integral(&an.m, &an.end, &p.id)?;
        if integral.is_positive() != turning.contains(&p.id) {
            bad.push(format!("{}: ∫ = {}", p.id, q_str(&integral)));
        }
    }
    Ok((bad.is_empty(), format!("{checked} smooth points; {}", bad.join(", "))))
}

/// `δ` of the pullback system of `div` vanishes at every probe.
pub fn delta_vanishes_on_pullback(pair: &Arc<SurfacePair>, div: &DivisorOnX, depth: usize) -> Result<(bool, String)> {
    let z = CartierBDivisor::from_x(pair.clone(), div)?;
    let mut ok = delta_divisor(&z)?.is_empty();
    let vals = probe_valuations(z.determination(), depth);
    for v in &vals {
        ok &= partial_discrepancy_at(&z, v)?.is_zero();
    }
    Ok((ok, format!("{} probes", vals.len())))
}

/// δ of `Irr End M` computed on the resolution of `End M` alone agrees with
/// the joint determination.
pub fn end_delta_on_own_resolution(an: &Analysed, opts: &Options) -> Result<(bool, String)> {
    let own = IrrAnalysis::on_own_resolution(&an.end.connection, &an.m.pair, opts.max_blowups)?;
    let ok = own.delta == an.end.delta;
    Ok((ok, format!("{} vs {} nodes", own.model().len(), an.end.model().len())))
}

/// All per-connection checks.
pub fn check_connection(
    subject: &str,
    m: &ExpConnection,
    pair: &Arc<SurfacePair>,
    opts: &Options,
    exec: Execution,
) -> Vec<CheckOutcome> {
    let an = match Analysed::new(m, pair, opts) {
        Ok(an) => an,
        Err(e) => return vec![CheckOutcome::new("analysis", subject, false, format!("error: {e}"))],
    };
    let depth = opts.probe_depth;
    let mut out = vec![
        CheckOutcome::from_result("two-route-chi", subject, two_route_chi(&an.m)),
        CheckOutcome::from_result("two-route-chi-end", subject, two_route_chi(&an.end)),
        CheckOutcome::from_result("euler-route", subject, euler_route(&an.m)),
    ];
    let (ok, d) = delta_effective(&an.m);
    out.push(CheckOutcome::new("delta-effective", subject, ok, d));
    let (ok, d) = semicontinuity(&an.m, depth, exec);
    out.push(CheckOutcome::new("semicontinuity", subject, ok, d));
    let (ok, d) = cartier_on_resolution(&an.m, 2, exec);
    out.push(CheckOutcome::new("cartier-on-resolution", subject, ok, d));
    let (ok, d) = cartier_on_resolution(&an.end, 2, exec);
    out.push(CheckOutcome::new("cartier-on-resolution-end", subject, ok, d));
    out.push(CheckOutcome::from_result(
        "end-delta-own-resolution",
        subject,
        end_delta_on_own_resolution(&an, opts),
    ));
    let (ok, d) = nef(&an.m, depth, exec);
    out.push(CheckOutcome::new("nef-probe", subject, ok, d));
    out.push(CheckOutcome::from_result(
        "turning-criterion",
        subject,
        turning_criterion_agrees(&an),
    ));
    let r = turning_count_bound(&an.m, &an.end);
    out.push(CheckOutcome::new(
        "turning-count",
        subject,
        r.holds,
        format!("{} ≤ {}", q_str(&r.attained_value), q_str(&r.bound_value)),
    ));
    let r = hom_irr_bound_check(m, m, pair);
    out.push(CheckOutcome::new(
        "hom-bound-end",
        subject,
        r.holds,
        format!("{} ≤ {}", q_str(&r.attained_value), q_str(&r.bound_value)),
    ));
    out
}

/// Checks for an ordered pair of connections.
pub fn check_pair(
    subject: &str,
    m1: &ExpConnection,
    m2: &ExpConnection,
    pair: &Arc<SurfacePair>,
    opts: &Options,
) -> Vec<CheckOutcome> {
    let r = hom_irr_bound_check(m1, m2, pair);
    let mut out = vec![CheckOutcome::new(
        "hom-bound",
        subject,
        r.holds,
        format!("{} ≤ {}", q_str(&r.attained_value), q_str(&r.bound_value)),
    )];
    let res = (|| -> Result<(bool, String)> {
        let obstruction = recognition_obstruction(m1, m2, pair);
        let mut bound = Q::from_integer(pair.d_singular_points().count() as i64);
        for a in [m1, m2] {
            for b in [m1, m2] {
                let h = ExpConnection::hom(a, b);
                let hm = IrrAnalysis::new(&h, pair, opts.max_blowups)?;
                let he = IrrAnalysis::on_own_resolution(&h.end(), pair, opts.max_blowups)?;
                bound +=
                    hm.delta.integral(&Region::SmoothLocusOfD, pair) + he.delta.integral(&Region::SmoothLocusOfD, pair);
            }
        }
        let n = Q::from_integer(obstruction.len() as i64);
        Ok((n <= bound, format!("{} ≤ {}", obstruction.len(), q_str(&bound))))
    })();
    out.push(CheckOutcome::from_result("recognition-count", subject, res));
    out
}

/// Every suite on every connection, connection pair and divisor of a scenario.
pub fn check_scenario(name: &str, s: &Scenario, exec: Execution) -> Vec<CheckOutcome> {
    let conns: Vec<(&String, &ExpConnection)> = s.connections.iter().collect();
    let mut out: Vec<CheckOutcome> = exec
        .map(&conns, |(n, m)| {
            check_connection(&format!("{name}/{n}"), m, &s.pair, &s.options, Execution::Sequential)
        })
        .into_iter()
        .flatten()
        .collect();
    for (n1, m1) in &conns {
        for (n2, m2) in &conns {
            out.extend(check_pair(&format!("{name}/{n1},{n2}"), m1, m2, &s.pair, &s.options));
        }
    }
    for (n, d) in &s.divisors {
        if d.check_supported_on_d(&s.pair).is_ok() {
            out.push(CheckOutcome::from_result(
                "delta-pullback-zero",
                &format!("{name}/{n}"),
                delta_vanishes_on_pullback(&s.pair, d, s.options.probe_depth),
            ));
        }
    }
    out
}

/// Runs [`check_scenario`] over a corpus.
pub fn check_corpus(corpus: &[(String, Scenario)], exec: Execution) -> Vec<CheckOutcome> {
    exec.map(corpus, |(n, s)| check_scenario(n, s, Execution::Sequential))
        .into_iter()
        .flatten()
        .collect()
}
