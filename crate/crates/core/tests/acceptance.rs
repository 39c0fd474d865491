//! Acceptance criteria 1–8. Prints one PASS/FAIL line per criterion and
//! exits 1 if any fails.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bdiv_core::bdivisor::{check_multiplicity_estimate, Region};
use bdiv_core::bounds::{hom_irr_bound_check, turning_count_bound};
use bdiv_core::charcycle::{cc_connection, curve_gos, global_chi, index_pairing, lc_cycle};
use bdiv_core::connection::{ExpConnection, IrrAnalysis};
use bdiv_core::fixtures::{self, random_corpus};
use bdiv_core::geometry::{DPosition, DivisorOnX, SurfacePair};
use bdiv_core::scenario::Scenario;
use bdiv_core::suite::{self, Analysed};
use bdiv_core::valtree::{BaseRef, BlowUpSpec, Model, NodeId};
use bdiv_core::{Execution, Q};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RANDOM_CASES: usize = 120;
const CORPUS_SEED: u64 = 20_261_016;

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

fn analyse(s: &Scenario) -> Result<IrrAnalysis, String> {
    IrrAnalysis::new(&s.connections["M"], &s.pair, s.options.max_blowups).map_err(|e| e.to_string())
}

/// `r·χ(U)`, `χ(X, LC(Irr(X,M)))` and `∫ δ Irr M`, the three summands of the
/// closed formula, alongside the index pairing of `CC(M)`.
fn chi_terms(a: &IrrAnalysis) -> Result<(i64, i64, Q, i64, i64), String> {
    let e = |e: bdiv_core::Error| e.to_string();
    let open = a.connection.rank() * a.pair.euler_open_complement();
    let lc = index_pairing(&a.pair, &lc_cycle(&a.pair, &a.irr_on_x).map_err(e)?).map_err(e)?;
    let delta = a.delta.integral(&Region::All, &a.pair);
    let route_a = global_chi(a).map_err(e)?;
    let route_b = index_pairing(&a.pair, &cc_connection(a).map_err(e)?).map_err(e)?;
    Ok((open, lc, delta, route_a, route_b))
}

/// Euler characteristic of `U = B × F` with a connection that is pulled back
/// from the fibre: `χ(B)·χ(F, fibre connection)`.
fn fibration_oracle(base_euler: i64, fibre_punctures: usize, fibre_irr: &[i64]) -> i64 {
    base_euler * curve_gos(0, fibre_punctures, 1, fibre_irr).expect("irregularity per puncture")
}

fn turning_and_depths(a: &IrrAnalysis) -> Vec<(String, DPosition, usize)> {
    a.connection
        .turning_points_on_x(&a.pair)
        .into_iter()
        .map(|p| {
            let pos = a.pair.position(a.pair.point(&p).expect("marked"));
            let d = a.resolution_depth(&p);
            (p, pos, d)
        })
        .collect()
}

fn criterion_1() -> Verdict {
    let t = Instant::now();
    let s = fixtures::scen_a();
    let a = analyse(&s)?;
    let turning = turning_and_depths(&a);
    let want = vec![
        ("Pxz".to_string(), DPosition::Singular, 2),
        ("Pyz".to_string(), DPosition::Singular, 2),
    ];
    ensure(turning == want, format!("turning locus {turning:?}"))?;
    ensure(
        a.delta.values.values().all(|d| *d == q(0)),
        "δ Irr is not identically zero",
    )?;
    ensure(
        a.irr_on_x == DivisorOnX::from_ints([("Lx", 1), ("Ly", 1)]),
        format!("Irr(X,M) = {:?}", a.irr_on_x),
    )?;
    let (_, _, _, ra, rb) = chi_terms(&a)?;
    // (C*)² fibred over C* with fibre e^{1/t} on C*.
    let oracle = fibration_oracle(0, 2, &[1, 0]);
    ensure(
        ra == 0 && rb == 0 && oracle == 0,
        format!("χ: route A {ra}, route B {rb}, oracle {oracle}"),
    )?;
    let el = t.elapsed();
    ensure(el < Duration::from_secs(1), format!("took {el:?}"))?;
    Ok(format!(
        "turning Pxz, Pyz at depth 2; Irr = Lx + Ly; δ ≡ 0; χ = 0 = oracle ({el:.2?})"
    ))
}

fn criterion_2() -> Verdict {
    let t = Instant::now();
    let s = fixtures::scen_b();
    let a = analyse(&s)?;
    let turning: Vec<(String, DPosition)> = turning_and_depths(&a).into_iter().map(|(p, pos, _)| (p, pos)).collect();
    let want = vec![
        ("Pxy".to_string(), DPosition::Smooth),
        ("Pxz".to_string(), DPosition::Singular),
    ];
    ensure(turning == want, format!("turning locus {turning:?}"))?;
    let ints = a.delta.point_integrals(&a.pair);
    let at = |p: &str| ints.get(p).copied().unwrap_or_else(|| q(0));
    ensure(at("Pxy") == q(2) && at("Pxz") == q(0), format!("∫δ = {ints:?}"))?;
    let cc = cc_connection(&a).map_err(|e| e.to_string())?;
    let mult = |p: &str| cc.conormal_points.get(p).copied().unwrap_or(0);
    ensure(
        mult("Pxy") == 2 && mult("Pxz") == 3,
        format!("CC points {:?}", cc.conormal_points),
    )?;
    let (open, lc, delta, ra, rb) = chi_terms(&a)?;
    ensure(
        (open, lc, delta) == (0, -2, q(2)),
        format!("χ terms {open}, {lc}, {delta}"),
    )?;
    // C* × A¹ with fibre e^{t} on A¹.
    let oracle = fibration_oracle(0, 1, &[1]);
    ensure(
        ra == 0 && rb == 0 && oracle == 0,
        format!("χ: route A {ra}, route B {rb}, oracle {oracle}"),
    )?;
    let el = t.elapsed();
    ensure(el < Duration::from_secs(1), format!("took {el:?}"))?;
    Ok(format!(
        "turning Pxy (smooth), Pxz (double); ∫δ 2, 0; CC 2, 3; χ = 0 − 2 + 2 = 0 ({el:.2?})"
    ))
}

fn criterion_3() -> Verdict {
    let s = fixtures::scen_c();
    let a = analyse(&s)?;
    let turning = a.connection.turning_points_on_x(&a.pair);
    ensure(turning == ["Pxy"], format!("turning {turning:?}"))?;
    ensure(a.model().len() == 1, format!("{} blow-ups", a.model().len()))?;
    let (open, lc, delta, ra, rb) = chi_terms(&a)?;
    ensure(
        (open, lc, delta) == (0, -1, q(1)),
        format!("χ terms {open}, {lc}, {delta}"),
    )?;
    let oracle = fibration_oracle(0, 1, &[1]);
    ensure(
        ra == 0 && rb == 0 && oracle == 0,
        format!("χ: route A {ra}, route B {rb}, oracle {oracle}"),
    )?;
    let cc = cc_connection(&a).map_err(|e| e.to_string())?;
    let curves: BTreeMap<&str, i64> = cc.conormal_curves.iter().map(|(c, m)| (c.as_str(), *m)).collect();
    let points: BTreeMap<&str, i64> = cc.conormal_points.iter().map(|(p, m)| (p.as_str(), *m)).collect();
    ensure(
        cc.zero_section == 1
            && curves == BTreeMap::from([("Lx", 2), ("Linf", 1)])
            && points == BTreeMap::from([("Pxinf", 2), ("Pxy", 1)]),
        format!("CC {cc:?}"),
    )?;
    Ok("one turning point, one blow-up, ∫δ = 1, χ = 0 − 1 + 1 = 0".into())
}

fn corpus() -> Vec<(String, Scenario)> {
    let mut out: Vec<(String, Scenario)> = fixtures::shipped()
        .into_iter()
        .map(|(n, s)| (n.to_string(), s))
        .collect();
    out.extend(
        random_corpus(RANDOM_CASES, CORPUS_SEED)
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("random-{i}"), s)),
    );
    out
}

fn first_failure(results: Vec<Result<(), String>>) -> Result<usize, String> {
    let n = results.len();
    for r in results {
        r?;
    }
    Ok(n)
}

fn criterion_4(corpus: &[(String, Scenario)]) -> Verdict {
    let t = Instant::now();
    let results = Execution::Parallel.map(corpus, |(name, s)| {
        let a = analyse(s).map_err(|e| format!("{name}: {e}"))?;
        let (ok, detail) = suite::two_route_chi(&a).map_err(|e| format!("{name}: {e}"))?;
        ensure(ok, format!("{name}: {detail}"))
    });
    let n = first_failure(results)?;
    let el = t.elapsed();
    ensure(el < Duration::from_secs(30), format!("took {el:?}"))?;
    Ok(format!("{n} scenarios, route A = route B everywhere ({el:.2?})"))
}

fn criterion_5(corpus: &[(String, Scenario)]) -> Verdict {
    let t = Instant::now();
    let results = Execution::Parallel.map(corpus, |(name, s)| {
        let fail = |what: &str, d: String| format!("{name}: {what}: {d}");
        let a = analyse(s).map_err(|e| fail("analysis", e))?;
        let (ok, d) = suite::delta_effective(&a);
        ensure(ok, fail("δ Irr effective on resolution nodes", d))?;
        let (ok, d) = suite::semicontinuity(&a, 3, Execution::Sequential);
        ensure(ok, fail("semicontinuity", d))?;
        let (ok, d) = suite::nef(&a, 3, Execution::Sequential);
        ensure(ok, fail("nef", d))?;
        let seed = name
            .bytes()
            .fold(CORPUS_SEED, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let div = DivisorOnX::from_ints(
            s.pair
                .d_curves()
                .map(|c| (c.id.as_str(), rng.gen_range(-3..=3)))
                .collect::<Vec<_>>(),
        );
        let (ok, d) =
            suite::delta_vanishes_on_pullback(&s.pair, &div, 3).map_err(|e| fail("pullback", e.to_string()))?;
        ensure(ok, fail("δ of a pullback system", d))
    });
    let n = first_failure(results)?;
    Ok(format!(
        "{n} cases: δ ≡ 0 on pullbacks, δ Irr effective and exceptional, Irr nef and ≤ Irr(X,M) at depth 3 ({:.2?})",
        t.elapsed()
    ))
}

/// A random chain of length 1 to 6 following the strict transform of one
/// component of `z`, rooted at a marked or free point of that component.
fn random_admissible_chain(rng: &mut ChaCha8Rng, pair: &Arc<SurfacePair>, z: &DivisorOnX) -> Vec<NodeId> {
    let comps: Vec<&String> = z.coeffs.keys().collect();
    let c = comps.choose(rng).expect("nonempty").to_string();
    let marked: Vec<_> = pair.points_on(&c).collect();
    let root = match marked.choose(rng) {
        Some(p) if rng.gen_bool(0.7) => BlowUpSpec {
            base: BaseRef::Marked(p.id.clone()),
            incident: p.on.clone(),
            position_tag: None,
        },
        _ => BlowUpSpec {
            base: BaseRef::Free,
            incident: vec![c.clone()],
            position_tag: Some("t".into()),
        },
    };
    let len = rng.gen_range(1..=6);
    let mut model = Model::new(pair.clone());
    let mut chain = Vec::new();
    let mut spec = root;
    for i in 1..=len {
        let label = format!("E{i}");
        let (next, n) = model.blow_up_spec(&spec, &label).expect("valid center");
        model = next;
        chain.push(n);
        spec = BlowUpSpec {
            base: BaseRef::Node(label.clone()),
            incident: vec![label, c.clone()],
            position_tag: None,
        };
    }
    chain
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED ^ 0x6);
    let mut chains = 0;
    let mut nodes = 0;
    while chains < 150 {
        let pair = Arc::new(fixtures::random_pair(&mut rng));
        let r = DivisorOnX::from_ints(
            pair.d_curves()
                .map(|c| (c.id.as_str(), rng.gen_range(0..=3)))
                .collect::<Vec<_>>(),
        );
        let mut z = DivisorOnX::new();
        for c in &pair.curves {
            if rng.gen_bool(0.5) {
                z.add(&c.id, q(rng.gen_range(1..=2)));
            }
        }
        if z.is_zero() {
            z.add(&pair.curves[0].id, q(1));
        }
        for _ in 0..3 {
            let chain = random_admissible_chain(&mut rng, &pair, &z);
            nodes += chain.len();
            match check_multiplicity_estimate(&pair, &r, &z, &chain) {
                Ok(None) => {}
                Ok(Some(v)) => return Err(format!("violation at {:?}: {} > {}", v.node, v.lhs, v.rhs)),
                Err(e) => return Err(format!("chain rejected: {e}")),
            }
            chains += 1;
        }
    }
    Ok(format!("{chains} admissible chains ({nodes} valuations), no violation"))
}

fn criterion_7(corpus: &[(String, Scenario)]) -> Verdict {
    let mut pairs = 0;
    for (name, s) in fixtures::shipped() {
        let m = &s.connections["M"];
        let others = [
            m.clone(),
            ExpConnection::regular(2),
            m.direct_sum(&ExpConnection::regular(1)),
            m.end(),
        ];
        for m1 in &others {
            for m2 in &others {
                let b = hom_irr_bound_check(m1, m2, &s.pair);
                ensure(
                    b.holds,
                    format!("{name}: hom bound {} > {}", b.attained_value, b.bound_value),
                )?;
                pairs += 1;
            }
        }
    }
    let results = Execution::Parallel.map(corpus, |(name, s)| {
        let an = Analysed::new(&s.connections["M"], &s.pair, &s.options).map_err(|e| format!("{name}: {e}"))?;
        let (ok, d) = suite::turning_criterion_agrees(&an).map_err(|e| format!("{name}: {e}"))?;
        ensure(ok, format!("{name}: turning criterion: {d}"))?;
        let b = turning_count_bound(&an.m, &an.end);
        ensure(
            b.holds,
            format!("{name}: turning count {} > {}", b.attained_value, b.bound_value),
        )
    });
    let n = first_failure(results)?;
    Ok(format!(
        "{pairs} fixture pairs within the Hom bound; turning criterion and count bound on {n} scenarios"
    ))
}

fn criterion_8() -> Verdict {
    let punctured = curve_gos(0, 2, 1, &[1, 0]);
    let affine = curve_gos(0, 1, 1, &[1]);
    ensure(punctured == Some(-1), format!("χ(C*, e^(1/t)) = {punctured:?}"))?;
    ensure(affine == Some(0), format!("χ(A¹, e^t) = {affine:?}"))?;
    Ok("χ(C*, e^(1/t)) = −1, χ(A¹, e^t) = 0".into())
}

fn main() {
    let start = Instant::now();
    let corpus = corpus();
    let criteria: Vec<Criterion> = vec![
        ("SCEN-A fixture", Box::new(criterion_1)),
        ("SCEN-B fixture", Box::new(criterion_2)),
        ("SCEN-C fixture", Box::new(criterion_3)),
        ("two-route χ identity", Box::new(|| criterion_4(&corpus))),
        ("δ-calculus suite", Box::new(|| criterion_5(&corpus))),
        ("multiplicity estimate", Box::new(criterion_6)),
        ("bound suites", Box::new(|| criterion_7(&corpus))),
        ("curve oracle", Box::new(criterion_8)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.2?}",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
