//! One test per acceptance criterion. Each prints a single PASS/FAIL line to
//! stderr (uncaptured) and then asserts. Tests share one pair of full audit
//! runs and take a lock so that timings are not skewed by each other.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use credal_audit::replay::{fail_witnesses, replay_plan};
use credal_core::audit::{polytope_catalog, supprob_eval, AuditConfig, Pool, SupProb};
use credal_core::belief::{
    dominated_set, envelope_p3_search, fh_closed_form, gs_check, lower_envelope, mass_catalog, ml_dempster_check,
    MassFunction, MlDempster,
};
use credal_core::credal::CredalSet;
use credal_core::measure::{Event, Measure, MeasureSpace};
use credal_core::rational::{fmt_rational, int, Rational};
use credal_core::rules::{apply_rule, RuleId};
use num_traits::{One, Zero};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Wall-clock budget for one exhaustive audit run.
const AUDIT_BUDGET: Duration = Duration::from_secs(300);
/// Wall-clock budget for the belief-function suite.
const BELIEF_BUDGET: Duration = Duration::from_secs(60);
/// Smallest accepted mass-function catalog.
const MIN_CATALOG: usize = 20;
const FAMILY: std::ops::RangeInclusive<usize> = 3..=8;

const AUDIT_FLAGS: [&str; 10] =
    ["audit", "--rules", "all", "--max-atoms", "4", "--grid", "4", "--family-depth", "8", "--seed=0"];

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report_line(criterion: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance {criterion}: {verdict} ({detail})");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_credal-audit"))
}

fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("golden/expected_matrix.json")
}

struct Runs {
    _dir: tempfile::TempDir,
    first: Output,
    elapsed: Duration,
    bytes: [Vec<u8>; 2],
    report: Value,
}

fn runs() -> &'static Runs {
    static RUNS: OnceLock<Runs> = OnceLock::new();
    RUNS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let paths = [dir.path().join("first.json"), dir.path().join("second.json")];
        let audit = |path: &Path| {
            bin()
                .args(AUDIT_FLAGS)
                .arg("--out")
                .arg(path)
                .arg("--expect")
                .arg(golden())
                .env_remove("CREDAL_AUDIT_JOBS")
                .output()
                .unwrap()
        };
        let start = Instant::now();
        let first = audit(&paths[0]);
        let elapsed = start.elapsed();
        audit(&paths[1]);
        let bytes = [std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap()];
        let report = serde_json::from_slice(&bytes[0]).unwrap();
        Runs { _dir: dir, first, elapsed, bytes, report }
    })
}

fn entry<'a>(report: &'a Value, rule: &str, pid: &str) -> &'a Value {
    report["matrix"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["rule"] == rule && e["postulate"] == pid)
        .unwrap_or(&Value::Null)
}

fn status<'a>(report: &'a Value, rule: &str, pid: &str) -> &'a str {
    entry(report, rule, pid)["verdict"].as_str().unwrap_or("missing")
}

const POSTULATES: [&str; 9] = ["P1", "P2", "P3", "P4", "P5", "P6'", "P6''", "P6*", "P7"];

/// `c_min(M_n)` for the subset rule on the uniform measure, by direct counting:
/// evidence of `k < n` atoms keeps a point mass (ratio `k`), the full space keeps the measure (ratio 1).
fn subset_family_oracle(n: usize) -> usize {
    (1..=n).map(|k| if k == n { 1 } else { k }).max().unwrap()
}

#[test]
fn criterion_1_golden_matrix() {
    let _g = serial();
    let r = runs();
    let report = &r.report;
    let mut problems: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            problems.push(what);
        }
    };

    let stderr = String::from_utf8_lossy(&r.first.stderr);
    check(r.first.status.code() == Some(0), format!("--expect exit {:?}: {}", r.first.status.code(), stderr.trim().replace('\n', "; ")));
    check(r.elapsed < AUDIT_BUDGET, format!("audit took {:?}", r.elapsed));

    for p in POSTULATES {
        check(status(report, "cond", p) == "pass", format!("cond {p} is {}", status(report, "cond", p)));
        let want = if p == "P7" { "fail" } else { "pass" };
        check(status(report, "constrain", p) == want, format!("constrain {p} is {}", status(report, "constrain", p)));
    }

    for p in ["P3", "P4", "P6''", "P6*"] {
        check(status(report, "forget", p) == "fail", format!("forget {p} is {}", status(report, "forget", p)));
    }
    let forget_p3 = &entry(report, "forget", "P3")["witness"]["fixture"]["space"];
    check(forget_p3.as_array().map(Vec::len) == Some(3), format!("forget P3 witness space {forget_p3}"));
    let forget_family = report["p6_family"].as_array().unwrap().iter().find(|f| f["rule"] == "forget").unwrap();
    check(forget_family["pool_constant"]["c"] == "unbounded", "forget P6'' constant is bounded".into());

    for p in ["P4", "P7"] {
        check(status(report, "trivial", p) == "fail", format!("trivial {p} is {}", status(report, "trivial", p)));
    }

    let open = polytope_catalog(4).remove(0);
    let delta2 = Measure::point_mass(open.space(), 1).to_json();
    for p in ["P5", "P4"] {
        let w = &entry(report, "closure", p)["witness"];
        check(status(report, "closure", p) == "fail", format!("closure {p} is {}", status(report, "closure", p)));
        check(w["fixture"]["x"] == open.to_json(), format!("closure {p} witness is not the open polytope"));
        check(w["distinguishing_measure"] == delta2, format!("closure {p} distinguishes by {}", w["distinguishing_measure"]));
    }

    for p in ["P3", "P5"] {
        check(status(report, "ml", p) == "fail", format!("ml {p} is {}", status(report, "ml", p)));
        let plan = replay_plan(&entry(report, "ml", p)["witness"]);
        check(plan.is_ok_and(|s| !s.is_empty()), format!("ml {p} witness has no replay"));
    }

    for p in ["P1", "P2", "P3", "P4", "P5", "P7"] {
        check(status(report, "subset", p) == "pass", format!("subset {p} is {}", status(report, "subset", p)));
    }
    check(status(report, "subset", "P6'") == "fail", "subset P6' passes".into());
    let observed = &entry(report, "subset", "P6'")["witness"]["observed"];
    check(observed.as_array().map(Vec::len) == Some(3), format!("subset P6' output {observed}"));
    check(status(report, "subset", "P6''") == "fail", "subset P6'' passes".into());
    let family = report["p6_family"].as_array().unwrap().iter().find(|f| f["rule"] == "subset").unwrap();
    for n in FAMILY {
        let got = family["family"].as_array().unwrap().iter().find(|e| e["n"] == n).map(|e| e["constant"]["c"].clone());
        let want = Value::String(fmt_rational(&int(subset_family_oracle(n) as i64)));
        check(got.as_ref() == Some(&want), format!("subset c({n}) = {got:?}, want {want}"));
    }

    let ok = problems.is_empty();
    let detail = if ok { format!("audit {:.0?}", r.elapsed) } else { problems.join("; ") };
    report_line("1 golden matrix", ok, &detail);
    assert!(ok, "{detail}");
}

/// Every `(pr, A, B)` with `A ⊆ B` and `Pr(A) > 0` over the exhaustive singleton pool.
fn supprob_samples(pool: &Pool) -> Vec<(Measure, Event, Event)> {
    let mut out = Vec::new();
    for fx in pool.singleton_fixtures() {
        let pr = fx.measure().unwrap().clone();
        for a in fx.b.subsets() {
            if !pr.prob(&a).is_zero() {
                out.push((pr.clone(), a, fx.b.clone()));
            }
        }
    }
    out
}

#[test]
fn criterion_2_supprob() {
    let _g = serial();
    let pool = Pool::new(&AuditConfig::default());
    let samples = supprob_samples(&pool);
    let mut problems = Vec::new();

    let cond_bad = samples
        .iter()
        .filter(|(pr, a, b)| supprob_eval(RuleId::Cond, pr, a, b).unwrap() != SupProb::Value(Rational::one()))
        .count();
    if cond_bad > 0 {
        problems.push(format!("cond differs from 1 on {cond_bad} samples"));
    }

    // Counting oracle: |B|/|A| below certainty; at Pr(B) = 1 the subset rule returns {Pr}, so the value is 1.
    let (mut subset_checked, mut certain_cases) = (0, 0);
    for space in pool.spaces() {
        let u = Measure::uniform(space);
        for b in space.events() {
            for a in b.subsets().filter(|a| !a.is_empty()) {
                let got = supprob_eval(RuleId::Subset, &u, &a, &b).unwrap();
                let want = if b.is_full() {
                    certain_cases += usize::from(a != b);
                    Rational::one()
                } else {
                    Rational::new((b.len() as i64).into(), (a.len() as i64).into())
                };
                subset_checked += 1;
                if got != SupProb::Value(want.clone()) {
                    problems.push(format!("subset V on {} atoms, |A| = {}, |B| = {}: {got}, want {}", space.size(), a.len(), b.len(), fmt_rational(&want)));
                }
            }
        }
    }

    let mut empties = 0;
    for rule in RuleId::ALL {
        for (pr, a, b) in &samples {
            let empty = apply_rule(rule, &CredalSet::singleton(pr), b).unwrap().result.is_empty().unwrap();
            let v = supprob_eval(rule, pr, a, b).unwrap();
            if empty != (v == SupProb::NegInfinity) {
                problems.push(format!("{rule}: empty = {empty} but supprob = {v}"));
            }
            empties += usize::from(empty);
        }
    }

    let ok = problems.is_empty();
    let detail = if ok {
        format!(
            "{} cond samples, {subset_checked} uniform subset samples ({certain_cases} with Pr(B) = 1 pinned to 1), {empties} empty outputs",
            samples.len()
        )
    } else {
        problems.iter().take(5).cloned().collect::<Vec<_>>().join("; ")
    };
    report_line("2 supprob", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_3_propositions() {
    let _g = serial();
    let report = &runs().report;
    let props = report["propositions"].as_array().unwrap();
    let verdict = |name: &str, rule: &str| {
        props
            .iter()
            .find(|p| p["proposition"] == name && p["rule"] == rule)
            .and_then(|p| p["verdict"].as_str())
            .unwrap_or("missing")
            .to_string()
    };
    let required: &[(&str, &[&str])] = &[
        ("DominanceDichotomy", &["cond", "constrain", "forget", "subset"]),
        ("ExtremePreservation", &["cond", "constrain"]),
        ("SingletonIsCond", &["cond"]),
        ("VWellDefined", &["cond", "subset"]),
        ("VMonotone", &["cond", "subset"]),
        ("Averaging", &["cond"]),
    ];
    let mut problems = Vec::new();
    for (name, rules) in required {
        for rule in *rules {
            let v = verdict(name, rule);
            if v != "pass" {
                problems.push(format!("{name} {rule}: {v}"));
            }
        }
    }

    let table = report["supprob_tables"].as_array().unwrap().iter().find(|t| t["rule"] == "subset").unwrap();
    let parse = |v: &Value| credal_core::rational::parse_rational(v.as_str().unwrap()).unwrap();
    let (mut exact, mut certain) = (0, 0);
    for cell in table["cells"].as_array().unwrap() {
        let (x, y, v) = (parse(&cell["x"]), parse(&cell["y"]), parse(&cell["value"]));
        let want = if y.is_one() { Rational::one() } else { &y / &x };
        if v != want {
            problems.push(format!("V_subset({}, {}) = {}", fmt_rational(&x), fmt_rational(&y), fmt_rational(&v)));
        } else if y.is_one() && x != y {
            certain += 1;
        } else {
            exact += 1;
        }
    }

    let families = report["p6_family"].as_array().unwrap();
    for f in families {
        if f["implication"]["verdict"] != "pass" {
            problems.push(format!("epsilon-delta check fails for {}", f["rule"]));
        }
    }

    let ok = problems.is_empty();
    let detail = if ok {
        format!(
            "{exact} subset cells equal y/x, {certain} cells at y = 1 equal 1, epsilon-delta over {} rules",
            families.len()
        )
    } else {
        problems.join("; ")
    };
    report_line("3 propositions", ok, &detail);
    assert!(ok, "{detail}");
}

/// `Bel(A)` straight from the focal list.
fn bel_oracle(m: &MassFunction, a: &Event) -> Rational {
    m.focal().iter().filter(|(e, _)| e.is_subset(a)).map(|(_, v)| v.clone()).sum()
}

fn pl_oracle(m: &MassFunction, a: &Event) -> Rational {
    m.focal().iter().filter(|(e, _)| !e.intersect(a).unwrap().is_empty()).map(|(_, v)| v.clone()).sum()
}

#[test]
fn criterion_4_belief_bridge() {
    let _g = serial();
    let start = Instant::now();
    let catalog = mass_catalog();
    let mut problems = Vec::new();
    if catalog.len() < MIN_CATALOG || catalog.iter().any(|m| m.space().size() > 4) {
        problems.push(format!("catalog has {} entries", catalog.len()));
    }
    let (mut envelopes, mut conditionals, mut gs_true, mut p3) = (0, 0, 0, None);
    for m in &catalog {
        let space: &MeasureSpace = m.space();
        let x = dominated_set(&m.belief());
        for a in space.events() {
            envelopes += 1;
            if lower_envelope(&x, &a, None).unwrap() != bel_oracle(m, &a) {
                problems.push(format!("envelope differs from Bel on {}", a.to_json()));
            }
            for b in space.events().filter(|b| !pl_oracle(m, b).is_zero()) {
                conditionals += 1;
                let inside = bel_oracle(m, &a.intersect(&b).unwrap());
                let denom = &inside + pl_oracle(m, &b.minus(&a).unwrap());
                let oracle = if denom.is_zero() { Rational::one() } else { inside / denom };
                let lp = lower_envelope(&x, &a, Some(&b)).unwrap();
                let closed = fh_closed_form(m, &a, &b).unwrap();
                if lp != oracle || closed != oracle {
                    problems.push(format!("conditional envelope of {} given {}", a.to_json(), b.to_json()));
                }
            }
        }
        if gs_check(&x).unwrap().holds() {
            gs_true += 1;
            for b in space.events().filter(|b| !pl_oracle(m, b).is_zero()) {
                match ml_dempster_check(&x, &b) {
                    Ok(MlDempster::Agree) => {}
                    other => problems.push(format!("ml vs dempster given {}: {other:?}", b.to_json())),
                }
            }
        }
        if p3.is_none() {
            p3 = envelope_p3_search(m).unwrap();
        }
    }
    if p3.is_none() {
        problems.push("no P3 failure of envelope conditioning".into());
    }
    let elapsed = start.elapsed();
    if elapsed > BELIEF_BUDGET {
        problems.push(format!("took {elapsed:?}"));
    }
    let ok = problems.is_empty();
    let detail = if ok {
        format!(
            "{} mass functions, {envelopes} envelopes, {conditionals} conditionals, {gs_true} GS sets, P3 witness {}, {elapsed:.0?}",
            catalog.len(),
            p3.map(|w| w.to_json().to_string()).unwrap_or_default()
        )
    } else {
        problems.iter().take(5).cloned().collect::<Vec<_>>().join("; ")
    };
    report_line("4 belief bridge", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_5_determinism() {
    let _g = serial();
    let r = runs();
    let [a, b] = &r.bytes;
    let (ha, hb) = (Sha256::digest(a), Sha256::digest(b));
    let ok = ha == hb && !a.is_empty();
    let hex = |h: &[u8]| h.iter().map(|b| format!("{b:02x}")).collect::<String>();
    let detail = format!("sha256 {} vs {}", hex(&ha), hex(&hb));
    report_line("5 determinism", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_6_witness_replay() {
    let _g = serial();
    let report = &runs().report;
    let fails = fail_witnesses(report);
    let mut problems = Vec::new();
    let mut steps_run = 0;
    for f in &fails {
        let plan = match replay_plan(f.witness) {
            Ok(p) if !p.is_empty() => p,
            Ok(_) => {
                problems.push(format!("{}: empty plan", f.label));
                continue;
            }
            Err(e) => {
                problems.push(format!("{}: {e}", f.label));
                continue;
            }
        };
        for step in plan {
            steps_run += 1;
            let o = bin().args(&step.args).output().unwrap();
            let out = String::from_utf8_lossy(&o.stdout);
            let missing = step.missing(&out);
            if !o.status.success() || !missing.is_empty() {
                problems.push(format!("{}: exit {:?}, missing {missing:?}", f.label, o.status.code()));
            }
        }
    }
    let ok = problems.is_empty() && !fails.is_empty();
    let detail = if ok {
        format!("{} witnesses, {steps_run} commands", fails.len())
    } else {
        problems.join("; ")
    };
    report_line("6 witness replay", ok, &detail);
    assert!(ok, "{detail}");
}
