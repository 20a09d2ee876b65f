use std::collections::BTreeMap;
use std::path::PathBuf;

use wmm_core::explorer::ExploreConfig;
use wmm_core::{explore_exhaustive, parse_program, Program};
use wmm_oracle::report::{counterexample, missing};
use wmm_oracle::{canonicalize, check_consistent, enumerate_consistent, lift_trace, Canon, Execution};

fn corpus() -> Vec<(String, Program)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../litmus");
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "lit") {
            let src = std::fs::read_to_string(&p).unwrap();
            let prog = parse_program(&src).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            out.push((p.file_stem().unwrap().to_string_lossy().into_owned(), prog));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn keyed(xs: Vec<Execution>) -> Vec<(Canon, Execution)> {
    let mut v: Vec<_> = xs.into_iter().map(|x| (canonicalize(&x), x)).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v.dedup_by(|a, b| a.0 == b.0);
    v
}

#[test]
fn lifted_exhaustive_equals_enumeration() {
    let cfg = ExploreConfig { check_cycles: true, ..Default::default() };
    for (name, p) in corpus() {
        if p.atomic_stmt_count() > 8 {
            continue;
        }
        let oracle = keyed(enumerate_consistent(&p, 8).unwrap());
        let mut lifted = Vec::new();
        let mut bad = None;
        let complete = explore_exhaustive(&p, 1_000_000, &cfg, |t| {
            for x in lift_trace(t, 10_000).unwrap() {
                if let Err(v) = check_consistent(&x) {
                    bad.get_or_insert_with(|| (v, t.clone(), x.clone()));
                }
                lifted.push(x);
            }
        });
        assert!(complete, "{name}: exhaustive walk hit its budget");
        let lifted = keyed(lifted);
        if let Some((v, t, x)) = bad {
            let pool: Vec<Execution> = oracle.iter().map(|p| p.1.clone()).collect();
            panic!("{name}: {}", counterexample(&p, &format!("lifted trace violates {v}"), Some(&t), &x, &pool));
        }
        let extra = missing(&lifted, &oracle);
        let absent = missing(&oracle, &lifted);
        let mut hist: BTreeMap<_, usize> = BTreeMap::new();
        for (c, _) in &oracle {
            *hist.entry(c.outcome.clone()).or_default() += 1;
        }
        println!("{name}: oracle {} lifted {} outcomes {:?}", oracle.len(), lifted.len(), hist.keys().collect::<Vec<_>>());
        if let Some(x) = extra.first() {
            let pool: Vec<Execution> = oracle.iter().map(|p| p.1.clone()).collect();
            panic!("{name}: {}", counterexample(&p, "lifted but not enumerated", None, x, &pool));
        }
        if let Some(x) = absent.first() {
            let pool: Vec<Execution> = lifted.iter().map(|p| p.1.clone()).collect();
            panic!("{name}: {} missing total {}", counterexample(&p, "enumerated but never lifted", None, x, &pool), absent.len());
        }
    }
}
