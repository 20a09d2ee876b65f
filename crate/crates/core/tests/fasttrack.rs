//! The epoch-based detector against a naive one that keeps every access with
//! its full clock vector.

use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;

use wmm_core::explorer::{explore, ExploreConfig, RandomPlugin};
use wmm_core::race::AccessKind;
use wmm_core::trace::NaAccess;
use wmm_core::{parse_program, Program, Seq, Tid, Trace};

/// `a` happens before `b`: `b`'s thread has seen an event of `a`'s thread
/// later than `a`, and so every entry of `a`'s clock.
fn naive_hb(a: &NaAccess, b: &NaAccess) -> bool {
    if a.tid == b.tid {
        return true;
    }
    a.clock.entries().all(|(t, s)| s <= b.clock.get(t)) && a.clock.get(a.tid) < b.clock.get(a.tid)
}

/// Per racy location, the first access completing a race.
fn naive(t: &Trace) -> BTreeMap<String, (Tid, Seq)> {
    let acc = &t.na_accesses;
    let mut first = BTreeMap::new();
    for j in 0..acc.len() {
        let b = &acc[j];
        let racy = acc[..j].iter().any(|a| {
            a.loc == b.loc
                && a.tid != b.tid
                && (a.kind == AccessKind::Write || b.kind == AccessKind::Write)
                && !naive_hb(a, b)
        });
        if racy {
            first.entry(b.loc.clone()).or_insert((b.tid, b.clock.get(b.tid)));
        }
    }
    first
}

fn fasttrack(t: &Trace) -> BTreeMap<String, (Tid, Seq)> {
    let mut first = BTreeMap::new();
    for r in &t.races {
        first.entry(r.loc.clone()).or_insert((r.second.tid, r.second.epoch));
    }
    first
}

fn agree(p: &Program, seeds: std::ops::Range<u64>) -> (usize, usize) {
    let mut racy = 0;
    let mut total = 0;
    for seed in seeds {
        let t = explore(p, &mut RandomPlugin::new(), seed, &ExploreConfig::default());
        let want = naive(&t);
        assert_eq!(fasttrack(&t), want, "seed {seed}\n{}", t.dump());
        racy += !want.is_empty() as usize;
        total += 1;
    }
    (racy, total)
}

#[test]
fn corpus_verdicts_agree() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../litmus");
    let mut racy = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = parse_program(&std::fs::read_to_string(e.unwrap().path()).unwrap()).unwrap();
        racy += agree(&p, 0..300).0;
    }
    assert!(racy > 100);
}

fn op() -> impl Strategy<Value = String> {
    let cell = prop::sample::select(vec!["d0", "d1"]);
    let flag = prop::sample::select(vec!["f", "g"]);
    prop_oneof![
        3 => (cell.clone(), 1..3usize).prop_map(|(d, v)| format!("{d} := c{v}")),
        3 => cell.prop_map(|d| format!("r := {d}")),
        2 => (flag.clone(), prop::sample::select(vec!["relaxed", "release", "seq_cst"]))
            .prop_map(|(f, m)| format!("Store(c1, {f}, {m})")),
        2 => (flag.clone(), prop::sample::select(vec!["relaxed", "acquire", "seq_cst"]))
            .prop_map(|(f, m)| format!("a = Load({f}, {m})")),
        1 => (flag, prop::sample::select(vec!["relaxed", "rel_acq"]))
            .prop_map(|(f, m)| format!("a = RMW({f}, {m}, FetchAdd(1))")),
        1 => prop::sample::select(vec!["acquire", "release", "seq_cst"]).prop_map(|m| format!("Fence({m})")),
    ]
}

fn program() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::collection::vec(op(), 1..5), 2..4)
        .prop_filter("at most 10 events", |ts| ts.iter().map(Vec::len).sum::<usize>() <= 10)
        .prop_map(|ts| {
            let mut s = String::from("c1 := 1\nc2 := 2\n");
            for (i, ops) in ts.iter().enumerate() {
                s.push_str(&format!("Fork t{i} {{\n"));
                for o in ops {
                    s.push_str(&format!("  {o}\n"));
                }
                s.push_str("}\n");
            }
            s.push_str("r := d0\nr := d1\n");
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn generated_verdicts_agree(src in program(), seed in 0u64..1_000_000) {
        let p = parse_program(&src).unwrap();
        agree(&p, seed..seed + 20);
    }
}
