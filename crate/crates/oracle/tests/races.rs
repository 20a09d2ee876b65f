//! Race reports checked against hb computed from lifted executions.

use std::collections::BTreeSet;

use proptest::prelude::*;
use std::path::PathBuf;

use wmm_core::explorer::{run_many_with, ExploreConfig, RandomPlugin};
use wmm_core::explore_exhaustive;
use wmm_core::{parse_program, Program};
use wmm_oracle::races::unordered_conflicts;

fn litmus(name: &str) -> Program {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../litmus").join(name);
    parse_program(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn all_litmus() -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../litmus");
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".lit"))
        .collect();
    v.sort();
    v
}

/// Per run: racy locations by the engine equal locations with an hb-unordered
/// conflicting pair by the oracle. Returns the number of racy runs.
fn verdicts_agree(p: &Program, runs: u64) -> u64 {
    let mut racy = 0;
    run_many_with(p, &mut RandomPlugin::new(), 0..runs, &ExploreConfig::default(), |seed, t| {
        let engine: BTreeSet<&str> = t.races.iter().map(|r| r.loc.as_str()).collect();
        let pairs = unordered_conflicts(t).unwrap();
        let oracle: BTreeSet<&str> = pairs.iter().map(|&(i, _)| t.na_accesses[i].loc.as_str()).collect();
        assert_eq!(engine, oracle, "seed {seed}\n{}", t.dump());
        racy += !engine.is_empty() as u64;
    });
    racy
}

#[test]
fn race_verdicts_match_oracle_hb() {
    for name in all_litmus() {
        let n = verdicts_agree(&litmus(&name), 300);
        println!("{name}: {n}/300 racy");
    }
}

#[test]
fn mp_relacq_data_never_races() {
    assert_eq!(verdicts_agree(&litmus("mp_na_relacq.lit"), 2000), 0);
}

#[test]
fn mp_relaxed_data_races_whenever_unordered() {
    let p = litmus("mp_na_relaxed.lit");
    let mut read_data = 0;
    run_many_with(&p, &mut RandomPlugin::new(), 0..2000, &ExploreConfig::default(), |seed, t| {
        let sees_flag = t.outcome_map()["r1"] == 1;
        read_data += sees_flag as u64;
        assert_eq!(!t.races.is_empty(), sees_flag, "seed {seed}");
    });
    assert!(read_data > 100);
}

fn na_op() -> impl Strategy<Value = String> {
    let cell = prop::sample::select(vec!["d", "e"]);
    let loc = prop::sample::select(vec!["x", "y"]);
    let st = prop::sample::select(vec!["relaxed", "release", "seq_cst"]);
    let ld = prop::sample::select(vec!["relaxed", "acquire", "seq_cst"]);
    let rmw = prop::sample::select(vec!["relaxed", "acquire", "release", "rel_acq"]);
    let fence = prop::sample::select(vec!["acquire", "release", "seq_cst"]);
    prop_oneof![
        3 => (cell.clone(), 1..4i64).prop_map(|(c, v)| format!("{c} := {v}")),
        3 => cell.prop_map(|c| format!("v := {c}")),
        2 => (loc.clone(), st).prop_map(|(l, m)| format!("Store(one, {l}, {m})")),
        2 => (loc.clone(), ld).prop_map(|(l, m)| format!("a = Load({l}, {m})")),
        1 => (loc, rmw).prop_map(|(l, m)| format!("a = RMW({l}, {m}, FetchAdd(1))")),
        1 => fence.prop_map(|m| format!("Fence({m})")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 150, ..ProptestConfig::default() })]

    /// Every execution of small generated programs: the engine's per-location
    /// race verdict equals the one from full hb over all access pairs.
    #[test]
    fn generated_programs_agree(
        threads in prop::collection::vec(prop::collection::vec(na_op(), 1..4), 2..4),
        join in any::<bool>(),
    ) {
        prop_assume!(threads.iter().map(Vec::len).sum::<usize>() <= 8);
        let mut src = String::from("one := 1\n");
        for (i, ops) in threads.iter().enumerate() {
            src.push_str(&format!("Fork t{i} {{\n"));
            for o in ops {
                // per-thread registers keep loads out of the shared cells
                src.push_str(&format!("  {}\n", o.replace("v :=", &format!("v{i} :=")).replace("a =", &format!("a{i} ="))));
            }
            src.push_str("}\n");
        }
        if join {
            src.push_str("Join(t0)\nv := d\n");
        }
        let p = parse_program(&src).unwrap();
        let mut failure = None;
        let complete = explore_exhaustive(&p, 100_000, &ExploreConfig::default(), |t| {
            let engine: BTreeSet<String> = t.races.iter().map(|r| r.loc.clone()).collect();
            let pairs = unordered_conflicts(t).unwrap();
            let oracle: BTreeSet<String> = pairs.iter().map(|&(i, _)| t.na_accesses[i].loc.clone()).collect();
            if engine != oracle && failure.is_none() {
                failure = Some(format!("engine {engine:?} oracle {oracle:?}\n{}", t.dump()));
            }
        });
        prop_assert!(complete);
        prop_assert!(failure.is_none(), "{src}\n{}", failure.unwrap());
    }
}
