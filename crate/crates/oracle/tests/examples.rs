use std::collections::BTreeSet;

use wmm_core::explorer::{explore, ExploreConfig, RandomPlugin};
use wmm_core::parse_program;
use wmm_oracle::enumerate::{completions, pre_executions};
use wmm_oracle::{check_consistent, enumerate_consistent, lift_trace, Execution, Kind, OracleError, Violation};

const MP: &str = "observe r1, r2\none := 1\nFork ta {\n  Store(one, x, relaxed)\n  Store(one, y, REL)\n}\nFork tb {\n  r1 = Load(y, ACQ)\n  r2 = Load(x, relaxed)\n}\n";

fn mp(rel: &str, acq: &str) -> wmm_core::Program {
    parse_program(&MP.replace("REL", rel).replace("ACQ", acq)).unwrap()
}

fn outcome(x: &Execution) -> Vec<i64> {
    x.outcome.iter().map(|(_, v)| *v).collect()
}

/// The pre-execution with the given outcome, with its only possible mo.
fn candidate(p: &wmm_core::Program, want: &[i64]) -> Execution {
    let mut x = pre_executions(p, 8)
        .unwrap()
        .into_iter()
        .find(|x| outcome(x) == want)
        .unwrap();
    for (i, e) in x.events.iter().enumerate() {
        if e.is_write() {
            x.mo.entry(e.loc.clone().unwrap()).or_default().push(i);
        }
    }
    x
}

#[test]
fn mp_relaxed_stale_read_is_consistent() {
    assert_eq!(check_consistent(&candidate(&mp("relaxed", "relaxed"), &[1, 0])), Ok(()));
}

#[test]
fn mp_relacq_stale_read_violates_cowr() {
    assert_eq!(check_consistent(&candidate(&mp("release", "acquire"), &[1, 0])), Err(Violation::CoWR));
}

#[test]
fn same_thread_stores_against_mo_violate_coww() {
    let p = parse_program("one := 1\ntwo := 2\nFork t {\n  Store(one, x, relaxed)\n  Store(two, x, relaxed)\n}\n").unwrap();
    let mut x = candidate(&p, &[]);
    assert_eq!(check_consistent(&x), Ok(()));
    x.mo.get_mut("x").unwrap().swap(1, 2);
    assert_eq!(check_consistent(&x), Err(Violation::CoWW));
}

#[test]
fn rmw_must_follow_its_source() {
    let p = parse_program("one := 1\nFork a {\n  RMW(x, relaxed, FetchAdd(1))\n}\nFork b {\n  Store(one, x, relaxed)\n}\n").unwrap();
    let pres = pre_executions(&p, 8).unwrap();
    // RMW reading init with the store placed between them
    let x = pres.iter().find(|x| x.events.iter().any(|e| e.kind == Kind::Rmw && e.rval == Some(0))).unwrap();
    let mut y = x.clone();
    let idx = |k: Kind| y.events.iter().position(|e| e.kind == k).unwrap();
    let (init, st, rmw) = (idx(Kind::Init), idx(Kind::Store), idx(Kind::Rmw));
    y.mo.insert("x".into(), vec![init, st, rmw]);
    assert_eq!(check_consistent(&y), Err(Violation::RmwAtomicity));
    y.mo.insert("x".into(), vec![init, rmw, st]);
    assert_eq!(check_consistent(&y), Ok(()));
    assert_eq!(completions(x).len(), 1);
}

fn classes(src: &str) -> BTreeSet<Vec<i64>> {
    enumerate_consistent(&parse_program(src).unwrap(), 8).unwrap().iter().map(outcome).collect()
}

#[test]
fn enumeration_outcome_classes() {
    assert_eq!(enumerate_consistent(&mp("relaxed", "relaxed"), 8).unwrap().iter().map(outcome).collect::<BTreeSet<_>>().len(), 4);
    let relacq: BTreeSet<_> = enumerate_consistent(&mp("release", "acquire"), 8).unwrap().iter().map(outcome).collect();
    assert_eq!(relacq.len(), 3);
    assert!(!relacq.contains(&vec![1, 0]));
    let sb = classes("observe r1, r2\none := 1\nFork a {\n  Store(one, x, seq_cst)\n  r1 = Load(y, seq_cst)\n}\nFork b {\n  Store(one, y, seq_cst)\n  r2 = Load(x, seq_cst)\n}\n");
    assert!(!sb.contains(&vec![0, 0]));
    assert_eq!(sb.len(), 3);
}

#[test]
fn enumeration_respects_bound() {
    let p = parse_program("one := 1\nrepeat 9 {\n  Store(one, x, relaxed)\n}\n").unwrap();
    assert_eq!(enumerate_consistent(&p, 8).unwrap_err(), OracleError::BudgetExceeded { bound: 8 });
    assert_eq!(enumerate_consistent(&p, 9).unwrap().len(), 1);
}

#[test]
fn single_thread_trace_lifts_once() {
    let p = parse_program("one := 1\nStore(one, x, relaxed)\nRMW(x, relaxed, FetchAdd(1))\nr = Load(x, relaxed)\n").unwrap();
    let t = explore(&p, &mut RandomPlugin::new(), 0, &ExploreConfig::default());
    assert_eq!(lift_trace(&t, 100).unwrap().len(), 1);
}

#[test]
fn two_unordered_stores_lift_twice() {
    let p = parse_program("one := 1\ntwo := 2\nFork a {\n  Store(one, x, relaxed)\n}\nFork b {\n  Store(two, x, relaxed)\n}\n").unwrap();
    let t = explore(&p, &mut RandomPlugin::new(), 0, &ExploreConfig::default());
    let xs = lift_trace(&t, 100).unwrap();
    assert_eq!(xs.len(), 2);
    assert!(xs.iter().all(|x| check_consistent(x).is_ok()));
    assert_eq!(lift_trace(&t, 1).unwrap_err(), OracleError::ExtensionBudgetExceeded { budget: 1 });
}
