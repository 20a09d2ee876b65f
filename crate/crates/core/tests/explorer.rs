use std::collections::BTreeSet;
use std::path::PathBuf;

use wmm_core::explorer::{explore, run_many, ExploreConfig, RandomPlugin};
use wmm_core::{explore_exhaustive, parse_program, Program, PruneConfig};

fn litmus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../litmus")
}

fn litmus(name: &str) -> Program {
    parse_program(&std::fs::read_to_string(litmus_dir().join(name)).unwrap()).unwrap()
}

fn corpus() -> Vec<(String, Program)> {
    let mut v: Vec<_> = std::fs::read_dir(litmus_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".lit"))
        .map(|n| {
            let p = litmus(&n);
            (n, p)
        })
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

fn outcomes(p: &Program, n: u64) -> BTreeSet<Vec<i64>> {
    let s = run_many(p, &mut RandomPlugin::new(), 0..n, &ExploreConfig::default());
    assert!(s.errors.is_empty(), "{:?}", s.errors);
    s.histogram.keys().map(|o| o.iter().map(|(_, v)| *v).collect()).collect()
}

#[test]
fn mp_relaxed_shows_all_four_outcomes() {
    let got = outcomes(&litmus("mp_relaxed.lit"), 1000);
    let want: BTreeSet<Vec<i64>> = [[0, 0], [0, 1], [1, 0], [1, 1]].iter().map(|o| o.to_vec()).collect();
    assert_eq!(got, want);
}

#[test]
fn mp_relacq_never_shows_stale_data() {
    let got = outcomes(&litmus("mp_relacq.lit"), 10_000);
    assert!(!got.contains(&vec![1, 0]));
    assert_eq!(got.len(), 3);
}

#[test]
fn straight_line_program_has_one_outcome() {
    let p = parse_program("observe r\nv := 3\nStore(v, x, relaxed)\nRMW(x, relaxed, FetchAdd(4))\nr = Load(x, seq_cst)\n").unwrap();
    let got = outcomes(&p, 50);
    assert_eq!(got, BTreeSet::from([vec![7]]));
}

#[test]
fn same_seed_same_trace() {
    for (name, p) in corpus() {
        let cfg = ExploreConfig::default();
        for seed in [0, 7, 12345] {
            let a = explore(&p, &mut RandomPlugin::new(), seed, &cfg).dump();
            let b = explore(&p, &mut RandomPlugin::new(), seed, &cfg).dump();
            assert_eq!(a, b, "{name} seed {seed}");
        }
    }
}

#[test]
fn plugin_state_does_not_leak_between_runs() {
    let p = litmus("iriw_relaxed.lit");
    let cfg = ExploreConfig::default();
    let mut shared = RandomPlugin::new();
    let _ = explore(&p, &mut shared, 99, &cfg);
    let reused = explore(&p, &mut shared, 5, &cfg).dump();
    let fresh = explore(&p, &mut RandomPlugin::new(), 5, &cfg).dump();
    assert_eq!(reused, fresh);
}

#[test]
fn failing_assertion_is_reported_once_per_statement() {
    let p = parse_program(
        "one := 1\nFork t {\n  Store(one, x, relaxed)\n}\nr = Load(x, relaxed)\nassert(r == 0)\nJoin(t)\n",
    )
    .unwrap();
    let s = run_many(&p, &mut RandomPlugin::new(), 0..200, &ExploreConfig::default());
    assert!(s.runs_with_assert > 0 && s.runs_with_assert < 200);
    assert_eq!(s.asserts.len(), 1);
    assert_eq!(s.asserts[0].stmt.line, 6);
}

#[test]
fn join_on_overwritten_handle_is_a_trace_error() {
    let p = parse_program("Fork t {\n  skip\n}\nt := 99\nJoin(t)\n").unwrap();
    let t = explore(&p, &mut RandomPlugin::new(), 0, &ExploreConfig::default());
    assert!(t.error.as_deref().unwrap().contains("Join"));
}

#[test]
fn mutual_join_deadlocks() {
    let p = parse_program("Fork a {\n  Join(b)\n}\nFork b {\n  Join(a)\n}\n").unwrap();
    // depending on the schedule, `a` reaches its join before or after `b`
    // holds a thread
    let mut deadlocks = 0;
    for seed in 0..50 {
        let t = explore(&p, &mut RandomPlugin::new(), seed, &ExploreConfig::default());
        assert!(t.deadlock != t.error.is_some(), "seed {seed}");
        if t.deadlock {
            deadlocks += 1;
            assert!(t.dump().ends_with("deadlock\n"));
        }
    }
    assert!(deadlocks > 0);
}

#[test]
fn exhaustive_walk_covers_random_support() {
    for (name, p) in corpus() {
        let mut all = BTreeSet::new();
        let complete = explore_exhaustive(&p, 200_000, &ExploreConfig::default(), |t| {
            assert!(t.error.is_none(), "{name}: {:?}", t.error);
            all.insert(t.outcome.iter().map(|(_, v)| *v).collect::<Vec<i64>>());
        });
        assert!(complete, "{name}");
        let random = outcomes(&p, 500);
        assert!(random.is_subset(&all), "{name}: random {random:?} exhaustive {all:?}");
    }
}

#[test]
fn conservative_pruning_changes_no_trace() {
    let plain = ExploreConfig {
        check_cycles: false,
        ..Default::default()
    };
    let pruned = ExploreConfig {
        prune: PruneConfig::conservative(0),
        check_cycles: false,
    };
    for (name, p) in corpus() {
        for seed in 0..200 {
            let a = explore(&p, &mut RandomPlugin::new(), seed, &plain);
            let b = explore(&p, &mut RandomPlugin::new(), seed, &pruned);
            assert_eq!(a.dump(), b.dump(), "{name} seed {seed}");
            assert!(b.prune.passes >= 3, "{name} seed {seed}: {} passes", b.prune.passes);
        }
    }
}

#[test]
fn conservative_pruning_removes_records_on_long_runs() {
    let p = parse_program(
        "one := 1\nFork t {\n  repeat 40 {\n    Store(one, x, release)\n    a = Load(y, acquire)\n  }\n}\nrepeat 40 {\n  Store(one, y, release)\n  b = Load(x, acquire)\n}\nJoin(t)\n",
    )
    .unwrap();
    let cfg = ExploreConfig {
        prune: PruneConfig::conservative(16),
        check_cycles: false,
    };
    let t = explore(&p, &mut RandomPlugin::new(), 3, &cfg);
    assert!(t.prune.passes >= 3);
    assert!(t.prune.stores > 0);
    let plain = explore(&p, &mut RandomPlugin::new(), 3, &ExploreConfig::default());
    assert_eq!(plain.dump(), t.dump());
}
