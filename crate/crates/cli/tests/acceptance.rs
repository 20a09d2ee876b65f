//! The acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use wmm_core::explorer::{explore, run_many, run_many_with, ExploreConfig, RandomPlugin};
use wmm_core::race::AccessKind;
use wmm_core::rng::SplitMix64;
use wmm_core::trace::NaAccess;
use wmm_core::{explore_exhaustive, parse_program, Program, PruneConfig, Trace};
use wmm_oracle::graphcheck::{random_construction, ConstructionStats, GraphViolation};
use wmm_oracle::races::unordered_conflicts;
use wmm_oracle::{canonicalize, check_consistent, enumerate_consistent, lift_trace, Canon};

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

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

fn cfg() -> ExploreConfig {
    ExploreConfig::default()
}

fn within(t: Duration, limit: u64) -> Result<(), String> {
    if t > Duration::from_secs(limit) {
        Err(format!("took {:.1}s, limit {limit}s", t.as_secs_f64()))
    } else {
        Ok(())
    }
}

fn outcomes(p: &Program, runs: u64) -> BTreeSet<Vec<i64>> {
    run_many(p, &mut RandomPlugin::new(), 0..runs, &cfg())
        .histogram
        .keys()
        .map(|o| o.iter().map(|(_, v)| *v).collect())
        .collect()
}

fn mp_behaviors() -> Verdict {
    let start = Instant::now();
    let relaxed = outcomes(&litmus("mp_relaxed.lit"), 1000);
    let relacq = outcomes(&litmus("mp_relacq.lit"), 10_000);
    within(start.elapsed(), 10)?;
    if relaxed.len() != 4 || !relaxed.contains(&vec![1, 0]) {
        return Err(format!("relaxed outcomes {relaxed:?}"));
    }
    if relacq.contains(&vec![1, 0]) {
        return Err("rel/acq showed r1=1 r2=0".into());
    }
    Ok(format!("relaxed {relaxed:?}; rel/acq {relacq:?} over 10000 seeds"))
}

fn injected_bugs() -> Verdict {
    let start = Instant::now();
    let mut parts = Vec::new();
    for name in ["seqlock_bug.lit", "rwlock_bug.lit"] {
        let s = run_many(&litmus(name), &mut RandomPlugin::new(), 0..1000, &cfg());
        if s.runs_with_race < 50 {
            return Err(format!("{name}: race in {}/1000 runs", s.runs_with_race));
        }
        parts.push(format!("{name} {}/1000", s.runs_with_race));
    }
    for name in ["seqlock_fixed.lit", "rwlock_fixed.lit"] {
        let s = run_many(&litmus(name), &mut RandomPlugin::new(), 0..1000, &cfg());
        if s.runs_with_race != 0 {
            return Err(format!("{name}: race in {}/1000 runs", s.runs_with_race));
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!("{}; fixed variants 0/1000", parts.join(", ")))
}

/// One pass over the randomized mo-graph constructions, shared by the
/// reachability and path-property criteria.
struct GraphSuite {
    stats: ConstructionStats,
    failures: Vec<(u64, GraphViolation)>,
    elapsed: Duration,
}

fn graph_suite() -> GraphSuite {
    let start = Instant::now();
    let mut stats = ConstructionStats::default();
    let mut failures = Vec::new();
    for seed in 0..1000 {
        match random_construction(seed, 12) {
            Ok(s) => stats.add(&s),
            Err(v) => failures.push((seed, v)),
        }
    }
    GraphSuite {
        stats,
        failures,
        elapsed: start.elapsed(),
    }
}

fn reachability(g: &GraphSuite) -> Verdict {
    within(g.elapsed, 30)?;
    if let Some((seed, v)) = g.failures.iter().find(|(_, v)| matches!(v, GraphViolation::Reachability { .. } | GraphViolation::Cycle)) {
        return Err(format!("seed {seed}: {v:?}"));
    }
    if g.stats.rmw_edges == 0 {
        return Err("no rmw edges built".into());
    }
    Ok(format!(
        "{} nodes, {} rmw edges, {} ordered pairs checked in {:.1}s",
        g.stats.nodes,
        g.stats.rmw_edges,
        g.stats.pairs_checked,
        g.elapsed.as_secs_f64()
    ))
}

fn path_properties(g: &GraphSuite) -> Verdict {
    if let Some((seed, v)) = g.failures.iter().find(|(_, v)| matches!(v, GraphViolation::PathMonotone { .. } | GraphViolation::OwnSlot { .. })) {
        return Err(format!("seed {seed}: {v:?}"));
    }
    if !g.failures.is_empty() {
        return Err(format!("construction failed: {:?}", g.failures[0]));
    }
    Ok(format!("{} construction sequences, {} steps, zero violations", 1000, g.stats.steps))
}

fn keyed(xs: impl IntoIterator<Item = wmm_oracle::Execution>) -> BTreeSet<Canon> {
    xs.into_iter().map(|x| canonicalize(&x)).collect()
}

fn equivalence() -> Verdict {
    let start = Instant::now();
    let mut names = Vec::new();
    let mut executions = 0;
    for (name, p) in corpus() {
        if p.atomic_stmt_count() > 8 {
            continue;
        }
        let oracle = keyed(enumerate_consistent(&p, 8).map_err(|e| format!("{name}: {e}"))?);
        let mut lifted = BTreeSet::new();
        let mut err = None;
        let complete = explore_exhaustive(&p, 1_000_000, &cfg(), |t| match lift_trace(t, 10_000) {
            Ok(xs) => lifted.extend(keyed(xs)),
            Err(e) => {
                err.get_or_insert(e);
            }
        });
        if let Some(e) = err {
            return Err(format!("{name}: {e}"));
        }
        if !complete {
            return Err(format!("{name}: exhaustive walk hit its budget"));
        }
        if lifted != oracle {
            return Err(format!(
                "{name}: {} lifted only, {} enumerated only",
                lifted.difference(&oracle).count(),
                oracle.difference(&lifted).count()
            ));
        }
        executions += oracle.len();
        names.push(name.trim_end_matches(".lit").to_string());
    }
    within(start.elapsed(), 300)?;
    if names.len() < 10 {
        return Err(format!("only {} programs within the bound", names.len()));
    }
    Ok(format!("{} programs, {executions} executions, sets equal", names.len()))
}

fn coherence() -> Verdict {
    let progs = corpus();
    let per = 10_000u64.div_ceil(progs.len() as u64);
    let mut runs = 0;
    let mut lifted = 0;
    for (name, p) in &progs {
        for seed in 0..per {
            let t = explore(p, &mut RandomPlugin::new(), seed, &cfg());
            let xs = lift_trace(&t, 10_000).map_err(|e| format!("{name} seed {seed}: {e}"))?;
            for x in &xs {
                check_consistent(x).map_err(|v| format!("{name} seed {seed}: {v}"))?;
            }
            runs += 1;
            lifted += xs.len();
        }
    }
    Ok(format!("{runs} runs, {lifted} lifted executions, all consistent"))
}

fn pruning() -> Verdict {
    let off = cfg();
    let cons = ExploreConfig {
        prune: PruneConfig::conservative(0),
        ..cfg()
    };
    let mut min_passes = u64::MAX;
    let mut removed = 0;
    for (name, p) in corpus() {
        let mut a = BTreeSet::new();
        let mut b = BTreeSet::new();
        for seed in 0..1000 {
            let t0 = explore(&p, &mut RandomPlugin::new(), seed, &off);
            let t1 = explore(&p, &mut RandomPlugin::new(), seed, &cons);
            if t0.dump() != t1.dump() {
                return Err(format!("{name} seed {seed}: conservative trace differs"));
            }
            min_passes = min_passes.min(t1.prune.passes);
            removed += t1.prune.stores + t1.prune.loads + t1.prune.fences;
            a.insert(t0.outcome);
            b.insert(t1.outcome);
        }
        if a != b {
            return Err(format!("{name}: outcome support differs"));
        }
    }
    if min_passes < 3 {
        return Err(format!("a run pruned only {min_passes} times"));
    }
    let mut aggressive = 0;
    for (name, p) in corpus() {
        for (trigger, window) in [(2, 2), (1, 0), (4, 3)] {
            let c = ExploreConfig {
                prune: PruneConfig::aggressive(trigger, window),
                ..cfg()
            };
            for seed in 0..300 {
                let t = explore(&p, &mut RandomPlugin::new(), seed, &c);
                let xs = lift_trace(&t, 10_000).map_err(|e| format!("{name} seed {seed}: {e}"))?;
                // the trace is accepted when some extension of its remaining
                // mo constraints is consistent
                if !xs.iter().any(|x| check_consistent(x).is_ok()) {
                    return Err(format!("{name} seed {seed} aggressive({trigger}, {window}): rejected"));
                }
                aggressive += 1;
            }
        }
    }
    Ok(format!(
        "conservative: traces identical over 1000 seeds, at least {min_passes} passes per run, {removed} records removed; aggressive: {aggressive} traces accepted"
    ))
}

/// Full-vector happens-before between two recorded accesses.
fn naive_hb(a: &NaAccess, b: &NaAccess) -> bool {
    a.tid == b.tid
        || (a.clock.entries().all(|(t, s)| s <= b.clock.get(t)) && a.clock.get(a.tid) < b.clock.get(a.tid))
}

/// Per racy cell, the first access completing a race, by keeping every access.
fn naive_races(t: &Trace) -> BTreeMap<String, (u32, u64)> {
    let acc = &t.na_accesses;
    let mut first = BTreeMap::new();
    for (j, b) in acc.iter().enumerate() {
        let racy = acc[..j].iter().any(|a| {
            a.loc == b.loc && a.tid != b.tid && (a.kind == AccessKind::Write || b.kind == AccessKind::Write) && !naive_hb(a, b)
        });
        if racy {
            first.entry(b.loc.clone()).or_insert((b.tid, b.clock.get(b.tid)));
        }
    }
    first
}

fn epoch_races(t: &Trace) -> BTreeMap<String, (u32, u64)> {
    let mut first = BTreeMap::new();
    for r in &t.races {
        first.entry(r.loc.clone()).or_insert((r.second.tid, r.second.epoch));
    }
    first
}

fn small_program(rng: &mut SplitMix64) -> String {
    let threads = 2 + rng.below(2);
    let mut budget = 10;
    let mut s = String::from("c1 := 1\n");
    for i in 0..threads {
        s.push_str(&format!("Fork t{i} {{\n"));
        let n = 1 + rng.below(4.min(budget - (threads - 1 - i)));
        budget -= n;
        for _ in 0..n {
            let d = ["d0", "d1"][rng.below(2)];
            let f = ["f", "g"][rng.below(2)];
            let line = match rng.below(6) {
                0 | 1 => format!("{d} := c1"),
                2 => format!("r := {d}"),
                3 => format!("Store(c1, {f}, {})", ["relaxed", "release", "seq_cst"][rng.below(3)]),
                4 => format!("a = Load({f}, {})", ["relaxed", "acquire", "seq_cst"][rng.below(3)]),
                _ => format!("a = RMW({f}, {}, FetchAdd(1))", ["relaxed", "rel_acq"][rng.below(2)]),
            };
            s.push_str(&format!("  {line}\n"));
        }
        s.push_str("}\n");
    }
    s
}

fn race_detector() -> Verdict {
    let mut rng = SplitMix64::new(0x5eed);
    let mut runs = 0;
    let mut racy = 0;
    for k in 0..400 {
        let src = small_program(&mut rng);
        let p = parse_program(&src).map_err(|e| format!("{e}\n{src}"))?;
        for seed in 0..10 {
            let t = explore(&p, &mut RandomPlugin::new(), seed, &cfg());
            let want = naive_races(&t);
            if epoch_races(&t) != want {
                return Err(format!("program {k} seed {seed} disagrees with the full-vector detector\n{src}"));
            }
            runs += 1;
            racy += !want.is_empty() as u64;
        }
    }
    let synced = run_many(&litmus("mp_na_relacq.lit"), &mut RandomPlugin::new(), 0..2000, &cfg());
    if synced.runs_with_race != 0 {
        return Err(format!("rel/acq data raced in {} runs", synced.runs_with_race));
    }
    let mut unordered = 0;
    let mut missed = 0;
    run_many_with(&litmus("mp_na_relaxed.lit"), &mut RandomPlugin::new(), 0..2000, &cfg(), |_, t| {
        if !unordered_conflicts(t).unwrap().is_empty() {
            unordered += 1;
            missed += t.races.is_empty() as u64;
        }
    });
    if missed > 0 || unordered == 0 {
        return Err(format!("relaxed data: reported in {}/{unordered} unordered runs", unordered - missed));
    }
    Ok(format!(
        "{runs} generated runs agree ({racy} racy); rel/acq 0/2000; relaxed reported in {unordered}/{unordered} unordered runs"
    ))
}

fn probe(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_wmm-probe")).args(args).output().unwrap();
    out.stdout
}

fn determinism() -> Verdict {
    let mut compared = 0;
    for (name, _) in corpus() {
        let path = litmus_dir().join(&name);
        let path = path.to_str().unwrap();
        for seed in ["0", "17", "981"] {
            let a = probe(&["dump", path, "--seed", seed]);
            let b = probe(&["dump", path, "--seed", seed]);
            let c = probe(&["dump", path, "--seed", seed, "--prune", "conservative", "--prune-trigger", "0"]);
            if a.is_empty() || a != b || a != c {
                return Err(format!("{name} seed {seed}: dumps differ"));
            }
            compared += 1;
        }
    }
    let path = litmus_dir().join("mp_relaxed.lit");
    let path = path.to_str().unwrap();
    let a = probe(&["fuzz", path, "--format", "structured", "--iterations", "300"]);
    let b = probe(&["fuzz", path, "--format", "structured", "--iterations", "300"]);
    if a != b {
        return Err("structured fuzz reports differ".into());
    }
    Ok(format!("{compared} (program, seed) dumps identical across invocations and prune off/conservative"))
}

fn main() {
    let graphs = graph_suite();
    let criteria: Vec<Criterion> = vec![
        ("message-passing behaviors", Box::new(mp_behaviors)),
        ("injected bugs detected", Box::new(injected_bugs)),
        ("clock-vector reachability", Box::new(|| reachability(&graphs))),
        ("mo-graph path properties", Box::new(|| path_properties(&graphs))),
        ("operational/axiomatic equivalence", Box::new(equivalence)),
        ("coherence of random runs", Box::new(coherence)),
        ("pruning soundness", Box::new(pruning)),
        ("race detector", Box::new(race_detector)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        match v {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.1}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.1}s) {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
