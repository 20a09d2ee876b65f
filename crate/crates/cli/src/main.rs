//! `wmm-probe`: run, fuzz, enumerate and cross-check litmus programs.

mod report;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wmm_core::explorer::{run_many_with, ExhaustivePlugin, ExploreConfig, Plugin, RandomPlugin};
use wmm_core::{parse_program, Program, PruneConfig, PruneMode, Trace};
use wmm_oracle::{check_consistent, enumerate_consistent, lift_trace, races, OracleError, DEFAULT_BOUND};

use report::{Format, Report};

const EXIT_CLEAN: u8 = 0;
const EXIT_FINDINGS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "wmm-probe", version, about = "Randomized tester and race detector for C/C++11 atomics litmus programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Execute one seed and print its trace and findings.
    Run(RunArgs),
    /// Execute many seeds and print the outcome histogram and findings.
    Fuzz(RunArgs),
    /// Print the outcome classes of all consistent executions.
    Enumerate(EnumArgs),
    /// Lift every fuzzed trace to executions and check them against the
    /// axiomatic model.
    Check(RunArgs),
    /// Print the structured trace of one seed.
    Dump(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PluginName {
    Random,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PruneName {
    Off,
    Conservative,
    Aggressive,
}

#[derive(Args, Debug)]
struct RunArgs {
    program: PathBuf,
    /// First seed.
    #[arg(long, env = "WMM_PROBE_SEED", default_value_t = 0)]
    seed: u64,
    /// Number of runs (the run budget for the exhaustive plugin).
    #[arg(long, default_value_t = 1000)]
    iterations: u64,
    #[arg(long, value_enum, default_value_t = PluginName::Random)]
    plugin: PluginName,
    #[arg(long, value_enum, default_value_t = PruneName::Off)]
    prune: PruneName,
    /// Prune when the live atomic record count exceeds this.
    #[arg(long, default_value_t = PruneConfig::default().trigger)]
    prune_trigger: usize,
    /// Events kept unpruned by aggressive pruning.
    #[arg(long, default_value_t = PruneConfig::default().window)]
    prune_window: u64,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Write every trace dump here, in seed order.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EnumArgs {
    program: PathBuf,
    /// Largest number of atomic events enumerated.
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    bound: usize,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

struct Failure(u8, String);

impl Failure {
    fn usage(msg: impl Into<String>) -> Failure {
        Failure(EXIT_USAGE, msg.into())
    }
}

fn load(path: &PathBuf) -> Result<(String, Program), Failure> {
    let src = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let p = parse_program(&src).map_err(|e| Failure::usage(format!("{}:{e}", path.display())))?;
    Ok((src, p))
}

impl RunArgs {
    fn explore_config(&self) -> Result<ExploreConfig, Failure> {
        let prune = match self.prune {
            PruneName::Off => PruneConfig::off(),
            PruneName::Conservative => PruneConfig::conservative(self.prune_trigger),
            PruneName::Aggressive => PruneConfig::aggressive(self.prune_trigger, self.prune_window),
        };
        prune.validate().map_err(Failure::usage)?;
        Ok(ExploreConfig {
            prune,
            check_cycles: false,
        })
    }

    fn plugin(&self) -> Box<dyn Plugin> {
        match self.plugin {
            PluginName::Random => Box::new(RandomPlugin::new()),
            PluginName::Exhaustive => Box::new(ExhaustivePlugin::new(self.iterations)),
        }
    }

    fn seeds(&self) -> std::ops::Range<u64> {
        self.seed..self.seed.saturating_add(self.iterations)
    }

    fn header(&self, cfg: &ExploreConfig) -> report::RunHeader {
        report::RunHeader {
            program: self.program.display().to_string(),
            plugin: match self.plugin {
                PluginName::Random => "random",
                PluginName::Exhaustive => "exhaustive",
            },
            seeds: self.seeds(),
            prune: cfg.prune,
        }
    }
}

/// Runs the seeds, writing dumps to `--trace-out` if given, and hands each
/// trace to `each`.
fn drive(a: &RunArgs, mut each: impl FnMut(u64, &Trace)) -> Result<(String, wmm_core::Summary), Failure> {
    let (src, p) = load(&a.program)?;
    let cfg = a.explore_config()?;
    let mut plugin = a.plugin();
    let mut dumps = String::new();
    let sum = run_many_with(&p, plugin.as_mut(), a.seeds(), &cfg, |seed, t| {
        if a.trace_out.is_some() {
            dumps.push_str(&t.dump());
        }
        each(seed, t);
    });
    if let Some(path) = &a.trace_out {
        std::fs::write(path, dumps).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    Ok((src, sum))
}

fn fuzz(a: &RunArgs) -> Result<(String, u8), Failure> {
    let cfg = a.explore_config()?;
    let mut first = None;
    let (src, sum) = drive(a, |_, t| {
        if first.is_none() {
            first = Some(t.clone());
        }
    })?;
    let only = if sum.runs == 1 { first.as_ref() } else { None };
    let r = Report {
        header: a.header(&cfg),
        src: &src,
        summary: &sum,
        trace: only,
    };
    let code = if !sum.errors.is_empty() && sum.errors.iter().any(|(_, e)| !is_program_error(e)) {
        EXIT_INTERNAL
    } else if sum.has_findings() || sum.deadlocks > 0 || !sum.errors.is_empty() {
        EXIT_FINDINGS
    } else {
        EXIT_CLEAN
    };
    Ok((r.render(a.format), code))
}

fn is_program_error(e: &str) -> bool {
    e.starts_with(wmm_core::trace::PROGRAM_ERROR)
}

fn dump(a: &RunArgs) -> Result<(String, u8), Failure> {
    let (_, p) = load(&a.program)?;
    let cfg = a.explore_config()?;
    let mut plugin = a.plugin();
    let t = wmm_core::explore(&p, plugin.as_mut(), a.seed, &cfg);
    let out = t.dump();
    if let Some(path) = &a.trace_out {
        std::fs::write(path, &out).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    let code = if t.internal_error().is_some() {
        EXIT_INTERNAL
    } else if t.has_findings() || t.deadlock || t.error.is_some() {
        EXIT_FINDINGS
    } else {
        EXIT_CLEAN
    };
    Ok((out, code))
}

fn enumerate(a: &EnumArgs) -> Result<(String, u8), Failure> {
    let (_, p) = load(&a.program)?;
    let xs = enumerate_consistent(&p, a.bound).map_err(|e| match e {
        OracleError::BudgetExceeded { .. } | OracleError::Unsupported(_) => Failure::usage(e.to_string()),
        _ => Failure(EXIT_INTERNAL, e.to_string()),
    })?;
    Ok((report::enumeration(&a.program.display().to_string(), &xs, a.format), EXIT_CLEAN))
}

/// Per-trace verdict of `check`.
#[derive(Default)]
struct CheckTally {
    traces: u64,
    executions: u64,
    skipped: Vec<(u64, String)>,
    rejected: Vec<(u64, String)>,
    race_checked: u64,
    race_mismatch: Vec<u64>,
}

fn check(a: &RunArgs) -> Result<(String, u8), Failure> {
    let cfg = a.explore_config()?;
    // pruned traces lose the mo constraints of removed stores, so only some
    // extension of what is left has to be consistent
    let need_all = cfg.prune.mode == PruneMode::Off;
    let mut tally = CheckTally::default();
    let (_, sum) = drive(a, |seed, t| {
        tally.traces += 1;
        if t.error.is_some() || t.deadlock {
            tally.skipped.push((seed, "run did not complete".into()));
            return;
        }
        match lift_trace(t, wmm_oracle::DEFAULT_EXTENSION_BUDGET) {
            Err(e) => tally.skipped.push((seed, e.to_string())),
            Ok(xs) => {
                tally.executions += xs.len() as u64;
                let bad: Vec<String> = xs.iter().filter_map(|x| check_consistent(x).err()).map(|v| v.to_string()).collect();
                if (need_all && !bad.is_empty()) || bad.len() == xs.len() {
                    tally.rejected.push((seed, bad[0].clone()));
                }
            }
        }
        if let Ok(pairs) = races::unordered_conflicts(t) {
            tally.race_checked += 1;
            let oracle: std::collections::BTreeSet<&str> = pairs.iter().map(|&(i, _)| t.na_accesses[i].loc.as_str()).collect();
            let engine: std::collections::BTreeSet<&str> = t.races.iter().map(|r| r.loc.as_str()).collect();
            if oracle != engine {
                tally.race_mismatch.push(seed);
            }
        }
    })?;
    let mut out = String::new();
    let program = a.program.display().to_string();
    match a.format {
        Format::Human => {
            let _ = writeln!(out, "program  {program}");
            let _ = writeln!(
                out,
                "checked {} traces: {} accepted, {} rejected, {} skipped ({} executions lifted)",
                tally.traces,
                tally.traces - tally.rejected.len() as u64 - tally.skipped.len() as u64,
                tally.rejected.len(),
                tally.skipped.len(),
                tally.executions
            );
            for (seed, v) in &tally.rejected {
                let _ = writeln!(out, "  rejected seed {seed}: {v}");
            }
            for (seed, why) in &tally.skipped {
                let _ = writeln!(out, "  skipped seed {seed}: {why}");
            }
            let _ = writeln!(
                out,
                "race verdicts agree on {}/{} traces",
                tally.race_checked - tally.race_mismatch.len() as u64,
                tally.race_checked
            );
            for seed in &tally.race_mismatch {
                let _ = writeln!(out, "  race verdict mismatch seed {seed}");
            }
        }
        Format::Structured => {
            let _ = writeln!(out, "{}", report::CHECK_HEADER);
            let _ = writeln!(out, "config program={program} {}", a.header(&cfg).config_fields());
            for (seed, v) in &tally.rejected {
                let _ = writeln!(out, "reject seed={seed} violation={v}");
            }
            for (seed, why) in &tally.skipped {
                let _ = writeln!(out, "skip seed={seed} reason={why}");
            }
            for seed in &tally.race_mismatch {
                let _ = writeln!(out, "race-mismatch seed={seed}");
            }
            let _ = writeln!(
                out,
                "summary traces={} executions={} rejected={} skipped={} race_checked={} race_mismatch={}",
                tally.traces,
                tally.executions,
                tally.rejected.len(),
                tally.skipped.len(),
                tally.race_checked,
                tally.race_mismatch.len()
            );
        }
    }
    let internal = sum.errors.iter().any(|(_, e)| !is_program_error(e));
    let code = if !tally.rejected.is_empty() || !tally.race_mismatch.is_empty() || internal {
        EXIT_INTERNAL
    } else {
        EXIT_CLEAN
    };
    Ok((out, code))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_CLEAN });
        }
    };
    let res = match &cli.cmd {
        Cmd::Run(a) => {
            let one = RunArgs {
                iterations: 1,
                plugin: a.plugin,
                prune: a.prune,
                program: a.program.clone(),
                trace_out: a.trace_out.clone(),
                ..*a
            };
            fuzz(&one)
        }
        Cmd::Fuzz(a) => fuzz(a),
        Cmd::Enumerate(a) => enumerate(a),
        Cmd::Check(a) => check(a),
        Cmd::Dump(a) => dump(a),
    };
    match res {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(Failure(code, msg)) => {
            eprintln!("wmm-probe: {msg}");
            ExitCode::from(code)
        }
    }
}
