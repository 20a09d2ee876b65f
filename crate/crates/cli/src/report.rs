//! Rendering of run summaries and enumerations, human-readable or as
//! line-delimited records.
//!
//! Structured run report:
//!
//! ```text
//! #wmm-report v1
//! config program=mp.lit plugin=random seeds=0..1000 prune=off trigger=4096 window=1024
//! outcome count=249 r1=0 r2=0
//! race RACE write-read data (2@5 4:3) (3@9 12:5)
//! assert tid=2 stmt=7:3
//! error seed=4 <message>
//! summary runs=1000 race_runs=0 assert_runs=0 deadlocks=0 errors=0 prune_passes=0 pruned_stores=0 pruned_loads=0 pruned_fences=0
//! ```
//!
//! A report over a single run is followed by that run's trace dump.

use std::fmt::Write as _;
use std::ops::Range;

use clap::ValueEnum;

use wmm_core::lang::Span;
use wmm_core::{PruneConfig, Summary, Trace};
use wmm_oracle::Execution;

pub const REPORT_HEADER: &str = "#wmm-report v1";
pub const ENUM_HEADER: &str = "#wmm-enum v1";
pub const CHECK_HEADER: &str = "#wmm-check v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Structured,
}

pub struct RunHeader {
    pub program: String,
    pub plugin: &'static str,
    pub seeds: Range<u64>,
    pub prune: PruneConfig,
}

impl RunHeader {
    pub fn config_fields(&self) -> String {
        format!(
            "plugin={} seeds={}..{} prune={} trigger={} window={}",
            self.plugin,
            self.seeds.start,
            self.seeds.end,
            self.prune.mode.name(),
            self.prune.trigger,
            self.prune.window
        )
    }
}

pub struct Report<'a> {
    pub header: RunHeader,
    pub src: &'a str,
    pub summary: &'a Summary,
    pub trace: Option<&'a Trace>,
}

fn outcome_text(o: &[(String, i64)]) -> String {
    if o.is_empty() {
        return "(nothing observed)".into();
    }
    o.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

fn source_line(src: &str, s: Span) -> &str {
    src.lines().nth(s.line.saturating_sub(1) as usize).map(str::trim).unwrap_or("?")
}

impl Report<'_> {
    pub fn render(&self, f: Format) -> String {
        match f {
            Format::Human => self.human(),
            Format::Structured => self.structured(),
        }
    }

    fn human(&self) -> String {
        let s = self.summary;
        let h = &self.header;
        let mut out = String::new();
        let _ = writeln!(out, "program  {}", h.program);
        let prune = match h.prune.mode {
            wmm_core::PruneMode::Off => "prune off".to_string(),
            wmm_core::PruneMode::Conservative => format!("prune conservative, trigger {}", h.prune.trigger),
            wmm_core::PruneMode::Aggressive => {
                format!("prune aggressive, trigger {}, window {}", h.prune.trigger, h.prune.window)
            }
        };
        if h.plugin == "exhaustive" {
            let _ = writeln!(out, "runs     {} (exhaustive plugin, {prune})", s.runs);
        } else {
            let _ = writeln!(out, "seeds    {}..{} (random plugin, {prune})", h.seeds.start, h.seeds.end);
        }
        out.push('\n');
        let rows: Vec<(String, u64)> = s.histogram.iter().map(|(o, &n)| (outcome_text(o), n)).collect();
        let w = rows.iter().map(|(o, _)| o.len()).max().unwrap_or(0).max(7);
        let _ = writeln!(out, "{:<w$}  {:>8}", "outcome", "runs");
        for (o, n) in &rows {
            let pct = 100.0 * *n as f64 / s.runs.max(1) as f64;
            let _ = writeln!(out, "{o:<w$}  {n:>8}  {pct:5.1}%");
        }
        let _ = writeln!(out, "{} outcome class{}", rows.len(), if rows.len() == 1 { "" } else { "es" });
        out.push('\n');
        let _ = writeln!(out, "race detected in {}/{} runs", s.runs_with_race, s.runs);
        for r in &s.races {
            let _ = writeln!(
                out,
                "  {} on {}: line {} `{}` (thread {}) then line {} `{}` (thread {})",
                r.kind.name(),
                r.loc,
                r.first.stmt.line,
                source_line(self.src, r.first.stmt),
                r.first.tid,
                r.second.stmt.line,
                source_line(self.src, r.second.stmt),
                r.second.tid
            );
        }
        let _ = writeln!(out, "assertion failed in {}/{} runs", s.runs_with_assert, s.runs);
        for a in &s.asserts {
            let _ = writeln!(out, "  line {} `{}`", a.stmt.line, source_line(self.src, a.stmt));
        }
        if s.deadlocks > 0 {
            let _ = writeln!(out, "deadlocked in {}/{} runs", s.deadlocks, s.runs);
        }
        for (seed, e) in &s.errors {
            let _ = writeln!(out, "error in seed {seed}: {e}");
        }
        if s.prune.passes > 0 {
            let _ = writeln!(
                out,
                "pruning: {} passes removed {} stores, {} loads, {} fences",
                s.prune.passes, s.prune.stores, s.prune.loads, s.prune.fences
            );
        }
        if let Some(t) = self.trace {
            out.push('\n');
            out.push_str(&t.dump());
        }
        out
    }

    fn structured(&self) -> String {
        let s = self.summary;
        let mut out = String::new();
        let _ = writeln!(out, "{REPORT_HEADER}");
        let _ = writeln!(out, "config program={} {}", self.header.program, self.header.config_fields());
        for (o, n) in &s.histogram {
            let _ = write!(out, "outcome count={n}");
            for (k, v) in o {
                let _ = write!(out, " {k}={v}");
            }
            out.push('\n');
        }
        for r in &s.races {
            let _ = writeln!(out, "race {r}");
        }
        for a in &s.asserts {
            let _ = writeln!(out, "assert tid={} stmt={}", a.tid, a.stmt);
        }
        for (seed, e) in &s.errors {
            let _ = writeln!(out, "error seed={seed} {e}");
        }
        let _ = writeln!(
            out,
            "summary runs={} race_runs={} assert_runs={} deadlocks={} errors={} prune_passes={} pruned_stores={} pruned_loads={} pruned_fences={}",
            s.runs,
            s.runs_with_race,
            s.runs_with_assert,
            s.deadlocks,
            s.errors.len(),
            s.prune.passes,
            s.prune.stores,
            s.prune.loads,
            s.prune.fences
        );
        if let Some(t) = self.trace {
            out.push_str(&t.dump());
        }
        out
    }
}

/// Outcome classes of the consistent executions, with how many executions
/// fall in each.
pub fn enumeration(program: &str, xs: &[Execution], f: Format) -> String {
    let mut classes: std::collections::BTreeMap<&[(String, i64)], usize> = Default::default();
    for x in xs {
        *classes.entry(&x.outcome).or_default() += 1;
    }
    let mut out = String::new();
    match f {
        Format::Human => {
            let _ = writeln!(out, "program  {program}");
            let _ = writeln!(
                out,
                "{} consistent executions in {} outcome class{}",
                xs.len(),
                classes.len(),
                if classes.len() == 1 { "" } else { "es" }
            );
            for (o, n) in &classes {
                let _ = writeln!(out, "  {}  ({n} execution{})", outcome_text(o), if *n == 1 { "" } else { "s" });
            }
        }
        Format::Structured => {
            let _ = writeln!(out, "{ENUM_HEADER}");
            let _ = writeln!(out, "config program={program}");
            for (o, n) in &classes {
                let _ = write!(out, "class executions={n}");
                for (k, v) in *o {
                    let _ = write!(out, " {k}={v}");
                }
                out.push('\n');
            }
            let _ = writeln!(out, "summary executions={} classes={}", xs.len(), classes.len());
        }
    }
    out
}
