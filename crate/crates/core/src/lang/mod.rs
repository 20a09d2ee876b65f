//! The litmus language: a tiny concurrent core language with non-atomic
//! locations, atomic locations, fork/join and the four atomic statements.
//!
//! Concrete syntax is line oriented, one statement per line (or separated by
//! `;`), with `#` comments:
//!
//! ```text
//! observe r1, r2
//! one := 1
//! Fork ta {
//!   Store(one, x, relaxed)
//!   Store(one, y, release)
//! }
//! Fork tb {
//!   r1 = Load(y, acquire)
//!   r2 = Load(x, relaxed)
//! }
//! ```
//!
//! `repeat k { ... }` is unrolled at parse time.

mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;

pub use parse::parse_program;

/// Source position of a statement. Doubles as the static statement id used
/// when deduplicating race and assertion reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MemOrder {
    Relaxed,
    Acquire,
    Release,
    AcqRel,
    SeqCst,
}

impl MemOrder {
    pub const ALL: [MemOrder; 5] = [
        MemOrder::Relaxed,
        MemOrder::Acquire,
        MemOrder::Release,
        MemOrder::AcqRel,
        MemOrder::SeqCst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MemOrder::Relaxed => "relaxed",
            MemOrder::Acquire => "acquire",
            MemOrder::Release => "release",
            MemOrder::AcqRel => "rel_acq",
            MemOrder::SeqCst => "seq_cst",
        }
    }

    pub fn from_name(s: &str) -> Option<MemOrder> {
        Some(match s {
            "relaxed" => MemOrder::Relaxed,
            "acquire" => MemOrder::Acquire,
            "release" => MemOrder::Release,
            "rel_acq" | "acq_rel" => MemOrder::AcqRel,
            "seq_cst" => MemOrder::SeqCst,
            _ => return None,
        })
    }

    /// Acquire, rel_acq or seq_cst.
    pub fn is_acquire(self) -> bool {
        matches!(self, MemOrder::Acquire | MemOrder::AcqRel | MemOrder::SeqCst)
    }

    /// Release, rel_acq or seq_cst.
    pub fn is_release(self) -> bool {
        matches!(self, MemOrder::Release | MemOrder::AcqRel | MemOrder::SeqCst)
    }

    pub fn is_seq_cst(self) -> bool {
        self == MemOrder::SeqCst
    }

    pub fn valid_for_load(self) -> bool {
        matches!(self, MemOrder::Relaxed | MemOrder::Acquire | MemOrder::SeqCst)
    }

    pub fn valid_for_store(self) -> bool {
        matches!(self, MemOrder::Relaxed | MemOrder::Release | MemOrder::SeqCst)
    }

    pub fn valid_for_fence(self) -> bool {
        self != MemOrder::Relaxed
    }
}

impl fmt::Display for MemOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
        }
    }

    pub fn apply(self, a: i64, b: i64) -> i64 {
        match self {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::Eq => (a == b) as i64,
            BinOp::Ne => (a != b) as i64,
            BinOp::Lt => (a < b) as i64,
            BinOp::Le => (a <= b) as i64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(i64),
    Var(String),
    Bin(Box<Expr>, BinOp, Box<Expr>),
}

impl Expr {
    /// Evaluates over wrapping 64-bit integers. Unassigned variables read 0.
    pub fn eval(&self, lookup: &mut dyn FnMut(&str) -> i64) -> i64 {
        match self {
            Expr::Lit(v) => *v,
            Expr::Var(name) => lookup(name),
            Expr::Bin(a, op, b) => {
                let a = a.eval(lookup);
                let b = b.eval(lookup);
                op.apply(a, b)
            }
        }
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(name) => out.push(name.clone()),
            Expr::Bin(a, _, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Functor {
    FetchAdd(Expr),
    Exchange(Expr),
}

impl Functor {
    pub fn operand(&self) -> &Expr {
        match self {
            Functor::FetchAdd(e) | Functor::Exchange(e) => e,
        }
    }

    /// Value stored by the RMW given the loaded value and the evaluated operand.
    pub fn apply(&self, loaded: i64, operand: i64) -> i64 {
        match self {
            Functor::FetchAdd(_) => loaded.wrapping_add(operand),
            Functor::Exchange(_) => operand,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    If {
        cond: String,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    Assign {
        dst: String,
        expr: Expr,
    },
    Fork {
        handle: String,
        body: Vec<Stmt>,
    },
    Join {
        handle: String,
    },
    Load {
        dst: String,
        loc: String,
        mo: MemOrder,
    },
    Store {
        src: String,
        loc: String,
        mo: MemOrder,
    },
    Rmw {
        dst: Option<String>,
        loc: String,
        mo: MemOrder,
        functor: Functor,
    },
    Fence {
        mo: MemOrder,
    },
    Assert {
        expr: Expr,
    },
    Empty,
}

impl StmtKind {
    /// Statements that are scheduling points: atomics and thread operations.
    pub fn is_visible(&self) -> bool {
        matches!(
            self,
            StmtKind::Fork { .. }
                | StmtKind::Join { .. }
                | StmtKind::Load { .. }
                | StmtKind::Store { .. }
                | StmtKind::Rmw { .. }
                | StmtKind::Fence { .. }
        )
    }
}

/// A statement with its source position. Equality ignores the position so
/// that structurally equal programs compare equal regardless of layout.
#[derive(Clone, Debug)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Stmt {
        Stmt {
            kind,
            span: Span::default(),
        }
    }
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Stmt) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Stmt {}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub stmts: Vec<Stmt>,
    /// Explicit observer variables (`observe a, b`).
    pub observe: Option<Vec<String>>,
    /// Mixed-access test hook: `alias na ~ atomic`.
    pub aliases: Vec<(String, String)>,
}

impl Program {
    /// Total number of statements, counting nested bodies.
    pub fn count_stmts(&self) -> usize {
        fn count(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| {
                    1 + match &s.kind {
                        StmtKind::If {
                            then_branch,
                            else_branch,
                            ..
                        } => count(then_branch) + count(else_branch),
                        StmtKind::Fork { body, .. } => count(body),
                        _ => 0,
                    }
                })
                .sum()
        }
        count(&self.stmts)
    }

    pub fn fork_bodies(&self) -> Vec<&[Stmt]> {
        let mut out = Vec::new();
        walk(&self.stmts, &mut |s| {
            if let StmtKind::Fork { body, .. } = &s.kind {
                out.push(body.as_slice());
            }
        });
        out
    }

    /// Atomic locations in sorted order.
    pub fn atomic_locations(&self) -> Vec<String> {
        let mut set = BTreeSet::new();
        walk(&self.stmts, &mut |s| match &s.kind {
            StmtKind::Load { loc, .. } | StmtKind::Store { loc, .. } | StmtKind::Rmw { loc, .. } => {
                set.insert(loc.clone());
            }
            _ => {}
        });
        for (_, a) in &self.aliases {
            set.insert(a.clone());
        }
        set.into_iter().collect()
    }

    /// Non-atomic names, excluding fork handles.
    pub fn nonatomic_names(&self) -> Vec<String> {
        let mut set = BTreeSet::new();
        let mut handles = BTreeSet::new();
        walk(&self.stmts, &mut |s| {
            let mut vars = Vec::new();
            match &s.kind {
                StmtKind::If { cond, .. } => vars.push(cond.clone()),
                StmtKind::Assign { dst, expr } => {
                    vars.push(dst.clone());
                    expr.vars(&mut vars);
                }
                StmtKind::Fork { handle, .. } => {
                    handles.insert(handle.clone());
                }
                StmtKind::Load { dst, .. } => vars.push(dst.clone()),
                StmtKind::Store { src, .. } => vars.push(src.clone()),
                StmtKind::Rmw { dst, functor, .. } => {
                    vars.extend(dst.iter().cloned());
                    functor.operand().vars(&mut vars);
                }
                StmtKind::Assert { expr } => expr.vars(&mut vars),
                StmtKind::Join { .. } | StmtKind::Fence { .. } | StmtKind::Empty => {}
            }
            set.extend(vars);
        });
        set.into_iter().filter(|n| !handles.contains(n)).collect()
    }

    /// Variables whose final values make up an execution's outcome: the
    /// `observe` list when present, else every load/RMW destination.
    pub fn observed(&self) -> Vec<String> {
        if let Some(list) = &self.observe {
            return list.clone();
        }
        let mut set = BTreeSet::new();
        walk(&self.stmts, &mut |s| match &s.kind {
            StmtKind::Load { dst, .. } => {
                set.insert(dst.clone());
            }
            StmtKind::Rmw { dst: Some(dst), .. } => {
                set.insert(dst.clone());
            }
            _ => {}
        });
        set.into_iter().collect()
    }

    /// Upper bound on the number of atomic statements executed by any run
    /// (both branches of every `if` counted).
    pub fn atomic_stmt_count(&self) -> usize {
        let mut n = 0;
        walk(&self.stmts, &mut |s| {
            if matches!(
                s.kind,
                StmtKind::Load { .. } | StmtKind::Store { .. } | StmtKind::Rmw { .. } | StmtKind::Fence { .. }
            ) {
                n += 1;
            }
        });
        n
    }
}

/// Pre-order walk over every statement, including nested bodies.
pub fn walk<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        match &s.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                walk(then_branch, f);
                walk(else_branch, f);
            }
            StmtKind::Fork { body, .. } => walk(body, f),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LangError {
    #[error("{pos}: parse error: {msg}")]
    Parse { pos: Span, msg: String },
    #[error("{pos}: semantic error: {msg}")]
    Semantic { pos: Span, msg: String },
}

impl LangError {
    pub fn is_semantic(&self) -> bool {
        matches!(self, LangError::Semantic { .. })
    }
}
