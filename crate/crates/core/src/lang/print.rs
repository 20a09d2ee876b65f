use std::fmt::{self, Write};

use super::{Expr, Functor, Program, Stmt, StmtKind};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Bin(a, op, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

impl fmt::Display for Functor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functor::FetchAdd(e) => write!(f, "FetchAdd({e})"),
            Functor::Exchange(e) => write!(f, "Exchange({e})"),
        }
    }
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        stmt(out, s, depth);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "  ".repeat(depth);
    out.push_str(&pad);
    match &s.kind {
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = writeln!(out, "if ({cond}) {{");
            block(out, then_branch, depth + 1);
            out.push_str(&pad);
            out.push('}');
            if !else_branch.is_empty() {
                out.push_str(" else {\n");
                block(out, else_branch, depth + 1);
                out.push_str(&pad);
                out.push('}');
            }
            out.push('\n');
        }
        StmtKind::Assign { dst, expr } => {
            let _ = writeln!(out, "{dst} := {expr}");
        }
        StmtKind::Fork { handle, body } => {
            let _ = writeln!(out, "Fork {handle} {{");
            block(out, body, depth + 1);
            out.push_str(&pad);
            out.push_str("}\n");
        }
        StmtKind::Join { handle } => {
            let _ = writeln!(out, "Join({handle})");
        }
        StmtKind::Load { dst, loc, mo } => {
            let _ = writeln!(out, "{dst} = Load({loc}, {mo})");
        }
        StmtKind::Store { src, loc, mo } => {
            let _ = writeln!(out, "Store({src}, {loc}, {mo})");
        }
        StmtKind::Rmw { dst, loc, mo, functor } => {
            if let Some(dst) = dst {
                let _ = write!(out, "{dst} = ");
            }
            let _ = writeln!(out, "RMW({loc}, {mo}, {functor})");
        }
        StmtKind::Fence { mo } => {
            let _ = writeln!(out, "Fence({mo})");
        }
        StmtKind::Assert { expr } => {
            let _ = writeln!(out, "assert({expr})");
        }
        StmtKind::Empty => out.push_str("skip\n"),
    }
}

/// Prints the program in concrete syntax; the output parses back to an
/// equal program.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        if let Some(obs) = &self.observe {
            if !obs.is_empty() {
                let _ = writeln!(out, "observe {}", obs.join(", "));
            }
        }
        for (na, a) in &self.aliases {
            let _ = writeln!(out, "alias {na} ~ {a}");
        }
        block(&mut out, &self.stmts, 0);
        f.write_str(&out)
    }
}
