use std::collections::{BTreeMap, BTreeSet};

use super::{walk, BinOp, Expr, Functor, LangError, MemOrder, Program, Span, Stmt, StmtKind};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    ColonEq,
    Eq,
    EqEq,
    Ne,
    Lt,
    Le,
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Tilde,
    /// Newline or `;`.
    Sep,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Sep => "end of statement".into(),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Span)>, LangError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Span { line, col };
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            chars.next();
            col += 1;
        };
        match c {
            '\n' => {
                chars.next();
                out.push((Tok::Sep, pos));
                line += 1;
                col = 1;
            }
            ';' => {
                bump(&mut chars);
                out.push((Tok::Sep, pos));
            }
            c if c.is_whitespace() => bump(&mut chars),
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(s), pos));
            }
            c if c.is_ascii_digit() => {
                let mut v: u64 = 0;
                while let Some(&c) = chars.peek() {
                    if let Some(d) = c.to_digit(10) {
                        v = v
                            .checked_mul(10)
                            .and_then(|v| v.checked_add(d as u64))
                            .ok_or_else(|| LangError::Parse {
                                pos,
                                msg: "integer literal out of range".into(),
                            })?;
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                out.push((Tok::Int(v), pos));
            }
            _ => {
                bump(&mut chars);
                let next = chars.peek().copied();
                let tok = match (c, next) {
                    (':', Some('=')) => {
                        bump(&mut chars);
                        Tok::ColonEq
                    }
                    ('=', Some('=')) => {
                        bump(&mut chars);
                        Tok::EqEq
                    }
                    ('!', Some('=')) => {
                        bump(&mut chars);
                        Tok::Ne
                    }
                    ('<', Some('=')) => {
                        bump(&mut chars);
                        Tok::Le
                    }
                    ('=', _) => Tok::Eq,
                    ('<', _) => Tok::Lt,
                    ('+', _) => Tok::Plus,
                    ('-', _) => Tok::Minus,
                    ('*', _) => Tok::Star,
                    ('(', _) => Tok::LParen,
                    (')', _) => Tok::RParen,
                    ('{', _) => Tok::LBrace,
                    ('}', _) => Tok::RBrace,
                    (',', _) => Tok::Comma,
                    ('~', _) => Tok::Tilde,
                    _ => {
                        return Err(LangError::Parse {
                            pos,
                            msg: format!("unexpected character `{c}`"),
                        })
                    }
                };
                out.push((tok, pos));
            }
        }
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "Load", "Store", "RMW", "Fence", "Fork", "Join", "if", "else", "assert", "repeat", "skip", "observe", "alias",
    "FetchAdd", "Exchange",
];

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    observe: Option<Vec<String>>,
    aliases: Vec<(String, String)>,
}

type PResult<T> = Result<T, LangError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(LangError::Parse {
            pos: self.span(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {}, found {}", describe(&want), describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && MemOrder::from_name(&s).is_none() => {
                self.next();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn mem_order(&mut self) -> PResult<MemOrder> {
        match self.peek().clone() {
            Tok::Ident(s) => match MemOrder::from_name(&s) {
                Some(mo) => {
                    self.next();
                    Ok(mo)
                }
                None => self.err(format!("unknown memory order `{s}`")),
            },
            other => self.err(format!("expected memory order, found {}", describe(&other))),
        }
    }

    fn skip_seps(&mut self) {
        while *self.peek() == Tok::Sep {
            self.next();
        }
    }

    fn end_of_stmt(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Sep => {
                self.next();
                Ok(())
            }
            Tok::RBrace | Tok::Eof => Ok(()),
            other => {
                let found = describe(other);
                self.err(format!("expected end of statement, found {found}"))
            }
        }
    }

    /// Statements up to `}` (when `nested`) or end of input.
    fn block_body(&mut self, nested: bool) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            self.skip_seps();
            match self.peek() {
                Tok::RBrace if nested => break,
                Tok::Eof if !nested => break,
                Tok::Eof => return self.err("unclosed `{`"),
                _ => {}
            }
            self.stmt(&mut out, nested)?;
            self.end_of_stmt()?;
        }
        Ok(out)
    }

    fn braced(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace)?;
        let body = self.block_body(true)?;
        self.expect(Tok::RBrace)?;
        Ok(body)
    }

    fn stmt(&mut self, out: &mut Vec<Stmt>, nested: bool) -> PResult<()> {
        let span = self.span();
        let head = match self.peek().clone() {
            Tok::Ident(s) => s,
            other => return self.err(format!("expected statement, found {}", describe(&other))),
        };
        let kind = match head.as_str() {
            "observe" | "alias" if nested => return self.err(format!("`{head}` is only allowed at top level")),
            "observe" => {
                self.next();
                let mut names = vec![self.ident()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    names.push(self.ident()?);
                }
                self.observe.get_or_insert_with(Vec::new).extend(names);
                return Ok(());
            }
            "alias" => {
                self.next();
                let na = self.ident()?;
                self.expect(Tok::Tilde)?;
                let a = self.ident()?;
                self.aliases.push((na, a));
                return Ok(());
            }
            "repeat" => {
                self.next();
                let k = match self.next() {
                    Tok::Int(k) => k,
                    other => return self.err(format!("expected repeat count, found {}", describe(&other))),
                };
                let body = self.braced()?;
                for _ in 0..k {
                    out.extend(body.iter().cloned());
                }
                return Ok(());
            }
            "skip" => {
                self.next();
                StmtKind::Empty
            }
            "if" => {
                self.next();
                self.expect(Tok::LParen)?;
                let cond = self.ident()?;
                self.expect(Tok::RParen)?;
                let then_branch = self.braced()?;
                let else_branch = if matches!(self.peek(), Tok::Ident(s) if s == "else") {
                    self.next();
                    self.braced()?
                } else {
                    Vec::new()
                };
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            "Fork" => {
                self.next();
                let handle = self.ident()?;
                let body = self.braced()?;
                StmtKind::Fork { handle, body }
            }
            "Join" => {
                self.next();
                self.expect(Tok::LParen)?;
                let handle = self.ident()?;
                self.expect(Tok::RParen)?;
                StmtKind::Join { handle }
            }
            "Store" => {
                self.next();
                self.expect(Tok::LParen)?;
                let src = self.ident()?;
                self.expect(Tok::Comma)?;
                let loc = self.ident()?;
                self.expect(Tok::Comma)?;
                let mo_span = self.span();
                let mo = self.mem_order()?;
                self.expect(Tok::RParen)?;
                if !mo.valid_for_store() {
                    return Err(LangError::Semantic {
                        pos: mo_span,
                        msg: format!("`{mo}` is not a valid store order"),
                    });
                }
                StmtKind::Store { src, loc, mo }
            }
            "RMW" => {
                self.next();
                self.rmw(None)?
            }
            "Fence" => {
                self.next();
                self.expect(Tok::LParen)?;
                let mo_span = self.span();
                let mo = self.mem_order()?;
                self.expect(Tok::RParen)?;
                if !mo.valid_for_fence() {
                    return Err(LangError::Semantic {
                        pos: mo_span,
                        msg: "a relaxed fence has no effect and is rejected".into(),
                    });
                }
                StmtKind::Fence { mo }
            }
            "assert" => {
                self.next();
                self.expect(Tok::LParen)?;
                let expr = self.expr()?;
                self.expect(Tok::RParen)?;
                StmtKind::Assert { expr }
            }
            _ => {
                let dst = self.ident()?;
                match self.next() {
                    Tok::ColonEq => {
                        let expr = self.expr()?;
                        StmtKind::Assign { dst, expr }
                    }
                    Tok::Eq => match self.peek().clone() {
                        Tok::Ident(k) if k == "Load" => {
                            self.next();
                            self.expect(Tok::LParen)?;
                            let loc = self.ident()?;
                            self.expect(Tok::Comma)?;
                            let mo_span = self.span();
                            let mo = self.mem_order()?;
                            self.expect(Tok::RParen)?;
                            if !mo.valid_for_load() {
                                return Err(LangError::Semantic {
                                    pos: mo_span,
                                    msg: format!("`{mo}` is not a valid load order"),
                                });
                            }
                            StmtKind::Load { dst, loc, mo }
                        }
                        Tok::Ident(k) if k == "RMW" => {
                            self.next();
                            self.rmw(Some(dst))?
                        }
                        other => return self.err(format!("expected `Load` or `RMW`, found {}", describe(&other))),
                    },
                    other => return self.err(format!("expected `:=` or `=`, found {}", describe(&other))),
                }
            }
        };
        out.push(Stmt { kind, span });
        Ok(())
    }

    fn rmw(&mut self, dst: Option<String>) -> PResult<StmtKind> {
        self.expect(Tok::LParen)?;
        let loc = self.ident()?;
        self.expect(Tok::Comma)?;
        let mo = self.mem_order()?;
        self.expect(Tok::Comma)?;
        let functor = match self.next() {
            Tok::Ident(f) if f == "FetchAdd" || f == "Exchange" => {
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                if f == "FetchAdd" {
                    Functor::FetchAdd(e)
                } else {
                    Functor::Exchange(e)
                }
            }
            other => return self.err(format!("expected `FetchAdd` or `Exchange`, found {}", describe(&other))),
        };
        self.expect(Tok::RParen)?;
        Ok(StmtKind::Rmw { dst, loc, mo, functor })
    }

    // expr := sum (cmp sum)?
    fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            _ => return Ok(lhs),
        };
        self.next();
        let rhs = self.sum()?;
        Ok(Expr::Bin(Box::new(lhs), op, Box::new(rhs)))
    }

    fn sum(&mut self) -> PResult<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.product()?;
            lhs = Expr::Bin(Box::new(lhs), op, Box::new(rhs));
        }
    }

    fn product(&mut self) -> PResult<Expr> {
        let mut lhs = self.atom()?;
        while *self.peek() == Tok::Star {
            self.next();
            let rhs = self.atom()?;
            lhs = Expr::Bin(Box::new(lhs), BinOp::Mul, Box::new(rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                match i64::try_from(v) {
                    Ok(v) => Ok(Expr::Lit(v)),
                    Err(_) => self.err("integer literal out of range"),
                }
            }
            Tok::Minus => {
                self.next();
                if let Tok::Int(v) = *self.peek() {
                    self.next();
                    if v <= i64::MAX as u64 + 1 {
                        return Ok(Expr::Lit((v as i64).wrapping_neg()));
                    }
                    return self.err("integer literal out of range");
                }
                let inner = self.atom()?;
                Ok(Expr::Bin(Box::new(Expr::Lit(0)), BinOp::Sub, Box::new(inner)))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(_) => Ok(Expr::Var(self.ident()?)),
            other => self.err(format!("expected expression, found {}", describe(&other))),
        }
    }
}

/// Parses litmus source text. An empty program is a single `Empty` statement.
pub fn parse_program(text: &str) -> Result<Program, LangError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        observe: None,
        aliases: Vec::new(),
    };
    let mut stmts = p.block_body(false)?;
    if *p.peek() != Tok::Eof {
        return p.err("unexpected `}`");
    }
    if stmts.is_empty() {
        stmts.push(Stmt::new(StmtKind::Empty));
    }
    let prog = Program {
        stmts,
        observe: p.observe,
        aliases: p.aliases,
    };
    check(&prog)?;
    Ok(prog)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Space {
    Atomic,
    NonAtomic,
}

fn check(prog: &Program) -> Result<(), LangError> {
    // first use of each name, per namespace
    let mut seen: BTreeMap<String, (Space, Span)> = BTreeMap::new();
    let mut handles = BTreeSet::new();
    let mut joins = Vec::new();
    let mut err = None;
    let mut note = |name: &str, space: Space, pos: Span, err: &mut Option<LangError>| {
        match seen.get(name) {
            Some((prev, first)) if *prev != space => {
                if err.is_none() {
                    let (used, declared) = match space {
                        Space::Atomic => ("atomic", "non-atomic"),
                        Space::NonAtomic => ("non-atomic", "atomic"),
                    };
                    *err = Some(LangError::Semantic {
                        pos,
                        msg: format!("`{name}` used as {used} location but is {declared} (first use at {first})"),
                    });
                }
            }
            Some(_) => {}
            None => {
                seen.insert(name.to_string(), (space, pos));
            }
        }
    };
    walk(&prog.stmts, &mut |s| {
        let pos = s.span;
        let mut na = Vec::new();
        match &s.kind {
            StmtKind::If { cond, .. } => na.push(cond.clone()),
            StmtKind::Assign { dst, expr } => {
                na.push(dst.clone());
                expr.vars(&mut na);
            }
            StmtKind::Fork { handle, .. } => {
                handles.insert(handle.clone());
                na.push(handle.clone());
            }
            StmtKind::Join { handle } => {
                joins.push((handle.clone(), pos));
                na.push(handle.clone());
            }
            StmtKind::Load { dst, loc, .. } => {
                na.push(dst.clone());
                note(loc, Space::Atomic, pos, &mut err);
            }
            StmtKind::Store { src, loc, .. } => {
                na.push(src.clone());
                note(loc, Space::Atomic, pos, &mut err);
            }
            StmtKind::Rmw { dst, loc, functor, .. } => {
                na.extend(dst.iter().cloned());
                functor.operand().vars(&mut na);
                note(loc, Space::Atomic, pos, &mut err);
            }
            StmtKind::Assert { expr } => expr.vars(&mut na),
            StmtKind::Fence { .. } | StmtKind::Empty => {}
        }
        for n in na {
            note(&n, Space::NonAtomic, pos, &mut err);
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    for (handle, pos) in joins {
        if !handles.contains(&handle) {
            return Err(LangError::Semantic {
                pos,
                msg: format!("Join on `{handle}`, which no Fork assigns"),
            });
        }
    }
    for (na, a) in &prog.aliases {
        if matches!(seen.get(na), Some((Space::Atomic, _))) {
            return Err(LangError::Semantic {
                pos: Span::default(),
                msg: format!("alias source `{na}` is an atomic location"),
            });
        }
        if matches!(seen.get(a), Some((Space::NonAtomic, _))) {
            return Err(LangError::Semantic {
                pos: Span::default(),
                msg: format!("alias target `{a}` is a non-atomic location"),
            });
        }
    }
    if let Some(obs) = &prog.observe {
        for name in obs {
            if matches!(seen.get(name), Some((Space::Atomic, _))) {
                return Err(LangError::Semantic {
                    pos: Span::default(),
                    msg: format!("observed name `{name}` is an atomic location"),
                });
            }
        }
    }
    Ok(())
}
