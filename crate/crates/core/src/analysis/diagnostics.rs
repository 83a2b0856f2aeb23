//! Findings reported by `check`: Esope construct census and warnings that
//! do not stop the migration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::frontend::ast::{EsopeKind, NodeKind, ProgramUnitAst};
use crate::frontend::expr::{ExprToken, LiteralKind, Token};
use crate::frontend::span::SourceSpan;
use crate::model::census::collect_decls;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub span: SourceSpan,
    pub message: String,
}

/// Counts of each Esope statement form plus include directives.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EsopeCensus {
    pub counts: BTreeMap<&'static str, usize>,
}

impl EsopeCensus {
    pub fn get(&self, key: &str) -> usize {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn add(&mut self, other: &EsopeCensus) {
        for (k, v) in &other.counts {
            *self.counts.entry(k).or_default() += v;
        }
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        for k in CENSUS_KEYS {
            let _ = writeln!(out, "  {k:<10} {}", self.get(k));
        }
        out
    }
}

pub const CENSUS_KEYS: &[&str] = &[
    "segment", "pointeur", "segini", "segcop", "segadj", "segsup", "segprt", "segact", "segmov", "segdes",
    "dotted", "slashdim", "include",
];

fn count_tokens(toks: &[Token], c: &mut EsopeCensus) {
    for t in toks {
        match &t.tok {
            ExprToken::Dotted(d) => {
                *c.counts.entry("dotted").or_default() += 1;
                for s in d.subscripts.iter().flatten() {
                    count_tokens(&s.0, c);
                }
            }
            ExprToken::SlashDim(_) => *c.counts.entry("slashdim").or_default() += 1,
            _ => {}
        }
    }
}

fn kind_tokens<'a>(kind: &'a NodeKind, out: &mut Vec<&'a [Token]>) {
    match kind {
        NodeKind::Assignment(a) => {
            out.push(&a.lhs.0);
            out.push(&a.rhs.0);
        }
        NodeKind::Call(c) => out.extend(c.args.iter().map(|a| a.0.as_slice())),
        NodeKind::Opaque(o) => out.push(&o.tokens.0),
        NodeKind::Declaration(d) => {
            for e in &d.entities {
                out.extend(e.dims.iter().map(|x| x.0.as_slice()));
            }
        }
        NodeKind::LogicalIf { cond, then } => {
            out.push(&cond.0);
            kind_tokens(then, out);
        }
        _ => {}
    }
}

pub fn unit_census(unit: &ProgramUnitAst) -> EsopeCensus {
    let mut c = EsopeCensus::default();
    for node in unit.all_nodes() {
        match &node.kind {
            NodeKind::Segment(_) => *c.counts.entry("segment").or_default() += 1,
            NodeKind::Include(_) | NodeKind::IncludeBegin { .. } => *c.counts.entry("include").or_default() += 1,
            _ => {}
        }
        for s in node.kind.esope_statements() {
            let key = match s.kind {
                EsopeKind::PointerDecl => "pointeur",
                EsopeKind::SegmentDef => "segment",
                other => other.name(),
            };
            *c.counts.entry(key).or_default() += 1;
        }
        let mut toks = Vec::new();
        kind_tokens(&node.kind, &mut toks);
        for t in toks {
            count_tokens(t, &mut c);
        }
    }
    c
}

fn is_negative_literal(toks: &[Token]) -> bool {
    matches!(toks, [m, l] if m.tok.is_op("-") && matches!(&l.tok, ExprToken::Literal(x) if x.kind == LiteralKind::Int))
}

const RELATIONAL: &[&str] = &[".eq.", ".ne.", ".lt.", ".le.", ".gt.", ".ge.", "==", "/=", "<", "<=", ">", ">="];

fn negative_comparisons(toks: &[Token], pointers: &dyn Fn(&str) -> bool) -> Vec<String> {
    let mut out = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        let is_rel = matches!(&t.tok, ExprToken::Op(o) if RELATIONAL.contains(&o.as_str()));
        if !is_rel || i == 0 {
            continue;
        }
        let left = toks[i - 1].tok.ident().filter(|n| pointers(n));
        let right_neg = toks.len() >= i + 3 && is_negative_literal(&toks[i + 1..i + 3]);
        if let (Some(p), true) = (left, right_neg) {
            out.push(p.to_string());
        }
        let right = toks.get(i + 1).and_then(|t| t.tok.ident()).filter(|n| pointers(n));
        let left_neg = i >= 2 && is_negative_literal(&toks[i - 2..i]);
        if let (Some(p), true) = (right, left_neg) {
            out.push(p.to_string());
        }
    }
    out
}

/// Pointer variables assigned or compared with a negative integer literal.
/// Such code keeps its Esope meaning only when pointers are integers.
pub fn negative_pointer_warnings(unit: &ProgramUnitAst) -> Vec<Warning> {
    let decls = collect_decls(unit);
    let is_pointer = |n: &str| decls.pointers.contains_key(n);
    let mut out = Vec::new();
    for node in unit.all_nodes() {
        let mut kind = &node.kind;
        let mut toks: Vec<&[Token]> = Vec::new();
        if let NodeKind::LogicalIf { cond, then } = kind {
            toks.push(&cond.0);
            kind = then;
        }
        if let NodeKind::Assignment(a) = kind {
            if let [lhs] = a.lhs.0.as_slice() {
                if lhs.tok.ident().map(is_pointer).unwrap_or(false) && is_negative_literal(&a.rhs.0) {
                    out.push(Warning {
                        span: node.span,
                        message: format!(
                            "pointer `{}` is assigned a negative value; left unchanged",
                            lhs.tok.ident().unwrap_or_default()
                        ),
                    });
                }
            }
            toks.push(&a.rhs.0);
        }
        if let NodeKind::Opaque(o) = kind {
            toks.push(&o.tokens.0);
        }
        for t in toks {
            for p in negative_comparisons(t, &is_pointer) {
                out.push(Warning {
                    span: node.span,
                    message: format!("pointer `{p}` is compared with a negative value; left unchanged"),
                });
            }
        }
    }
    out
}
