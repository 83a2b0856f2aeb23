//! Expression token streams with the two Esope notations folded into
//! structured tokens: dotted field access (`p.f(i)`) and slash dimension
//! queries (`a(/k)`).

use std::fmt;

use crate::error::{Error, Result};
use crate::frontend::lexer::{LexKind, Lexeme};
use crate::frontend::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LiteralKind {
    Int,
    Real,
    Str,
    Logical,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub kind: LiteralKind,
    pub text: String,
}

/// `pointer.field` or `pointer.field(subscripts)`. An absent pointer stands
/// for the segment's default pointer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DottedAccess {
    pub pointer: Option<String>,
    pub field: String,
    pub subscripts: Option<Vec<ExprTokenStream>>,
}

/// `array(/dim)`: extent of `array` along dimension `dim` (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlashDim {
    pub array: Box<ExprToken>,
    pub dim: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExprToken {
    Ident(String),
    Dotted(DottedAccess),
    SlashDim(SlashDim),
    Literal(Literal),
    Op(String),
    Punct(char),
}

impl ExprToken {
    pub fn ident(&self) -> Option<&str> {
        match self {
            ExprToken::Ident(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_punct(&self, c: char) -> bool {
        matches!(self, ExprToken::Punct(p) if *p == c)
    }

    pub fn is_op(&self, op: &str) -> bool {
        matches!(self, ExprToken::Op(o) if o == op)
    }

    pub fn is_ident(&self, name: &str) -> bool {
        matches!(self, ExprToken::Ident(s) if s == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub tok: ExprToken,
    pub space_before: bool,
}

impl Token {
    pub fn new(tok: ExprToken, space_before: bool) -> Self {
        Token { tok, space_before }
    }
    pub fn op(op: &str, space_before: bool) -> Self {
        Token::new(ExprToken::Op(op.to_string()), space_before)
    }
    pub fn punct(c: char) -> Self {
        Token::new(ExprToken::Punct(c), false)
    }
    pub fn ident(name: &str, space_before: bool) -> Self {
        Token::new(ExprToken::Ident(name.to_string()), space_before)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ExprTokenStream(pub Vec<Token>);

impl ExprTokenStream {
    pub fn new(tokens: Vec<Token>) -> Self {
        ExprTokenStream(tokens)
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.0.iter()
    }
    pub fn first(&self) -> Option<&ExprToken> {
        self.0.first().map(|t| &t.tok)
    }

    /// Text form, honouring the recorded inter-token spacing.
    pub fn render(&self) -> String {
        let mut out = String::new();
        render_into(&mut out, &self.0, true);
        out
    }

    /// Flat token texts, ignoring spacing. Structured tokens are expanded.
    pub fn flat_texts(&self) -> Vec<String> {
        let mut v = Vec::new();
        for t in &self.0 {
            flatten_token(&t.tok, &mut v);
        }
        v
    }

    /// Splits at top-level commas.
    pub fn split_commas(&self) -> Vec<ExprTokenStream> {
        split_top_level(&self.0, |t| t.is_punct(','))
    }

    pub fn slice(&self, from: usize, to: usize) -> ExprTokenStream {
        ExprTokenStream(self.0[from..to].to_vec())
    }

    /// Index of the matching `)` for the `(` at `open`.
    pub fn matching_paren(&self, open: usize) -> Option<usize> {
        matching_paren(&self.0, open)
    }
}

pub fn matching_paren(tokens: &[Token], open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        if t.tok.is_punct('(') {
            depth += 1;
        } else if t.tok.is_punct(')') {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

pub fn split_top_level(tokens: &[Token], is_sep: impl Fn(&ExprToken) -> bool) -> Vec<ExprTokenStream> {
    let mut parts = Vec::new();
    let mut cur = Vec::new();
    let mut depth = 0i32;
    for t in tokens {
        if t.tok.is_punct('(') {
            depth += 1;
        } else if t.tok.is_punct(')') {
            depth -= 1;
        }
        if depth == 0 && is_sep(&t.tok) {
            parts.push(ExprTokenStream(std::mem::take(&mut cur)));
        } else {
            cur.push(t.clone());
        }
    }
    if !cur.is_empty() || !parts.is_empty() {
        parts.push(ExprTokenStream(cur));
    }
    parts
}

fn flatten_token(tok: &ExprToken, out: &mut Vec<String>) {
    match tok {
        ExprToken::Ident(s) | ExprToken::Op(s) => out.push(s.clone()),
        ExprToken::Literal(l) => out.push(l.text.clone()),
        ExprToken::Punct(c) => out.push(c.to_string()),
        ExprToken::Dotted(d) => {
            if let Some(p) = &d.pointer {
                out.push(p.clone());
                out.push(".".into());
            }
            out.push(d.field.clone());
            if let Some(subs) = &d.subscripts {
                out.push("(".into());
                for (i, s) in subs.iter().enumerate() {
                    if i > 0 {
                        out.push(",".into());
                    }
                    out.extend(s.flat_texts());
                }
                out.push(")".into());
            }
        }
        ExprToken::SlashDim(sd) => {
            flatten_token(&sd.array, out);
            out.push("(".into());
            out.push("/".into());
            out.push(sd.dim.to_string());
            out.push(")".into());
        }
    }
}

fn render_into(out: &mut String, tokens: &[Token], at_start: bool) {
    for (i, t) in tokens.iter().enumerate() {
        if t.space_before && !(at_start && i == 0) {
            out.push(' ');
        }
        out.push_str(&t.tok.to_string());
    }
}

impl fmt::Display for ExprToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprToken::Ident(s) | ExprToken::Op(s) => f.write_str(s),
            ExprToken::Literal(l) => f.write_str(&l.text),
            ExprToken::Punct(c) => write!(f, "{c}"),
            ExprToken::Dotted(d) => {
                if let Some(p) = &d.pointer {
                    write!(f, "{p}.")?;
                }
                f.write_str(&d.field)?;
                if let Some(subs) = &d.subscripts {
                    f.write_str("(")?;
                    for (i, s) in subs.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        let mut buf = String::new();
                        render_into(&mut buf, &s.0, i == 0);
                        f.write_str(&buf)?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
            ExprToken::SlashDim(sd) => write!(f, "{}(/{})", sd.array, sd.dim),
        }
    }
}

impl fmt::Display for ExprTokenStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn convert(lx: &Lexeme) -> Result<ExprToken, String> {
    Ok(match lx.kind {
        LexKind::Ident => ExprToken::Ident(lx.text.clone()),
        LexKind::Int => ExprToken::Literal(Literal {
            kind: LiteralKind::Int,
            text: lx.text.clone(),
        }),
        LexKind::Real => ExprToken::Literal(Literal {
            kind: LiteralKind::Real,
            text: lx.text.clone(),
        }),
        LexKind::Str => ExprToken::Literal(Literal {
            kind: LiteralKind::Str,
            text: lx.text.clone(),
        }),
        LexKind::Logical => ExprToken::Literal(Literal {
            kind: LiteralKind::Logical,
            text: lx.text.clone(),
        }),
        LexKind::Op => ExprToken::Op(lx.text.clone()),
        LexKind::LParen => ExprToken::Punct('('),
        LexKind::RParen => ExprToken::Punct(')'),
        LexKind::Comma => ExprToken::Punct(','),
        LexKind::Dot => return Err("unexpected `.`".into()),
    })
}

fn lex_matching_paren(lex: &[Lexeme], open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, l) in lex.iter().enumerate().skip(open) {
        match l.kind {
            LexKind::LParen => depth += 1,
            LexKind::RParen => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Parses `(/k)` starting at the `(` at `open`; returns (dim, index after `)`).
fn slash_dim_at(lex: &[Lexeme], open: usize) -> Result<Option<(u32, usize)>, String> {
    if !(lex.get(open).map(|l| l.kind == LexKind::LParen).unwrap_or(false)
        && lex.get(open + 1).map(|l| l.is_op("/")).unwrap_or(false))
    {
        return Ok(None);
    }
    let dim = lex.get(open + 2);
    let close = lex.get(open + 3);
    match (dim, close) {
        (Some(d), Some(c)) if d.kind == LexKind::Int && c.kind == LexKind::RParen => {
            let k: u32 = d.text.parse().map_err(|_| "dimension index out of range".to_string())?;
            if k == 0 {
                return Err("slash dimension index must be at least 1".into());
            }
            Ok(Some((k, open + 4)))
        }
        _ => Err("`(/` must be followed by an integer literal dimension index and `)`".into()),
    }
}

fn scan_inner(lex: &[Lexeme]) -> Result<ExprTokenStream, String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < lex.len() {
        let lx = &lex[i];
        let space = lx.space_before;
        if lx.kind == LexKind::Ident {
            let dotted = lex.get(i + 1).map(|l| l.kind == LexKind::Dot).unwrap_or(false)
                && lex.get(i + 2).map(|l| l.kind == LexKind::Ident).unwrap_or(false);
            if dotted {
                let mut access = DottedAccess {
                    pointer: Some(lx.text.clone()),
                    field: lex[i + 2].text.clone(),
                    subscripts: None,
                };
                i += 3;
                if let Some((dim, next)) = slash_dim_at(lex, i)? {
                    out.push(Token::new(
                        ExprToken::SlashDim(SlashDim {
                            array: Box::new(ExprToken::Dotted(access)),
                            dim,
                        }),
                        space,
                    ));
                    i = next;
                    continue;
                }
                if lex.get(i).map(|l| l.kind == LexKind::LParen).unwrap_or(false) {
                    let close = lex_matching_paren(lex, i).ok_or("unbalanced parentheses")?;
                    let inner = scan_inner(&lex[i + 1..close])?;
                    access.subscripts = Some(inner.split_commas());
                    i = close + 1;
                }
                if lex.get(i).map(|l| l.kind == LexKind::Dot).unwrap_or(false) {
                    return Err("chained field access is not supported".into());
                }
                out.push(Token::new(ExprToken::Dotted(access), space));
                continue;
            }
            if let Some((dim, next)) = slash_dim_at(lex, i + 1)? {
                out.push(Token::new(
                    ExprToken::SlashDim(SlashDim {
                        array: Box::new(ExprToken::Ident(lx.text.clone())),
                        dim,
                    }),
                    space,
                ));
                i = next;
                continue;
            }
        }
        out.push(Token::new(convert(lx)?, space));
        i += 1;
    }
    Ok(ExprTokenStream(out))
}

/// Folds dotted accesses and slash dimensions of one statement's lexemes.
pub fn scan_expression(lex: &[Lexeme], span: SourceSpan) -> Result<ExprTokenStream> {
    scan_inner(lex).map_err(|m| Error::parse(span, m))
}

/// Tokenizes and scans a text fragment in one step.
pub fn scan_text(text: &str, span: SourceSpan) -> Result<ExprTokenStream> {
    let lex = crate::frontend::lexer::tokenize(text, span)?;
    scan_expression(&lex, span)
}
