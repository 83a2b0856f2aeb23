//! Symbol census of one program unit: what it declares, and every symbol
//! access in textual order.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Phase, Result};
use crate::frontend::ast::*;
use crate::frontend::expr::{matching_paren, split_top_level, ExprToken, ExprTokenStream, Token};
use crate::frontend::span::SourceSpan;
use crate::model::segment::SegmentDefinition;

/// Intrinsic procedures recognised in expressions.
pub const INTRINSICS: &[&str] = &[
    "abs", "achar", "acos", "adjustl", "adjustr", "aimag", "aint", "allocated", "alog", "alog10", "amax0", "amax1",
    "amin0", "amin1", "amod", "anint", "asin", "associated", "atan", "atan2", "btest", "cabs", "ccos", "cexp",
    "char", "clog", "cmplx", "conjg", "cos", "cosh", "csin", "csqrt", "dabs", "dacos", "dasin", "datan", "datan2",
    "dble", "dcos", "dcosh", "ddim", "dexp", "dim", "dint", "dlog", "dlog10", "dmax1", "dmin1", "dmod", "dnint",
    "dprod", "dsign", "dsin", "dsinh", "dsqrt", "dtan", "dtanh", "epsilon", "exp", "float", "huge", "iabs",
    "iachar", "iand", "ichar", "idim", "idint", "idnint", "ieor", "ifix", "index", "int", "ior", "ishft", "isign",
    "kind", "len", "len_trim", "lge", "lgt", "lle", "llt", "log", "log10", "max", "max0", "max1", "maxval", "merge",
    "min", "min0", "min1", "minval", "mod", "nint", "null", "present", "product", "real", "repeat", "sign", "sin",
    "sinh", "size", "sngl", "sqrt", "sum", "tan", "tanh", "tiny", "trim",
];

pub fn is_intrinsic(name: &str) -> bool {
    INTRINSICS.binary_search(&name).is_ok()
}

/// A symbol access, in textual order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SymEvent {
    Var { name: String, write: bool },
    /// Variable passed by reference as argument `pos` (0-based) of `callee`.
    Forward { name: String, callee: String, pos: usize },
    /// Function reference in an expression.
    Invoke { name: String, nargs: usize },
    Call { name: String, nargs: usize },
    /// Bare field accessed through the default pointer of `segment`.
    Field { field: String, segment: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointerInfo {
    pub segment: String,
    pub dims: Vec<ExprTokenStream>,
}

/// Declarations found in one unit (first pass).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Decls {
    /// Explicit type declarations.
    pub types: BTreeMap<String, TypeSpec>,
    /// Names known to be arrays, with their bounds.
    pub arrays: BTreeMap<String, Vec<ExprTokenStream>>,
    pub pointers: BTreeMap<String, PointerInfo>,
    pub externals: BTreeSet<String>,
    pub intrinsics: BTreeSet<String>,
    pub constants: BTreeSet<String>,
    pub commons: BTreeSet<String>,
    pub has_implicit: bool,
    pub implicit_rules: Vec<ImplicitRule>,
    pub implicit_none: bool,
}

fn ident_with_dims(part: &ExprTokenStream) -> Option<(String, Vec<ExprTokenStream>)> {
    let toks = &part.0;
    let name = toks.first()?.tok.ident()?.to_string();
    if toks.len() == 1 {
        return Some((name, Vec::new()));
    }
    if toks.get(1)?.tok.is_punct('(') && matching_paren(toks, 1) == Some(toks.len() - 1) {
        return Some((name, split_top_level(&toks[2..toks.len() - 1], |t| t.is_punct(','))));
    }
    None
}

fn visit_kinds<'a>(kind: &'a NodeKind, f: &mut dyn FnMut(&'a NodeKind)) {
    f(kind);
    if let NodeKind::LogicalIf { then, .. } = kind {
        visit_kinds(then, f);
    }
}

pub fn collect_decls(unit: &ProgramUnitAst) -> Decls {
    let mut d = Decls::default();
    for node in &unit.body {
        visit_kinds(&node.kind, &mut |k| match k {
            NodeKind::Declaration(decl) => {
                for e in &decl.entities {
                    d.types.insert(e.name.clone(), decl.entity_type(e));
                    if !e.dims.is_empty() {
                        d.arrays.insert(e.name.clone(), e.dims.clone());
                    }
                }
            }
            NodeKind::Esope(stmts) => {
                for s in stmts.iter().filter(|s| s.kind == EsopeKind::PointerDecl) {
                    d.pointers.insert(
                        s.operands[0].clone(),
                        PointerInfo {
                            segment: s.segment.clone().unwrap_or_default(),
                            dims: s.dims.clone(),
                        },
                    );
                    if !s.dims.is_empty() {
                        d.arrays.insert(s.operands[0].clone(), s.dims.clone());
                    }
                }
            }
            NodeKind::External(names) => d.externals.extend(names.iter().cloned()),
            NodeKind::Implicit(ImplicitStmt::None) => {
                d.has_implicit = true;
                d.implicit_none = true;
            }
            NodeKind::Implicit(ImplicitStmt::Rules(r)) => {
                d.has_implicit = true;
                d.implicit_rules.extend(r.iter().cloned());
            }
            NodeKind::Opaque(op) => match op.keyword {
                Some(StmtKeyword::Dimension) => {
                    for part in split_top_level(&op.tokens.0[1..], |t| t.is_punct(',')) {
                        if let Some((n, dims)) = ident_with_dims(&part) {
                            d.arrays.insert(n, dims);
                        }
                    }
                }
                Some(StmtKeyword::Common) => {
                    for (n, dims) in common_entities(&op.tokens) {
                        d.commons.insert(n.clone());
                        if !dims.is_empty() {
                            d.arrays.insert(n, dims);
                        }
                    }
                }
                Some(StmtKeyword::Parameter) => {
                    if let Some(inner) = paren_after(&op.tokens.0, 1) {
                        for part in split_top_level(inner, |t| t.is_punct(',')) {
                            if let Some(n) = part.first().and_then(|t| t.ident()) {
                                d.constants.insert(n.to_string());
                            }
                        }
                    }
                }
                Some(StmtKeyword::Intrinsic) => {
                    for t in &op.tokens.0[1..] {
                        if let Some(n) = t.tok.ident() {
                            d.intrinsics.insert(n.to_string());
                        }
                    }
                }
                _ => {}
            },
            _ => {}
        });
    }
    d
}

/// Entities of a COMMON statement; block names between slashes are skipped.
pub fn common_entities(tokens: &ExprTokenStream) -> Vec<(String, Vec<ExprTokenStream>)> {
    let toks = &tokens.0[1..];
    let mut out = Vec::new();
    let mut i = 0;
    let mut cur: Vec<Token> = Vec::new();
    let mut depth = 0;
    let flush = |cur: &mut Vec<Token>, out: &mut Vec<(String, Vec<ExprTokenStream>)>| {
        if !cur.is_empty() {
            if let Some(e) = ident_with_dims(&ExprTokenStream(std::mem::take(cur))) {
                out.push(e);
            }
        }
    };
    while i < toks.len() {
        let t = &toks[i];
        if depth == 0 && (t.tok.is_op("/") || t.tok.is_op("//")) {
            flush(&mut cur, &mut out);
            if t.tok.is_op("/") {
                // skip the block name and its closing slash
                while i + 1 < toks.len() && !toks[i + 1].tok.is_op("/") {
                    i += 1;
                }
                i += 1;
            }
            i += 1;
            continue;
        }
        if t.tok.is_punct('(') {
            depth += 1;
        } else if t.tok.is_punct(')') {
            depth -= 1;
        }
        if depth == 0 && t.tok.is_punct(',') {
            flush(&mut cur, &mut out);
        } else {
            cur.push(t.clone());
        }
        i += 1;
    }
    flush(&mut cur, &mut out);
    out
}

fn paren_after(toks: &[Token], at: usize) -> Option<&[Token]> {
    if !toks.get(at)?.tok.is_punct('(') {
        return None;
    }
    let close = matching_paren(toks, at)?;
    Some(&toks[at + 1..close])
}

/// Returns the unique segment among `scope` owning `field`.
pub fn segment_for_field<'a>(
    segments: &'a BTreeMap<String, SegmentDefinition>,
    field: &str,
    scope: &[String],
) -> Result<Option<&'a SegmentDefinition>> {
    let owners: Vec<&SegmentDefinition> = scope
        .iter()
        .filter_map(|s| segments.get(s))
        .filter(|s| s.field(field).is_some())
        .collect();
    match owners.as_slice() {
        [] => Ok(None),
        [one] => Ok(Some(one)),
        [a, b, ..] => Err(Error::new(
            Phase::Model,
            format!("field `{field}` is ambiguous: owned by segments `{}` and `{}`", a.name, b.name),
        )),
    }
}

/// Everything needed to classify identifiers inside one unit.
pub struct SymbolContext<'a> {
    pub decls: &'a Decls,
    pub segments: &'a BTreeMap<String, SegmentDefinition>,
    pub scope: &'a [String],
    pub params: &'a [String],
    pub unit_name: &'a str,
}

impl SymbolContext<'_> {
    /// True when `name(` denotes an element or substring rather than a call.
    fn is_subscriptable(&self, name: &str) -> bool {
        if self.decls.arrays.contains_key(name) {
            return true;
        }
        matches!(self.decls.types.get(name), Some(t) if t.base == BaseType::Character)
    }

    fn is_local(&self, name: &str) -> bool {
        self.params.iter().any(|p| p == name)
            || self.decls.types.contains_key(name)
            || self.decls.pointers.contains_key(name)
            || self.decls.arrays.contains_key(name)
            || self.decls.constants.contains(name)
            || self.decls.externals.contains(name)
            || self.decls.commons.contains(name)
            || self.scope.iter().any(|s| s == name)
            || name == self.unit_name
    }

    /// Segment whose default pointer a bare `name` goes through, if any.
    pub fn bare_field_owner(&self, name: &str) -> Result<Option<&SegmentDefinition>> {
        if self.is_local(name) {
            return Ok(None);
        }
        segment_for_field(self.segments, name, self.scope)
    }

    /// Segment of a pointer variable, including default pointers.
    pub fn pointer_segment(&self, name: &str) -> Option<&str> {
        if let Some(p) = self.decls.pointers.get(name) {
            return Some(&p.segment);
        }
        if self.scope.iter().any(|s| s == name) && !self.decls.types.contains_key(name) {
            return self.scope.iter().find(|s| *s == name).map(String::as_str);
        }
        None
    }

    fn is_routine(&self, name: &str) -> bool {
        self.decls.externals.contains(name) || self.decls.intrinsics.contains(name)
    }
}

struct Walker<'c, 'a> {
    ctx: &'c SymbolContext<'a>,
    out: Vec<SymEvent>,
    span: SourceSpan,
}

impl Walker<'_, '_> {
    fn var(&mut self, name: &str, write: bool) {
        self.out.push(SymEvent::Var {
            name: name.to_string(),
            write,
        });
    }

    fn err(&self, e: Error) -> Error {
        e.with_span(self.span)
    }

    /// Reads every symbol in an expression.
    fn read(&mut self, toks: &[Token]) -> Result<()> {
        let mut i = 0;
        while i < toks.len() {
            match &toks[i].tok {
                ExprToken::Ident(name) => {
                    let paren = toks.get(i + 1).map(|t| t.tok.is_punct('(')).unwrap_or(false);
                    if let Some(seg) = self.ctx.bare_field_owner(name).map_err(|e| self.err(e))? {
                        let seg = seg.name.clone();
                        self.out.push(SymEvent::Field {
                            field: name.clone(),
                            segment: seg.clone(),
                        });
                        self.var(&seg, false);
                    } else if paren && !self.ctx.is_subscriptable(name) {
                        let close = matching_paren(toks, i + 1).ok_or_else(|| {
                            self.err(Error::new(Phase::Model, "unbalanced parentheses"))
                        })?;
                        self.invoke(name, &toks[i + 2..close])?;
                        i = close + 1;
                        continue;
                    } else if !self.ctx.is_routine(name) {
                        self.var(name, false);
                    }
                }
                ExprToken::Dotted(d) => self.dotted(d)?,
                ExprToken::SlashDim(sd) => self.read(&[Token::new((*sd.array).clone(), false)])?,
                _ => {}
            }
            i += 1;
        }
        Ok(())
    }

    fn dotted(&mut self, d: &crate::frontend::expr::DottedAccess) -> Result<()> {
        if let Some(p) = &d.pointer {
            self.var(p, false);
        }
        if let Some(subs) = &d.subscripts {
            for s in subs {
                self.read(&s.0)?;
            }
        }
        Ok(())
    }

    fn invoke(&mut self, name: &str, inner: &[Token]) -> Result<()> {
        let args = if inner.is_empty() {
            Vec::new()
        } else {
            split_top_level(inner, |t| t.is_punct(','))
        };
        self.out.push(SymEvent::Invoke {
            name: name.to_string(),
            nargs: args.len(),
        });
        let intrinsic = is_intrinsic(name) || self.ctx.decls.intrinsics.contains(name);
        self.args(name, &args, intrinsic)
    }

    fn args(&mut self, callee: &str, args: &[ExprTokenStream], read_only: bool) -> Result<()> {
        for (pos, a) in args.iter().enumerate() {
            if !read_only {
                if let Some((name, subs)) = self.passed_variable(a) {
                    for s in &subs {
                        self.read(&s.0)?;
                    }
                    self.out.push(SymEvent::Forward {
                        name,
                        callee: callee.to_string(),
                        pos,
                    });
                    continue;
                }
            }
            self.read(&a.0)?;
        }
        Ok(())
    }

    /// A bare variable or array element passed by reference.
    fn passed_variable(&self, a: &ExprTokenStream) -> Option<(String, Vec<ExprTokenStream>)> {
        let (name, subs) = ident_with_dims(a)?;
        if !subs.is_empty() && !self.ctx.is_subscriptable(&name) {
            return None;
        }
        if self.ctx.is_routine(&name) || self.ctx.bare_field_owner(&name).ok().flatten().is_some() {
            return None;
        }
        Some((name, subs))
    }

    /// Writes the variable designated by `toks`; subscripts are read first.
    fn write(&mut self, toks: &[Token]) -> Result<()> {
        let Some(first) = toks.first() else { return Ok(()) };
        match &first.tok {
            ExprToken::Ident(name) => {
                let rest = &toks[1..];
                // subscripts and substring ranges
                self.read(rest)?;
                if let Some(seg) = self.ctx.bare_field_owner(name).map_err(|e| self.err(e))? {
                    let seg = seg.name.clone();
                    self.out.push(SymEvent::Field {
                        field: name.clone(),
                        segment: seg.clone(),
                    });
                    self.var(&seg, false);
                } else {
                    self.var(name, true);
                }
                Ok(())
            }
            ExprToken::Dotted(d) => {
                self.dotted(d)?;
                self.read(&toks[1..])
            }
            _ => self.read(toks),
        }
    }

    /// Items of a READ/WRITE/PRINT list, including implied-do groups.
    fn io_items(&mut self, toks: &[Token], write: bool) -> Result<()> {
        for item in split_top_level(toks, |t| t.is_punct(',')) {
            let it = &item.0;
            let is_group = it.first().map(|t| t.tok.is_punct('(')).unwrap_or(false)
                && matching_paren(it, 0) == Some(it.len() - 1);
            if is_group {
                let inner = &it[1..it.len() - 1];
                let parts = split_top_level(inner, |t| t.is_punct(','));
                if let Some(eq_part) = parts.iter().position(|p| p.0.get(1).map(|t| t.tok.is_op("=")).unwrap_or(false)) {
                    // implied do: (items, var = e1, e2[, e3])
                    let bounds: Vec<Token> = parts[eq_part].0[2..].to_vec();
                    self.read(&bounds)?;
                    for p in &parts[eq_part + 1..] {
                        self.read(&p.0)?;
                    }
                    if let Some(v) = parts[eq_part].0[0].tok.ident() {
                        self.var(v, true);
                    }
                    let mut items: Vec<Token> = Vec::new();
                    for (k, p) in parts[..eq_part].iter().enumerate() {
                        if k > 0 {
                            items.push(Token::punct(','));
                        }
                        items.extend(p.0.iter().cloned());
                    }
                    self.io_items(&items, write)?;
                    continue;
                }
                self.io_items(inner, write)?;
                continue;
            }
            if write {
                self.write(it)?;
            } else {
                self.read(it)?;
            }
        }
        Ok(())
    }

    /// Control list `(unit, fmt, spec=value, ...)`; `outputs` lists the
    /// specifiers whose value is assigned by the statement.
    fn control_list(&mut self, inner: &[Token], outputs: &dyn Fn(&str) -> bool) -> Result<()> {
        for part in split_top_level(inner, |t| t.is_punct(',')) {
            let p = &part.0;
            let spec = match (p.first().map(|t| &t.tok), p.get(1).map(|t| &t.tok)) {
                (Some(ExprToken::Ident(s)), Some(eq)) if eq.is_op("=") => Some(s.clone()),
                _ => None,
            };
            match spec {
                Some(s) if outputs(&s) => self.write(&p[2..])?,
                Some(_) => self.read(&p[2..])?,
                None => {
                    if p.len() == 1 && p[0].tok.is_op("*") {
                        continue;
                    }
                    self.read(p)?;
                }
            }
        }
        Ok(())
    }

    fn io_statement(&mut self, kw: StmtKeyword, toks: &[Token]) -> Result<()> {
        let rest = &toks[1..];
        let status_out = |s: &str| matches!(s, "iostat" | "iomsg" | "size");
        if let Some(inner) = paren_after(rest, 0) {
            let close = inner.len() + 1;
            self.control_list(inner, &status_out)?;
            return self.io_items(&rest[close + 1..], kw == StmtKeyword::Read);
        }
        // READ fmt, list / PRINT fmt, list
        let parts = split_top_level(rest, |t| t.is_punct(','));
        let Some((fmt, items)) = parts.split_first() else { return Ok(()) };
        if !(fmt.len() == 1 && fmt.0[0].tok.is_op("*")) {
            self.read(&fmt.0)?;
        }
        for it in items {
            self.io_items(&it.0, kw == StmtKeyword::Read)?;
        }
        Ok(())
    }

    fn opaque(&mut self, op: &OpaqueStatement) -> Result<()> {
        let toks = &op.tokens.0;
        let Some(kw) = op.keyword else {
            return self.read(toks);
        };
        match kw {
            StmtKeyword::IfThen => {
                if let Some(inner) = paren_after(toks, 1) {
                    self.read(inner)?;
                }
            }
            StmtKeyword::ElseIf => {
                if let Some(open) = toks.iter().position(|t| t.tok.is_punct('(')) {
                    if let Some(inner) = paren_after(toks, open) {
                        self.read(inner)?;
                    }
                }
            }
            StmtKeyword::Else | StmtKeyword::EndIf | StmtKeyword::EndDo | StmtKeyword::Continue | StmtKeyword::Entry => {}
            StmtKeyword::Goto => {
                let skip = if toks[0].tok.is_ident("go") { 2 } else { 1 };
                self.read(&toks[skip..])?;
            }
            StmtKeyword::Return | StmtKeyword::Stop | StmtKeyword::Pause => self.read(&toks[1..])?,
            StmtKeyword::Do => {
                let mut i = 1;
                if toks.get(i).map(|t| matches!(t.tok, ExprToken::Literal(_))).unwrap_or(false) {
                    i += 1;
                }
                if toks.get(i).map(|t| t.tok.is_punct(',')).unwrap_or(false) {
                    i += 1;
                }
                if toks.get(i + 1).map(|t| t.tok.is_op("=")).unwrap_or(false) {
                    self.read(&toks[i + 2..])?;
                    self.write(&toks[i..i + 1])?;
                }
            }
            StmtKeyword::DoWhile => {
                if let Some(open) = toks.iter().position(|t| t.tok.is_punct('(')) {
                    if let Some(inner) = paren_after(toks, open) {
                        self.read(inner)?;
                    }
                }
            }
            StmtKeyword::Read | StmtKeyword::Write | StmtKeyword::Print => self.io_statement(kw, toks)?,
            StmtKeyword::Open | StmtKeyword::Close | StmtKeyword::Rewind | StmtKeyword::Backspace | StmtKeyword::Endfile => {
                match paren_after(toks, 1) {
                    Some(inner) => self.control_list(inner, &|s| matches!(s, "iostat" | "iomsg"))?,
                    None => self.read(&toks[1..])?,
                }
            }
            StmtKeyword::Inquire => {
                if let Some(inner) = paren_after(toks, 1) {
                    self.control_list(inner, &|s| !matches!(s, "unit" | "file" | "iolength" | "err"))?;
                }
            }
            StmtKeyword::Data => {
                // names before each /values/ group are initialised
                let mut in_values = false;
                let mut target: Vec<Token> = Vec::new();
                for t in &toks[1..] {
                    if t.tok.is_op("/") {
                        if !in_values {
                            self.io_items(&target, true)?;
                            target.clear();
                        }
                        in_values = !in_values;
                    } else if !in_values {
                        if !(target.is_empty() && t.tok.is_punct(',')) {
                            target.push(t.clone());
                        }
                    }
                }
            }
            StmtKeyword::Parameter => {
                if let Some(inner) = paren_after(toks, 1) {
                    for part in split_top_level(inner, |t| t.is_punct(',')) {
                        if part.len() > 2 {
                            self.read(&part.0[2..])?;
                        }
                    }
                }
            }
            StmtKeyword::Dimension => {
                for part in split_top_level(&toks[1..], |t| t.is_punct(',')) {
                    if let Some((_, dims)) = ident_with_dims(&part) {
                        for d in dims {
                            self.read(&d.0)?;
                        }
                    }
                }
            }
            StmtKeyword::Common => {
                for (_, dims) in common_entities(&op.tokens) {
                    for d in dims {
                        self.read(&d.0)?;
                    }
                }
            }
            StmtKeyword::Assign => {
                if let Some(last) = toks.last() {
                    self.write(std::slice::from_ref(last))?;
                }
            }
            StmtKeyword::Equivalence | StmtKeyword::Save | StmtKeyword::Intrinsic => {}
        }
        Ok(())
    }

    fn pointer_segment_of(&self, p: &str) -> Result<&SegmentDefinition> {
        let seg = self.ctx.pointer_segment(p).ok_or_else(|| {
            Error::at(Phase::Model, self.span, format!("`{p}` is not a pointer to a known segment"))
        })?;
        self.ctx.segments.get(seg).ok_or_else(|| {
            Error::at(Phase::Model, self.span, format!("segment `{seg}` of pointer `{p}` is not visible here"))
        })
    }

    fn esope(&mut self, s: &EsopeStatement) -> Result<()> {
        match s.kind {
            EsopeKind::PointerDecl => {
                for d in &s.dims {
                    self.read(&d.0)?;
                }
            }
            EsopeKind::SegmentDef => {}
            EsopeKind::SegIni | EsopeKind::SegAdj => {
                let vars = self.pointer_segment_of(&s.operands[0])?.dimensioning_vars.clone();
                for v in &vars {
                    self.var(v, false);
                }
                self.var(&s.operands[0], s.kind == EsopeKind::SegIni);
            }
            EsopeKind::SegSup => {
                // the instance must exist before it is released
                self.pointer_segment_of(&s.operands[0])?;
                self.var(&s.operands[0], false);
                self.var(&s.operands[0], true);
            }
            EsopeKind::SegIniCopy => {
                self.pointer_segment_of(&s.operands[0])?;
                self.var(&s.operands[1], false);
                self.var(&s.operands[0], true);
            }
            EsopeKind::SegActMove | EsopeKind::SegAct | EsopeKind::SegDes | EsopeKind::SegPrt => {
                for p in &s.operands {
                    self.pointer_segment_of(p)?;
                }
                for p in s.operands.iter().rev() {
                    self.var(p, false);
                }
            }
        }
        Ok(())
    }

    fn node(&mut self, kind: &NodeKind) -> Result<()> {
        match kind {
            NodeKind::Declaration(decl) => {
                for e in &decl.entities {
                    for d in &e.dims {
                        self.read(&d.0)?;
                    }
                }
            }
            NodeKind::Esope(stmts) => {
                for s in stmts {
                    self.esope(s)?;
                }
            }
            NodeKind::Call(c) => {
                self.out.push(SymEvent::Call {
                    name: c.name.clone(),
                    nargs: c.args.len(),
                });
                self.args(&c.name, &c.args, false)?;
            }
            NodeKind::Assignment(a) => {
                self.read(&a.rhs.0)?;
                self.write(&a.lhs.0)?;
            }
            NodeKind::LogicalIf { cond, then } => {
                self.read(&cond.0)?;
                self.node(then)?;
            }
            NodeKind::Opaque(op) => self.opaque(op)?,
            _ => {}
        }
        Ok(())
    }
}

/// Symbol accesses of one unit in textual order.
pub fn unit_events(unit: &ProgramUnitAst, ctx: &SymbolContext) -> Result<Vec<SymEvent>> {
    let mut w = Walker {
        ctx,
        out: Vec::new(),
        span: unit.header_span.unwrap_or_else(|| SourceSpan::line(unit.file, 1, 1, 1)),
    };
    for node in &unit.body {
        w.span = node.span;
        w.node(&node.kind)?;
    }
    Ok(w.out)
}

/// Segments visible in a unit: those defined in its own file and those
/// brought in by includes.
pub fn unit_scope(unit: &ProgramUnitAst, file_segments: &[String]) -> Vec<String> {
    let mut scope: Vec<String> = file_segments.to_vec();
    for node in &unit.body {
        if let NodeKind::IncludeBegin { segments, .. } = &node.kind {
            for s in segments {
                if !scope.contains(s) {
                    scope.push(s.clone());
                }
            }
        }
    }
    scope
}
