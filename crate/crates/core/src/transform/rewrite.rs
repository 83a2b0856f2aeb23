//! Statement and expression rewriting for one unit.

use crate::error::{Error, Phase, Result};
use crate::frontend::ast::{EsopeKind, EsopeStatement, Node, NodeKind};
use crate::frontend::expr::{
    matching_paren, split_top_level, DottedAccess, ExprToken, ExprTokenStream, LiteralKind, Token,
};
use crate::frontend::span::SourceSpan;
use crate::model::{segment_for_field, FieldType, ProjectModel, SegmentDefinition, SymbolContext, UnitSummary};
use crate::transform::target::TargetNode;

pub const TRACE: &str = "[seg-migrate]";

/// Traceability comment `! [seg-migrate] <reason>: <original>`.
pub fn trace(reason: &str, original: &str) -> TargetNode {
    TargetNode::comment(format!(" {TRACE} {reason}: {}", original.trim()))
}

/// Statement-level result of a rewrite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RewriteClass {
    Passthrough,
    Rewritten,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteOutcome {
    pub nodes: Vec<TargetNode>,
    pub class: RewriteClass,
}

impl RewriteOutcome {
    fn new(class: RewriteClass, nodes: Vec<TargetNode>) -> Self {
        RewriteOutcome { nodes, class }
    }

    pub fn is_removed(&self) -> bool {
        self.class == RewriteClass::Removed
    }
}

/// Symbol knowledge of the unit being rewritten.
pub struct RewriteContext<'a> {
    pub summary: &'a UnitSummary,
    pub model: &'a ProjectModel,
}

impl<'a> RewriteContext<'a> {
    pub fn new(summary: &'a UnitSummary, model: &'a ProjectModel) -> Self {
        RewriteContext { summary, model }
    }

    fn symbols(&self) -> SymbolContext<'_> {
        SymbolContext {
            decls: &self.summary.decls,
            segments: &self.model.segments,
            scope: &self.summary.scope,
            params: &self.summary.params,
            unit_name: &self.summary.name,
        }
    }

    pub fn pointer_segment(&self, name: &str) -> Option<&'a SegmentDefinition> {
        let seg = self.symbols().pointer_segment(name)?.to_string();
        self.model.segments.get(&seg)
    }

    fn is_pointer_array(&self, name: &str) -> bool {
        self.summary.decls.pointers.get(name).map(|p| !p.dims.is_empty()).unwrap_or(false)
    }

    fn is_scalar_pointer(&self, name: &str) -> bool {
        self.pointer_segment(name).is_some() && !self.is_pointer_array(name)
    }

    fn bare_field_owner(&self, name: &str) -> Result<Option<&'a SegmentDefinition>> {
        let owner = self.symbols().bare_field_owner(name)?.map(|s| s.name.clone());
        Ok(owner.and_then(|o| self.model.segments.get(&o)))
    }

    /// Segment and field type reached by `p.f`.
    fn dotted_field(&self, d: &DottedAccess) -> Result<Option<(String, FieldType, usize)>> {
        let seg = match &d.pointer {
            Some(p) => self.pointer_segment(p),
            None => segment_for_field(&self.model.segments, &d.field, &self.summary.scope)?,
        };
        Ok(seg.and_then(|s| s.field(&d.field).map(|f| (s.default_pointer.clone(), f.base_type.clone(), f.rank()))))
    }

    fn dotted_pointer_name(&self, d: &DottedAccess) -> Result<String> {
        if let Some(p) = &d.pointer {
            return Ok(p.clone());
        }
        segment_for_field(&self.model.segments, &d.field, &self.summary.scope)?
            .map(|s| s.default_pointer.clone())
            .ok_or_else(|| Error::new(Phase::Transform, format!("field `{}` belongs to no visible segment", d.field)))
    }
}

fn tok(t: ExprToken) -> Token {
    Token::new(t, false)
}

fn percent() -> Token {
    Token::op("%", false)
}

fn is_zero(t: &Token) -> bool {
    matches!(&t.tok, ExprToken::Literal(l) if l.kind == LiteralKind::Int && l.text == "0")
}

fn is_equality(t: &Token) -> Option<bool> {
    match &t.tok {
        ExprToken::Op(o) if o == ".eq." || o == "==" => Some(true),
        ExprToken::Op(o) if o == ".ne." || o == "/=" => Some(false),
        _ => None,
    }
}

/// Rewrites dotted access, slash dimensions, bare fields of default
/// pointers and pointer comparisons.
pub fn rewrite_expression(tokens: &ExprTokenStream, ctx: &RewriteContext) -> Result<ExprTokenStream> {
    Ok(ExprTokenStream(rewrite_tokens(&tokens.0, ctx)?))
}

/// True when `toks[i]` designates a scalar segment pointer.
fn pointer_designator(t: &Token, ctx: &RewriteContext) -> Result<bool> {
    Ok(match &t.tok {
        ExprToken::Ident(n) => ctx.is_scalar_pointer(n),
        ExprToken::Dotted(d) if d.subscripts.is_none() => {
            matches!(ctx.dotted_field(d)?, Some((_, FieldType::Pointer(_), 0)))
        }
        _ => false,
    })
}

fn associated_call(args: Vec<Vec<Token>>, negate: bool, space: bool) -> Vec<Token> {
    let mut out = Vec::new();
    out.push(Token::punct('('));
    out[0].space_before = space;
    if negate {
        out.push(Token::op(".not.", false));
        out.push(Token::ident("associated", true));
    } else {
        out.push(Token::ident("associated", false));
    }
    out.push(Token::punct('('));
    for (i, a) in args.into_iter().enumerate() {
        if i > 0 {
            out.push(Token::punct(','));
            let mut a = a;
            if let Some(f) = a.first_mut() {
                f.space_before = true;
            }
            out.extend(a);
        } else {
            let mut a = a;
            if let Some(f) = a.first_mut() {
                f.space_before = false;
            }
            out.extend(a);
        }
    }
    out.push(Token::punct(')'));
    out.push(Token::punct(')'));
    out
}

fn rewrite_tokens(toks: &[Token], ctx: &RewriteContext) -> Result<Vec<Token>> {
    let mut out = Vec::with_capacity(toks.len());
    let mut i = 0;
    while i < toks.len() {
        // pointer comparisons: p .eq. 0, 0 .ne. p, p .eq. q
        if i + 2 < toks.len() {
            if let Some(eq) = is_equality(&toks[i + 1]) {
                let (a, b) = (&toks[i], &toks[i + 2]);
                let pa = pointer_designator(a, ctx)?;
                let pb = pointer_designator(b, ctx)?;
                let args = if pa && is_zero(b) {
                    Some(vec![rewrite_tokens(std::slice::from_ref(a), ctx)?])
                } else if pb && is_zero(a) {
                    Some(vec![rewrite_tokens(std::slice::from_ref(b), ctx)?])
                } else if pa && pb {
                    Some(vec![
                        rewrite_tokens(std::slice::from_ref(a), ctx)?,
                        rewrite_tokens(std::slice::from_ref(b), ctx)?,
                    ])
                } else {
                    None
                };
                if let Some(args) = args {
                    let negate = if args.len() == 1 { eq } else { !eq };
                    out.extend(associated_call(args, negate, a.space_before));
                    i += 3;
                    continue;
                }
            }
        }
        let t = &toks[i];
        match &t.tok {
            ExprToken::Ident(name) => {
                let paren = toks.get(i + 1).map(|n| n.tok.is_punct('(')).unwrap_or(false);
                if let Some(seg) = ctx.bare_field_owner(name)? {
                    let field = seg.field(name).expect("owner has the field");
                    out.push(Token::ident(&seg.default_pointer, t.space_before));
                    out.push(percent());
                    out.push(Token::ident(name, false));
                    let is_ref = field.is_pointer() && field.rank() > 0;
                    if paren {
                        let close = matching_paren(toks, i + 1)
                            .ok_or_else(|| Error::new(Phase::Transform, "unbalanced parentheses"))?;
                        out.push(Token::punct('('));
                        out.extend(rewrite_tokens(&toks[i + 2..close], ctx)?);
                        out.push(Token::punct(')'));
                        if is_ref {
                            out.push(percent());
                            out.push(Token::ident("p", false));
                        }
                        i = close + 1;
                        continue;
                    }
                } else if paren && ctx.is_pointer_array(name) {
                    let close = matching_paren(toks, i + 1)
                        .ok_or_else(|| Error::new(Phase::Transform, "unbalanced parentheses"))?;
                    out.push(t.clone());
                    out.push(Token::punct('('));
                    out.extend(rewrite_tokens(&toks[i + 2..close], ctx)?);
                    out.push(Token::punct(')'));
                    out.push(percent());
                    out.push(Token::ident("p", false));
                    i = close + 1;
                    continue;
                } else {
                    out.push(t.clone());
                }
            }
            ExprToken::Dotted(d) => {
                let mut v = rewrite_dotted(d, ctx)?;
                if let Some(f) = v.first_mut() {
                    f.space_before = t.space_before;
                }
                out.extend(v);
            }
            ExprToken::SlashDim(sd) => {
                out.push(Token::ident("size", t.space_before));
                out.push(Token::punct('('));
                let inner = rewrite_tokens(&[tok((*sd.array).clone())], ctx)?;
                out.extend(inner);
                out.push(Token::punct(','));
                out.push(Token::ident("dim", true));
                out.push(Token::op("=", false));
                out.push(tok(ExprToken::Literal(crate::frontend::expr::Literal {
                    kind: LiteralKind::Int,
                    text: sd.dim.to_string(),
                })));
                out.push(Token::punct(')'));
            }
            _ => out.push(t.clone()),
        }
        i += 1;
    }
    Ok(out)
}

fn rewrite_dotted(d: &DottedAccess, ctx: &RewriteContext) -> Result<Vec<Token>> {
    let p = ctx.dotted_pointer_name(d)?;
    let mut out = vec![Token::ident(&p, false), percent(), Token::ident(&d.field, false)];
    let is_ref = matches!(ctx.dotted_field(d)?, Some((_, FieldType::Pointer(_), r)) if r > 0);
    if let Some(subs) = &d.subscripts {
        out.push(Token::punct('('));
        for (k, s) in subs.iter().enumerate() {
            if k > 0 {
                out.push(Token::punct(','));
            }
            let mut r = rewrite_tokens(&s.0, ctx)?;
            if k == 0 {
                if let Some(f) = r.first_mut() {
                    f.space_before = false;
                }
            }
            out.extend(r);
        }
        out.push(Token::punct(')'));
        if is_ref {
            out.push(percent());
            out.push(Token::ident("p", false));
        }
    }
    Ok(out)
}

fn render(toks: &[Token]) -> String {
    ExprTokenStream(toks.to_vec()).render()
}

/// Left-hand side designating a segment pointer: a pointer variable, a
/// pointer field, or an element of a pointer array.
fn assigns_pointer(lhs: &[Token], ctx: &RewriteContext) -> Result<bool> {
    match lhs {
        [t] => match &t.tok {
            ExprToken::Ident(n) => {
                if ctx.is_scalar_pointer(n) {
                    return Ok(true);
                }
                Ok(matches!(
                    ctx.bare_field_owner(n)?.and_then(|s| s.field(n)),
                    Some(f) if f.is_pointer() && f.rank() == 0
                ))
            }
            ExprToken::Dotted(d) => Ok(match ctx.dotted_field(d)? {
                Some((_, FieldType::Pointer(_), 0)) => true,
                Some((_, FieldType::Pointer(_), _)) => d.subscripts.is_some(),
                _ => false,
            }),
            _ => Ok(false),
        },
        [first, rest @ ..] => {
            let Some(n) = first.tok.ident() else { return Ok(false) };
            let whole = rest.first().map(|t| t.tok.is_punct('(')).unwrap_or(false)
                && matching_paren(lhs, 1) == Some(lhs.len() - 1);
            if !whole {
                return Ok(false);
            }
            if ctx.is_pointer_array(n) {
                return Ok(true);
            }
            Ok(matches!(
                ctx.bare_field_owner(n)?.and_then(|s| s.field(n)),
                Some(f) if f.is_pointer() && f.rank() > 0
            ))
        }
        [] => Ok(false),
    }
}

fn is_negative_int(toks: &[Token]) -> bool {
    matches!(toks, [m, l] if m.tok.is_op("-") && matches!(&l.tok, ExprToken::Literal(x) if x.kind == LiteralKind::Int))
}

/// `lhs = rhs`, with pointer targets turned into pointer assignments.
pub fn rewrite_assignment(lhs: &ExprTokenStream, rhs: &ExprTokenStream, ctx: &RewriteContext) -> Result<(String, bool)> {
    let l = rewrite_tokens(&lhs.0, ctx)?;
    if assigns_pointer(&lhs.0, ctx)? && !is_negative_int(&rhs.0) {
        let target = match rhs.0.as_slice() {
            [z] if is_zero(z) => "null()".to_string(),
            _ => render(&rewrite_tokens(&rhs.0, ctx)?),
        };
        return Ok((format!("{} => {}", render(&l), target.trim_start()), true));
    }
    let r = rewrite_tokens(&rhs.0, ctx)?;
    let changed = l != lhs.0 || r != rhs.0;
    Ok((format!("{} = {}", render(&l), render(&r).trim_start()), changed))
}

fn segment_of<'a>(p: &str, ctx: &RewriteContext<'a>, span: SourceSpan) -> Result<&'a SegmentDefinition> {
    ctx.pointer_segment(p)
        .ok_or_else(|| Error::at(Phase::Transform, span, format!("`{p}` is not a pointer to a known segment")))
}

fn same_segment(p: &str, q: &str, cmd: &str, ctx: &RewriteContext, span: SourceSpan) -> Result<()> {
    let a = segment_of(p, ctx, span)?;
    let b = segment_of(q, ctx, span)?;
    if a.name != b.name {
        return Err(Error::at(
            Phase::Transform,
            span,
            format!("{cmd} needs two instances of the same segment: `{p}` is a {}, `{q}` is a {}", a.name, b.name),
        ));
    }
    Ok(())
}

/// Call replacing one executable Esope command; `None` for commands that
/// are dropped.
pub fn rewrite_command(s: &EsopeStatement, ctx: &RewriteContext, span: SourceSpan) -> Result<Option<String>> {
    let p = s.operands.first().map(String::as_str).unwrap_or_default();
    Ok(match s.kind {
        EsopeKind::SegIni | EsopeKind::SegAdj => {
            let seg = segment_of(p, ctx, span)?;
            let mut args = vec![p.to_string()];
            args.extend(seg.dimensioning_vars.iter().cloned());
            Some(format!("call {}({})", s.kind.name(), args.join(", ")))
        }
        EsopeKind::SegIniCopy | EsopeKind::SegActMove => {
            let q = &s.operands[1];
            same_segment(p, q, s.kind.name(), ctx, span)?;
            Some(format!("call {}({p}, {q})", s.kind.name()))
        }
        EsopeKind::SegSup | EsopeKind::SegPrt => {
            segment_of(p, ctx, span)?;
            Some(format!("call {}({p})", s.kind.name()))
        }
        EsopeKind::SegAct | EsopeKind::SegDes => None,
        EsopeKind::SegmentDef | EsopeKind::PointerDecl => None,
    })
}

/// Rewrites one executable statement kind. Declarations, includes and
/// segment definitions are handled by the unit migration.
pub fn rewrite_statement(node: &Node, ctx: &RewriteContext) -> Result<RewriteOutcome> {
    rewrite_kind(&node.kind, &node.text, node.span, ctx).map_err(|e| e.with_span(node.span))
}

fn rewrite_kind(kind: &NodeKind, text: &str, span: SourceSpan, ctx: &RewriteContext) -> Result<RewriteOutcome> {
    use RewriteClass::*;
    Ok(match kind {
        NodeKind::Comment(c) => RewriteOutcome::new(Passthrough, vec![TargetNode::comment(c.clone())]),
        NodeKind::Blank => RewriteOutcome::new(Passthrough, vec![TargetNode::blank()]),
        NodeKind::Directive(d) => RewriteOutcome::new(Passthrough, vec![TargetNode::stmt(d.clone())]),
        NodeKind::Esope(stmts) => {
            let mut calls = Vec::new();
            for s in stmts {
                if let Some(c) = rewrite_command(s, ctx, span)? {
                    calls.push(TargetNode::stmt(c));
                }
            }
            if calls.is_empty() {
                let why = if stmts.iter().any(|s| matches!(s.kind, EsopeKind::SegAct | EsopeKind::SegDes)) {
                    "(swapping is automatic)"
                } else {
                    "(no equivalent)"
                };
                RewriteOutcome::new(Removed, vec![trace("removed", &format!("{} {why}", text.trim()))])
            } else {
                RewriteOutcome::new(Rewritten, calls)
            }
        }
        NodeKind::Implicit(_) => RewriteOutcome::new(
            Removed,
            vec![trace("removed", &format!("{} (implicit none is in effect)", text.trim()))],
        ),
        NodeKind::Call(c) => {
            let mut changed = false;
            let mut args = Vec::new();
            for a in &c.args {
                let r = rewrite_tokens(&a.0, ctx)?;
                changed |= r != a.0;
                args.push(render(&r).trim().to_string());
            }
            let line = if args.is_empty() {
                if text.trim_end().ends_with(')') {
                    format!("call {}()", c.name)
                } else {
                    format!("call {}", c.name)
                }
            } else {
                format!("call {}({})", c.name, args.join(", "))
            };
            RewriteOutcome::new(if changed { Rewritten } else { Passthrough }, vec![TargetNode::stmt(line)])
        }
        NodeKind::Assignment(a) => {
            let (line, changed) = rewrite_assignment(&a.lhs, &a.rhs, ctx)?;
            RewriteOutcome::new(if changed { Rewritten } else { Passthrough }, vec![TargetNode::stmt(line)])
        }
        NodeKind::Format(raw) => RewriteOutcome::new(Passthrough, vec![TargetNode::stmt(format!("format{raw}"))]),
        NodeKind::Opaque(op) => {
            let r = rewrite_tokens(&op.tokens.0, ctx)?;
            let class = if r != op.tokens.0 { Rewritten } else { Passthrough };
            RewriteOutcome::new(class, vec![TargetNode::stmt(render(&r))])
        }
        NodeKind::LogicalIf { cond, then } => {
            let c = render(&rewrite_tokens(&cond.0, ctx)?);
            let inner = rewrite_kind(then, text, span, ctx)?;
            let stmts: Vec<&TargetNode> = inner
                .nodes
                .iter()
                .filter(|n| n.kind() == Some(crate::transform::target::TargetKind::Statement))
                .collect();
            let head = format!("if ({})", c.trim());
            match (inner.class.clone(), stmts.as_slice()) {
                (Removed, _) => inner,
                (class, [one]) if inner.nodes.len() == 1 => {
                    let body = &one.as_typed().expect("typed statement").text;
                    let class = if class == Passthrough && c.trim() != cond.render().trim() { Rewritten } else { class };
                    RewriteOutcome::new(class, vec![TargetNode::stmt(format!("{head} {body}"))])
                }
                (_, _) => RewriteOutcome::new(
                    Rewritten,
                    vec![TargetNode::block(
                        crate::transform::target::TargetKind::Statement,
                        format!("{head} then"),
                        inner.nodes,
                        "end if",
                    )],
                ),
            }
        }
        NodeKind::External(_)
        | NodeKind::Declaration(_)
        | NodeKind::Include(_)
        | NodeKind::IncludeBegin { .. }
        | NodeKind::IncludeEnd { .. }
        | NodeKind::Segment(_) => {
            return Err(Error::at(Phase::Transform, span, "declaration passed to the statement rewriter"));
        }
    })
}

/// Segment pointer declarations split into scalar and array entities.
pub fn pointer_decl_type(seg_alias: &str, array: bool) -> String {
    if array {
        format!("type({seg_alias}_ref)")
    } else {
        format!("type({seg_alias}), pointer")
    }
}

/// Splits `a(1), b` style argument text for tests and diagnostics.
pub fn split_args(toks: &[Token]) -> Vec<ExprTokenStream> {
    split_top_level(toks, |t| t.is_punct(','))
}
