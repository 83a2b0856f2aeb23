//! Migration of one program unit: declarations, statement bodies with
//! block structure, and the module or program wrapper.

use std::collections::BTreeSet;

use crate::analysis::types::{infer_implicit_types, invoked_functions, InferredType, TypeOrigin};
use crate::analysis::uses::{compute_uses, type_alias};
use crate::analysis::IntentTable;
use crate::error::{Error, Errors, Phase, Result};
use crate::frontend::ast::{Declaration, EsopeKind, EsopeStatement, Node, NodeKind, ProgramUnitAst, StmtKeyword, UnitKind};
use crate::frontend::expr::{ExprToken, ExprTokenStream, LiteralKind};
use crate::model::{Intent, ProjectModel, UnitSummary};
use crate::transform::rewrite::{rewrite_expression, rewrite_statement, trace, RewriteClass, RewriteContext};
use crate::transform::target::{TargetKind, TargetNode, Typed};

/// Statement counts of a migration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MigrationStats {
    pub units: usize,
    pub segments: usize,
    /// Executable and comment lines kept as they were.
    pub passthrough: usize,
    pub rewritten: usize,
    pub removed: usize,
    pub declarations: usize,
    pub inferred_declarations: usize,
}

impl MigrationStats {
    pub fn add(&mut self, o: &MigrationStats) {
        self.units += o.units;
        self.segments += o.segments;
        self.passthrough += o.passthrough;
        self.rewritten += o.rewritten;
        self.removed += o.removed;
        self.declarations += o.declarations;
        self.inferred_declarations += o.inferred_declarations;
    }
}

/// Migrated unit: top-level nodes (comments around one module or program).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MigratedUnit {
    pub name: String,
    pub nodes: Vec<TargetNode>,
    pub stats: MigrationStats,
}

struct Frame {
    head: Option<(String, Option<u32>)>,
    children: Vec<TargetNode>,
    do_label: Option<u32>,
}

/// Rebuilds block nesting from the flat statement list.
struct BlockBuilder {
    stack: Vec<Frame>,
}

impl BlockBuilder {
    fn new() -> Self {
        BlockBuilder {
            stack: vec![Frame {
                head: None,
                children: Vec::new(),
                do_label: None,
            }],
        }
    }

    fn push(&mut self, n: TargetNode) {
        self.stack.last_mut().expect("root frame").children.push(n);
    }

    fn open(&mut self, text: String, label: Option<u32>, do_label: Option<u32>) {
        self.stack.push(Frame {
            head: Some((text, label)),
            children: Vec::new(),
            do_label,
        });
    }

    fn top_do_label(&self) -> Option<u32> {
        self.stack.last().and_then(|f| f.do_label)
    }

    fn close(&mut self, end: Option<String>, end_label: Option<u32>) -> bool {
        if self.stack.len() == 1 {
            return false;
        }
        let f = self.stack.pop().expect("open frame");
        let (text, label) = f.head.expect("non-root frame has a head");
        self.push(TargetNode::Typed(Typed {
            kind: TargetKind::Statement,
            label,
            text,
            children: f.children,
            end,
            end_label,
        }));
        true
    }

    fn finish(mut self) -> Vec<TargetNode> {
        while self.close(None, None) {}
        self.stack.pop().expect("root frame").children
    }
}

enum Flow {
    Open(Option<u32>),
    Mid,
    Close,
    Plain,
}

fn flow_of(kind: &NodeKind) -> Flow {
    let NodeKind::Opaque(op) = kind else { return Flow::Plain };
    let toks = &op.tokens.0;
    match op.keyword {
        Some(StmtKeyword::IfThen) if toks.last().map(|t| t.tok.is_ident("then")).unwrap_or(false) => Flow::Open(None),
        Some(StmtKeyword::ElseIf) | Some(StmtKeyword::Else) => Flow::Mid,
        Some(StmtKeyword::EndIf) | Some(StmtKeyword::EndDo) => Flow::Close,
        Some(StmtKeyword::Do) | Some(StmtKeyword::DoWhile) => Flow::Open(toks.get(1).and_then(|t| match &t.tok {
            ExprToken::Literal(l) if l.kind == LiteralKind::Int => l.text.parse().ok(),
            _ => None,
        })),
        _ => Flow::Plain,
    }
}

fn with_label(mut n: TargetNode, label: Option<u32>) -> TargetNode {
    if let TargetNode::Typed(t) = &mut n {
        t.label = label;
    }
    n
}

fn leaf_statement(nodes: &[TargetNode]) -> Option<&str> {
    match nodes {
        [TargetNode::Typed(t)] if t.kind == TargetKind::Statement && t.children.is_empty() && t.end.is_none() => {
            Some(&t.text)
        }
        _ => None,
    }
}

fn render_dims(dims: &[ExprTokenStream], ctx: &RewriteContext) -> Result<String> {
    if dims.is_empty() {
        return Ok(String::new());
    }
    let parts: Vec<String> = dims
        .iter()
        .map(|d| rewrite_expression(d, ctx).map(|r| r.render().trim().to_string()))
        .collect::<Result<_>>()?;
    Ok(format!("({})", parts.join(", ")))
}

struct UnitMigrator<'a> {
    unit: &'a ProgramUnitAst,
    summary: &'a UnitSummary,
    model: &'a ProjectModel,
    intents: &'a IntentTable,
    ctx: RewriteContext<'a>,
    stats: MigrationStats,
    errors: Vec<Error>,
    /// Project functions invoked here; their modules provide them.
    project_functions: BTreeSet<String>,
}

impl<'a> UnitMigrator<'a> {
    fn intent(&self, name: &str) -> Option<Intent> {
        if !self.summary.is_subprogram() {
            return None;
        }
        let pos = self.summary.params.iter().position(|p| p == name)?;
        Some(self.intents.get(&self.summary.name, pos).unwrap_or(Intent::InOut))
    }

    fn attrs(&self, ty: &str, name: &str) -> String {
        match self.intent(name) {
            Some(i) => format!("{ty}, intent({i})"),
            None => ty.to_string(),
        }
    }

    fn pointer_type(&self, segment: &str, array: bool) -> String {
        if array {
            format!("type({segment}_ref)")
        } else {
            format!("type({}), pointer", type_alias(self.summary, segment))
        }
    }

    /// Declarations the unit needs but does not write.
    fn inferred_declarations(&mut self) -> Result<Vec<TargetNode>> {
        let assignments = infer_implicit_types(self.summary, self.model)?;
        let invoked = invoked_functions(self.summary);
        let mut out = Vec::new();
        let mut group: Option<(String, Vec<String>)> = None;
        let flush = |group: &mut Option<(String, Vec<String>)>, out: &mut Vec<TargetNode>| {
            if let Some((ty, names)) = group.take() {
                out.push(TargetNode::decl(format!("{ty} :: {}", names.join(", "))));
            }
        };
        let mut externals = Vec::new();
        for a in assignments {
            let name = &a.symbol;
            let declared = self.summary.decls.types.contains_key(name);
            let line_ty = match (&a.ty, a.origin) {
                (InferredType::Pointer { segment, array: false }, TypeOrigin::PointeurDecl)
                    if !self.summary.decls.pointers.contains_key(name) =>
                {
                    Some(self.pointer_type(segment, false))
                }
                (InferredType::Basic(t), TypeOrigin::ImplicitRule) => Some(t.modern()),
                (InferredType::Basic(t), TypeOrigin::FunctionReturn) if !declared => {
                    if *name == self.summary.name {
                        Some(t.modern())
                    } else if self.project_functions.contains(name) {
                        None
                    } else {
                        if !self.summary.decls.externals.contains(name) {
                            externals.push(name.clone());
                        }
                        Some(t.modern())
                    }
                }
                (InferredType::Basic(_), TypeOrigin::FunctionReturn)
                    if invoked.contains(name)
                        && *name != self.summary.name
                        && !self.project_functions.contains(name)
                        && !self.summary.decls.externals.contains(name) =>
                {
                    externals.push(name.clone());
                    None
                }
                _ => None,
            };
            let Some(ty) = line_ty else { continue };
            self.stats.inferred_declarations += 1;
            if self.intent(name).is_some() {
                flush(&mut group, &mut out);
                out.push(TargetNode::decl(format!("{} :: {name}", self.attrs(&ty, name))));
                continue;
            }
            match &mut group {
                Some((g, names)) if *g == ty => names.push(name.clone()),
                _ => {
                    flush(&mut group, &mut out);
                    group = Some((ty, vec![name.clone()]));
                }
            }
        }
        flush(&mut group, &mut out);
        if !externals.is_empty() {
            out.push(TargetNode::decl(format!("external :: {}", externals.join(", "))));
        }
        Ok(out)
    }

    fn declaration(&mut self, d: &Declaration, node: &Node) -> Result<Vec<TargetNode>> {
        let mut out = Vec::new();
        let mut group: Option<(String, Vec<String>)> = None;
        let mut dropped = Vec::new();
        for e in &d.entities {
            if self.summary.decls.pointers.contains_key(&e.name) {
                continue;
            }
            if self.project_functions.contains(&e.name) {
                dropped.push(e.name.clone());
                continue;
            }
            let ty = d.entity_type(e).modern();
            let text = format!("{}{}", e.name, render_dims(&e.dims, &self.ctx)?);
            if self.intent(&e.name).is_some() {
                if let Some((g, names)) = group.take() {
                    out.push(TargetNode::decl(format!("{g} :: {}", names.join(", "))));
                }
                out.push(TargetNode::decl(format!("{} :: {text}", self.attrs(&ty, &e.name))));
                continue;
            }
            match &mut group {
                Some((g, names)) if *g == ty => names.push(text),
                _ => {
                    if let Some((g, names)) = group.take() {
                        out.push(TargetNode::decl(format!("{g} :: {}", names.join(", "))));
                    }
                    group = Some((ty, vec![text]));
                }
            }
        }
        if let Some((g, names)) = group.take() {
            out.push(TargetNode::decl(format!("{g} :: {}", names.join(", "))));
        }
        if !dropped.is_empty() {
            let modules: Vec<String> = dropped.iter().map(|n| format!("{n}_mod")).collect();
            out.push(trace(&format!("removed (type given by {})", modules.join(", ")), &node.text));
        }
        if out.is_empty() {
            out.push(trace("removed (declared as segment pointer)", &node.text));
        }
        self.stats.declarations += 1;
        Ok(out)
    }

    fn pointer_declarations(&mut self, stmts: &[EsopeStatement]) -> Result<Vec<TargetNode>> {
        let mut out = Vec::new();
        for s in stmts.iter().filter(|s| s.kind == EsopeKind::PointerDecl) {
            let name = &s.operands[0];
            let seg = s.segment.as_deref().unwrap_or_default();
            let ty = self.pointer_type(seg, !s.dims.is_empty());
            out.push(TargetNode::decl(format!(
                "{} :: {name}{}",
                self.attrs(&ty, name),
                render_dims(&s.dims, &self.ctx)?
            )));
        }
        self.stats.rewritten += 1;
        Ok(out)
    }

    fn external(&mut self, names: &[String], node: &Node) -> Vec<TargetNode> {
        let (project, other): (Vec<&String>, Vec<&String>) =
            names.iter().partition(|n| self.model.units.get(*n).map(|u| u.is_subprogram()).unwrap_or(false));
        let mut out = Vec::new();
        if !other.is_empty() {
            let list: Vec<&str> = other.iter().map(|s| s.as_str()).collect();
            out.push(TargetNode::decl(format!("external :: {}", list.join(", "))));
        }
        if !project.is_empty() {
            let modules: Vec<String> = project.iter().map(|n| format!("{n}_mod")).collect();
            out.push(trace(&format!("removed (provided by {})", modules.join(", ")), &node.text));
            self.stats.removed += 1;
        } else {
            self.stats.declarations += 1;
        }
        out
    }

    /// Declaration-like nodes; `None` for executable statements.
    fn specification(&mut self, node: &Node) -> Result<Option<Vec<TargetNode>>> {
        Ok(Some(match &node.kind {
            NodeKind::Declaration(d) => self.declaration(d, node)?,
            NodeKind::Esope(stmts) if stmts.iter().all(|s| s.kind == EsopeKind::PointerDecl) => {
                self.pointer_declarations(stmts)?
            }
            NodeKind::External(names) => self.external(names, node),
            NodeKind::Segment(b) => {
                let module = b.def.module_name();
                vec![trace(&format!("moved to module {module}"), &format!("segment {}", b.def.name))]
            }
            NodeKind::IncludeBegin { path, .. } => {
                vec![TargetNode::comment(format!(" [seg-migrate] begin include \"{path}\""))]
            }
            NodeKind::IncludeEnd { path } => {
                vec![TargetNode::comment(format!(" [seg-migrate] end include \"{path}\""))]
            }
            NodeKind::Include(d) => {
                return Err(Error::at(Phase::Transform, d.span, format!("include `{}` was not expanded", d.path)));
            }
            _ => return Ok(None),
        }))
    }

    fn body(&mut self) -> Vec<TargetNode> {
        let mut b = BlockBuilder::new();
        for node in &self.unit.body {
            let spec = match self.specification(node) {
                Ok(s) => s,
                Err(e) => {
                    self.errors.push(e.with_span(node.span));
                    continue;
                }
            };
            if let Some(nodes) = spec {
                let mut first = true;
                for n in nodes {
                    b.push(if first { with_label(n, node.label) } else { n });
                    first = false;
                }
                continue;
            }
            let outcome = match rewrite_statement(node, &self.ctx) {
                Ok(o) => o,
                Err(e) => {
                    self.errors.push(e);
                    continue;
                }
            };
            if !node.kind.is_comment_like() {
                match outcome.class {
                    RewriteClass::Passthrough => self.stats.passthrough += 1,
                    RewriteClass::Rewritten => self.stats.rewritten += 1,
                    RewriteClass::Removed => self.stats.removed += 1,
                }
            }
            let mut nodes = outcome.nodes;
            let label = node.label;
            if outcome.class == RewriteClass::Removed && label.is_some() {
                nodes.push(TargetNode::stmt("continue"));
            }
            match flow_of(&node.kind) {
                Flow::Open(do_label) => {
                    let text = leaf_statement(&nodes).unwrap_or_default().to_string();
                    b.open(text, label, do_label);
                }
                Flow::Mid => {
                    let text = leaf_statement(&nodes).unwrap_or_default().to_string();
                    b.push(with_label(TargetNode::marker(text), label));
                }
                Flow::Close => {
                    let text = leaf_statement(&nodes).unwrap_or_default().to_string();
                    if !b.close(Some(text), label) {
                        self.errors.push(Error::at(Phase::Transform, node.span, "block end without a matching start"));
                    }
                }
                Flow::Plain => match label {
                    Some(l) if b.top_do_label() == Some(l) => {
                        let end = match leaf_statement(&nodes) {
                            Some(t) => t.to_string(),
                            None => {
                                // the label moves to a closing `continue`
                                for n in nodes {
                                    b.push(n);
                                }
                                "continue".to_string()
                            }
                        };
                        b.close(Some(end), Some(l));
                    }
                    _ => {
                        let mut labelled = label.is_none();
                        for n in nodes {
                            if !labelled && n.kind() == Some(TargetKind::Statement) {
                                b.push(with_label(n, label));
                                labelled = true;
                            } else {
                                b.push(n);
                            }
                        }
                    }
                },
            }
            if let Some(l) = label {
                while b.top_do_label() == Some(l) {
                    b.close(None, None);
                }
            }
        }
        b.finish()
    }
}

fn comment_nodes(nodes: &[Node]) -> Vec<TargetNode> {
    nodes
        .iter()
        .map(|n| match &n.kind {
            NodeKind::Comment(c) => TargetNode::comment(c.clone()),
            NodeKind::Directive(d) => TargetNode::stmt(d.clone()),
            _ => TargetNode::blank(),
        })
        .collect()
}

fn header(summary: &UnitSummary) -> String {
    let kw = match summary.kind {
        UnitKind::Function => "function",
        _ => "subroutine",
    };
    format!("{kw} {}({})", summary.name, summary.params.join(", "))
}

/// Migrates one unit whose summary is in `model`.
pub fn migrate_unit(unit: &ProgramUnitAst, model: &ProjectModel, intents: &IntentTable) -> Result<MigratedUnit, Errors> {
    let summary = model.units.get(&unit.name).ok_or_else(|| {
        Errors::from(Error::new(Phase::Transform, format!("unit `{}` is not in the project model", unit.name)))
    })?;
    let project_functions = invoked_functions(summary)
        .into_iter()
        .filter(|f| *f != summary.name && model.units.get(f).map(|u| u.kind == UnitKind::Function).unwrap_or(false))
        .collect();
    let mut m = UnitMigrator {
        unit,
        summary,
        model,
        intents,
        ctx: RewriteContext::new(summary, model),
        stats: MigrationStats {
            units: 1,
            ..Default::default()
        },
        errors: Vec::new(),
        project_functions,
    };
    let span = unit.header_span.or(unit.end_span);
    let at = |e: Error| match span {
        Some(s) => e.with_span(s),
        None => e,
    };
    let uses = compute_uses(summary, model).map_err(|e| Errors::from(at(e)))?;
    let mut spec = m.inferred_declarations().map_err(|e| Errors::from(at(e)))?;
    let body = m.body();
    if !m.errors.is_empty() {
        return Err(Errors(m.errors));
    }
    let use_nodes: Vec<TargetNode> = uses.iter().map(|u| TargetNode::use_stmt(u.to_string())).collect();
    spec.extend(body);
    let name = &summary.name;
    let main = match unit.kind {
        UnitKind::Subroutine | UnitKind::Function => {
            let kw = if unit.kind == UnitKind::Function { "function" } else { "subroutine" };
            let procedure = TargetNode::block(TargetKind::Procedure, header(summary), spec, format!("end {kw} {name}"));
            let mut children = use_nodes;
            children.push(TargetNode::stmt("implicit none"));
            children.push(TargetNode::stmt("private"));
            children.push(TargetNode::decl(format!("public :: {name}")));
            children.push(TargetNode::contains());
            children.push(procedure);
            TargetNode::module(&summary.module_name(), children)
        }
        UnitKind::Program => {
            let mut children = use_nodes;
            children.push(TargetNode::stmt("implicit none"));
            children.extend(spec);
            TargetNode::block(TargetKind::Procedure, format!("program {name}"), children, format!("end program {name}"))
        }
        UnitKind::BlockData => {
            let mut children = use_nodes;
            children.push(TargetNode::stmt("implicit none"));
            children.extend(spec);
            TargetNode::block(
                TargetKind::Procedure,
                format!("block data {name}").trim_end().to_string(),
                children,
                format!("end block data {name}").trim_end().to_string(),
            )
        }
        UnitKind::Fragment => {
            return Err(Errors::from(Error::new(Phase::Transform, "include fragments are not program units")));
        }
    };
    let mut nodes = comment_nodes(&unit.leading);
    nodes.push(main);
    nodes.extend(comment_nodes(&unit.trailing));
    Ok(MigratedUnit {
        name: name.clone(),
        nodes,
        stats: m.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::infer_intents;
    use crate::frontend::include::FileKey;
    use crate::frontend::parser::parse_file;
    use crate::frontend::span::FileId;
    use crate::model::{build_project_model, FileUnits, IntentCatalog};

    fn migrate(src: &str, unit: &str) -> Result<MigratedUnit, Errors> {
        let units = parse_file(FileId(0), src).unwrap().units;
        let m = build_project_model(
            &[FileUnits {
                key: FileKey::Source("t.f".into()),
                units: units.clone(),
            }],
            Default::default(),
            IntentCatalog::default(),
        )
        .unwrap();
        let intents = infer_intents(&m);
        let u = units.iter().find(|u| u.name == unit).unwrap();
        migrate_unit(u, &m, &intents)
    }

    fn lines(n: &TargetNode, out: &mut Vec<String>) {
        if let TargetNode::Typed(t) = n {
            out.push(t.text.clone());
            for c in &t.children {
                lines(c, out);
            }
            if let Some(e) = &t.end {
                out.push(e.clone());
            }
        }
    }

    fn flat(m: &MigratedUnit) -> Vec<String> {
        let mut out = Vec::new();
        for n in &m.nodes {
            lines(n, &mut out);
        }
        out
    }

    const LISTING: &str = "      SUBROUTINE NEWUSER(LIB,NAME)\n      INTEGER UBBCNT\n      CHARACTER*(*) NAME\n      SEGMENT, USER\n       CHARACTER*40 UNAME\n       INTEGER UBB(UBBCNT)\n      END SEGMENT\n      POINTEUR UR.USER\nC the user does not have a book yet\n      UBBCNT = 0\n      SEGINI, UR\n      UR.UNAME = NAME\n      LIB = UR.UBB(/1)\n      END\n";

    #[test]
    fn subroutine_becomes_module() {
        let m = migrate(LISTING, "newuser").unwrap();
        let l = flat(&m);
        assert_eq!(l[0], "module newuser_mod");
        assert!(l.contains(&"use user_mod".to_string()), "{l:#?}");
        assert!(l.contains(&"subroutine newuser(lib, name)".to_string()));
        assert!(l.contains(&"integer, intent(out) :: lib".to_string()), "{l:#?}");
        assert!(l.contains(&"character(len=*), intent(in) :: name".to_string()), "{l:#?}");
        assert!(l.contains(&"type(user), pointer :: ur".to_string()));
        assert!(l.contains(&"call segini(ur, ubbcnt)".to_string()));
        assert!(l.contains(&"ur%uname = name".to_string()));
        assert!(l.contains(&"lib = size(ur%ubb, dim=1)".to_string()), "{l:#?}");
        assert_eq!(l.last().unwrap(), "end module newuser_mod");
    }

    #[test]
    fn labelled_do_loops_nest() {
        let src = "      PROGRAM P\n      INTEGER I, J, K\n      DO 10 I = 1, 3\n      DO 10 J = 1, 3\n      K = I + J\n   10 CONTINUE\n      END\n";
        let m = migrate(src, "p").unwrap();
        let prog = m.nodes[0].as_typed().unwrap();
        let outer = prog.children.iter().filter_map(|n| n.as_typed()).find(|t| t.text.starts_with("DO 10 I") || t.text.starts_with("do 10 i")).unwrap();
        assert!(outer.end.is_none());
        let inner = outer.children[0].as_typed().unwrap();
        assert_eq!(inner.end.as_deref(), Some("continue"));
        assert_eq!(inner.end_label, Some(10));
    }

    #[test]
    fn segact_is_removed_with_a_trace() {
        let src = "      SUBROUTINE S(P)\n      SEGMENT, T\n       INTEGER N\n      END SEGMENT\n      POINTEUR P.T\n   20 SEGACT, P\n      END\n";
        let m = migrate(src, "s").unwrap();
        let l = flat(&m);
        assert!(l.iter().any(|x| x.contains("[seg-migrate] removed: SEGACT, P (swapping is automatic)")), "{l:#?}");
        assert!(l.contains(&"continue".to_string()));
    }

    #[test]
    fn unknown_routine_is_an_error() {
        let src = "      SUBROUTINE S\n      CALL NOWHERE(1)\n      END\n";
        assert!(migrate(src, "s").is_err());
    }
}
