//! Project-wide dependency model: units, segments, call and include graphs.
//! Built once from the parsed units, then read-only.

pub mod catalog;
pub mod census;
pub mod segment;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Phase, Result};
use crate::frontend::ast::{EsopeStatement, NodeKind, ProgramUnitAst, TypeSpec, UnitKind};
use crate::frontend::include::FileKey;
use crate::frontend::span::SourceSpan;

pub use catalog::{Intent, IntentCatalog};
pub use census::{is_intrinsic, segment_for_field, Decls, SymEvent, SymbolContext};
pub use segment::{FieldDef, FieldType, SegmentDefinition};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitSummary {
    pub name: String,
    pub kind: UnitKind,
    pub params: Vec<String>,
    pub return_type: Option<TypeSpec>,
    pub file: FileKey,
    /// Segments visible in the unit.
    pub scope: Vec<String>,
    pub decls: Decls,
    /// Symbol accesses in textual order.
    pub events: Vec<SymEvent>,
    /// Variables accessed anywhere in the unit (default pointers included).
    pub referenced: BTreeSet<String>,
    /// Names of routines called or referenced as functions.
    pub called: BTreeSet<String>,
    pub defined: BTreeSet<String>,
    pub esope: Vec<EsopeStatement>,
}

impl UnitSummary {
    pub fn module_name(&self) -> String {
        format!("{}_mod", self.name)
    }

    pub fn is_subprogram(&self) -> bool {
        matches!(self.kind, UnitKind::Subroutine | UnitKind::Function)
    }

    /// Segments whose types or commands the unit uses.
    pub fn used_segments(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for p in self.decls.pointers.values() {
            out.insert(p.segment.clone());
        }
        for e in &self.events {
            match e {
                SymEvent::Field { segment, .. } => {
                    out.insert(segment.clone());
                }
                SymEvent::Var { name, .. } | SymEvent::Forward { name, .. } => {
                    if self.scope.contains(name) && !self.decls.types.contains_key(name) {
                        out.insert(name.clone());
                    }
                }
                _ => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CallEdge {
    pub caller: String,
    pub callee: String,
    pub nargs: usize,
    /// Callee is not a unit of the project.
    pub external: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ProjectModel {
    pub units: BTreeMap<String, UnitSummary>,
    pub segments: BTreeMap<String, SegmentDefinition>,
    pub segment_files: BTreeMap<String, FileKey>,
    pub call_graph: Vec<CallEdge>,
    pub include_graph: BTreeSet<(FileKey, FileKey)>,
    pub intent_catalog: IntentCatalog,
    /// Routines referenced but defined by no unit.
    pub externals: BTreeSet<String>,
}

/// Units of one file, with includes already resolved.
#[derive(Debug, Clone)]
pub struct FileUnits {
    pub key: FileKey,
    pub units: Vec<ProgramUnitAst>,
}

pub fn file_segments(units: &[ProgramUnitAst]) -> Vec<String> {
    units
        .iter()
        .flat_map(|u| u.segments().map(|s| s.def.name.clone()))
        .collect()
}

pub fn build_project_model(
    files: &[FileUnits],
    include_graph: BTreeSet<(FileKey, FileKey)>,
    intent_catalog: IntentCatalog,
) -> Result<ProjectModel> {
    let mut model = ProjectModel {
        include_graph,
        intent_catalog,
        ..Default::default()
    };

    for f in files {
        for u in &f.units {
            for s in u.segments() {
                let name = &s.def.name;
                if let Some(prev) = model.segment_files.get(name) {
                    return Err(Error::at(
                        Phase::Model,
                        s.def.span,
                        format!("segment `{name}` is defined twice (also in {prev})"),
                    ));
                }
                model.segments.insert(name.clone(), s.def.clone());
                model.segment_files.insert(name.clone(), f.key.clone());
            }
        }
    }

    if let Some(cycle) = segment_cycle(&model.segments) {
        return Err(Error::at(
            Phase::Model,
            model.segments[&cycle[0]].span,
            format!(
                "segments point to each other ({}); their modules would use each other",
                cycle.join(" -> ")
            ),
        ));
    }

    for f in files {
        let own_segments = file_segments(&f.units);
        for u in f.units.iter().filter(|u| u.kind != UnitKind::Fragment) {
            if let Some(prev) = model.units.get(&u.name) {
                return Err(Error::new(
                    Phase::Model,
                    format!("{} `{}` in {} is already defined in {}", u.kind, u.name, f.key, prev.file),
                )
                .with_span(u.header_span.unwrap_or_else(|| SourceSpan::line(u.file, 1, 1, 1))));
            }
            if model.segments.contains_key(&u.name) {
                return Err(Error::new(
                    Phase::Model,
                    format!("{} `{}` has the same name as a segment", u.kind, u.name),
                ));
            }
            let summary = summarize(u, &f.key, &own_segments, &model.segments)?;
            model.units.insert(u.name.clone(), summary);
        }
    }

    let mut edges = BTreeSet::new();
    for s in model.units.values() {
        for e in &s.events {
            let (callee, nargs) = match e {
                SymEvent::Call { name, nargs } | SymEvent::Invoke { name, nargs } => (name, *nargs),
                _ => continue,
            };
            if *callee == s.name {
                continue;
            }
            let external = !model.units.contains_key(callee);
            edges.insert(CallEdge {
                caller: s.name.clone(),
                callee: callee.clone(),
                nargs,
                external,
            });
        }
    }
    model.externals = edges.iter().filter(|e| e.external).map(|e| e.callee.clone()).collect();
    model.call_graph = edges.into_iter().collect();
    Ok(model)
}

/// A cycle of pointer fields between distinct segments, first segment
/// repeated at the end. Self-references are allowed.
pub fn segment_cycle(segments: &BTreeMap<String, SegmentDefinition>) -> Option<Vec<String>> {
    fn visit(
        name: &str,
        segments: &BTreeMap<String, SegmentDefinition>,
        done: &mut BTreeSet<String>,
        path: &mut Vec<String>,
    ) -> Option<Vec<String>> {
        if let Some(at) = path.iter().position(|p| p == name) {
            let mut cycle = path[at..].to_vec();
            cycle.push(name.to_string());
            return Some(cycle);
        }
        if done.contains(name) {
            return None;
        }
        path.push(name.to_string());
        if let Some(seg) = segments.get(name) {
            for f in &seg.fields {
                if let FieldType::Pointer(other) = &f.base_type {
                    if *other != seg.name {
                        if let Some(c) = visit(other, segments, done, path) {
                            return Some(c);
                        }
                    }
                }
            }
        }
        path.pop();
        done.insert(name.to_string());
        None
    }
    let mut done = BTreeSet::new();
    segments.keys().find_map(|n| visit(n, segments, &mut done, &mut Vec::new()))
}

/// Builds the summary of one include-resolved unit.
pub fn summarize(
    unit: &ProgramUnitAst,
    file: &FileKey,
    file_segments: &[String],
    segments: &BTreeMap<String, SegmentDefinition>,
) -> Result<UnitSummary> {
    let scope = census::unit_scope(unit, file_segments);
    let decls = census::collect_decls(unit);
    for (p, info) in &decls.pointers {
        if !scope.contains(&info.segment) {
            let span = unit
                .body
                .iter()
                .find(|n| n.kind.esope_statements().iter().any(|s| s.operands.first() == Some(p)))
                .map(|n| n.span);
            let e = Error::new(
                Phase::Model,
                format!(
                    "pointer `{p}` refers to segment `{}`, which is not visible in `{}` (include its definition)",
                    info.segment, unit.name
                ),
            );
            return Err(match span {
                Some(s) => e.with_span(s),
                None => e,
            });
        }
    }
    let ctx = SymbolContext {
        decls: &decls,
        segments,
        scope: &scope,
        params: &unit.params,
        unit_name: &unit.name,
    };
    let events = census::unit_events(unit, &ctx)?;
    let mut referenced = BTreeSet::new();
    let mut called = BTreeSet::new();
    for e in &events {
        match e {
            SymEvent::Var { name, .. } | SymEvent::Forward { name, .. } => {
                referenced.insert(name.clone());
            }
            SymEvent::Call { name, .. } | SymEvent::Invoke { name, .. } => {
                called.insert(name.clone());
            }
            SymEvent::Field { .. } => {}
        }
    }
    let esope = unit
        .body
        .iter()
        .flat_map(|n| n.kind.esope_statements().into_iter().cloned())
        .collect();
    Ok(UnitSummary {
        name: unit.name.clone(),
        kind: unit.kind,
        params: unit.params.clone(),
        return_type: unit.return_type.clone(),
        file: file.clone(),
        scope,
        decls,
        events,
        referenced,
        called,
        defined: [unit.name.clone()].into_iter().collect(),
        esope,
    })
}

impl ProjectModel {
    pub fn count_kind(&self, kind: UnitKind) -> usize {
        self.units.values().filter(|u| u.kind == kind).count()
    }

    /// Line-oriented report: one entity per line (kind, name, file).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (name, seg) in &self.segments {
            let file = &self.segment_files[name];
            let _ = writeln!(out, "segment {name} {file}");
            for f in &seg.fields {
                let dims: Vec<String> = f.dims.iter().map(|d| d.render()).collect();
                let shape = if dims.is_empty() { String::new() } else { format!("({})", dims.join(",")) };
                let _ = writeln!(out, "field {name}.{}{shape} {} {file}", f.name, f.base_type);
            }
            for v in &seg.dimensioning_vars {
                let _ = writeln!(out, "dimvar {name}.{v} {file}");
            }
        }
        for u in self.units.values() {
            let _ = writeln!(out, "{} {}({}) {}", u.kind, u.name, u.params.join(","), u.file);
        }
        for e in &self.call_graph {
            let tag = if e.external { "external-call" } else { "call" };
            let _ = writeln!(out, "{tag} {}->{}/{} {}", e.caller, e.callee, e.nargs, self.units[&e.caller].file);
        }
        for (a, b) in &self.include_graph {
            let _ = writeln!(out, "include {a}->{b} {a}");
        }
        out
    }
}

/// True when the node kind is one of the ten Esope statement forms.
pub fn is_esope(kind: &NodeKind) -> bool {
    matches!(kind, NodeKind::Segment(_) | NodeKind::Esope(_))
}
