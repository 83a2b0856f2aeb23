//! Esope-to-Fortran 2008 transformation: segment modules, rewritten units
//! and the two support modules.

pub mod rewrite;
pub mod segment;
pub mod support;
pub mod target;
pub mod unit;

use std::collections::BTreeMap;

use crate::analysis::IntentTable;
use crate::error::{Error, Errors, Phase};
use crate::frontend::ast::{NodeKind, UnitKind};
use crate::frontend::include::FileKey;
use crate::model::{FileUnits, ProjectModel};

pub use rewrite::{rewrite_expression, rewrite_statement, RewriteClass, RewriteContext, RewriteOutcome};
pub use segment::{migrate_segment, synthesize_command_bodies};
pub use support::{generate_support_modules, REGISTRY_MODULE, SEGMENT_MODULE};
pub use target::{TargetFile, TargetKind, TargetNode, Template, TemplateRole, Typed};
pub use unit::{migrate_unit, MigratedUnit, MigrationStats};

#[derive(Debug, Clone, Default)]
pub struct MigrationOutput {
    /// One file per input file that yields output, then the support modules.
    pub files: Vec<TargetFile>,
    pub stats: MigrationStats,
}

/// Output path of a source file: same relative path, `.f90` extension.
pub fn output_path(key: &FileKey) -> String {
    match key {
        FileKey::Source(rel) => with_f90(rel),
        FileKey::External(p) => {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            format!("external/{}", with_f90(&name))
        }
    }
}

fn with_f90(rel: &str) -> String {
    let (dir, name) = match rel.rfind('/') {
        Some(i) => (&rel[..=i], &rel[i + 1..]),
        None => ("", rel),
    };
    let stem = name.rfind('.').map(|i| &name[..i]).unwrap_or(name);
    format!("{dir}{stem}.f90")
}

/// Segment module with the comments of the segment block placed above the
/// derived type.
fn segment_module(def: &crate::model::SegmentDefinition, comments: &[crate::frontend::ast::Node]) -> TargetNode {
    let mut m = migrate_segment(def);
    if let TargetNode::Typed(t) = &mut m {
        let at = t
            .children
            .iter()
            .position(|c| c.kind() == Some(TargetKind::DerivedType))
            .unwrap_or(t.children.len());
        let notes: Vec<TargetNode> = comments
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Comment(c) => TargetNode::comment(c.clone()),
                _ => TargetNode::blank(),
            })
            .collect();
        t.children.splice(at..at, notes);
    }
    m
}

/// Migrates every file of the project. Errors from all units are
/// collected; nothing is returned unless every unit migrated.
pub fn migrate_project(files: &[FileUnits], model: &ProjectModel, intents: &IntentTable) -> Result<MigrationOutput, Errors> {
    let mut out = MigrationOutput::default();
    let mut errors = Vec::new();
    let mut paths: BTreeMap<String, FileKey> = BTreeMap::new();
    for f in files {
        let mut nodes = Vec::new();
        let fragment = f.units.iter().all(|u| u.kind == UnitKind::Fragment);
        for u in &f.units {
            for b in u.segments() {
                if !nodes.is_empty() {
                    nodes.push(TargetNode::blank());
                }
                nodes.push(segment_module(&b.def, &b.comments));
                out.stats.segments += 1;
            }
        }
        if matches!(f.key, FileKey::External(_)) && nodes.is_empty() {
            continue;
        }
        if fragment {
            let note = TargetNode::comment(format!(
                " [seg-migrate] include file {}: its statements are inlined where it is included",
                f.key
            ));
            if !nodes.is_empty() {
                nodes.insert(0, TargetNode::blank());
            }
            nodes.insert(0, note);
        }
        for u in f.units.iter().filter(|u| u.kind != UnitKind::Fragment) {
            match migrate_unit(u, model, intents) {
                Ok(m) => {
                    if !nodes.is_empty() {
                        nodes.push(TargetNode::blank());
                    }
                    nodes.extend(m.nodes);
                    out.stats.add(&m.stats);
                }
                Err(e) => errors.extend(e.0),
            }
        }
        let path = output_path(&f.key);
        if let Some(prev) = paths.insert(path.clone(), f.key.clone()) {
            errors.push(Error::new(
                Phase::Transform,
                format!("{} and {} would both be written to {path}", prev, f.key),
            ));
        }
        out.files.push(TargetFile { path, nodes });
    }
    for s in generate_support_modules() {
        if paths.contains_key(&s.path) {
            errors.push(Error::new(Phase::Transform, format!("a source file would overwrite {}", s.path)));
        }
        out.files.push(s);
    }
    if !errors.is_empty() {
        return Err(Errors(errors));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_paths() {
        assert_eq!(output_path(&FileKey::Source("lib/a.f".into())), "lib/a.f90");
        assert_eq!(output_path(&FileKey::Source("b.eso".into())), "b.f90");
        assert_eq!(output_path(&FileKey::External("/x/y/user.inc".into())), "external/user.f90");
    }
}
