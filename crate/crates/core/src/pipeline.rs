//! The end-to-end pipeline over a set of sources: load, model, intents,
//! transform, render. Used by the command line and the Python bindings.

use std::path::PathBuf;

use crate::analysis::{infer_intents, negative_pointer_warnings, unit_census, EsopeCensus, IntentTable, Warning};
use crate::analysis::types::{infer_implicit_types, TypeOrigin};
use crate::emit::{render_files, RenderConfig};
use crate::error::{Error, Errors};
use crate::frontend::ast::UnitKind;
use crate::frontend::project::{load_project, LoadedProject, SourceSet};
use crate::frontend::span::{SourceMap, SourceSpan};
use crate::model::{build_project_model, IntentCatalog, ProjectModel};
use crate::transform::{migrate_project, MigrationOutput};

/// Errors of a failed run, printable with file positions.
#[derive(Debug, Clone)]
pub struct Failure {
    pub errors: Vec<Error>,
    pub source_map: SourceMap,
}

fn position(map: &SourceMap, span: &SourceSpan) -> String {
    let path = if (span.file.0 as usize) < map.len() { map.path(span.file) } else { "?" };
    format!("{path}:{}:{}", span.start_line, span.start_col)
}

impl Failure {
    /// One line per error, sorted by file, line and column; errors
    /// without a position come last.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut keyed: Vec<((u8, String, u32, u32), String)> = self
            .errors
            .iter()
            .map(|e| match &e.span {
                Some(s) => {
                    let path = if (s.file.0 as usize) < self.source_map.len() {
                        self.source_map.path(s.file).to_string()
                    } else {
                        String::new()
                    };
                    ((0, path, s.start_line, s.start_col), format!("{}: {e}", position(&self.source_map, s)))
                }
                None => ((1, String::new(), 0, 0), format!("seg-migrate: {e}")),
            })
            .collect();
        keyed.sort();
        keyed.dedup();
        keyed.into_iter().map(|(_, l)| l).collect()
    }
}

/// Warning lines in the same format as diagnostics.
pub fn warning_lines(map: &SourceMap, warnings: &[Warning]) -> Vec<String> {
    let mut v: Vec<((String, u32, u32), String)> = warnings
        .iter()
        .map(|w| {
            let path = if (w.span.file.0 as usize) < map.len() { map.path(w.span.file).to_string() } else { String::new() };
            (
                (path, w.span.start_line, w.span.start_col),
                format!("{}: warning: {}", position(map, &w.span), w.message),
            )
        })
        .collect();
    v.sort();
    v.into_iter().map(|(_, l)| l).collect()
}

/// Loaded sources with their project model and intents.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub project: LoadedProject,
    pub model: ProjectModel,
    pub intents: IntentTable,
}

pub fn analyze(sources: &SourceSet, include_dirs: &[PathBuf], catalog: IntentCatalog) -> Result<Analysis, Failure> {
    let project = load_project(sources, include_dirs).map_err(|e| Failure {
        errors: e.errors.0,
        source_map: e.source_map,
    })?;
    let model = build_project_model(&project.files, project.include_graph.clone(), catalog).map_err(|e| Failure {
        errors: vec![e],
        source_map: project.source_map.clone(),
    })?;
    let intents = infer_intents(&model);
    Ok(Analysis { project, model, intents })
}

impl Analysis {
    fn fail(&self, e: Errors) -> Failure {
        Failure {
            errors: e.0,
            source_map: self.project.source_map.clone(),
        }
    }

    pub fn migrate(&self) -> Result<MigrationOutput, Failure> {
        migrate_project(&self.project.files, &self.model, &self.intents).map_err(|e| self.fail(e))
    }

    /// Esope construct counts over every source file.
    pub fn census(&self) -> EsopeCensus {
        let mut c = EsopeCensus::default();
        for units in self.project.parsed.values() {
            for u in units {
                c.add(&unit_census(u));
            }
        }
        c
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let mut out = Vec::new();
        for f in &self.project.files {
            for u in f.units.iter().filter(|u| u.kind != UnitKind::Fragment) {
                out.extend(negative_pointer_warnings(u));
            }
        }
        out
    }

    /// Variables used without a declaration, as `(unit, name)`.
    pub fn undeclared(&self) -> Result<Vec<(String, String)>, Failure> {
        let mut out = Vec::new();
        for (name, s) in &self.model.units {
            let types = infer_implicit_types(s, &self.model).map_err(|e| self.fail(Errors(vec![e])))?;
            out.extend(
                types
                    .into_iter()
                    .filter(|t| t.origin == TypeOrigin::ImplicitRule)
                    .map(|t| (name.clone(), t.symbol)),
            );
        }
        Ok(out)
    }
}

/// A rendered migration: output files as `(relative path, text)`.
#[derive(Debug, Clone)]
pub struct Migration {
    pub analysis: Analysis,
    pub output: MigrationOutput,
    pub rendered: Vec<(String, String)>,
}

pub fn migrate_sources(
    sources: &SourceSet,
    include_dirs: &[PathBuf],
    catalog: IntentCatalog,
    render: &RenderConfig,
) -> Result<Migration, Failure> {
    let analysis = analyze(sources, include_dirs, catalog)?;
    let output = analysis.migrate()?;
    let rendered = render_files(&output.files, render).map_err(|e| analysis.fail(e))?;
    Ok(Migration {
        analysis,
        output,
        rendered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_project_gives_support_files_only() {
        let m = migrate_sources(&SourceSet::default(), &[], IntentCatalog::default(), &RenderConfig::default()).unwrap();
        let paths: Vec<&str> = m.rendered.iter().map(|(p, _)| p.as_str()).collect();
        assert_eq!(paths, ["segment_mod.f90", "segment_registry_mod.f90"]);
    }

    #[test]
    fn diagnostics_are_sorted_by_position() {
        let s = SourceSet::from_memory([
            ("b.f", "      SUBROUTINE B\n      INCLUDE 'y.inc'\n      END\n"),
            ("a.f", "      SUBROUTINE A\n\n      INCLUDE 'x.inc'\n      END\n"),
        ]);
        let f = analyze(&s, &[], IntentCatalog::default()).unwrap_err();
        let d = f.diagnostics();
        assert!(d[0].starts_with("a.f:3:"), "{d:?}");
        assert!(d[1].starts_with("b.f:2:"), "{d:?}");
    }
}
