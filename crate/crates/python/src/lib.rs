//! Python bindings: analysis and migration of Esope sources held in memory
//! or read from a directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use seg_migrate::emit::{logical_statements, render_files, KeywordCase, RenderConfig};
use seg_migrate::frontend::{discover, Encoding, SourceSet};
use seg_migrate::model::IntentCatalog;
use seg_migrate::pipeline::{self, warning_lines, Failure};

create_exception!(segmigrate, MigrationError, PyException);

fn failure(f: Failure) -> PyErr {
    MigrationError::new_err(f.diagnostics().join("\n"))
}

fn catalog(text: Option<&str>) -> PyResult<IntentCatalog> {
    match text {
        None => Ok(IntentCatalog::default()),
        Some(t) => IntentCatalog::parse(t).map_err(|e| PyValueError::new_err(e.to_string())),
    }
}

fn render_config(indent: usize, max_line_length: usize, keyword_case: &str) -> PyResult<RenderConfig> {
    let keyword_case = match keyword_case.to_ascii_lowercase().as_str() {
        "lower" => KeywordCase::Lower,
        "upper" => KeywordCase::Upper,
        other => return Err(PyValueError::new_err(format!("keyword case must be lower or upper, got {other}"))),
    };
    let cfg = RenderConfig {
        indent_width: indent,
        max_line_length,
        keyword_case,
    };
    cfg.validate().map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(cfg)
}

/// Loaded sources with their model and inferred intents.
#[pyclass(module = "segmigrate")]
struct Analysis {
    inner: pipeline::Analysis,
}

impl Analysis {
    fn build(sources: &SourceSet, include_dirs: Option<Vec<String>>, intents: Option<&str>) -> PyResult<Self> {
        let dirs: Vec<PathBuf> = include_dirs.unwrap_or_default().into_iter().map(PathBuf::from).collect();
        let inner = pipeline::analyze(sources, &dirs, catalog(intents)?).map_err(failure)?;
        Ok(Analysis { inner })
    }
}

#[pymethods]
impl Analysis {
    /// `sources` maps relative paths to fixed-form text.
    #[new]
    #[pyo3(signature = (sources, include_dirs=None, intents=None))]
    fn new(sources: BTreeMap<String, String>, include_dirs: Option<Vec<String>>, intents: Option<&str>) -> PyResult<Self> {
        let set = SourceSet::from_memory(sources.iter().map(|(p, t)| (p.as_str(), t.as_str())));
        Self::build(&set, include_dirs, intents)
    }

    /// Every Fortran source under `root`.
    #[staticmethod]
    #[pyo3(signature = (root, include_dirs=None, intents=None, encoding="utf-8"))]
    fn from_dir(root: &str, include_dirs: Option<Vec<String>>, intents: Option<&str>, encoding: &str) -> PyResult<Self> {
        let enc = Encoding::parse(encoding).ok_or_else(|| PyValueError::new_err(format!("unknown encoding {encoding}")))?;
        let set = discover(Path::new(root), None, enc).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Self::build(&set, include_dirs, intents)
    }

    /// Routine name to the intent of each parameter.
    fn intents(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for ((r, _), i) in &self.inner.intents.entries {
            out.entry(r.clone()).or_default().push(i.as_str().to_string());
        }
        out
    }

    /// `(routine, position)` pairs that nothing resolved; they default to inout.
    fn defaulted_intents(&self) -> Vec<(String, usize)> {
        self.inner.intents.defaulted.clone()
    }

    fn census(&self) -> BTreeMap<String, usize> {
        self.inner.census().counts.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn undeclared(&self) -> PyResult<Vec<(String, String)>> {
        self.inner.undeclared().map_err(failure)
    }

    fn warnings(&self) -> Vec<String> {
        warning_lines(&self.inner.project.source_map, &self.inner.warnings())
    }

    fn dump_model(&self) -> String {
        self.inner.model.dump()
    }

    /// Output path to Fortran 2008 text.
    #[pyo3(signature = (indent=2, max_line_length=132, keyword_case="lower"))]
    fn migrate(&self, indent: usize, max_line_length: usize, keyword_case: &str) -> PyResult<Migration> {
        let cfg = render_config(indent, max_line_length, keyword_case)?;
        let output = self.inner.migrate().map_err(failure)?;
        let files = render_files(&output.files, &cfg).map_err(|e| {
            failure(Failure {
                errors: e.0,
                source_map: self.inner.project.source_map.clone(),
            })
        })?;
        let s = &output.stats;
        let stats = [
            ("units", s.units),
            ("segments", s.segments),
            ("rewritten", s.rewritten),
            ("removed", s.removed),
            ("passthrough", s.passthrough),
            ("declarations", s.declarations),
            ("inferred_declarations", s.inferred_declarations),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Ok(Migration {
            files: files.into_iter().collect(),
            stats,
        })
    }
}

#[pyclass(module = "segmigrate", get_all)]
struct Migration {
    files: BTreeMap<String, String>,
    stats: BTreeMap<String, usize>,
}

#[pymethods]
impl Migration {
    fn __repr__(&self) -> String {
        format!("Migration({} files)", self.files.len())
    }
}

/// One-shot migration of in-memory sources.
#[pyfunction]
#[pyo3(signature = (sources, include_dirs=None, intents=None, indent=2, max_line_length=132, keyword_case="lower"))]
fn migrate(
    sources: BTreeMap<String, String>,
    include_dirs: Option<Vec<String>>,
    intents: Option<&str>,
    indent: usize,
    max_line_length: usize,
    keyword_case: &str,
) -> PyResult<Migration> {
    Analysis::new(sources, include_dirs, intents)?.migrate(indent, max_line_length, keyword_case)
}

/// Statements of free-form text, continuations joined, comments dropped.
#[pyfunction]
fn statements(text: &str) -> Vec<String> {
    logical_statements(text)
}

#[pymodule]
fn segmigrate(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Analysis>()?;
    m.add_class::<Migration>()?;
    m.add_function(wrap_pyfunction!(migrate, m)?)?;
    m.add_function(wrap_pyfunction!(statements, m)?)?;
    m.add("MigrationError", m.py().get_type::<MigrationError>())?;
    Ok(())
}
