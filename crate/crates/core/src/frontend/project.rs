//! Loading a source tree: discovery, parsing of every file and of every
//! external include it pulls in, and include expansion.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::error::{Error, Errors, Phase, Result};
use crate::frontend::ast::{NodeKind, ProgramUnitAst, UnitKind};
use crate::frontend::include::{build_fragment, resolve_includes, FileKey, FragmentCache, SearchPaths};
use crate::frontend::parser::parse_file;
use crate::frontend::span::{FileId, SourceMap};
use crate::model::FileUnits;

/// File extensions picked up by discovery.
pub const SOURCE_EXTENSIONS: [&str; 4] = ["f", "F", "eso", "inc"];

/// Character encoding of source files; outputs use the same one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    #[default]
    Utf8,
    Latin1,
}

impl Encoding {
    pub fn parse(s: &str) -> Option<Encoding> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "utf-8" | "utf8" => Some(Encoding::Utf8),
            "latin-1" | "latin1" | "iso-8859-1" => Some(Encoding::Latin1),
            _ => None,
        }
    }

    pub fn decode(self, bytes: &[u8], path: &Path) -> Result<String> {
        match self {
            Encoding::Utf8 => String::from_utf8(bytes.to_vec()).map_err(|e| {
                Error::new(
                    Phase::Io,
                    format!("{} is not valid UTF-8 (byte {}); set encoding=latin-1", path.display(), e.utf8_error().valid_up_to()),
                )
            }),
            Encoding::Latin1 => Ok(bytes.iter().map(|&b| b as char).collect()),
        }
    }

    pub fn encode(self, text: &str) -> std::result::Result<Vec<u8>, char> {
        match self {
            Encoding::Utf8 => Ok(text.as_bytes().to_vec()),
            Encoding::Latin1 => text.chars().map(|c| u8::try_from(u32::from(c)).map_err(|_| c)).collect(),
        }
    }
}

/// Source files by path relative to the root (`/`-separated).
#[derive(Debug, Clone, Default)]
pub struct SourceSet {
    pub root: Option<PathBuf>,
    pub files: BTreeMap<String, String>,
    pub encoding: Encoding,
}

impl SourceSet {
    /// In-memory sources, for tests and embedding.
    pub fn from_memory<'a>(files: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        SourceSet {
            root: None,
            files: files.into_iter().map(|(p, s)| (p.to_string(), s.to_string())).collect(),
            encoding: Encoding::Utf8,
        }
    }
}

fn walk(dir: &Path, root: &Path, exclude: Option<&Path>, enc: Encoding, out: &mut BTreeMap<String, String>) -> Result<()> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::new(Phase::Io, format!("cannot read {}: {e}", dir.display())))?;
    for entry in rd {
        let entry = entry.map_err(|e| Error::new(Phase::Io, format!("cannot read {}: {e}", dir.display())))?;
        let path = entry.path();
        if exclude.is_some_and(|x| path == x) {
            continue;
        }
        if path.is_dir() {
            walk(&path, root, exclude, enc, out)?;
            continue;
        }
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if !SOURCE_EXTENSIONS.contains(&ext) {
            continue;
        }
        let bytes = std::fs::read(&path).map_err(|e| Error::new(Phase::Io, format!("cannot read {}: {e}", path.display())))?;
        let rel = path.strip_prefix(root).unwrap_or(&path).to_string_lossy().replace('\\', "/");
        out.insert(rel, enc.decode(&bytes, &path)?);
    }
    Ok(())
}

/// All source files under `root`, skipping the directory `exclude`.
pub fn discover(root: &Path, exclude: Option<&Path>, encoding: Encoding) -> Result<SourceSet> {
    if !root.is_dir() {
        return Err(Error::new(Phase::Config, format!("source directory {} does not exist", root.display())));
    }
    let mut files = BTreeMap::new();
    walk(root, root, exclude, encoding, &mut files)?;
    Ok(SourceSet {
        root: Some(root.to_path_buf()),
        files,
        encoding,
    })
}

#[derive(Debug, Clone, Default)]
pub struct LoadedProject {
    pub source_map: SourceMap,
    pub texts: BTreeMap<FileKey, String>,
    /// Units as parsed, before include expansion.
    pub parsed: BTreeMap<FileKey, Vec<ProgramUnitAst>>,
    /// Source files first (units with includes expanded), then external
    /// include files.
    pub files: Vec<FileUnits>,
    pub include_graph: BTreeSet<(FileKey, FileKey)>,
}

impl LoadedProject {
    pub fn is_fragment_file(&self, key: &FileKey) -> bool {
        self.parsed
            .get(key)
            .map(|u| u.iter().all(|u| u.kind == UnitKind::Fragment))
            .unwrap_or(false)
    }

    /// Display path of a span's file.
    pub fn path_of(&self, file: FileId) -> &str {
        self.source_map.path(file)
    }
}

fn unit_include_nodes(u: &ProgramUnitAst) -> impl Iterator<Item = &crate::frontend::ast::IncludeDirective> {
    u.leading.iter().chain(u.body.iter()).filter_map(|n| match &n.kind {
        NodeKind::Include(d) => Some(d),
        _ => None,
    })
}

/// Load failure, with the file registry needed to print its spans.
#[derive(Debug, Clone)]
pub struct LoadError {
    pub errors: Errors,
    pub source_map: SourceMap,
}

pub fn load_project(sources: &SourceSet, include_dirs: &[PathBuf]) -> Result<LoadedProject, LoadError> {
    let mut p = LoadedProject::default();
    let fail = |errors: Vec<Error>, p: &LoadedProject| LoadError {
        errors: Errors(errors),
        source_map: p.source_map.clone(),
    };
    let mut errors = Vec::new();
    for (rel, text) in &sources.files {
        let key = FileKey::Source(rel.clone());
        let id = p.source_map.add(rel.clone());
        match parse_file(id, text) {
            Ok(f) => {
                p.parsed.insert(key.clone(), f.units);
            }
            Err(e) => errors.push(e),
        }
        p.texts.insert(key, text.clone());
    }
    let search = SearchPaths::new(sources.files.keys().cloned(), include_dirs.to_vec(), sources.root.clone());

    // follow includes, loading external files as they are reached
    let mut work: Vec<FileKey> = p.parsed.keys().cloned().collect();
    let mut seen: BTreeSet<FileKey> = work.iter().cloned().collect();
    while let Some(key) = work.pop() {
        let Some(units) = p.parsed.get(&key) else { continue };
        let directives: Vec<_> = units.iter().flat_map(unit_include_nodes).cloned().collect();
        for d in directives {
            let child = match search.resolve(&key, &d) {
                Ok(c) => c,
                Err(e) => {
                    errors.push(e);
                    continue;
                }
            };
            p.include_graph.insert((key.clone(), child.clone()));
            if !seen.insert(child.clone()) {
                continue;
            }
            if let FileKey::External(path) = &child {
                let id = p.source_map.add(path.display().to_string());
                let text = match std::fs::read(path)
                    .map_err(|e| e.to_string())
                    .and_then(|b| sources.encoding.decode(&b, path).map_err(|e| e.message))
                {
                    Ok(t) => t,
                    Err(e) => {
                        errors.push(Error::at(Phase::Io, d.span, format!("cannot read {}: {e}", path.display())));
                        continue;
                    }
                };
                match parse_file(id, &text) {
                    Ok(f) => {
                        p.parsed.insert(child.clone(), f.units);
                    }
                    Err(e) => errors.push(e),
                }
                p.texts.insert(child.clone(), text);
            }
            work.push(child);
        }
    }
    if !errors.is_empty() {
        return Err(fail(errors, &p));
    }

    let mut cache = FragmentCache::default();
    let included: BTreeSet<FileKey> = p.include_graph.iter().map(|(_, c)| c.clone()).collect();
    for key in &included {
        let mut units_of = |k: &FileKey| -> Result<&[ProgramUnitAst]> {
            p.parsed
                .get(k)
                .map(Vec::as_slice)
                .ok_or_else(|| Error::new(Phase::Include, format!("include file `{k}` was not loaded")))
        };
        if let Err(e) = build_fragment(key, &search, &mut units_of, &mut cache, &mut Vec::new()) {
            errors.push(e);
        }
    }
    if !errors.is_empty() {
        return Err(fail(errors, &p));
    }

    let mut externals = Vec::new();
    for (key, units) in &p.parsed {
        if matches!(key, FileKey::External(_)) {
            externals.push(FileUnits {
                key: key.clone(),
                units: units.clone(),
            });
            continue;
        }
        if units.iter().all(|u| u.kind == UnitKind::Fragment) {
            p.files.push(FileUnits {
                key: key.clone(),
                units: units.clone(),
            });
            continue;
        }
        let mut resolved = Vec::new();
        for u in units {
            match resolve_includes(u, key, &search, &cache) {
                Ok(r) => resolved.push(r),
                Err(e) => errors.push(e),
            }
        }
        p.files.push(FileUnits {
            key: key.clone(),
            units: resolved,
        });
    }
    p.files.extend(externals);
    if !errors.is_empty() {
        return Err(fail(errors, &p));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn includes_are_expanded_and_recorded() {
        let s = SourceSet::from_memory([
            ("main.f", "      PROGRAM M\n      INCLUDE 'a.inc'\n      END\n"),
            ("a.inc", "      X = 1\n"),
        ]);
        let p = load_project(&s, &[]).unwrap();
        assert_eq!(p.include_graph.len(), 1);
        assert!(p.is_fragment_file(&FileKey::Source("a.inc".into())));
        let main = p.files.iter().find(|f| f.key == FileKey::Source("main.f".into())).unwrap();
        assert!(matches!(main.units[0].body[0].kind, NodeKind::IncludeBegin { .. }));
    }

    #[test]
    fn missing_includes_are_all_reported() {
        let s = SourceSet::from_memory([
            ("a.f", "      SUBROUTINE A\n      INCLUDE 'x.inc'\n      END\n"),
            ("b.f", "      SUBROUTINE B\n      INCLUDE 'y.inc'\n      END\n"),
        ]);
        let e = load_project(&s, &[]).unwrap_err();
        assert_eq!(e.errors.0.len(), 2);
    }
}
