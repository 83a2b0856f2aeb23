//! Include resolution. Included files are parsed as fragments, stripped of
//! comments and segment definitions, and spliced into their includers
//! between two marker nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Phase, Result};
use crate::frontend::ast::*;
use crate::frontend::span::SourceSpan;

/// Where a source file lives: inside the source tree (path relative to its
/// root, `/`-separated) or in an external include directory.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FileKey {
    Source(String),
    External(PathBuf),
}

impl fmt::Display for FileKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FileKey::Source(p) => f.write_str(p),
            FileKey::External(p) => write!(f, "{}", p.display()),
        }
    }
}

fn rel_parent(rel: &str) -> &str {
    rel.rfind('/').map(|i| &rel[..i]).unwrap_or("")
}

fn rel_join(dir: &str, name: &str) -> String {
    let mut parts: Vec<&str> = if dir.is_empty() { Vec::new() } else { dir.split('/').collect() };
    for seg in name.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            s => parts.push(s),
        }
    }
    parts.join("/")
}

/// Candidate spellings of an include name, in the order they are tried.
pub fn candidate_names(name: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for base in [name.to_string(), name.to_ascii_lowercase()] {
        for ext in ["", ".inc", ".seg"] {
            let c = format!("{base}{ext}");
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    out
}

/// File lookup for include directives: the includer's directory first,
/// then each include directory in order, then the source root.
#[derive(Debug, Clone, Default)]
pub struct SearchPaths {
    /// Source files keyed by their relative path.
    pub sources: BTreeSet<String>,
    pub include_dirs: Vec<PathBuf>,
    /// Root of the source tree on disk, when there is one.
    pub source_root: Option<PathBuf>,
}

impl SearchPaths {
    pub fn new(sources: impl IntoIterator<Item = String>, include_dirs: Vec<PathBuf>, source_root: Option<PathBuf>) -> Self {
        SearchPaths {
            sources: sources.into_iter().collect(),
            include_dirs,
            source_root,
        }
    }

    fn external(&self, path: PathBuf) -> FileKey {
        if let Some(root) = &self.source_root {
            if let (Ok(r), Ok(p)) = (root.canonicalize(), path.canonicalize()) {
                if let Ok(rel) = p.strip_prefix(&r) {
                    let rel = rel.to_string_lossy().replace('\\', "/");
                    if self.sources.contains(&rel) {
                        return FileKey::Source(rel);
                    }
                }
            }
        }
        FileKey::External(path)
    }

    pub fn resolve(&self, includer: &FileKey, directive: &IncludeDirective) -> Result<FileKey> {
        let names = candidate_names(&directive.path);
        let mut tried = Vec::new();
        match includer {
            FileKey::Source(rel) => {
                for n in &names {
                    let c = rel_join(rel_parent(rel), n);
                    if self.sources.contains(&c) {
                        return Ok(FileKey::Source(c));
                    }
                    tried.push(c);
                }
            }
            FileKey::External(p) => {
                let dir = p.parent().unwrap_or(Path::new("."));
                for n in &names {
                    let c = dir.join(n);
                    if c.is_file() {
                        return Ok(self.external(c));
                    }
                    tried.push(c.display().to_string());
                }
            }
        }
        for dir in &self.include_dirs {
            for n in &names {
                let c = dir.join(n);
                if c.is_file() {
                    return Ok(self.external(c));
                }
                tried.push(c.display().to_string());
            }
        }
        for n in &names {
            let c = rel_join("", n);
            if self.sources.contains(&c) {
                return Ok(FileKey::Source(c));
            }
            if !tried.contains(&c) {
                tried.push(c);
            }
        }
        Err(Error::at(
            Phase::Include,
            directive.span,
            format!(
                "include file `{}` ({} directive) not found; tried: {}",
                directive.path,
                directive.flavor,
                tried.join(", ")
            ),
        ))
    }
}

/// Statements of an included file, ready to be spliced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub key: FileKey,
    /// Statements with comments and segment definitions removed; nested
    /// includes already expanded.
    pub nodes: Vec<Node>,
    /// Segments defined here or in files this one includes.
    pub segments: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct FragmentCache {
    map: BTreeMap<FileKey, Fragment>,
}

impl FragmentCache {
    pub fn get(&self, key: &FileKey) -> Option<&Fragment> {
        self.map.get(key)
    }

    pub fn insert(&mut self, fragment: Fragment) {
        self.map.insert(fragment.key.clone(), fragment);
    }

    pub fn keys(&self) -> impl Iterator<Item = &FileKey> {
        self.map.keys()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn body_includes(unit: &ProgramUnitAst) -> impl Iterator<Item = &IncludeDirective> {
    unit.leading.iter().chain(unit.body.iter()).filter_map(|n| match &n.kind {
        NodeKind::Include(d) => Some(d),
        _ => None,
    })
}

/// Fills `cache` with the fragment for `key` and everything it includes,
/// depth first. `units_of` returns the parsed units of a file.
pub fn build_fragment<'a>(
    key: &FileKey,
    search: &SearchPaths,
    units_of: &mut dyn FnMut(&FileKey) -> Result<&'a [ProgramUnitAst]>,
    cache: &mut FragmentCache,
    stack: &mut Vec<FileKey>,
) -> Result<()> {
    if cache.get(key).is_some() {
        return Ok(());
    }
    if let Some(pos) = stack.iter().position(|k| k == key) {
        let mut cycle: Vec<String> = stack[pos..].iter().map(ToString::to_string).collect();
        cycle.push(key.to_string());
        return Err(Error::new(Phase::Include, format!("include cycle: {}", cycle.join(" -> "))));
    }
    let units = units_of(key)?;
    if let Some(u) = units.iter().find(|u| u.kind != UnitKind::Fragment) {
        return Err(Error::new(
            Phase::Include,
            format!("included file `{key}` contains {} `{}`", u.kind, u.name),
        ));
    }
    stack.push(key.clone());
    let mut nodes = Vec::new();
    let mut segments = Vec::new();
    for unit in units {
        for node in &unit.body {
            match &node.kind {
                NodeKind::Comment(_) | NodeKind::Blank => {}
                NodeKind::Segment(s) => segments.push(s.def.name.clone()),
                NodeKind::Include(d) => {
                    let child = search.resolve(key, d)?;
                    build_fragment(&child, search, units_of, cache, stack)?;
                    let frag = cache.get(&child).expect("fragment just built");
                    segments.extend(frag.segments.iter().cloned());
                    nodes.extend(splice(node, d, frag));
                }
                _ => nodes.push(node.clone()),
            }
        }
    }
    stack.pop();
    cache.insert(Fragment {
        key: key.clone(),
        nodes,
        segments,
    });
    Ok(())
}

fn splice(node: &Node, d: &IncludeDirective, frag: &Fragment) -> Vec<Node> {
    let mut out = Vec::with_capacity(frag.nodes.len() + 2);
    let mut begin = Node::new(
        NodeKind::IncludeBegin {
            path: d.path.clone(),
            segments: frag.segments.clone(),
        },
        d.span,
        node.text.clone(),
    );
    begin.label = node.label;
    out.push(begin);
    out.extend(frag.nodes.iter().cloned());
    out.push(Node::new(NodeKind::IncludeEnd { path: d.path.clone() }, d.span, String::new()));
    out
}

/// Include directives of a unit resolved against the search paths.
pub fn unit_includes(unit: &ProgramUnitAst, key: &FileKey, search: &SearchPaths) -> Result<Vec<(IncludeDirective, FileKey)>> {
    body_includes(unit)
        .map(|d| search.resolve(key, d).map(|k| (d.clone(), k)))
        .collect()
}

/// Returns a copy of `unit` with every include directive replaced by its
/// fragment between begin and end markers. Includes placed before the unit
/// header are expanded at the start of the body.
pub fn resolve_includes(unit: &ProgramUnitAst, key: &FileKey, search: &SearchPaths, cache: &FragmentCache) -> Result<ProgramUnitAst> {
    let expand = |node: &Node, out: &mut Vec<Node>| -> Result<()> {
        if let NodeKind::Include(d) = &node.kind {
            let child = search.resolve(key, d)?;
            let frag = cache.get(&child).ok_or_else(|| {
                Error::at(Phase::Include, d.span, format!("include file `{child}` was not loaded"))
            })?;
            out.extend(splice(node, d, frag));
        } else {
            out.push(node.clone());
        }
        Ok(())
    };
    let mut result = unit.clone();
    let mut leading = Vec::new();
    let mut body = Vec::new();
    for node in &unit.leading {
        if matches!(node.kind, NodeKind::Include(_)) {
            expand(node, &mut body)?;
        } else {
            leading.push(node.clone());
        }
    }
    for node in &unit.body {
        expand(node, &mut body)?;
    }
    result.leading = leading;
    result.body = body;
    Ok(result)
}

/// Span of the first include directive in a unit, for diagnostics.
pub fn first_include_span(unit: &ProgramUnitAst) -> Option<SourceSpan> {
    body_includes(unit).next().map(|d| d.span)
}
