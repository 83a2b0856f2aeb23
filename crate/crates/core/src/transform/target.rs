//! Target tree for the Fortran 2008 output.
//!
//! Typed nodes carry one line of text and, for constructs, their children
//! and closing line. Template nodes carry text with `{n}` placeholders that
//! the renderer expands at the nesting depth where they appear.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetKind {
    Module,
    DerivedType,
    Procedure,
    Statement,
    Declaration,
    Comment,
    UseStmt,
    /// `contains`, `else`: rendered one level out from its siblings.
    ContainsMarker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateRole {
    Statement,
    Declaration,
    Procedure,
    ProgramUnit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Typed {
    pub kind: TargetKind,
    pub label: Option<u32>,
    pub text: String,
    pub children: Vec<TargetNode>,
    /// Closing line of a construct.
    pub end: Option<String>,
    pub end_label: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub role: TemplateRole,
    /// Used in error messages.
    pub name: String,
    pub text: String,
    pub bindings: BTreeMap<usize, String>,
}

impl Template {
    pub fn new(role: TemplateRole, name: impl Into<String>, text: impl Into<String>) -> Self {
        Template {
            role,
            name: name.into(),
            text: text.into(),
            bindings: BTreeMap::new(),
        }
    }

    pub fn bind(mut self, n: usize, value: impl Into<String>) -> Self {
        self.bindings.insert(n, value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetNode {
    Typed(Typed),
    Template(Template),
}

impl TargetNode {
    fn leaf(kind: TargetKind, text: impl Into<String>) -> Self {
        TargetNode::Typed(Typed {
            kind,
            label: None,
            text: text.into(),
            children: Vec::new(),
            end: None,
            end_label: None,
        })
    }

    pub fn stmt(text: impl Into<String>) -> Self {
        Self::leaf(TargetKind::Statement, text)
    }

    pub fn labeled(label: Option<u32>, text: impl Into<String>) -> Self {
        let mut n = Self::stmt(text);
        if let TargetNode::Typed(t) = &mut n {
            t.label = label;
        }
        n
    }

    pub fn decl(text: impl Into<String>) -> Self {
        Self::leaf(TargetKind::Declaration, text)
    }

    /// A comment line, written as `!` followed by `text`.
    pub fn comment(text: impl Into<String>) -> Self {
        Self::leaf(TargetKind::Comment, format!("!{}", text.into()))
    }

    /// An empty line.
    pub fn blank() -> Self {
        Self::leaf(TargetKind::Comment, "")
    }

    pub fn use_stmt(text: impl Into<String>) -> Self {
        Self::leaf(TargetKind::UseStmt, text)
    }

    pub fn contains() -> Self {
        Self::leaf(TargetKind::ContainsMarker, "contains")
    }

    pub fn marker(text: impl Into<String>) -> Self {
        Self::leaf(TargetKind::ContainsMarker, text)
    }

    pub fn block(kind: TargetKind, text: impl Into<String>, children: Vec<TargetNode>, end: impl Into<String>) -> Self {
        TargetNode::Typed(Typed {
            kind,
            label: None,
            text: text.into(),
            children,
            end: Some(end.into()),
            end_label: None,
        })
    }

    pub fn module(name: &str, children: Vec<TargetNode>) -> Self {
        Self::block(TargetKind::Module, format!("module {name}"), children, format!("end module {name}"))
    }

    pub fn template(t: Template) -> Self {
        TargetNode::Template(t)
    }

    pub fn as_typed(&self) -> Option<&Typed> {
        match self {
            TargetNode::Typed(t) => Some(t),
            TargetNode::Template(_) => None,
        }
    }

    pub fn kind(&self) -> Option<TargetKind> {
        self.as_typed().map(|t| t.kind)
    }

    pub fn children(&self) -> &[TargetNode] {
        match self {
            TargetNode::Typed(t) => &t.children,
            TargetNode::Template(_) => &[],
        }
    }

    /// Pre-order walk over all nodes.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a TargetNode)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

/// Output file: a sequence of top-level nodes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TargetFile {
    pub path: String,
    pub nodes: Vec<TargetNode>,
}

impl TargetFile {
    pub fn modules(&self) -> Vec<&Typed> {
        self.nodes
            .iter()
            .filter_map(|n| n.as_typed())
            .filter(|t| t.kind == TargetKind::Module)
            .collect()
    }

    pub fn programs(&self) -> Vec<&Typed> {
        self.nodes
            .iter()
            .filter_map(|n| n.as_typed())
            .filter(|t| t.kind == TargetKind::Procedure && t.text.starts_with("program "))
            .collect()
    }
}
