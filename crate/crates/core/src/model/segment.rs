use std::fmt;

use crate::frontend::expr::{ExprToken, ExprTokenStream};
use crate::frontend::span::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldType {
    Integer,
    Real,
    DoublePrecision,
    Logical,
    Character(u32),
    /// Pointer to an instance of the named segment.
    Pointer(String),
}

impl FieldType {
    /// Free-form type spelling used for the component declaration.
    pub fn modern(&self) -> String {
        match self {
            FieldType::Integer => "integer".into(),
            FieldType::Real => "real".into(),
            FieldType::DoublePrecision => "double precision".into(),
            FieldType::Logical => "logical".into(),
            FieldType::Character(n) => format!("character(len={n})"),
            FieldType::Pointer(seg) => format!("type({seg})"),
        }
    }

    /// Initializer for a scalar component.
    pub fn zero(&self) -> &'static str {
        match self {
            FieldType::Integer => "0",
            FieldType::Real => "0.0",
            FieldType::DoublePrecision => "0.0d0",
            FieldType::Logical => ".false.",
            FieldType::Character(_) => "''",
            FieldType::Pointer(_) => "null()",
        }
    }
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldType::Character(n) => write!(f, "character*{n}"),
            FieldType::Pointer(s) => write!(f, "pointeur.{s}"),
            other => f.write_str(&other.modern()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldDef {
    pub name: String,
    pub base_type: FieldType,
    /// Empty for scalars.
    pub dims: Vec<ExprTokenStream>,
    pub is_dynamic: bool,
}

impl FieldDef {
    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self.base_type, FieldType::Pointer(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SegmentDefinition {
    pub name: String,
    pub fields: Vec<FieldDef>,
    /// In first-encounter order over the field dimensions.
    pub dimensioning_vars: Vec<String>,
    pub default_pointer: String,
    pub span: SourceSpan,
}

impl SegmentDefinition {
    pub fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn dynamic_fields(&self) -> impl Iterator<Item = &FieldDef> {
        self.fields.iter().filter(|f| f.is_dynamic)
    }

    pub fn module_name(&self) -> String {
        format!("{}_mod", self.name)
    }
}

/// Identifiers used as variables in a dimension expression. Names
/// immediately followed by `(` are function references and are skipped.
pub fn dimension_identifiers(dim: &ExprTokenStream) -> Vec<String> {
    let mut out = Vec::new();
    for (i, t) in dim.0.iter().enumerate() {
        if let ExprToken::Ident(name) = &t.tok {
            let called = dim.0.get(i + 1).map(|n| n.tok.is_punct('(')).unwrap_or(false);
            if !called && !out.contains(name) {
                out.push(name.clone());
            }
        }
    }
    out
}
