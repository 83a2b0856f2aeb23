//! Explicit types for every symbol of a unit, following the implicit typing
//! rules in effect there.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Phase, Result};
use crate::frontend::ast::{BaseType, ImplicitRule, TypeSpec, UnitKind};
use crate::model::census::is_intrinsic;
use crate::model::{Decls, ProjectModel, SymEvent, UnitSummary};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum InferredType {
    Basic(TypeSpec),
    Pointer { segment: String, array: bool },
}

impl fmt::Display for InferredType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InferredType::Basic(t) => f.write_str(&t.modern()),
            InferredType::Pointer { segment, array: false } => write!(f, "type({segment}), pointer"),
            InferredType::Pointer { segment, array: true } => write!(f, "type({segment}_ref)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeOrigin {
    Declared,
    ImplicitRule,
    PointeurDecl,
    FunctionReturn,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeAssignment {
    pub symbol: String,
    pub ty: InferredType,
    pub origin: TypeOrigin,
}

/// Letter-to-type table of one unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplicitRules {
    table: [Option<TypeSpec>; 26],
}

impl Default for ImplicitRules {
    /// `i` through `n` are integers, every other letter real.
    fn default() -> Self {
        let table = std::array::from_fn(|i| {
            let c = (b'a' + i as u8) as char;
            Some(TypeSpec::simple(if ('i'..='n').contains(&c) { BaseType::Integer } else { BaseType::Real }))
        });
        ImplicitRules { table }
    }
}

impl ImplicitRules {
    pub fn none() -> Self {
        ImplicitRules {
            table: std::array::from_fn(|_| None),
        }
    }

    pub fn apply(&mut self, rule: &ImplicitRule) {
        for &(a, b) in &rule.ranges {
            for c in a..=b {
                self.table[(c as u8 - b'a') as usize] = Some(rule.type_spec.clone());
            }
        }
    }

    pub fn from_decls(decls: &Decls) -> Self {
        let mut r = if decls.implicit_none { ImplicitRules::none() } else { ImplicitRules::default() };
        for rule in &decls.implicit_rules {
            r.apply(rule);
        }
        r
    }

    pub fn type_of(&self, name: &str) -> Option<TypeSpec> {
        let c = name.chars().next()?.to_ascii_lowercase();
        if !c.is_ascii_lowercase() {
            return None;
        }
        self.table[(c as u8 - b'a') as usize].clone()
    }
}

/// Result type of a function unit: header prefix, a declaration of the
/// function name in its body, or the implicit rule for its first letter.
pub fn function_return_type(s: &UnitSummary) -> Option<TypeSpec> {
    if let Some(t) = &s.return_type {
        return Some(t.clone());
    }
    if let Some(t) = s.decls.types.get(&s.name) {
        return Some(t.clone());
    }
    ImplicitRules::from_decls(&s.decls).type_of(&s.name)
}

/// Names invoked as functions in expressions, other than intrinsics.
pub fn invoked_functions(s: &UnitSummary) -> BTreeSet<String> {
    s.events
        .iter()
        .filter_map(|e| match e {
            SymEvent::Invoke { name, .. } if !is_intrinsic(name) && !s.decls.intrinsics.contains(name) => Some(name.clone()),
            _ => None,
        })
        .collect()
}

pub fn called_subroutines(s: &UnitSummary) -> BTreeSet<String> {
    s.events
        .iter()
        .filter_map(|e| match e {
            SymEvent::Call { name, .. } => Some(name.clone()),
            _ => None,
        })
        .collect()
}

pub fn infer_implicit_types(s: &UnitSummary, model: &ProjectModel) -> Result<Vec<TypeAssignment>> {
    let rules = ImplicitRules::from_decls(&s.decls);
    let called = called_subroutines(s);
    let invoked = invoked_functions(s);

    for name in called.iter() {
        if s.referenced.contains(name) {
            return Err(Error::new(
                Phase::Analysis,
                format!("`{name}` is used both as a variable and as a called routine in `{}`", s.name),
            ));
        }
    }
    for name in invoked.iter() {
        if name != &s.name && s.referenced.contains(name) {
            return Err(Error::new(
                Phase::Analysis,
                format!("`{name}` is used both as a variable and as a function in `{}`", s.name),
            ));
        }
    }

    let mut symbols: BTreeSet<String> = s.referenced.clone();
    symbols.extend(s.params.iter().cloned());
    symbols.extend(s.decls.types.keys().cloned());
    symbols.extend(s.decls.pointers.keys().cloned());
    symbols.extend(s.decls.arrays.keys().cloned());
    symbols.extend(s.decls.constants.iter().cloned());
    symbols.extend(s.decls.commons.iter().cloned());
    symbols.extend(invoked.iter().cloned());
    if s.kind == UnitKind::Function {
        symbols.insert(s.name.clone());
    }

    let mut out = Vec::new();
    for name in symbols {
        if called.contains(&name) && !invoked.contains(&name) {
            continue;
        }
        let (ty, origin) = if let Some(p) = s.decls.pointers.get(&name) {
            (
                InferredType::Pointer {
                    segment: p.segment.clone(),
                    array: !p.dims.is_empty(),
                },
                TypeOrigin::PointeurDecl,
            )
        } else if s.scope.contains(&name) && !s.decls.types.contains_key(&name) {
            (
                InferredType::Pointer {
                    segment: name.clone(),
                    array: false,
                },
                TypeOrigin::PointeurDecl,
            )
        } else if let Some(t) = s.decls.types.get(&name) {
            let origin = if invoked.contains(&name) && name != s.name {
                TypeOrigin::FunctionReturn
            } else {
                TypeOrigin::Declared
            };
            (InferredType::Basic(t.clone()), origin)
        } else if name == s.name && s.kind == UnitKind::Function {
            let t = function_return_type(s).ok_or_else(|| no_type(&name, s))?;
            (InferredType::Basic(t), TypeOrigin::FunctionReturn)
        } else if let Some(callee) = model.units.get(&name).filter(|u| u.kind == UnitKind::Function && invoked.contains(&name)) {
            let t = function_return_type(callee).ok_or_else(|| no_type(&name, callee))?;
            (InferredType::Basic(t), TypeOrigin::FunctionReturn)
        } else if invoked.contains(&name) {
            let t = rules.type_of(&name).ok_or_else(|| no_type(&name, s))?;
            (InferredType::Basic(t), TypeOrigin::FunctionReturn)
        } else {
            let t = rules.type_of(&name).ok_or_else(|| no_type(&name, s))?;
            (InferredType::Basic(t), TypeOrigin::ImplicitRule)
        };
        out.push(TypeAssignment { symbol: name, ty, origin });
    }
    Ok(out)
}

fn no_type(name: &str, s: &UnitSummary) -> Error {
    Error::new(
        Phase::Analysis,
        format!("`{name}` has no type in `{}` (IMPLICIT NONE is in effect)", s.name),
    )
}
