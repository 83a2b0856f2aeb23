//! Module imports needed by a migrated unit.

use std::collections::BTreeMap;
use std::fmt;

use crate::analysis::types::{called_subroutines, invoked_functions};
use crate::error::{Error, Phase, Result};
use crate::model::{is_intrinsic, ProjectModel, UnitSummary};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct UseImport {
    pub module: String,
    /// `(local, remote)` renames.
    pub renames: Vec<(String, String)>,
}

impl fmt::Display for UseImport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "use {}", self.module)?;
        for (local, remote) in &self.renames {
            write!(f, ", {local} => {remote}")?;
        }
        Ok(())
    }
}

/// Name under which a segment's type is visible in a unit. A unit that
/// uses the default pointer of `seg` has a variable called `seg`, so the
/// type is imported as `seg_t`.
pub fn type_alias(s: &UnitSummary, segment: &str) -> String {
    if uses_default_pointer(s, segment) {
        format!("{segment}_t")
    } else {
        segment.to_string()
    }
}

pub fn uses_default_pointer(s: &UnitSummary, segment: &str) -> bool {
    s.scope.iter().any(|x| x == segment) && s.referenced.contains(segment) && !s.decls.types.contains_key(segment)
}

pub fn compute_uses(s: &UnitSummary, model: &ProjectModel) -> Result<Vec<UseImport>> {
    let mut imports: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    for seg in s.used_segments() {
        let renames = if uses_default_pointer(s, &seg) {
            vec![(format!("{seg}_t"), seg.clone())]
        } else {
            Vec::new()
        };
        imports.insert(format!("{seg}_mod"), renames);
    }
    let mut routines = called_subroutines(s);
    routines.extend(invoked_functions(s));
    for r in routines {
        if r == s.name {
            continue;
        }
        if let Some(u) = model.units.get(&r) {
            if u.is_subprogram() {
                imports.entry(u.module_name()).or_default();
                continue;
            }
        }
        let known = is_intrinsic(&r)
            || s.decls.externals.contains(&r)
            || s.decls.intrinsics.contains(&r)
            || model.intent_catalog.contains(&r);
        if !known {
            return Err(Error::new(
                Phase::Analysis,
                format!("`{r}` is required by `{}` but defined by no module and not in the intent catalog", s.name),
            ));
        }
    }
    Ok(imports
        .into_iter()
        .map(|(module, renames)| UseImport { module, renames })
        .collect())
}
