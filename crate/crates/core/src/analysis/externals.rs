//! Sorting typed names into variables, function result types and external
//! routine declarations.

use std::collections::BTreeSet;

use crate::analysis::types::invoked_functions;
use crate::error::{Error, Phase, Result};
use crate::model::{ProjectModel, SymEvent, UnitSummary};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExternalClassification {
    /// Names listed in an EXTERNAL statement.
    pub external_routine_decl: BTreeSet<String>,
    /// Type declarations that give the result type of a referenced function.
    pub return_type_decl: BTreeSet<String>,
    pub plain_variable_decl: BTreeSet<String>,
}

fn assigned(s: &UnitSummary) -> BTreeSet<String> {
    s.events
        .iter()
        .filter_map(|e| match e {
            SymEvent::Var { name, write: true } => Some(name.clone()),
            _ => None,
        })
        .collect()
}

pub fn classify_external_names(s: &UnitSummary, _model: &ProjectModel) -> Result<ExternalClassification> {
    let invoked = invoked_functions(s);
    let written = assigned(s);
    let mut out = ExternalClassification {
        external_routine_decl: s.decls.externals.clone(),
        ..Default::default()
    };
    for name in s.decls.types.keys() {
        if s.decls.externals.contains(name) {
            // typed external function: its declaration is a result type
            out.return_type_decl.insert(name.clone());
            continue;
        }
        let is_invoked = invoked.contains(name) && *name != s.name;
        if is_invoked && written.contains(name) {
            return Err(Error::new(
                Phase::Analysis,
                format!("`{name}` is both assigned and referenced as a function in `{}`", s.name),
            ));
        }
        if is_invoked {
            out.return_type_decl.insert(name.clone());
        } else {
            out.plain_variable_decl.insert(name.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::include::FileKey;
    use crate::frontend::parser::parse_file;
    use crate::frontend::span::FileId;
    use crate::model::{build_project_model, FileUnits, IntentCatalog};

    fn classify(src: &str) -> Result<ExternalClassification> {
        let units = parse_file(FileId(0), src).unwrap().units;
        let m = build_project_model(
            &[FileUnits {
                key: FileKey::Source("t.f".into()),
                units,
            }],
            Default::default(),
            IntentCatalog::default(),
        )?;
        let s = m.units.values().next().unwrap();
        classify_external_names(s, &m)
    }

    #[test]
    fn return_type_declaration() {
        let c = classify("      SUBROUTINE S(Y)\n      INTEGER AFUNCTION\n      Y = AFUNCTION(3)\n      END\n").unwrap();
        assert!(c.return_type_decl.contains("afunction"));
    }

    #[test]
    fn plain_variable() {
        let c = classify("      SUBROUTINE S\n      INTEGER N\n      N = 1\n      END\n").unwrap();
        assert!(c.plain_variable_decl.contains("n"));
    }

    #[test]
    fn external_statement() {
        let c = classify("      SUBROUTINE S\n      EXTERNAL MYSUB\n      CALL MYSUB\n      END\n").unwrap();
        assert!(c.external_routine_decl.contains("mysub"));
    }

    #[test]
    fn assigned_and_invoked_is_error() {
        assert!(classify("      SUBROUTINE S\n      INTEGER F\n      F = 1\n      X = F(2)\n      END\n").is_err());
    }
}
