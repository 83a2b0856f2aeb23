//! Facts the transformation needs: explicit types, external-name roles,
//! parameter intents and module imports.

pub mod diagnostics;
pub mod externals;
pub mod intent;
pub mod types;
pub mod uses;

pub use diagnostics::{negative_pointer_warnings, unit_census, EsopeCensus, Warning};
pub use externals::{classify_external_names, ExternalClassification};
pub use intent::{infer_intents, solve, solve_raw, Access, DataflowProgram, IntentTable};
pub use types::{infer_implicit_types, ImplicitRules, InferredType, TypeAssignment, TypeOrigin};
pub use uses::{compute_uses, UseImport};
