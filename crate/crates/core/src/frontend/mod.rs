//! Fixed-form lexing, island-grammar parsing and include resolution.

pub mod ast;
pub mod expr;
pub mod include;
pub mod lexer;
pub mod lines;
pub mod parser;
pub mod project;
pub mod span;

pub use ast::{EsopeKind, EsopeStatement, IncludeDirective, IncludeFlavor, Node, NodeKind, ProgramUnitAst, UnitKind};
pub use expr::{scan_expression, ExprToken, ExprTokenStream};
pub use include::{resolve_includes, FileKey, FragmentCache, SearchPaths};
pub use lines::{split_logical_lines, LineKind, LogicalLine};
pub use parser::{parse_file, parse_segment_definition, parse_unit, ParsedFile};
pub use project::{discover, load_project, Encoding, LoadError, LoadedProject, SourceSet};
pub use span::{FileId, SourceMap, SourceSpan};
