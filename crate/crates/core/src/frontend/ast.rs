//! Full-fidelity syntax tree for one program unit.
//!
//! Only the constructs the migration rewrites are parsed in depth; any other
//! host statement is kept as an [`OpaqueStatement`] over its token stream.

use std::fmt;

use crate::frontend::expr::ExprTokenStream;
use crate::frontend::span::{FileId, SourceSpan};
use crate::model::segment::SegmentDefinition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnitKind {
    Program,
    Subroutine,
    Function,
    BlockData,
    /// Contents of an included file: no header, no END.
    Fragment,
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnitKind::Program => "program",
            UnitKind::Subroutine => "subroutine",
            UnitKind::Function => "function",
            UnitKind::BlockData => "block-data",
            UnitKind::Fragment => "fragment",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseType {
    Integer,
    Real,
    DoublePrecision,
    Logical,
    Complex,
    DoubleComplex,
    Character,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CharLen {
    Fixed(u32),
    /// `*(*)`
    Assumed,
    Expr(ExprTokenStream),
}

impl fmt::Display for CharLen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CharLen::Fixed(n) => write!(f, "{n}"),
            CharLen::Assumed => f.write_str("*"),
            CharLen::Expr(e) => f.write_str(&e.render()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeSpec {
    pub base: BaseType,
    /// Byte size from the `*N` suffix (`integer*2`, `real*8`).
    pub size: Option<u32>,
    pub char_len: Option<CharLen>,
}

impl TypeSpec {
    pub fn simple(base: BaseType) -> Self {
        TypeSpec {
            base,
            size: None,
            char_len: None,
        }
    }

    pub fn character(len: CharLen) -> Self {
        TypeSpec {
            base: BaseType::Character,
            size: None,
            char_len: Some(len),
        }
    }

    /// Free-form spelling, e.g. `character(len=40)`, `double precision`.
    pub fn modern(&self) -> String {
        match (self.base, self.size) {
            (BaseType::Integer, None) => "integer".into(),
            (BaseType::Integer, Some(n)) => format!("integer(kind={n})"),
            (BaseType::Real, None) | (BaseType::Real, Some(4)) => "real".into(),
            (BaseType::Real, Some(8)) | (BaseType::DoublePrecision, _) => "double precision".into(),
            (BaseType::Real, Some(n)) => format!("real(kind={n})"),
            (BaseType::Logical, None) => "logical".into(),
            (BaseType::Logical, Some(n)) => format!("logical(kind={n})"),
            (BaseType::Complex, None) | (BaseType::Complex, Some(8)) => "complex".into(),
            (BaseType::Complex, Some(16)) | (BaseType::DoubleComplex, _) => "double complex".into(),
            (BaseType::Complex, Some(n)) => format!("complex(kind={})", n / 2),
            (BaseType::Character, _) => match &self.char_len {
                None | Some(CharLen::Fixed(1)) => "character".into(),
                Some(len) => format!("character(len={len})"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Entity {
    pub name: String,
    pub dims: Vec<ExprTokenStream>,
    /// Per-entity length override (`CHARACTER A*10`).
    pub char_len: Option<CharLen>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Declaration {
    pub type_spec: TypeSpec,
    pub entities: Vec<Entity>,
}

impl Declaration {
    pub fn entity_type(&self, e: &Entity) -> TypeSpec {
        let mut t = self.type_spec.clone();
        if let Some(len) = &e.char_len {
            t.char_len = Some(len.clone());
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImplicitRule {
    pub type_spec: TypeSpec,
    /// Inclusive lowercase letter ranges.
    pub ranges: Vec<(char, char)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ImplicitStmt {
    None,
    Rules(Vec<ImplicitRule>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IncludeFlavor {
    /// `#include "file"`
    PreprocessorHash,
    /// `include 'file'`
    FortranInclude,
    /// `%inc name`
    EsopePercentInc,
    /// `-inc name`
    EsopeDashInc,
}

impl fmt::Display for IncludeFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IncludeFlavor::PreprocessorHash => "#include",
            IncludeFlavor::FortranInclude => "include",
            IncludeFlavor::EsopePercentInc => "%inc",
            IncludeFlavor::EsopeDashInc => "-inc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IncludeDirective {
    pub flavor: IncludeFlavor,
    pub path: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EsopeKind {
    SegmentDef,
    PointerDecl,
    SegIni,
    SegIniCopy,
    SegAct,
    SegActMove,
    SegAdj,
    SegSup,
    SegPrt,
    SegDes,
}

impl EsopeKind {
    pub const ALL: [EsopeKind; 10] = [
        EsopeKind::SegmentDef,
        EsopeKind::PointerDecl,
        EsopeKind::SegIni,
        EsopeKind::SegIniCopy,
        EsopeKind::SegAct,
        EsopeKind::SegActMove,
        EsopeKind::SegAdj,
        EsopeKind::SegSup,
        EsopeKind::SegPrt,
        EsopeKind::SegDes,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            EsopeKind::SegmentDef => "segment",
            EsopeKind::PointerDecl => "pointeur",
            EsopeKind::SegIni | EsopeKind::SegIniCopy => "segini",
            EsopeKind::SegAct | EsopeKind::SegActMove => "segact",
            EsopeKind::SegAdj => "segadj",
            EsopeKind::SegSup => "segsup",
            EsopeKind::SegPrt => "segprt",
            EsopeKind::SegDes => "segdes",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EsopeKind::SegmentDef => "segment",
            EsopeKind::PointerDecl => "pointeur",
            EsopeKind::SegIni => "segini",
            EsopeKind::SegIniCopy => "segcop",
            EsopeKind::SegAct => "segact",
            EsopeKind::SegActMove => "segmov",
            EsopeKind::SegAdj => "segadj",
            EsopeKind::SegSup => "segsup",
            EsopeKind::SegPrt => "segprt",
            EsopeKind::SegDes => "segdes",
        }
    }
}

/// Statement keywords of the Esope dialect.
pub const ESOPE_KEYWORDS: [&str; 8] = [
    "segment", "pointeur", "segini", "segact", "segadj", "segsup", "segprt", "segdes",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EsopeStatement {
    pub kind: EsopeKind,
    /// Pointer operands; `[target, source]` for the copy forms.
    pub operands: Vec<String>,
    /// Segment named by a pointer declaration.
    pub segment: Option<String>,
    /// Array bounds of a pointer declaration, if any.
    pub dims: Vec<ExprTokenStream>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SegmentBlock {
    pub def: SegmentDefinition,
    /// Comment and blank lines found between `SEGMENT` and `END SEGMENT`.
    pub comments: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CallStmt {
    pub name: String,
    pub args: Vec<ExprTokenStream>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub lhs: ExprTokenStream,
    pub rhs: ExprTokenStream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StmtKeyword {
    IfThen,
    ElseIf,
    Else,
    EndIf,
    Do,
    DoWhile,
    EndDo,
    Continue,
    Goto,
    Return,
    Stop,
    Pause,
    Read,
    Write,
    Print,
    Data,
    Common,
    Equivalence,
    Parameter,
    Save,
    Dimension,
    Intrinsic,
    Open,
    Close,
    Inquire,
    Rewind,
    Backspace,
    Endfile,
    Assign,
    Entry,
}

/// Host statement passed through with only expression-level rewriting.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OpaqueStatement {
    pub keyword: Option<StmtKeyword>,
    pub tokens: ExprTokenStream,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Comment(String),
    Blank,
    /// Preprocessor line other than `#include`, kept verbatim.
    Directive(String),
    Include(IncludeDirective),
    IncludeBegin {
        path: String,
        /// Segments whose definitions the included file provides.
        segments: Vec<String>,
    },
    IncludeEnd {
        path: String,
    },
    Segment(SegmentBlock),
    /// One Esope statement line; multi-operand commands hold one entry per operand.
    Esope(Vec<EsopeStatement>),
    Declaration(Declaration),
    Implicit(ImplicitStmt),
    External(Vec<String>),
    Call(CallStmt),
    Assignment(Assignment),
    LogicalIf {
        cond: ExprTokenStream,
        then: Box<NodeKind>,
    },
    /// FORMAT statement; the text after the keyword is kept verbatim.
    Format(String),
    Opaque(OpaqueStatement),
}

impl NodeKind {
    pub fn is_comment_like(&self) -> bool {
        matches!(
            self,
            NodeKind::Comment(_) | NodeKind::Blank | NodeKind::IncludeBegin { .. } | NodeKind::IncludeEnd { .. }
        )
    }

    /// Esope statements carried by this node, looking through logical IFs.
    pub fn esope_statements(&self) -> Vec<&EsopeStatement> {
        match self {
            NodeKind::Esope(v) => v.iter().collect(),
            NodeKind::LogicalIf { then, .. } => then.esope_statements(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub label: Option<u32>,
    pub span: SourceSpan,
    pub kind: NodeKind,
    /// Statement text as written (label excluded); empty for synthetic nodes.
    pub text: String,
}

impl Node {
    pub fn new(kind: NodeKind, span: SourceSpan, text: impl Into<String>) -> Self {
        Node {
            label: None,
            span,
            kind,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProgramUnitAst {
    pub file: FileId,
    pub kind: UnitKind,
    pub name: String,
    pub params: Vec<String>,
    /// Type prefix of a function header (`INTEGER FUNCTION F(X)`).
    pub return_type: Option<TypeSpec>,
    pub header_span: Option<SourceSpan>,
    /// Comment, blank and directive lines before the header.
    pub leading: Vec<Node>,
    pub body: Vec<Node>,
    pub end_span: Option<SourceSpan>,
    /// Non-statement lines after END.
    pub trailing: Vec<Node>,
}

impl ProgramUnitAst {
    /// All nodes in textual order (leading, body, trailing).
    pub fn all_nodes(&self) -> impl Iterator<Item = &Node> {
        self.leading.iter().chain(self.body.iter()).chain(self.trailing.iter())
    }

    pub fn segments(&self) -> impl Iterator<Item = &SegmentBlock> {
        self.body.iter().filter_map(|n| match &n.kind {
            NodeKind::Segment(s) => Some(s),
            _ => None,
        })
    }
}
