//! Island-grammar parser: Esope constructs and the statements the migration
//! rewrites are parsed in depth, every other host statement stays opaque.

use crate::error::{Error, Result};
use crate::frontend::ast::*;
use crate::frontend::expr::{scan_expression, split_top_level, ExprToken, ExprTokenStream, LiteralKind, Token};
use crate::frontend::lexer::{tokenize, LexKind, Lexeme};
use crate::frontend::lines::{split_logical_lines, LineKind, LogicalLine};
use crate::frontend::span::{FileId, SourceSpan};
use crate::model::segment::{dimension_identifiers, FieldDef, FieldType, SegmentDefinition};

/// All program units of one source file, in textual order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFile {
    pub file: FileId,
    pub units: Vec<ProgramUnitAst>,
}

impl ParsedFile {
    pub fn is_fragment(&self) -> bool {
        self.units.iter().all(|u| u.kind == UnitKind::Fragment)
    }
}

fn lex_line(line: &LogicalLine) -> Result<Vec<Lexeme>> {
    tokenize(&line.text, line.span)
}

fn is_end_statement(lex: &[Lexeme]) -> bool {
    match lex {
        [l] => l.is(LexKind::Ident, "end"),
        [l, k, ..] if l.is(LexKind::Ident, "end") => {
            k.kind == LexKind::Ident && matches!(k.text.as_str(), "program" | "subroutine" | "function" | "block" | "blockdata")
        }
        _ => false,
    }
}

fn is_segment_start(lex: &[Lexeme]) -> bool {
    lex.first().map(|l| l.is(LexKind::Ident, "segment")).unwrap_or(false)
}

fn is_segment_end(lex: &[Lexeme]) -> bool {
    match lex {
        [l] => l.is(LexKind::Ident, "endsegment"),
        [a, b] => a.is(LexKind::Ident, "end") && b.is(LexKind::Ident, "segment"),
        _ => false,
    }
}

/// Splits a source file into program units. A file with no END statement is
/// a single fragment (the usual shape of an included file).
pub fn parse_file(file: FileId, source: &str) -> Result<ParsedFile> {
    let lines = split_logical_lines(file, source)?;
    let mut groups: Vec<Vec<LogicalLine>> = Vec::new();
    let mut cur: Vec<LogicalLine> = Vec::new();
    let mut in_segment = false;
    for line in lines {
        let mut ends_unit = false;
        if line.is_statement() {
            let lex = lex_line(&line)?;
            if is_segment_start(&lex) {
                in_segment = true;
            } else if is_segment_end(&lex) {
                in_segment = false;
            } else if !in_segment && is_end_statement(&lex) {
                ends_unit = true;
            }
        }
        cur.push(line);
        if ends_unit {
            groups.push(std::mem::take(&mut cur));
        }
    }

    let mut units = Vec::new();
    if groups.is_empty() {
        let unit = parse_unit(&cur)?;
        return Ok(ParsedFile { file, units: vec![unit] });
    }
    if let Some(stmt) = cur.iter().find(|l| l.is_statement()) {
        return Err(Error::parse(stmt.span, "statement after the last END (missing END statement?)"));
    }
    for g in &groups {
        units.push(parse_unit(g)?);
    }
    if !cur.is_empty() {
        let tail = cur.iter().map(non_statement_node).collect::<Result<Vec<_>>>()?;
        units.last_mut().expect("at least one unit").trailing = tail;
    }
    Ok(ParsedFile { file, units })
}

fn non_statement_node(line: &LogicalLine) -> Result<Node> {
    let kind = match line.kind {
        LineKind::Comment => NodeKind::Comment(line.text.clone()),
        LineKind::Blank => NodeKind::Blank,
        LineKind::Directive => parse_directive(line)?,
        LineKind::Statement => unreachable!("statement passed as non-statement line"),
    };
    Ok(Node::new(kind, line.span, line.text.clone()))
}

fn unquote(s: &str) -> Option<&str> {
    let s = s.trim();
    let first = s.chars().next()?;
    let close = match first {
        '"' => '"',
        '\'' => '\'',
        '<' => '>',
        _ => return None,
    };
    let rest = &s[1..];
    let end = rest.find(close)?;
    Some(&rest[..end])
}

fn parse_directive(line: &LogicalLine) -> Result<NodeKind> {
    let text = line.text.trim();
    let lower = text.to_ascii_lowercase();
    if let Some(rest) = lower.strip_prefix('#') {
        let rest_trim = rest.trim_start();
        if let Some(after) = rest_trim.strip_prefix("include") {
            // recover original case for the path
            let offset = text.len() - after.len();
            let path = unquote(&text[offset..])
                .ok_or_else(|| Error::parse(line.span, "malformed #include directive"))?;
            return Ok(NodeKind::Include(IncludeDirective {
                flavor: IncludeFlavor::PreprocessorHash,
                path: path.to_string(),
                span: line.span,
            }));
        }
        return Ok(NodeKind::Directive(text.to_string()));
    }
    let flavor = if lower.starts_with("%inc") {
        IncludeFlavor::EsopePercentInc
    } else {
        IncludeFlavor::EsopeDashInc
    };
    let path = text[4..].trim();
    let path = unquote(path).unwrap_or(path);
    if path.is_empty() {
        return Err(Error::parse(line.span, format!("{flavor} without a file name")));
    }
    Ok(NodeKind::Include(IncludeDirective {
        flavor,
        path: path.to_string(),
        span: line.span,
    }))
}

struct Header {
    kind: UnitKind,
    name: String,
    params: Vec<String>,
    return_type: Option<TypeSpec>,
}

fn parse_param_list(tokens: &[Token], span: SourceSpan) -> Result<Vec<String>> {
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    if !tokens[0].tok.is_punct('(') || !tokens.last().unwrap().tok.is_punct(')') {
        return Err(Error::parse(span, "malformed parameter list"));
    }
    let inner = &tokens[1..tokens.len() - 1];
    let mut params = Vec::new();
    for part in split_top_level(inner, |t| t.is_punct(',')) {
        match part.0.as_slice() {
            [t] => match &t.tok {
                ExprToken::Ident(n) => params.push(n.clone()),
                _ => return Err(Error::parse(span, format!("unsupported dummy argument `{}`", part.render()))),
            },
            _ => return Err(Error::parse(span, format!("unsupported dummy argument `{}`", part.render()))),
        }
    }
    Ok(params)
}

fn parse_header(tokens: &ExprTokenStream, span: SourceSpan) -> Result<Option<Header>> {
    let toks = &tokens.0;
    let Some(first) = toks.first().and_then(|t| t.tok.ident()) else {
        return Ok(None);
    };
    let name_at = |i: usize| -> Result<String> {
        toks.get(i)
            .and_then(|t| t.tok.ident())
            .map(str::to_string)
            .ok_or_else(|| Error::parse(span, "missing program unit name"))
    };
    match first {
        "program" if toks.len() == 2 => Ok(Some(Header {
            kind: UnitKind::Program,
            name: name_at(1)?,
            params: Vec::new(),
            return_type: None,
        })),
        "subroutine" if toks.len() >= 2 => Ok(Some(Header {
            kind: UnitKind::Subroutine,
            name: name_at(1)?,
            params: parse_param_list(&toks[2..], span)?,
            return_type: None,
        })),
        "function" if toks.len() >= 2 => Ok(Some(Header {
            kind: UnitKind::Function,
            name: name_at(1)?,
            params: parse_param_list(&toks[2..], span)?,
            return_type: None,
        })),
        "blockdata" => Ok(Some(Header {
            kind: UnitKind::BlockData,
            name: toks.get(1).and_then(|t| t.tok.ident()).unwrap_or("blockdata").to_string(),
            params: Vec::new(),
            return_type: None,
        })),
        "block" if toks.get(1).map(|t| t.tok.is_ident("data")).unwrap_or(false) => Ok(Some(Header {
            kind: UnitKind::BlockData,
            name: toks.get(2).and_then(|t| t.tok.ident()).unwrap_or("blockdata").to_string(),
            params: Vec::new(),
            return_type: None,
        })),
        _ => {
            if let Some((ts, used)) = parse_type_spec(toks, span)? {
                if toks.get(used).map(|t| t.tok.is_ident("function")).unwrap_or(false) {
                    return Ok(Some(Header {
                        kind: UnitKind::Function,
                        name: name_at(used + 1)?,
                        params: parse_param_list(&toks[used + 2..], span)?,
                        return_type: Some(ts),
                    }));
                }
            }
            Ok(None)
        }
    }
}

/// Parses the lines of exactly one program unit, or of one included fragment.
pub fn parse_unit(lines: &[LogicalLine]) -> Result<ProgramUnitAst> {
    let file = lines.first().map(|l| l.span.file).unwrap_or_default();
    let first_stmt = lines.iter().position(|l| l.is_statement());
    let mut unit = ProgramUnitAst {
        file,
        kind: UnitKind::Fragment,
        name: String::new(),
        params: Vec::new(),
        return_type: None,
        header_span: None,
        leading: Vec::new(),
        body: Vec::new(),
        end_span: None,
        trailing: Vec::new(),
    };

    let Some(first_stmt) = first_stmt else {
        unit.body = parse_body(lines)?;
        return Ok(unit);
    };

    let last_stmt = lines.iter().rposition(|l| l.is_statement()).unwrap();
    let has_end = is_end_statement(&lex_line(&lines[last_stmt])?);
    let first = &lines[first_stmt];
    let first_tokens = scan_expression(&lex_line(first)?, first.span)?;
    let header = parse_header(&first_tokens, first.span)?;

    let body_start = match header {
        Some(h) => {
            if !has_end {
                return Err(Error::parse(first.span, format!("{} `{}` has no END statement", h.kind, h.name)));
            }
            unit.kind = h.kind;
            unit.name = h.name;
            unit.params = h.params;
            unit.return_type = h.return_type;
            unit.header_span = Some(first.span);
            unit.leading = lines[..first_stmt].iter().map(non_statement_node).collect::<Result<_>>()?;
            first_stmt + 1
        }
        None if has_end => {
            unit.kind = UnitKind::Program;
            unit.name = "main".into();
            unit.leading = lines[..first_stmt].iter().map(non_statement_node).collect::<Result<_>>()?;
            first_stmt
        }
        None => 0,
    };

    if has_end {
        unit.end_span = Some(lines[last_stmt].span);
        unit.body = parse_body(&lines[body_start..last_stmt])?;
        unit.trailing = lines[last_stmt + 1..].iter().map(non_statement_node).collect::<Result<_>>()?;
    } else {
        unit.body = parse_body(&lines[body_start..])?;
    }
    Ok(unit)
}

fn parse_body(lines: &[LogicalLine]) -> Result<Vec<Node>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = &lines[i];
        if !line.is_statement() {
            out.push(non_statement_node(line)?);
            i += 1;
            continue;
        }
        let lex = lex_line(line)?;
        if is_segment_start(&lex) {
            let mut j = i + 1;
            let mut end = None;
            while j < lines.len() {
                if lines[j].is_statement() {
                    let l = lex_line(&lines[j])?;
                    if is_segment_end(&l) {
                        end = Some(j);
                        break;
                    }
                    if is_end_statement(&l) || is_segment_start(&l) {
                        break;
                    }
                }
                j += 1;
            }
            let Some(end) = end else {
                return Err(Error::parse(line.span, "SEGMENT block without END SEGMENT"));
            };
            let block = &lines[i..=end];
            let def = parse_segment_definition(block)?;
            let comments = block
                .iter()
                .filter(|l| !l.is_statement())
                .map(non_statement_node)
                .collect::<Result<Vec<_>>>()?;
            let mut node = Node::new(
                NodeKind::Segment(SegmentBlock { def, comments }),
                line.span.to(lines[end].span),
                line.text.clone(),
            );
            node.label = line.label;
            out.push(node);
            i = end + 1;
            continue;
        }
        if is_segment_end(&lex) {
            return Err(Error::parse(line.span, "END SEGMENT without SEGMENT"));
        }
        let kind = classify_lexemes(&lex, line)?;
        let mut node = Node::new(kind, line.span, line.text.clone());
        node.label = line.label;
        out.push(node);
        i += 1;
    }
    Ok(out)
}

/// Classifies one statement line.
pub fn classify_statement(line: &LogicalLine) -> Result<NodeKind> {
    match line.kind {
        LineKind::Statement => classify_lexemes(&lex_line(line)?, line),
        _ => non_statement_node(line).map(|n| n.kind),
    }
}

fn ident_at<'a>(lex: &'a [Lexeme], i: usize) -> Option<&'a str> {
    lex.get(i).filter(|l| l.kind == LexKind::Ident).map(|l| l.text.as_str())
}

fn esope_command_kind(word: &str) -> Option<EsopeKind> {
    Some(match word {
        "segini" => EsopeKind::SegIni,
        "segact" => EsopeKind::SegAct,
        "segadj" => EsopeKind::SegAdj,
        "segsup" => EsopeKind::SegSup,
        "segprt" => EsopeKind::SegPrt,
        "segdes" => EsopeKind::SegDes,
        _ => return None,
    })
}

fn parse_esope_command(kind: EsopeKind, lex: &[Lexeme], span: SourceSpan) -> Result<Vec<EsopeStatement>> {
    let bad = |msg: &str| Error::parse(span, format!("malformed {} command: {msg}", kind.keyword().to_uppercase()));
    let mut i = 1;
    if lex.get(i).map(|l| l.kind == LexKind::Comma).unwrap_or(false) {
        i += 1;
    }
    // skips an optional `*mode` suffix (`SEGACT P*MOD`)
    let skip_mode = |i: &mut usize| -> Result<()> {
        if lex.get(*i).map(|l| l.is_op("*")).unwrap_or(false) {
            if ident_at(lex, *i + 1).is_none() {
                return Err(bad("expected a mode name after `*`"));
            }
            *i += 2;
        }
        Ok(())
    };
    let mut out = Vec::new();
    loop {
        let Some(p) = ident_at(lex, i) else {
            return Err(bad("expected a pointer name"));
        };
        i += 1;
        skip_mode(&mut i)?;
        if lex.get(i).map(|l| l.is_op("=")).unwrap_or(false) {
            let copy_kind = match kind {
                EsopeKind::SegIni => EsopeKind::SegIniCopy,
                EsopeKind::SegAct => EsopeKind::SegActMove,
                _ => return Err(bad("`=` form is only valid for SEGINI and SEGACT")),
            };
            let Some(q) = ident_at(lex, i + 1) else {
                return Err(bad("expected a source pointer after `=`"));
            };
            i += 2;
            skip_mode(&mut i)?;
            out.push(EsopeStatement {
                kind: copy_kind,
                operands: vec![p.to_string(), q.to_string()],
                segment: None,
                dims: Vec::new(),
            });
        } else {
            out.push(EsopeStatement {
                kind,
                operands: vec![p.to_string()],
                segment: None,
                dims: Vec::new(),
            });
        }
        match lex.get(i) {
            None => break,
            Some(l) if l.kind == LexKind::Comma => i += 1,
            Some(l) => return Err(bad(&format!("unexpected `{}`", l.text))),
        }
    }
    Ok(out)
}

fn lex_matching_paren(lex: &[Lexeme], open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, l) in lex.iter().enumerate().skip(open) {
        match l.kind {
            LexKind::LParen => depth += 1,
            LexKind::RParen => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// `POINTEUR p.seg, q(n).seg`
fn parse_pointeur(lex: &[Lexeme], span: SourceSpan) -> Result<Vec<EsopeStatement>> {
    let bad = |msg: &str| Error::parse(span, format!("malformed POINTEUR declaration: {msg}"));
    let mut i = 1;
    if lex.get(i).map(|l| l.kind == LexKind::Comma).unwrap_or(false) {
        i += 1;
    }
    let mut out = Vec::new();
    loop {
        let Some(p) = ident_at(lex, i) else {
            return Err(bad("expected a pointer name"));
        };
        i += 1;
        let mut dims = Vec::new();
        if lex.get(i).map(|l| l.kind == LexKind::LParen).unwrap_or(false) {
            let close = lex_matching_paren(lex, i).ok_or_else(|| bad("unbalanced parentheses"))?;
            dims = scan_expression(&lex[i + 1..close], span)?.split_commas();
            i = close + 1;
        }
        if !lex.get(i).map(|l| l.kind == LexKind::Dot).unwrap_or(false) {
            return Err(bad("expected `.segment` after the pointer name"));
        }
        let Some(seg) = ident_at(lex, i + 1) else {
            return Err(bad("expected a segment name after `.`"));
        };
        i += 2;
        out.push(EsopeStatement {
            kind: EsopeKind::PointerDecl,
            operands: vec![p.to_string()],
            segment: Some(seg.to_string()),
            dims,
        });
        match lex.get(i) {
            None => break,
            Some(l) if l.kind == LexKind::Comma => i += 1,
            Some(l) => return Err(bad(&format!("unexpected `{}`", l.text))),
        }
    }
    Ok(out)
}

fn int_literal(t: &ExprToken) -> Option<u32> {
    match t {
        ExprToken::Literal(l) if l.kind == LiteralKind::Int => l.text.parse().ok(),
        _ => None,
    }
}

/// Parses a leading FORTRAN 77 type specifier; returns it with the number
/// of tokens consumed.
pub fn parse_type_spec(toks: &[Token], span: SourceSpan) -> Result<Option<(TypeSpec, usize)>> {
    let Some(word) = toks.first().and_then(|t| t.tok.ident()) else {
        return Ok(None);
    };
    let second = toks.get(1).and_then(|t| t.tok.ident());
    let (base, mut used) = match (word, second) {
        ("integer", _) => (BaseType::Integer, 1),
        ("real", _) => (BaseType::Real, 1),
        ("logical", _) => (BaseType::Logical, 1),
        ("complex", _) => (BaseType::Complex, 1),
        ("character", _) => (BaseType::Character, 1),
        ("doubleprecision", _) => (BaseType::DoublePrecision, 1),
        ("doublecomplex", _) => (BaseType::DoubleComplex, 1),
        ("double", Some("precision")) => (BaseType::DoublePrecision, 2),
        ("double", Some("complex")) => (BaseType::DoubleComplex, 2),
        _ => return Ok(None),
    };
    let mut spec = TypeSpec::simple(base);
    if toks.get(used).map(|t| t.tok.is_op("*")).unwrap_or(false) {
        let (len, n) = parse_star_length(&toks[used + 1..], span)?;
        used += 1 + n;
        if base == BaseType::Character {
            spec.char_len = Some(len);
        } else {
            match len {
                CharLen::Fixed(n) => spec.size = Some(n),
                _ => return Err(Error::parse(span, "type size must be an integer literal")),
            }
        }
    }
    Ok(Some((spec, used)))
}

fn parse_star_length(toks: &[Token], span: SourceSpan) -> Result<(CharLen, usize)> {
    let Some(first) = toks.first() else {
        return Err(Error::parse(span, "missing length after `*`"));
    };
    if let Some(n) = int_literal(&first.tok) {
        return Ok((CharLen::Fixed(n), 1));
    }
    if first.tok.is_punct('(') {
        let close = crate::frontend::expr::matching_paren(toks, 0)
            .ok_or_else(|| Error::parse(span, "unbalanced parentheses in length"))?;
        let inner = &toks[1..close];
        let len = match inner {
            [t] if t.tok.is_op("*") => CharLen::Assumed,
            [t] if int_literal(&t.tok).is_some() => CharLen::Fixed(int_literal(&t.tok).unwrap()),
            _ => CharLen::Expr(ExprTokenStream(inner.to_vec())),
        };
        return Ok((len, close + 1));
    }
    Err(Error::parse(span, "malformed length after `*`"))
}

fn parse_declaration(toks: &[Token], span: SourceSpan) -> Result<Option<Declaration>> {
    let Some((type_spec, mut i)) = parse_type_spec(toks, span)? else {
        return Ok(None);
    };
    if toks.get(i).map(|t| t.tok.is_punct(',')).unwrap_or(false) {
        i += 1;
    }
    if toks.get(i).map(|t| t.tok.is_op("::")).unwrap_or(false) {
        i += 1;
    }
    // `REAL = 1.0` and the like: not a declaration
    if i >= toks.len() || toks[i].tok.ident().is_none() {
        return Ok(None);
    }
    let mut entities = Vec::new();
    for part in split_top_level(&toks[i..], |t| t.is_punct(',')) {
        entities.push(parse_entity(&part.0, span)?);
    }
    Ok(Some(Declaration { type_spec, entities }))
}

fn parse_entity(toks: &[Token], span: SourceSpan) -> Result<Entity> {
    let bad = || {
        Error::parse(
            span,
            format!("unsupported declaration entity `{}`", ExprTokenStream(toks.to_vec()).render()),
        )
    };
    let name = toks.first().and_then(|t| t.tok.ident()).ok_or_else(bad)?.to_string();
    let mut i = 1;
    let mut dims = Vec::new();
    if toks.get(i).map(|t| t.tok.is_punct('(')).unwrap_or(false) {
        let close = crate::frontend::expr::matching_paren(toks, i).ok_or_else(bad)?;
        dims = split_top_level(&toks[i + 1..close], |t| t.is_punct(','));
        i = close + 1;
    }
    let mut char_len = None;
    if toks.get(i).map(|t| t.tok.is_op("*")).unwrap_or(false) {
        let (len, n) = parse_star_length(&toks[i + 1..], span)?;
        char_len = Some(len);
        i += 1 + n;
    }
    if i != toks.len() {
        return Err(bad());
    }
    Ok(Entity { name, dims, char_len })
}

fn parse_implicit(toks: &[Token], span: SourceSpan) -> Result<ImplicitStmt> {
    let rest = &toks[1..];
    if rest.len() == 1 && rest[0].tok.is_ident("none") {
        return Ok(ImplicitStmt::None);
    }
    let bad = || Error::parse(span, "malformed IMPLICIT statement");
    let mut rules = Vec::new();
    let mut i = 0;
    while i < rest.len() {
        let (type_spec, used) = parse_type_spec(&rest[i..], span)?.ok_or_else(bad)?;
        i += used;
        if !rest.get(i).map(|t| t.tok.is_punct('(')).unwrap_or(false) {
            return Err(bad());
        }
        let close = crate::frontend::expr::matching_paren(rest, i).ok_or_else(bad)?;
        let mut ranges = Vec::new();
        for part in split_top_level(&rest[i + 1..close], |t| t.is_punct(',')) {
            let letter = |t: &Token| -> Option<char> {
                let s = t.tok.ident()?;
                (s.len() == 1).then(|| s.chars().next().unwrap())
            };
            match part.0.as_slice() {
                [a] => {
                    let a = letter(a).ok_or_else(bad)?;
                    ranges.push((a, a));
                }
                [a, dash, b] if dash.tok.is_op("-") => {
                    let (a, b) = (letter(a).ok_or_else(bad)?, letter(b).ok_or_else(bad)?);
                    if a > b {
                        return Err(bad());
                    }
                    ranges.push((a, b));
                }
                _ => return Err(bad()),
            }
        }
        rules.push(ImplicitRule { type_spec, ranges });
        i = close + 1;
        if i < rest.len() {
            if !rest[i].tok.is_punct(',') {
                return Err(bad());
            }
            i += 1;
        }
    }
    Ok(ImplicitStmt::Rules(rules))
}

fn keyword_of(toks: &[Token]) -> Option<StmtKeyword> {
    let w0 = toks.first()?.tok.ident()?;
    let w1 = toks.get(1).and_then(|t| t.tok.ident());
    let kw = match (w0, w1) {
        ("if", _) => StmtKeyword::IfThen,
        ("elseif", _) | ("else", Some("if")) => StmtKeyword::ElseIf,
        ("else", _) => StmtKeyword::Else,
        ("endif", _) | ("end", Some("if")) => StmtKeyword::EndIf,
        ("enddo", _) | ("end", Some("do")) => StmtKeyword::EndDo,
        ("dowhile", _) | ("do", Some("while")) => StmtKeyword::DoWhile,
        ("do", _) => StmtKeyword::Do,
        ("continue", _) => StmtKeyword::Continue,
        ("goto", _) | ("go", Some("to")) => StmtKeyword::Goto,
        ("return", _) => StmtKeyword::Return,
        ("stop", _) => StmtKeyword::Stop,
        ("pause", _) => StmtKeyword::Pause,
        ("read", _) => StmtKeyword::Read,
        ("write", _) => StmtKeyword::Write,
        ("print", _) => StmtKeyword::Print,
        ("data", _) => StmtKeyword::Data,
        ("common", _) => StmtKeyword::Common,
        ("equivalence", _) => StmtKeyword::Equivalence,
        ("parameter", _) => StmtKeyword::Parameter,
        ("save", _) => StmtKeyword::Save,
        ("dimension", _) => StmtKeyword::Dimension,
        ("intrinsic", _) => StmtKeyword::Intrinsic,
        ("open", _) => StmtKeyword::Open,
        ("close", _) => StmtKeyword::Close,
        ("inquire", _) => StmtKeyword::Inquire,
        ("rewind", _) => StmtKeyword::Rewind,
        ("backspace", _) => StmtKeyword::Backspace,
        ("endfile", _) => StmtKeyword::Endfile,
        ("assign", _) => StmtKeyword::Assign,
        ("entry", _) => StmtKeyword::Entry,
        _ => return None,
    };
    Some(kw)
}

/// Index of the `=` of an assignment statement, if the tokens form one.
fn assignment_eq(toks: &[Token]) -> Option<usize> {
    let first = toks.first()?;
    let mut i = 1;
    match &first.tok {
        ExprToken::Ident(_) => {
            if toks.get(1).map(|t| t.tok.is_punct('(')).unwrap_or(false) {
                i = crate::frontend::expr::matching_paren(toks, 1)? + 1;
                // substring designator: a(i)(1:3)
                if toks.get(i).map(|t| t.tok.is_punct('(')).unwrap_or(false) {
                    i = crate::frontend::expr::matching_paren(toks, i)? + 1;
                }
            }
        }
        ExprToken::Dotted(_) => {
            if toks.get(1).map(|t| t.tok.is_punct('(')).unwrap_or(false) {
                i = crate::frontend::expr::matching_paren(toks, 1)? + 1;
            }
        }
        _ => return None,
    }
    toks.get(i).filter(|t| t.tok.is_op("=")).map(|_| i)
}

fn classify_lexemes(lex: &[Lexeme], line: &LogicalLine) -> Result<NodeKind> {
    let span = line.span;
    if lex.is_empty() {
        return Err(Error::parse(span, "empty statement"));
    }
    if let Some(word) = ident_at(lex, 0) {
        if word == "pointeur" {
            return Ok(NodeKind::Esope(parse_pointeur(lex, span)?));
        }
        if let Some(kind) = esope_command_kind(word) {
            return Ok(NodeKind::Esope(parse_esope_command(kind, lex, span)?));
        }
        if word == "segment" || word == "endsegment" {
            return Err(Error::parse(span, "segment definition is not allowed here"));
        }
        if word == "include" {
            if let Some(l) = lex.get(1).filter(|l| l.kind == LexKind::Str && lex.len() == 2) {
                let path = unquote(&l.text).unwrap_or_default().to_string();
                return Ok(NodeKind::Include(IncludeDirective {
                    flavor: IncludeFlavor::FortranInclude,
                    path,
                    span,
                }));
            }
        }
        if word == "if" && lex.get(1).map(|l| l.kind == LexKind::LParen).unwrap_or(false) {
            let close = lex_matching_paren(lex, 1).ok_or_else(|| Error::parse(span, "unbalanced parentheses"))?;
            let rest = &lex[close + 1..];
            let is_then = rest.len() == 1 && rest[0].is(LexKind::Ident, "then");
            if !rest.is_empty() && !is_then && !(rest[0].kind == LexKind::Int) {
                let cond = scan_expression(&lex[2..close], span)?;
                let then = classify_lexemes(rest, line)?;
                if matches!(then, NodeKind::LogicalIf { .. } | NodeKind::Declaration(_) | NodeKind::Include(_)) {
                    return Err(Error::parse(span, "invalid statement in logical IF"));
                }
                return Ok(NodeKind::LogicalIf {
                    cond,
                    then: Box::new(then),
                });
            }
        }
    }

    let tokens = scan_expression(lex, span)?;
    let toks = &tokens.0;

    if assignment_eq(toks).is_some() {
        let eq = assignment_eq(toks).unwrap();
        return Ok(NodeKind::Assignment(Assignment {
            lhs: tokens.slice(0, eq),
            rhs: tokens.slice(eq + 1, toks.len()),
        }));
    }

    let word = toks[0].tok.ident().unwrap_or("");
    match word {
        "implicit" => return Ok(NodeKind::Implicit(parse_implicit(toks, span)?)),
        "external" => {
            let mut names = Vec::new();
            for part in split_top_level(&toks[1..], |t| t.is_punct(',')) {
                match part.0.as_slice() {
                    [t] if t.tok.ident().is_some() => names.push(t.tok.ident().unwrap().to_string()),
                    _ => return Err(Error::parse(span, "malformed EXTERNAL statement")),
                }
            }
            if names.is_empty() {
                return Err(Error::parse(span, "EXTERNAL without names"));
            }
            return Ok(NodeKind::External(names));
        }
        "call" => {
            let name = toks
                .get(1)
                .and_then(|t| t.tok.ident())
                .ok_or_else(|| Error::parse(span, "CALL without a routine name"))?
                .to_string();
            let mut args = Vec::new();
            if toks.len() > 2 {
                if !toks[2].tok.is_punct('(') || crate::frontend::expr::matching_paren(toks, 2) != Some(toks.len() - 1) {
                    return Err(Error::parse(span, "malformed CALL argument list"));
                }
                if toks.len() > 4 {
                    args = split_top_level(&toks[3..toks.len() - 1], |t| t.is_punct(','));
                }
            }
            return Ok(NodeKind::Call(CallStmt { name, args }));
        }
        "format" if toks.get(1).map(|t| t.tok.is_punct('(')).unwrap_or(false) => {
            let text = line.text.trim();
            let raw = text.get(6..).unwrap_or("").trim().to_string();
            return Ok(NodeKind::Format(raw));
        }
        _ => {}
    }
    if let Some(decl) = parse_declaration(toks, span)? {
        return Ok(NodeKind::Declaration(decl));
    }
    Ok(NodeKind::Opaque(OpaqueStatement {
        keyword: keyword_of(toks),
        tokens,
    }))
}

fn field_type(spec: &TypeSpec, span: SourceSpan) -> Result<FieldType> {
    Ok(match (spec.base, spec.size) {
        (BaseType::Integer, None | Some(4)) => FieldType::Integer,
        (BaseType::Real, None | Some(4)) => FieldType::Real,
        (BaseType::Real, Some(8)) | (BaseType::DoublePrecision, None) => FieldType::DoublePrecision,
        (BaseType::Logical, None | Some(4)) => FieldType::Logical,
        (BaseType::Character, _) => match &spec.char_len {
            None => FieldType::Character(1),
            Some(CharLen::Fixed(n)) if *n >= 1 => FieldType::Character(*n),
            Some(other) => {
                return Err(Error::parse(span, format!("segment field needs a positive constant length, got `{other}`")))
            }
        },
        _ => return Err(Error::parse(span, format!("unsupported segment field type `{}`", spec.modern()))),
    })
}

/// Parses `SEGMENT, <name>` … `END SEGMENT`.
pub fn parse_segment_definition(lines: &[LogicalLine]) -> Result<SegmentDefinition> {
    let stmts: Vec<&LogicalLine> = lines.iter().filter(|l| l.is_statement()).collect();
    let Some(head) = stmts.first() else {
        return Err(Error::new(crate::error::Phase::Parse, "empty segment definition"));
    };
    let head_lex = lex_line(head)?;
    if !is_segment_start(&head_lex) {
        return Err(Error::parse(head.span, "segment definition must start with SEGMENT"));
    }
    let mut k = 1;
    if head_lex.get(k).map(|l| l.kind == LexKind::Comma).unwrap_or(false) {
        k += 1;
    }
    let name = ident_at(&head_lex, k)
        .ok_or_else(|| Error::parse(head.span, "SEGMENT without a name"))?
        .to_string();
    if head_lex.len() != k + 1 {
        return Err(Error::parse(head.span, "unexpected text after the segment name"));
    }
    let last = stmts.last().unwrap();
    if stmts.len() < 2 || !is_segment_end(&lex_line(last)?) {
        return Err(Error::parse(head.span, format!("segment `{name}` has no END SEGMENT")));
    }

    let mut fields: Vec<FieldDef> = Vec::new();
    for line in &stmts[1..stmts.len() - 1] {
        let lex = lex_line(line)?;
        let mut push = |f: FieldDef| -> Result<()> {
            if fields.iter().any(|g| g.name == f.name) {
                return Err(Error::parse(
                    line.span,
                    format!("duplicate field `{}` in segment `{name}`", f.name),
                ));
            }
            fields.push(f);
            Ok(())
        };
        if ident_at(&lex, 0) == Some("pointeur") {
            for p in parse_pointeur(&lex, line.span)? {
                push(FieldDef {
                    name: p.operands[0].clone(),
                    base_type: FieldType::Pointer(p.segment.clone().unwrap()),
                    dims: p.dims,
                    is_dynamic: false,
                })?;
            }
            continue;
        }
        let toks = scan_expression(&lex, line.span)?;
        let decl = parse_declaration(&toks.0, line.span)?
            .ok_or_else(|| Error::parse(line.span, format!("only declarations may appear in segment `{name}`")))?;
        for e in &decl.entities {
            push(FieldDef {
                name: e.name.clone(),
                base_type: field_type(&decl.entity_type(e), line.span)?,
                dims: e.dims.clone(),
                is_dynamic: false,
            })?;
        }
    }
    if fields.is_empty() {
        return Err(Error::parse(head.span, format!("segment `{name}` declares no field")));
    }

    let field_names: Vec<String> = fields.iter().map(|f| f.name.clone()).collect();
    let mut dimensioning_vars: Vec<String> = Vec::new();
    for f in &mut fields {
        let mut dynamic = false;
        for d in &f.dims {
            for id in dimension_identifiers(d) {
                if field_names.contains(&id) {
                    return Err(Error::parse(
                        head.span,
                        format!("dimension of field `{}` refers to field `{id}` of segment `{name}`", f.name),
                    ));
                }
                dynamic = true;
                if !dimensioning_vars.contains(&id) {
                    dimensioning_vars.push(id);
                }
            }
        }
        f.is_dynamic = dynamic;
    }

    Ok(SegmentDefinition {
        default_pointer: name.clone(),
        name,
        fields,
        dimensioning_vars,
        span: head.span.to(last.span),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LISTING: &str = "      SUBROUTINE NEWUSER(LIB,NAME)
      INTEGER UBBCNT
      SEGMENT, USER
       CHARACTER*40 UNAME
       INTEGER UBB(UBBCNT)
      END SEGMENT
      POINTEUR UR.USER
C the user does not have a book yet
      UBBCNT = 0
      SEGINI, UR
      UR.UNAME = NAME
      WRITE(*,*) UR.UBB(/1)
      END
";

    fn unit(src: &str) -> ProgramUnitAst {
        let f = parse_file(FileId(0), src).unwrap();
        assert_eq!(f.units.len(), 1);
        f.units.into_iter().next().unwrap()
    }

    fn stmt(text: &str) -> Result<NodeKind> {
        let src = format!("      {text}\n");
        let lines = split_logical_lines(FileId(0), &src)?;
        classify_statement(&lines[0])
    }

    #[test]
    fn listing_unit_structure() {
        let u = unit(LISTING);
        assert_eq!(u.kind, UnitKind::Subroutine);
        assert_eq!(u.name, "newuser");
        assert_eq!(u.params, vec!["lib", "name"]);
        let kinds: Vec<&str> = u
            .body
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Declaration(_) => "decl",
                NodeKind::Segment(_) => "segment",
                NodeKind::Esope(v) if v[0].kind == EsopeKind::PointerDecl => "pointeur",
                NodeKind::Esope(v) if v[0].kind == EsopeKind::SegIni => "segini",
                NodeKind::Comment(_) => "comment",
                NodeKind::Assignment(_) => "assign",
                NodeKind::Opaque(_) => "opaque",
                _ => "other",
            })
            .collect();
        assert_eq!(
            kinds,
            vec!["decl", "segment", "pointeur", "comment", "assign", "segini", "assign", "opaque"]
        );
    }

    #[test]
    fn listing_segment_definition() {
        let u = unit(LISTING);
        let seg = &u.segments().next().unwrap().def;
        assert_eq!(seg.name, "user");
        assert_eq!(seg.default_pointer, "user");
        assert_eq!(seg.fields.len(), 2);
        assert_eq!(seg.fields[0].base_type, FieldType::Character(40));
        assert!(seg.fields[0].dims.is_empty());
        assert_eq!(seg.fields[1].base_type, FieldType::Integer);
        assert!(seg.fields[1].is_dynamic);
        assert_eq!(seg.dimensioning_vars, vec!["ubbcnt"]);
    }

    #[test]
    fn end_only_unit() {
        let u = unit("      SUBROUTINE S\n      END\n");
        assert!(u.body.is_empty());
        assert!(u.end_span.is_some());
    }

    #[test]
    fn goto_is_opaque() {
        match stmt("GOTO 100").unwrap() {
            NodeKind::Opaque(o) => assert_eq!(o.keyword, Some(StmtKeyword::Goto)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scalar_only_segment_has_no_dimensioning_vars() {
        let u = unit("      SEGMENT, PT\n       REAL X, Y\n      END SEGMENT\n");
        assert_eq!(u.kind, UnitKind::Fragment);
        let seg = &u.segments().next().unwrap().def;
        assert!(seg.dimensioning_vars.is_empty());
    }

    #[test]
    fn dimension_expression_with_factor() {
        let u = unit("      SEGMENT, USER\n       INTEGER UBB(UBBCNT*1.1)\n      END SEGMENT\n");
        let seg = &u.segments().next().unwrap().def;
        assert_eq!(seg.dimensioning_vars, vec!["ubbcnt"]);
        assert_eq!(seg.fields[0].dims[0].len(), 3);
    }

    #[test]
    fn segment_errors() {
        assert!(parse_file(FileId(0), "      SEGMENT, USER\n       INTEGER A\n").is_err());
        assert!(parse_file(FileId(0), "      SEGMENT, USER\n      END SEGMENT\n").is_err());
        assert!(parse_file(FileId(0), "      SEGMENT, USER\n       INTEGER A\n       REAL A\n      END SEGMENT\n").is_err());
    }

    #[test]
    fn esope_commands() {
        match stmt("SEGACT P=Q").unwrap() {
            NodeKind::Esope(v) => {
                assert_eq!(v[0].kind, EsopeKind::SegActMove);
                assert_eq!(v[0].operands, vec!["p", "q"]);
            }
            other => panic!("{other:?}"),
        }
        match stmt("SEGDES, A, B*MOD").unwrap() {
            NodeKind::Esope(v) => {
                assert_eq!(v.len(), 2);
                assert_eq!(v[1].operands, vec!["b"]);
            }
            other => panic!("{other:?}"),
        }
        assert!(stmt("SEGINI").is_err());
        assert!(stmt("SEGSUP P=Q").is_err());
        assert!(stmt("SEGINI, P Q").is_err());
    }

    #[test]
    fn pointeur_with_dims() {
        match stmt("POINTEUR LB(NB).BOOK, UR.USER").unwrap() {
            NodeKind::Esope(v) => {
                assert_eq!(v[0].segment.as_deref(), Some("book"));
                assert_eq!(v[0].dims.len(), 1);
                assert_eq!(v[1].operands, vec!["ur"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn logical_if_wraps_esope() {
        match stmt("IF (N .GT. 0) SEGINI, UR").unwrap() {
            NodeKind::LogicalIf { then, .. } => assert!(matches!(*then, NodeKind::Esope(_))),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            stmt("IF (N .GT. 0) THEN").unwrap(),
            NodeKind::Opaque(OpaqueStatement {
                keyword: Some(StmtKeyword::IfThen),
                ..
            })
        ));
    }

    #[test]
    fn declarations() {
        match stmt("CHARACTER*8 A, B*(*), C(10)").unwrap() {
            NodeKind::Declaration(d) => {
                assert_eq!(d.type_spec.char_len, Some(CharLen::Fixed(8)));
                assert_eq!(d.entities[1].char_len, Some(CharLen::Assumed));
                assert_eq!(d.entities[2].dims.len(), 1);
            }
            other => panic!("{other:?}"),
        }
        match stmt("DOUBLE PRECISION X").unwrap() {
            NodeKind::Declaration(d) => assert_eq!(d.type_spec.base, BaseType::DoublePrecision),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn implicit_rules() {
        match stmt("IMPLICIT INTEGER (T), REAL*8 (A-H, O-Z)").unwrap() {
            NodeKind::Implicit(ImplicitStmt::Rules(r)) => {
                assert_eq!(r.len(), 2);
                assert_eq!(r[0].ranges, vec![('t', 't')]);
                assert_eq!(r[1].ranges, vec![('a', 'h'), ('o', 'z')]);
                assert_eq!(r[1].type_spec.size, Some(8));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(stmt("IMPLICIT NONE").unwrap(), NodeKind::Implicit(ImplicitStmt::None));
    }

    #[test]
    fn typed_function_header() {
        let u = unit("      INTEGER FUNCTION NBOOKS(LIB)\n      NBOOKS = 0\n      END\n");
        assert_eq!(u.kind, UnitKind::Function);
        assert_eq!(u.return_type, Some(TypeSpec::simple(BaseType::Integer)));
        assert_eq!(u.params, vec!["lib"]);
    }

    #[test]
    fn include_flavors() {
        let src = "#include \"user.inc\"\n      INCLUDE 'book.inc'\n%INC LIB\n-INC SMX\n#define X 1\n";
        let u = unit(src);
        let flavors: Vec<_> = u
            .body
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Include(d) => Some((d.flavor, d.path.clone())),
                _ => None,
            })
            .collect();
        assert_eq!(
            flavors,
            vec![
                (IncludeFlavor::PreprocessorHash, "user.inc".to_string()),
                (IncludeFlavor::FortranInclude, "book.inc".to_string()),
                (IncludeFlavor::EsopePercentInc, "LIB".to_string()),
                (IncludeFlavor::EsopeDashInc, "SMX".to_string()),
            ]
        );
        assert!(matches!(u.body.last().unwrap().kind, NodeKind::Directive(_)));
    }

    #[test]
    fn multiple_units_and_headerless_main() {
        let f = parse_file(FileId(0), "C main\n      X = 1\n      END\n      SUBROUTINE S\n      END\nC tail\n").unwrap();
        assert_eq!(f.units.len(), 2);
        assert_eq!(f.units[0].kind, UnitKind::Program);
        assert_eq!(f.units[0].leading.len(), 1);
        assert_eq!(f.units[1].trailing.len(), 1);
    }

    #[test]
    fn call_and_assignment() {
        match stmt("CALL ADDBOOK(LIB, 'x', N+1)").unwrap() {
            NodeKind::Call(c) => {
                assert_eq!(c.name, "addbook");
                assert_eq!(c.args.len(), 3);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(stmt("A(I) = 3").unwrap(), NodeKind::Assignment(_)));
        assert!(matches!(stmt("UR.UBB(I) = 3").unwrap(), NodeKind::Assignment(_)));
        assert!(matches!(
            stmt("DO 10 I = 1, N").unwrap(),
            NodeKind::Opaque(OpaqueStatement {
                keyword: Some(StmtKeyword::Do),
                ..
            })
        ));
    }

    #[test]
    fn missing_end_is_error() {
        assert!(parse_file(FileId(0), "      SUBROUTINE S\n      X = 1\n").is_err());
    }
}
