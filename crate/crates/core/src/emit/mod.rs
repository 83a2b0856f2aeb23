//! Free-form text rendering of target trees and writing of output files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Errors, Phase, Result};
use crate::frontend::project::Encoding;
use crate::transform::target::{TargetFile, TargetKind, TargetNode, Template, Typed};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeywordCase {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderConfig {
    pub indent_width: usize,
    pub max_line_length: usize,
    pub keyword_case: KeywordCase,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            indent_width: 2,
            max_line_length: 132,
            keyword_case: KeywordCase::Lower,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.indent_width) {
            return Err(Error::new(
                Phase::Config,
                format!("indent width must be between 1 and 8, got {}", self.indent_width),
            ));
        }
        if !(72..=132).contains(&self.max_line_length) {
            return Err(Error::new(
                Phase::Config,
                format!("maximum line length must be between 72 and 132, got {}", self.max_line_length),
            ));
        }
        Ok(())
    }
}

/// Byte ranges of `line` outside quoted strings, up to an inline comment.
fn code_mask(line: &str) -> Vec<bool> {
    let mut mask = vec![false; line.len()];
    let mut quote: Option<u8> = None;
    let b = line.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        match quote {
            Some(q) => {
                if c == q {
                    if b.get(i + 1) == Some(&q) {
                        i += 2;
                        continue;
                    }
                    quote = None;
                }
            }
            None => {
                if c == b'\'' || c == b'"' {
                    quote = Some(c);
                } else if c == b'!' {
                    break;
                } else {
                    mask[i] = true;
                }
            }
        }
        i += 1;
    }
    mask
}

fn apply_case(line: &str, case: KeywordCase) -> String {
    if case == KeywordCase::Lower {
        return line.to_string();
    }
    let mask = code_mask(line);
    line.char_indices()
        .map(|(i, c)| if mask.get(i).copied().unwrap_or(false) { c.to_ascii_uppercase() } else { c })
        .collect()
}

/// Splits one statement line so that no piece exceeds `max` columns.
/// Breaks go after a blank or a comma outside strings; failing that, the
/// line is cut anywhere and the next line starts with `&`.
pub fn split_line(indent: &str, content: &str, cont_indent: &str, max: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut first = true;
    let mut rest = content.to_string();
    loop {
        let lead = if first { indent } else { cont_indent };
        if lead.len() + rest.len() <= max {
            out.push(format!("{lead}{rest}"));
            return out;
        }
        let room = max.saturating_sub(lead.len() + 2);
        let mask = code_mask(&rest);
        let mut brk = None;
        for (i, c) in rest.char_indices() {
            if i + 1 > room {
                break;
            }
            if mask.get(i).copied().unwrap_or(false) && (c == ' ' || c == ',') && i > 0 {
                let tail = rest[i + 1..].trim_start();
                if !tail.is_empty() {
                    brk = Some(i + 1);
                }
            }
        }
        match brk {
            Some(at) => {
                let head = rest[..at].trim_end();
                out.push(format!("{lead}{head} &"));
                rest = rest[at..].trim_start().to_string();
            }
            None => {
                let mut at = room.max(1).min(rest.len());
                while !rest.is_char_boundary(at) {
                    at -= 1;
                }
                out.push(format!("{lead}{}&", &rest[..at]));
                rest = format!("&{}", &rest[at..]);
            }
        }
        first = false;
    }
}

/// Comment lines wrapped at blanks to fit `max`; continuation lines
/// start with `!` and two blanks.
pub fn split_comment(indent: &str, comment: &str, max: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = comment.to_string();
    let lead = indent;
    loop {
        if lead.len() + rest.len() <= max {
            out.push(format!("{lead}{rest}"));
            return out;
        }
        let room = max.saturating_sub(lead.len());
        if room <= 4 {
            out.push(format!("{lead}{rest}"));
            return out;
        }
        let mut at = room.min(rest.len());
        while !rest.is_char_boundary(at) {
            at -= 1;
        }
        let cut = match rest[..at].rfind(' ') {
            Some(b) if !rest[..b].trim_start_matches('!').trim().is_empty() => b,
            _ => at,
        };
        out.push(format!("{lead}{}", rest[..cut].trim_end()));
        rest = format!("!  {}", rest[cut..].trim_start());
    }
}

/// Substitutes `{n}` placeholders.
pub fn bind_placeholders(t: &Template) -> Result<String> {
    let mut text = String::with_capacity(t.text.len());
    let mut rest = t.text.as_str();
    while let Some(open) = rest.find('{') {
        text.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let digits: String = after.chars().take_while(|c| c.is_ascii_digit()).collect();
        if !digits.is_empty() && after[digits.len()..].starts_with('}') {
            let n: usize = digits.parse().expect("digits");
            let v = t.bindings.get(&n).ok_or_else(|| {
                Error::new(Phase::Render, format!("template `{}` has no binding for {{{n}}}", t.name))
            })?;
            text.push_str(v);
            rest = &after[digits.len() + 1..];
        } else {
            text.push('{');
            rest = after;
        }
    }
    text.push_str(rest);
    Ok(text)
}

/// Expanded template lines at `depth`. Template indentation is relative
/// and counted in steps of two columns.
pub fn expand_template(t: &Template, depth: usize, cfg: &RenderConfig) -> Result<Vec<String>> {
    let text = bind_placeholders(t)?;
    let lines: Vec<&str> = text.lines().collect();
    let base = lines
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    let mut out = Vec::new();
    for l in lines {
        if l.trim().is_empty() {
            out.push(String::new());
            continue;
        }
        let lead = l.len() - l.trim_start().len() - base;
        let levels = depth + lead / 2;
        let indent = " ".repeat(levels * cfg.indent_width + lead % 2);
        let body = l.trim();
        if body.starts_with('!') {
            out.extend(split_comment(&indent, body, cfg.max_line_length));
        } else {
            let cont = " ".repeat((levels + 2) * cfg.indent_width);
            out.extend(split_line(&indent, &apply_case(body, cfg.keyword_case), &cont, cfg.max_line_length));
        }
    }
    Ok(out)
}

fn statement_lines(label: Option<u32>, text: &str, depth: usize, cfg: &RenderConfig, out: &mut Vec<String>) {
    if text.starts_with('#') {
        out.push(text.to_string());
        return;
    }
    let indent = " ".repeat(depth * cfg.indent_width);
    let content = match label {
        Some(l) => format!("{l} {text}"),
        None => text.to_string(),
    };
    let cont = " ".repeat((depth + 2) * cfg.indent_width);
    out.extend(split_line(&indent, &apply_case(&content, cfg.keyword_case), &cont, cfg.max_line_length));
}

fn render_typed(t: &Typed, depth: usize, cfg: &RenderConfig, out: &mut Vec<String>) -> Result<()> {
    match t.kind {
        TargetKind::Comment => {
            if t.text.is_empty() {
                out.push(String::new());
            } else {
                out.extend(split_comment(&" ".repeat(depth * cfg.indent_width), &t.text, cfg.max_line_length));
            }
            return Ok(());
        }
        TargetKind::ContainsMarker => {
            statement_lines(t.label, &t.text, depth.saturating_sub(1), cfg, out);
            return Ok(());
        }
        _ => {}
    }
    statement_lines(t.label, &t.text, depth, cfg, out);
    let mut children: &[TargetNode] = &t.children;
    // a trailing `contains` with nothing after it is dropped
    while let Some((last, init)) = children.split_last() {
        let empty = matches!(last, TargetNode::Typed(x) if x.kind == TargetKind::Comment && x.text.is_empty());
        let contains = matches!(last, TargetNode::Typed(x) if x.kind == TargetKind::ContainsMarker && x.text == "contains");
        if contains {
            children = init;
            continue;
        }
        if empty && init.iter().rev().find(|n| !matches!(n, TargetNode::Typed(x) if x.kind == TargetKind::Comment && x.text.is_empty()))
            .is_some_and(|n| matches!(n, TargetNode::Typed(x) if x.kind == TargetKind::ContainsMarker && x.text == "contains"))
        {
            children = init;
            continue;
        }
        break;
    }
    for c in children {
        render_node(c, depth + 1, cfg, out)?;
    }
    if let Some(end) = &t.end {
        statement_lines(t.end_label, end, depth, cfg, out);
    }
    Ok(())
}

fn render_node(n: &TargetNode, depth: usize, cfg: &RenderConfig, out: &mut Vec<String>) -> Result<()> {
    match n {
        TargetNode::Typed(t) => render_typed(t, depth, cfg, out),
        TargetNode::Template(t) => {
            out.extend(expand_template(t, depth, cfg)?);
            Ok(())
        }
    }
}

fn finish(lines: Vec<String>) -> String {
    let mut s = String::new();
    for l in lines {
        let _ = writeln!(s, "{}", l.trim_end());
    }
    s
}

/// Text of one tree at depth 0, LF line endings.
pub fn render_unit(tree: &TargetNode, cfg: &RenderConfig) -> Result<String> {
    let mut lines = Vec::new();
    render_node(tree, 0, cfg, &mut lines)?;
    Ok(finish(lines))
}

pub fn render_file(file: &TargetFile, cfg: &RenderConfig) -> Result<String> {
    let mut lines = Vec::new();
    for n in &file.nodes {
        render_node(n, 0, cfg, &mut lines)
            .map_err(|e| Error::new(e.phase, format!("{}: {}", file.path, e.message)))?;
    }
    Ok(finish(lines))
}

/// Renders every file; errors from all files are collected.
pub fn render_files(files: &[TargetFile], cfg: &RenderConfig) -> Result<Vec<(String, String)>, Errors> {
    cfg.validate()?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for f in files {
        match render_file(f, cfg) {
            Ok(t) => out.push((f.path.clone(), t)),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(Errors(errors))
    }
}

/// Statements of free-form text with continuations joined and comments
/// and blank lines dropped.
pub fn logical_statements(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut continuing = false;
    for raw in text.lines() {
        let mut body = raw.trim();
        if !continuing && body.starts_with('#') {
            continue;
        }
        if continuing {
            body = body.strip_prefix('&').unwrap_or(body);
        }
        let mut code = String::new();
        for c in body.chars() {
            match quote {
                Some(q) if c == q => quote = None,
                Some(_) => {}
                None if c == '\'' || c == '"' => quote = Some(c),
                None if c == '!' => break,
                None => {}
            }
            code.push(c);
        }
        let code = if quote.is_none() { code.trim_end().to_string() } else { code };
        if code.trim().is_empty() && !continuing {
            continue;
        }
        if let Some(head) = code.trim_end().strip_suffix('&') {
            cur.push_str(head);
            continuing = true;
            continue;
        }
        cur.push_str(&code);
        out.push(std::mem::take(&mut cur).trim().to_string());
        continuing = false;
        quote = None;
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WriteReport {
    /// Relative path and line count of each written file.
    pub files: Vec<(String, usize)>,
}

impl WriteReport {
    pub fn total_lines(&self) -> usize {
        self.files.iter().map(|(_, n)| n).sum()
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".seg-migrate.tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

/// Writes each file through a temporary name and a rename.
pub fn write_tree(outputs: &[(String, String)], out_dir: &Path, encoding: Encoding) -> Result<WriteReport, Errors> {
    let mut report = WriteReport::default();
    let mut errors = Vec::new();
    for (rel, text) in outputs {
        let path = out_dir.join(rel);
        let bytes = match encoding.encode(text) {
            Ok(b) => b,
            Err(c) => {
                errors.push(Error::new(Phase::Io, format!("cannot encode {c:?} in {}", path.display())));
                continue;
            }
        };
        match write_atomic(&path, &bytes) {
            Ok(()) => report.files.push((rel.clone(), text.lines().count())),
            Err(e) => errors.push(Error::new(Phase::Io, format!("cannot write {}: {e}", path.display()))),
        }
    }
    if errors.is_empty() {
        Ok(report)
    } else {
        Err(Errors(errors))
    }
}
