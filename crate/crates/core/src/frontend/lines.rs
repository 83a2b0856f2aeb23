//! Fixed-form card handling: columns 1-5 hold the label, column 6 the
//! continuation mark, columns 7-72 the statement body. Anything past
//! column 72 is ignored.

use crate::error::{Error, Result};
use crate::frontend::span::{FileId, SourceSpan};

pub const LABEL_END: usize = 5;
pub const CONTINUATION_COL: usize = 6;
pub const BODY_END: usize = 72;
pub const TAB_STOP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineKind {
    Statement,
    Comment,
    Directive,
    /// A line with nothing but blanks. The standard treats these as comment
    /// lines; they are kept apart so that blank-line counts survive migration.
    Blank,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalLine {
    pub label: Option<u32>,
    /// Statement body (continuations merged), comment text after the marker
    /// column, or the full directive line.
    pub text: String,
    pub kind: LineKind,
    pub span: SourceSpan,
    /// Number of physical cards merged into this line.
    pub cards: u32,
}

impl LogicalLine {
    pub fn is_statement(&self) -> bool {
        self.kind == LineKind::Statement
    }
}

pub fn expand_tabs(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut col = 0usize;
    for ch in line.chars() {
        if ch == '\t' {
            let next = (col / TAB_STOP + 1) * TAB_STOP;
            while col < next {
                out.push(' ');
                col += 1;
            }
        } else {
            out.push(ch);
            col += 1;
        }
    }
    out
}

fn is_comment_card(chars: &[char]) -> bool {
    matches!(chars.first(), Some('C' | 'c' | '*' | '!'))
}

/// `#` lines in column 1, and `%INC`/`-INC` in column 1 or indented past
/// the continuation column.
fn is_directive_card(chars: &[char]) -> bool {
    if chars.first() == Some(&'#') {
        return true;
    }
    let lead = chars.iter().take_while(|c| **c == ' ').count();
    if lead != 0 && lead < CONTINUATION_COL {
        return false;
    }
    let head: String = chars[lead..].iter().take(4).collect::<String>().to_ascii_lowercase();
    head == "%inc" || head == "-inc"
}

fn column_slice(chars: &[char], from: usize, to: usize) -> String {
    // 1-based inclusive column range
    if chars.len() < from {
        return String::new();
    }
    let end = chars.len().min(to);
    chars[from - 1..end].iter().collect()
}

struct Pending {
    label: Option<u32>,
    body: String,
    start_line: u32,
    end_line: u32,
    end_col: u32,
    cards: u32,
}

impl Pending {
    fn finish(self, file: FileId) -> LogicalLine {
        LogicalLine {
            label: self.label,
            text: self.body.trim().to_string(),
            kind: LineKind::Statement,
            span: SourceSpan::new(file, self.start_line, 1, self.end_line, self.end_col.max(1)),
            cards: self.cards,
        }
    }
}

/// Splits a whole fixed-form source file into logical lines.
///
/// Comment and blank lines found between an initial card and its
/// continuations are emitted right after the merged statement.
pub fn split_logical_lines(file: FileId, source: &str) -> Result<Vec<LogicalLine>> {
    let mut out = Vec::new();
    let mut current: Option<Pending> = None;
    let mut interleaved: Vec<LogicalLine> = Vec::new();

    let flush = |current: &mut Option<Pending>, interleaved: &mut Vec<LogicalLine>, out: &mut Vec<LogicalLine>| {
        if let Some(p) = current.take() {
            out.push(p.finish(file));
        }
        out.append(interleaved);
    };

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx as u32 + 1;
        let expanded = expand_tabs(raw.strip_suffix('\r').unwrap_or(raw));
        let chars: Vec<char> = expanded.chars().collect();
        let width = chars.len() as u32;

        if is_comment_card(&chars) {
            let text: String = chars[1..].iter().collect::<String>().trim_end().to_string();
            let line = LogicalLine {
                label: None,
                text,
                kind: LineKind::Comment,
                span: SourceSpan::line(file, line_no, 1, width.max(1)),
                cards: 1,
            };
            if current.is_some() {
                interleaved.push(line);
            } else {
                out.push(line);
            }
            continue;
        }

        let visible = column_slice(&chars, 1, BODY_END);
        if visible.trim().is_empty() {
            let line = LogicalLine {
                label: None,
                text: String::new(),
                kind: LineKind::Blank,
                span: SourceSpan::line(file, line_no, 1, 1),
                cards: 1,
            };
            if current.is_some() {
                interleaved.push(line);
            } else {
                out.push(line);
            }
            continue;
        }

        if is_directive_card(&chars) {
            flush(&mut current, &mut interleaved, &mut out);
            out.push(LogicalLine {
                label: None,
                text: expanded.trim().to_string(),
                kind: LineKind::Directive,
                span: SourceSpan::line(file, line_no, 1, width.max(1)),
                cards: 1,
            });
            continue;
        }

        let label_field = column_slice(&chars, 1, LABEL_END);
        let cont = chars.get(CONTINUATION_COL - 1).copied().unwrap_or(' ');
        let body = column_slice(&chars, CONTINUATION_COL + 1, BODY_END);
        let end_col = width.min(BODY_END as u32);

        if cont != ' ' && cont != '0' {
            let Some(p) = current.as_mut() else {
                return Err(Error::parse(
                    SourceSpan::line(file, line_no, CONTINUATION_COL as u32, CONTINUATION_COL as u32),
                    "continuation card without a preceding statement",
                ));
            };
            if !label_field.trim().is_empty() {
                return Err(Error::parse(
                    SourceSpan::line(file, line_no, 1, LABEL_END as u32),
                    "continuation card carries a statement label",
                ));
            }
            p.body.push_str(&body);
            p.end_line = line_no;
            p.end_col = end_col;
            p.cards += 1;
            continue;
        }

        flush(&mut current, &mut interleaved, &mut out);
        let label = parse_label(&label_field).ok_or_else(|| {
            Error::parse(
                SourceSpan::line(file, line_no, 1, LABEL_END as u32),
                format!("invalid statement label `{}`", label_field.trim()),
            )
        })?;
        current = Some(Pending {
            label,
            body,
            start_line: line_no,
            end_line: line_no,
            end_col,
            cards: 1,
        });
    }
    flush(&mut current, &mut interleaved, &mut out);
    Ok(out)
}

fn parse_label(field: &str) -> Option<Option<u32>> {
    let digits: String = field.chars().filter(|c| *c != ' ').collect();
    if digits.is_empty() {
        return Some(None);
    }
    if digits.chars().all(|c| c.is_ascii_digit()) {
        digits.parse().ok().map(Some)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(src: &str) -> Vec<LogicalLine> {
        split_logical_lines(FileId(0), src).unwrap()
    }

    #[test]
    fn comment_card_from_listing() {
        let lines = split("C the user does not have a book yet \n");
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].kind, LineKind::Comment);
        assert_eq!(lines[0].text, " the user does not have a book yet");
    }

    #[test]
    fn star_comment() {
        let lines = split("* note\n");
        assert_eq!(lines[0].kind, LineKind::Comment);
    }

    #[test]
    fn empty_file() {
        assert!(split("").is_empty());
    }

    #[test]
    fn continuation_merges_bodies() {
        let src = "      X = A +\n     1    B\n";
        let lines = split(src);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].text, "X = A +    B");
        assert_eq!(lines[0].cards, 2);
        assert_eq!(lines[0].span.end_line, 2);
    }

    #[test]
    fn label_and_column_73_ignored() {
        let src = format!("   10 CONTINUE{}SEQ00010\n", " ".repeat(72 - 14));
        let lines = split(&src);
        assert_eq!(lines[0].label, Some(10));
        assert_eq!(lines[0].text, "CONTINUE");
    }

    #[test]
    fn tabs_expand_to_eight() {
        assert_eq!(expand_tabs("\tX = 1"), "        X = 1");
        assert_eq!(expand_tabs("ab\tc"), "ab      c");
        let lines = split("\tX = 1\n");
        assert_eq!(lines[0].text, "X = 1");
    }

    #[test]
    fn orphan_continuation_is_error() {
        let err = split_logical_lines(FileId(3), "     1 X = 1\n").unwrap_err();
        assert_eq!(err.span.unwrap().start_line, 1);
        assert_eq!(err.span.unwrap().file, FileId(3));
    }

    #[test]
    fn comment_between_cards_follows_statement() {
        let src = "      CALL F(A,\nC inner\n     &  B)\n      END\n";
        let lines = split(src);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].text, "CALL F(A,  B)");
        assert_eq!(lines[1].kind, LineKind::Comment);
        assert_eq!(lines[2].text, "END");
    }

    #[test]
    fn directives_and_blank_lines() {
        let src = "#include \"user.inc\"\n\n-INC SMUSER\n%INC BOOK\n      -INC X\n";
        let lines = split(src);
        let kinds: Vec<_> = lines.iter().map(|l| l.kind).collect();
        assert_eq!(
            kinds,
            vec![LineKind::Directive, LineKind::Blank, LineKind::Directive, LineKind::Directive, LineKind::Directive]
        );
        assert_eq!(lines[4].text, "-INC X");
    }

    #[test]
    fn zero_in_column_six_is_not_continuation() {
        let lines = split("      X = 1\n     0Y = 2\n");
        assert_eq!(lines.len(), 2);
    }

    #[test]
    fn bad_label() {
        assert!(split_logical_lines(FileId(0), " 1A  X = 1\n").is_err());
    }
}
