//! Tokenizer for the body of one logical line.
//!
//! Identifiers are lowercased; character literals keep their spelling.

use crate::error::{Error, Result};
use crate::frontend::span::SourceSpan;

const DOTTED_OPERATORS: &[&str] = &[
    "eq", "ne", "lt", "le", "gt", "ge", "and", "or", "not", "eqv", "neqv",
];
const DOTTED_LOGICALS: &[&str] = &["true", "false"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexKind {
    Ident,
    Int,
    Real,
    Str,
    /// `.true.` / `.false.`
    Logical,
    /// Symbolic and dotted operators: `+`, `**`, `.eq.`, `=`, `:` ...
    Op,
    LParen,
    RParen,
    Comma,
    /// A bare `.` not part of a number or dotted operator.
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexeme {
    pub kind: LexKind,
    pub text: String,
    pub space_before: bool,
}

impl Lexeme {
    pub fn is(&self, kind: LexKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_op(&self, text: &str) -> bool {
        self.is(LexKind::Op, text)
    }
}

fn dotted_word_at(chars: &[char], i: usize) -> Option<(String, usize)> {
    // chars[i] == '.'; returns (word, index after closing dot)
    let mut j = i + 1;
    while j < chars.len() && chars[j].is_ascii_alphabetic() {
        j += 1;
    }
    if j > i + 1 && j < chars.len() && chars[j] == '.' {
        let word: String = chars[i + 1..j].iter().collect::<String>().to_ascii_lowercase();
        if DOTTED_OPERATORS.contains(&word.as_str()) || DOTTED_LOGICALS.contains(&word.as_str()) {
            return Some((word, j + 1));
        }
    }
    None
}

pub fn tokenize(text: &str, span: SourceSpan) -> Result<Vec<Lexeme>> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut out = Vec::new();
    let mut i = 0;
    let mut space = false;

    while i < n {
        let c = chars[i];
        if c.is_whitespace() {
            space = true;
            i += 1;
            continue;
        }
        let space_before = std::mem::take(&mut space);
        let mut push = |kind: LexKind, text: String| {
            out.push(Lexeme {
                kind,
                text,
                space_before,
            })
        };

        if c.is_ascii_alphabetic() {
            let start = i;
            while i < n && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect::<String>().to_ascii_lowercase();
            push(LexKind::Ident, word);
            continue;
        }

        if c.is_ascii_digit() || (c == '.' && i + 1 < n && chars[i + 1].is_ascii_digit()) {
            let start = i;
            let mut real = false;
            while i < n && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < n && chars[i] == '.' && dotted_word_at(&chars, i).is_none() {
                real = true;
                i += 1;
                while i < n && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < n && matches!(chars[i], 'e' | 'E' | 'd' | 'D' | 'q' | 'Q') {
                let mut j = i + 1;
                if j < n && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < n && chars[j].is_ascii_digit() {
                    while j < n && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                    real = true;
                }
            }
            let lit: String = chars[start..i].iter().collect::<String>().to_ascii_lowercase();
            push(if real { LexKind::Real } else { LexKind::Int }, lit);
            continue;
        }

        if c == '.' {
            if let Some((word, next)) = dotted_word_at(&chars, i) {
                let kind = if DOTTED_LOGICALS.contains(&word.as_str()) {
                    LexKind::Logical
                } else {
                    LexKind::Op
                };
                push(kind, format!(".{word}."));
                i = next;
            } else {
                push(LexKind::Dot, ".".into());
                i += 1;
            }
            continue;
        }

        if c == '\'' || c == '"' {
            let quote = c;
            let start = i;
            i += 1;
            loop {
                if i >= n {
                    return Err(Error::parse(span, "unterminated character literal"));
                }
                if chars[i] == quote {
                    if i + 1 < n && chars[i + 1] == quote {
                        i += 2;
                        continue;
                    }
                    i += 1;
                    break;
                }
                i += 1;
            }
            push(LexKind::Str, chars[start..i].iter().collect());
            continue;
        }

        let two: String = chars[i..(i + 2).min(n)].iter().collect();
        if matches!(two.as_str(), "**" | "//" | "==" | "/=" | "<=" | ">=" | "=>" | "::") {
            push(LexKind::Op, two);
            i += 2;
            continue;
        }
        match c {
            '(' => push(LexKind::LParen, "(".into()),
            ')' => push(LexKind::RParen, ")".into()),
            ',' => push(LexKind::Comma, ",".into()),
            _ => push(LexKind::Op, c.to_string()),
        }
        i += 1;
    }
    Ok(out)
}
