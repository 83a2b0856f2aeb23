#![allow(dead_code)]

use std::path::{Path, PathBuf};

use seg_migrate::cli::{run, Args};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn bookstore() -> PathBuf {
    fixtures().join("bookstore")
}

pub fn bookstore_catalog() -> PathBuf {
    fixtures().join("bookstore.intents")
}

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command line in-process.
pub fn cli(argv: &[&str]) -> Outcome {
    use clap::Parser;
    let args = Args::try_parse_from(std::iter::once("seg-migrate").chain(argv.iter().copied())).expect("valid argv");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(&args, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

/// Every file under `dir`, as (relative path, bytes), sorted.
pub fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(d: &Path, root: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    if dir.exists() {
        walk(dir, dir, &mut out);
    }
    out.sort();
    out
}

/// Migrates the bookstore into `out`.
pub fn migrate_bookstore(out: &Path) -> Outcome {
    cli(&[
        "migrate",
        "--src",
        bookstore().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--intent-catalog",
        bookstore_catalog().to_str().unwrap(),
    ])
}

/// Text with the contents of string literals blanked out (quotes kept).
pub fn blank_strings(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut quote: Option<char> = None;
    for c in line.chars() {
        match quote {
            Some(q) if c == q => {
                quote = None;
                out.push(c);
            }
            Some(_) => out.push(' '),
            None => {
                if c == '\'' || c == '"' {
                    quote = Some(c);
                }
                out.push(c);
            }
        }
    }
    out
}

/// Statements of a fixed-form file: continuation cards joined, comment
/// cards dropped, label kept in front. Blanks are insignificant in fixed
/// form, so they are removed outside strings and letters are lowercased.
pub fn fixed_form_statements(src: &str) -> Vec<String> {
    let mut stmts: Vec<(String, String)> = Vec::new();
    for raw in src.lines() {
        let line: String = raw.chars().take(72).collect();
        let first = line.chars().next().unwrap_or(' ');
        if line.trim().is_empty() || matches!(first, 'C' | 'c' | '*' | '!') {
            continue;
        }
        let chars: Vec<char> = line.chars().collect();
        let label: String = chars.iter().take(5).collect::<String>().trim().to_string();
        let cont = chars.get(5).copied().unwrap_or(' ');
        let body: String = chars.iter().skip(6).collect();
        if cont != ' ' && cont != '0' {
            if let Some(last) = stmts.last_mut() {
                last.1.push_str(&body);
            }
        } else {
            stmts.push((label, body));
        }
    }
    stmts
        .into_iter()
        .map(|(l, b)| format!("{l}{}", squeeze(&b)))
        .collect()
}

/// Lowercase, blanks removed, strings kept verbatim.
pub fn squeeze(s: &str) -> String {
    let mut out = String::new();
    let mut quote: Option<char> = None;
    for c in s.chars() {
        match quote {
            Some(q) => {
                out.push(c);
                if c == q {
                    quote = None;
                }
            }
            None => {
                if c == '\'' || c == '"' {
                    quote = Some(c);
                    out.push(c);
                } else if !c.is_whitespace() {
                    out.push(c.to_ascii_lowercase());
                }
            }
        }
    }
    out
}
