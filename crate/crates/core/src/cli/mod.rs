//! Command-line driver: configuration, the `migrate`, `check` and
//! `dump-model` commands, and exit codes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::emit::{write_tree, KeywordCase, RenderConfig};
use crate::frontend::include::FileKey;
use crate::frontend::project::{discover, Encoding, SourceSet};
use crate::model::IntentCatalog;
use crate::pipeline::{analyze, migrate_sources, warning_lines, Failure};
use crate::transform::output_path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MIGRATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Migrate the source tree and write the Fortran 2008 output tree
    Migrate,
    /// Parse and analyze only; report findings without writing files
    Check,
    /// Print the project model and inferred intents
    DumpModel,
}

#[derive(Debug, Clone, Default, Parser)]
#[command(name = "seg-migrate", version, about = "Migrates Esope FORTRAN 77 sources to Fortran 2008")]
pub struct Args {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Source directory
    #[arg(long, global = true)]
    pub src: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Include search directory; repeatable, searched in order
    #[arg(long = "include-path", global = true)]
    pub include_path: Vec<PathBuf>,
    /// File of known routine intents
    #[arg(long, global = true)]
    pub intent_catalog: Option<PathBuf>,
    /// key=value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Source and output encoding (utf-8 or latin-1)
    #[arg(long, global = true)]
    pub encoding: Option<String>,
    /// Indentation width of emitted code (1-8)
    #[arg(long, global = true)]
    pub indent: Option<usize>,
    /// Maximum emitted line length (72-132)
    #[arg(long, global = true)]
    pub max_line_length: Option<usize>,
    /// Keyword case of emitted code (lower or upper)
    #[arg(long, global = true)]
    pub keyword_case: Option<String>,
    /// Also print inferred types and intents
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub src: PathBuf,
    pub out: Option<PathBuf>,
    pub include_paths: Vec<PathBuf>,
    pub intent_catalog: Option<PathBuf>,
    pub encoding: Encoding,
    pub render: RenderConfig,
    pub verbose: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            src: PathBuf::from("."),
            out: None,
            include_paths: Vec::new(),
            intent_catalog: None,
            encoding: Encoding::Utf8,
            render: RenderConfig::default(),
            verbose: false,
        }
    }
}

/// Configuration problem; the process exits with [`EXIT_USAGE`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("configuration error: {0}")]
pub struct ConfigError(pub String);

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| ConfigError(format!("`{key}` must be a non-negative integer, got `{v}`")))
}

fn parse_case(v: &str) -> Result<KeywordCase, ConfigError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "lower" => Ok(KeywordCase::Lower),
        "upper" => Ok(KeywordCase::Upper),
        _ => Err(ConfigError(format!("`keyword_case` must be lower or upper, got `{v}`"))),
    }
}

fn parse_encoding(v: &str) -> Result<Encoding, ConfigError> {
    Encoding::parse(v).ok_or_else(|| ConfigError(format!("`encoding` must be utf-8 or latin-1, got `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError(format!("`{key}` must be true or false, got `{v}`"))),
    }
}

/// Applies a `key=value` configuration text on top of `cfg`. Relative
/// paths are taken from `base`.
pub fn apply_config_text(cfg: &mut RunConfig, text: &str, base: &Path) -> Result<(), ConfigError> {
    let mut includes = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("config line {}: expected key=value, got `{line}`", no + 1)))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let path = || base.join(value);
        match key.as_str() {
            "src" => cfg.src = path(),
            "out" => cfg.out = Some(path()),
            "include_path" => includes.push(path()),
            "intent_catalog" => cfg.intent_catalog = Some(path()),
            "encoding" => cfg.encoding = parse_encoding(value)?,
            "indent" => cfg.render.indent_width = parse_usize(&key, value)?,
            "max_line_length" => cfg.render.max_line_length = parse_usize(&key, value)?,
            "keyword_case" => cfg.render.keyword_case = parse_case(value)?,
            "verbose" => cfg.verbose = parse_bool(&key, value)?,
            _ => return Err(ConfigError(format!("config line {}: unknown key `{key}`", no + 1))),
        }
    }
    if !includes.is_empty() {
        cfg.include_paths = includes;
    }
    Ok(())
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => {
            let norm = |p: &Path| -> PathBuf {
                p.components()
                    .filter(|c| !matches!(c, std::path::Component::CurDir))
                    .collect()
            };
            norm(a) == norm(b)
        }
    }
}

/// Defaults, then the config file, then flags. Include paths given as
/// flags replace those of the file.
pub fn load_config(args: &Args, config_text: Option<(&str, &Path)>) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some((text, base)) = config_text {
        apply_config_text(&mut cfg, text, base)?;
    }
    if let Some(s) = &args.src {
        cfg.src = s.clone();
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if !args.include_path.is_empty() {
        cfg.include_paths = args.include_path.clone();
    }
    if let Some(c) = &args.intent_catalog {
        cfg.intent_catalog = Some(c.clone());
    }
    if let Some(e) = &args.encoding {
        cfg.encoding = parse_encoding(e)?;
    }
    if let Some(i) = args.indent {
        cfg.render.indent_width = i;
    }
    if let Some(m) = args.max_line_length {
        cfg.render.max_line_length = m;
    }
    if let Some(k) = &args.keyword_case {
        cfg.render.keyword_case = parse_case(k)?;
    }
    cfg.verbose |= args.verbose;
    cfg.render.validate().map_err(|e| ConfigError(e.message))?;
    if let Some(out) = &cfg.out {
        if same_dir(&cfg.src, out) {
            return Err(ConfigError(format!(
                "source and output directories must differ (both are {})",
                cfg.src.display()
            )));
        }
    }
    Ok(cfg)
}

/// Reads the config file named by `--config`, if any, and merges flags.
pub fn config_from_args(args: &Args) -> Result<RunConfig, ConfigError> {
    match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.display())))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            load_config(args, Some((&text, &base)))
        }
        None => load_config(args, None),
    }
}

fn read_catalog(cfg: &RunConfig) -> Result<IntentCatalog, ConfigError> {
    let Some(path) = &cfg.intent_catalog else {
        return Ok(IntentCatalog::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read intent catalog {}: {e}", path.display())))?;
    IntentCatalog::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.message)))
}

fn load_sources(cfg: &RunConfig, exclude: Option<&Path>) -> Result<SourceSet, ConfigError> {
    discover(&cfg.src, exclude, cfg.encoding).map_err(|e| ConfigError(e.message))
}

fn print_failure(f: &Failure, err: &mut dyn Write) -> i32 {
    for line in f.diagnostics() {
        let _ = writeln!(err, "{line}");
    }
    EXIT_MIGRATION
}

fn usage(e: ConfigError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "seg-migrate: {e}");
    EXIT_USAGE
}

/// Full migration. Writes nothing unless every unit migrated.
pub fn cmd_migrate(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(out_dir) = &cfg.out else {
        return usage(ConfigError("migrate needs an output directory (--out)".into()), err);
    };
    let prepared = read_catalog(cfg).and_then(|c| Ok((c, load_sources(cfg, Some(out_dir))?)));
    let (catalog, sources) = match prepared {
        Ok(p) => p,
        Err(e) => return usage(e, err),
    };
    let m = match migrate_sources(&sources, &cfg.include_paths, catalog, &cfg.render) {
        Ok(m) => m,
        Err(f) => return print_failure(&f, err),
    };
    let written = match write_tree(&m.rendered, out_dir, cfg.encoding) {
        Ok(w) => w,
        Err(e) => {
            for line in e.0 {
                let _ = writeln!(err, "seg-migrate: {line}");
            }
            return EXIT_MIGRATION;
        }
    };
    for w in warning_lines(&m.analysis.project.source_map, &m.analysis.warnings()) {
        let _ = writeln!(err, "{w}");
    }

    let mut report = String::new();
    let lines_of = |p: &str| written.files.iter().find(|(f, _)| f == p).map(|(_, n)| *n).unwrap_or(0);
    let inputs: Vec<&FileKey> = m.analysis.project.texts.keys().collect();
    let mut input_lines = 0;
    for key in &inputs {
        let text = &m.analysis.project.texts[*key];
        input_lines += text.lines().count();
        let target = output_path(key);
        let status = if m.rendered.iter().any(|(p, _)| *p == target) {
            format!("ok -> {target} ({} lines)", lines_of(&target))
        } else {
            "inlined (no output file)".to_string()
        };
        let _ = writeln!(report, "{key}: {status}");
    }
    for (p, _) in &m.rendered {
        if !inputs.iter().any(|k| output_path(k) == *p) {
            let _ = writeln!(report, "generated: {p} ({} lines)", lines_of(p));
        }
    }
    let s = &m.output.stats;
    let _ = writeln!(report, "files: {} in / {} out", inputs.len(), written.files.len());
    let _ = writeln!(report, "lines: {input_lines} in / {} out", written.total_lines());
    let _ = writeln!(report, "units: {}, segments: {}", s.units, s.segments);
    let _ = writeln!(
        report,
        "statements: {} rewritten, {} removed, {} passthrough",
        s.rewritten, s.removed, s.passthrough
    );
    let _ = writeln!(
        report,
        "declarations: {} inferred, {} total",
        s.inferred_declarations, s.declarations
    );
    if cfg.verbose {
        report.push_str(&m.analysis.intents.report(&m.analysis.model));
    }
    let _ = out.write_all(report.as_bytes());
    EXIT_OK
}

/// Analysis only; never touches the file system beyond reading sources.
pub fn cmd_check(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let prepared = read_catalog(cfg).and_then(|c| Ok((c, load_sources(cfg, cfg.out.as_deref())?)));
    let (catalog, sources) = match prepared {
        Ok(p) => p,
        Err(e) => return usage(e, err),
    };
    let a = match analyze(&sources, &cfg.include_paths, catalog) {
        Ok(a) => a,
        Err(f) => return print_failure(&f, err),
    };
    let undeclared = match a.undeclared() {
        Ok(u) => u,
        Err(f) => return print_failure(&f, err),
    };
    let mut report = String::from("esope constructs:\n");
    report.push_str(&a.census().report());
    let _ = writeln!(report, "undeclared variables: {}", undeclared.len());
    for (unit, name) in &undeclared {
        let _ = writeln!(report, "  {unit}: {name}");
    }
    let _ = writeln!(report, "unresolved intents: {}", a.intents.defaulted.len());
    for (r, i) in &a.intents.defaulted {
        let p = a.model.units.get(r).and_then(|u| u.params.get(*i)).map(String::as_str).unwrap_or("?");
        let _ = writeln!(report, "  {r}({p}) defaults to inout");
    }
    let warnings = warning_lines(&a.project.source_map, &a.warnings());
    let _ = writeln!(report, "negative pointer warnings: {}", warnings.len());
    if cfg.verbose {
        report.push_str(&a.intents.report(&a.model));
    }
    let _ = out.write_all(report.as_bytes());
    for w in warnings {
        let _ = writeln!(err, "{w}");
    }
    EXIT_OK
}

pub fn cmd_dump_model(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let prepared = read_catalog(cfg).and_then(|c| Ok((c, load_sources(cfg, cfg.out.as_deref())?)));
    let (catalog, sources) = match prepared {
        Ok(p) => p,
        Err(e) => return usage(e, err),
    };
    match analyze(&sources, &cfg.include_paths, catalog) {
        Ok(a) => {
            let _ = out.write_all(a.model.dump().as_bytes());
            let _ = out.write_all(a.intents.report(&a.model).as_bytes());
            EXIT_OK
        }
        Err(f) => print_failure(&f, err),
    }
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(args: &Args, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(command) = args.command else {
        return usage(ConfigError("missing command: migrate, check or dump-model".into()), err);
    };
    let cfg = match config_from_args(args) {
        Ok(c) => c,
        Err(e) => return usage(e, err),
    };
    match command {
        Command::Migrate => cmd_migrate(&cfg, out, err),
        Command::Check => cmd_check(&cfg, out, err),
        Command::DumpModel => cmd_dump_model(&cfg, out, err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Args {
        Args::try_parse_from(std::iter::once("seg-migrate").chain(v.iter().copied())).unwrap()
    }

    #[test]
    fn flags_only() {
        let c = load_config(&args(&["check", "--src", "a", "--indent", "3"]), None).unwrap();
        assert_eq!(c.src, PathBuf::from("a"));
        assert_eq!(c.render.indent_width, 3);
        assert_eq!(c.render.max_line_length, 132);
    }

    #[test]
    fn flag_beats_file() {
        let c = load_config(&args(&["check", "--indent", "2"]), Some(("indent = 4\n", Path::new("")))).unwrap();
        assert_eq!(c.render.indent_width, 2);
        let c = load_config(&args(&["check"]), Some(("indent=4 # four\n", Path::new("")))).unwrap();
        assert_eq!(c.render.indent_width, 4);
    }

    #[test]
    fn include_flags_replace_file_list() {
        let text = "include_path = x\ninclude_path = y\n";
        let c = load_config(&args(&["check"]), Some((text, Path::new("/cfg")))).unwrap();
        assert_eq!(c.include_paths, [PathBuf::from("/cfg/x"), PathBuf::from("/cfg/y")]);
        let c = load_config(&args(&["check", "--include-path", "z"]), Some((text, Path::new("/cfg")))).unwrap();
        assert_eq!(c.include_paths, [PathBuf::from("z")]);
    }

    #[test]
    fn rejected_configs() {
        assert!(load_config(&args(&["check"]), Some(("colour = red\n", Path::new("")))).is_err());
        assert!(load_config(&args(&["check"]), Some(("indent\n", Path::new("")))).is_err());
        assert!(load_config(&args(&["check", "--indent", "9"]), None).is_err());
        assert!(load_config(&args(&["check", "--keyword-case", "title"]), None).is_err());
        assert!(load_config(&args(&["migrate", "--src", "d", "--out", "d"]), None).is_err());
        assert!(load_config(&args(&["migrate", "--src", "d", "--out", "./d/"]), None).is_err());
    }

    #[test]
    fn run_without_out_is_a_usage_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(&args(&["migrate", "--src", "."]), &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run(&args(&[]), &mut o, &mut e), EXIT_USAGE);
    }
}
