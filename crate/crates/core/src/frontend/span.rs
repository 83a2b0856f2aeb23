use std::fmt;

/// Opaque handle of a source file registered in a [`SourceMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FileId(pub u32);

/// Position range in an original (pre-include-resolution) source file.
/// Lines and columns are 1-based; the end position is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSpan {
    pub file: FileId,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn new(file: FileId, start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Self {
        debug_assert!((start_line, start_col) <= (end_line, end_col));
        SourceSpan {
            file,
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }

    /// Span covering a single line from `start_col` to `end_col`.
    pub fn line(file: FileId, line: u32, start_col: u32, end_col: u32) -> Self {
        SourceSpan::new(file, line, start_col, line, end_col.max(start_col))
    }

    pub fn to(self, other: SourceSpan) -> SourceSpan {
        SourceSpan {
            file: self.file,
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: other.end_line,
            end_col: other.end_col,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.start_line >= 1
            && self.start_col >= 1
            && (self.start_line, self.start_col) <= (self.end_line, self.end_col)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start_line, self.start_col)
    }
}

/// Registry of file paths, indexed by [`FileId`].
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    paths: Vec<String>,
}

impl SourceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<String>) -> FileId {
        let path = path.into();
        if let Some(i) = self.paths.iter().position(|p| *p == path) {
            return FileId(i as u32);
        }
        self.paths.push(path);
        FileId((self.paths.len() - 1) as u32)
    }

    pub fn path(&self, id: FileId) -> &str {
        self.paths.get(id.0 as usize).map(String::as_str).unwrap_or("<unknown>")
    }

    pub fn lookup(&self, path: &str) -> Option<FileId> {
        self.paths.iter().position(|p| p == path).map(|i| FileId(i as u32))
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}
