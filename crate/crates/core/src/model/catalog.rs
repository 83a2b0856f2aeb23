use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Phase, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Intent {
    In,
    Out,
    InOut,
}

impl Intent {
    pub fn parse(s: &str) -> Option<Intent> {
        match s.trim().to_ascii_lowercase().as_str() {
            "in" => Some(Intent::In),
            "out" => Some(Intent::Out),
            "inout" | "in out" => Some(Intent::InOut),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::In => "in",
            Intent::Out => "out",
            Intent::InOut => "inout",
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Known parameter intents of routines outside the project.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntentCatalog {
    pub routines: BTreeMap<String, Vec<Intent>>,
}

impl IntentCatalog {
    /// One routine per line, `name(intent, intent, ...)`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<IntentCatalog> {
        let mut routines = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::new(Phase::Config, format!("intent catalog line {}: expected `name(intent, ...)`, got `{line}`", no + 1));
            let open = line.find('(').ok_or_else(bad)?;
            if !line.ends_with(')') {
                return Err(bad());
            }
            let name = line[..open].trim().to_ascii_lowercase();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(bad());
            }
            let inner = line[open + 1..line.len() - 1].trim();
            let intents = if inner.is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(|s| Intent::parse(s).ok_or_else(bad)).collect::<Result<Vec<_>>>()?
            };
            if routines.insert(name.clone(), intents).is_some() {
                return Err(Error::new(
                    Phase::Config,
                    format!("intent catalog line {}: routine `{name}` listed twice", no + 1),
                ));
            }
        }
        Ok(IntentCatalog { routines })
    }

    pub fn get(&self, name: &str) -> Option<&[Intent]> {
        self.routines.get(name).map(Vec::as_slice)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.routines.contains_key(name)
    }
}
