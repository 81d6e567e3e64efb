//! Recognition charset handling.
//!
//! Charset files are UTF-8 with one grapheme per line; line number + 1 gives
//! the class index. Class 0 is the CTC blank and never appears in the file
//! or in decoded text. One charset file serves all scripts of a model.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

/// Ordered grapheme table; index 0 is the reserved blank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Charset {
    graphemes: Vec<String>,
}

impl Charset {
    pub const BLANK: usize = 0;

    /// Builds a charset from graphemes (blank excluded).
    pub fn new(graphemes: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for g in &graphemes {
            if g.is_empty() {
                return Err(Error::InvalidCharset("empty grapheme line".into()));
            }
            if !seen.insert(g.as_str()) {
                return Err(Error::InvalidCharset(format!("duplicate grapheme '{g}'")));
            }
        }
        Ok(Self { graphemes })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(|l| l.trim_end_matches('\r').to_string())
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    /// Number of classes including the blank.
    pub fn class_count(&self) -> usize {
        self.graphemes.len() + 1
    }

    /// Grapheme for a non-blank class index.
    pub fn grapheme(&self, class: usize) -> Option<&str> {
        if class == Self::BLANK {
            None
        } else {
            self.graphemes.get(class - 1).map(|s| s.as_str())
        }
    }

    /// Class index of a grapheme, if present.
    pub fn class_of(&self, grapheme: &str) -> Option<usize> {
        self.graphemes.iter().position(|g| g == grapheme).map(|i| i + 1)
    }
}
