use crate::error::{Error, Result};

/// A named tensor inside a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutEntry {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl LayoutEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Maps tensor names to contiguous, non-overlapping slices that tile the
/// parameter vector exactly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Layout {
    entries: Vec<LayoutEntry>,
    len: usize,
}

impl Layout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a tensor and returns its offset.
    pub fn push(&mut self, name: impl Into<String>, shape: &[usize]) -> usize {
        let offset = self.len;
        let entry = LayoutEntry {
            name: name.into(),
            offset,
            shape: shape.to_vec(),
        };
        self.len += entry.len();
        self.entries.push(entry);
        offset
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, name: &str) -> Option<&LayoutEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Builds a layout from explicit entries, checking that they tile
    /// `0..total` with no gaps or overlap.
    pub fn from_entries(mut entries: Vec<LayoutEntry>, total: usize) -> Result<Self> {
        entries.sort_by_key(|e| e.offset);
        let mut cursor = 0;
        for e in &entries {
            if e.offset != cursor {
                return Err(Error::Validation(format!(
                    "layout entry {} starts at {}, expected {cursor}",
                    e.name, e.offset
                )));
            }
            cursor += e.len();
        }
        if cursor != total {
            return Err(Error::Validation(format!(
                "layout covers {cursor} values, parameter vector has {total}"
            )));
        }
        Ok(Self { entries, len: total })
    }

    /// A copy with every name prefixed and every offset shifted.
    pub fn prefixed(&self, prefix: &str, shift: usize) -> Vec<LayoutEntry> {
        self.entries
            .iter()
            .map(|e| LayoutEntry {
                name: format!("{prefix}{}", e.name),
                offset: e.offset + shift,
                shape: e.shape.clone(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_tile_the_vector() {
        let mut l = Layout::new();
        assert_eq!(l.push("w", &[3, 2]), 0);
        assert_eq!(l.push("b", &[3]), 6);
        assert_eq!(l.len(), 9);
        assert_eq!(l.get("b").unwrap().range(), 6..9);
        let rebuilt = Layout::from_entries(l.entries().to_vec(), 9).unwrap();
        assert_eq!(rebuilt, l);
        assert!(Layout::from_entries(l.entries().to_vec(), 10).is_err());
    }
}
