//! Item id ↔ contiguous index mapping. Index 0 is reserved for padding,
//! so real items occupy 1..=len and the embedding table has len+1 rows.

use std::collections::HashMap;

use crate::error::ModelError;

#[derive(Clone, Debug, PartialEq)]
pub struct ItemVocab {
    index_of: HashMap<String, usize>,
    items: Vec<String>,
}

impl ItemVocab {
    /// Builds a vocabulary from item ids in first-seen order; duplicates
    /// collapse to one entry.
    pub fn from_items<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self {
            index_of: HashMap::new(),
            items: Vec::new(),
        };
        for id in ids {
            let id = id.into();
            if !vocab.index_of.contains_key(&id) {
                vocab.items.push(id.clone());
                vocab.index_of.insert(id, vocab.items.len());
            }
        }
        vocab
    }

    /// Total index count including the padding slot 0.
    pub fn size(&self) -> usize {
        self.items.len() + 1
    }

    /// Number of real items (excluding padding).
    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    /// Index of an item id; real items start at 1.
    pub fn index(&self, id: &str) -> Option<usize> {
        self.index_of.get(id).copied()
    }

    /// Item id for an index; `None` for the padding index 0 and anything
    /// out of range.
    pub fn item(&self, index: usize) -> Option<&str> {
        if index == 0 {
            return None;
        }
        self.items.get(index - 1).map(String::as_str)
    }

    /// One item id per line, in index order (line n holds index n+1).
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for id in &self.items {
            out.push_str(id);
            out.push('\n');
        }
        out
    }

    /// Inverse of [`ItemVocab::to_tsv`]. Rejects blank and duplicate ids
    /// so a damaged file cannot silently remap items.
    pub fn from_tsv(text: &str) -> Result<Self, ModelError> {
        let mut vocab = Self {
            index_of: HashMap::new(),
            items: Vec::new(),
        };
        for (n, line) in text.lines().enumerate() {
            let id = line.trim_end_matches('\r');
            if id.is_empty() {
                return Err(ModelError::InvalidVocab(format!("blank id on line {}", n + 1)));
            }
            if vocab.index_of.contains_key(id) {
                return Err(ModelError::InvalidVocab(format!(
                    "duplicate id `{id}` on line {}",
                    n + 1
                )));
            }
            vocab.items.push(id.to_string());
            vocab.index_of.insert(id.to_string(), vocab.items.len());
        }
        Ok(vocab)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_are_contiguous_from_one() {
        let v = ItemVocab::from_items(["b", "a", "b", "c"]);
        assert_eq!(v.item_count(), 3);
        assert_eq!(v.size(), 4);
        assert_eq!(v.index("b"), Some(1));
        assert_eq!(v.index("a"), Some(2));
        assert_eq!(v.index("c"), Some(3));
        assert_eq!(v.index("z"), None);
    }

    #[test]
    fn zero_is_padding() {
        let v = ItemVocab::from_items(["x"]);
        assert_eq!(v.item(0), None);
        assert_eq!(v.item(1), Some("x"));
        assert_eq!(v.item(2), None);
    }

    #[test]
    fn mapping_is_bijective() {
        let v = ItemVocab::from_items(["m", "n", "o"]);
        for idx in 1..v.size() {
            let id = v.item(idx).unwrap();
            assert_eq!(v.index(id), Some(idx));
        }
    }

    #[test]
    fn tsv_round_trip() {
        let v = ItemVocab::from_items(["movie:12", "movie:7", "movie:400"]);
        let restored = ItemVocab::from_tsv(&v.to_tsv()).unwrap();
        assert_eq!(v, restored);
    }

    #[test]
    fn tsv_rejects_blank_and_duplicate_lines() {
        assert!(ItemVocab::from_tsv("a\n\nb\n").is_err());
        assert!(ItemVocab::from_tsv("a\nb\na\n").is_err());
        assert!(ItemVocab::from_tsv("").unwrap().item_count() == 0);
    }
}
