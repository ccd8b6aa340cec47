//! Label schema (the 19 sustainability classes) and the brand/issue keyword lexicon.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a sustainability class, `0..NUM_CLASSES`.
pub type ClassId = usize;

/// A multi-label assignment. May be empty.
pub type LabelSet = BTreeSet<ClassId>;

/// Passage id → label set.
pub type LabelMap = BTreeMap<String, LabelSet>;

pub const NUM_CLASSES: usize = 19;
pub const NUM_SOCIAL: usize = 11;
pub const NUM_ENVIRONMENTAL: usize = 8;

const DEFAULT_SCHEMA: &str = include_str!("../data/schema.json");
const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Social,
    Environmental,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub class_id: ClassId,
    pub name: String,
    pub dimension: Dimension,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSchema {
    pub classes: Vec<ClassInfo>,
}

impl LabelSchema {
    /// Parses and validates a schema file body.
    pub fn from_json(json: &str) -> Result<Self> {
        let schema: LabelSchema =
            serde_json::from_str(json).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&body)
    }

    /// The schema bundled with the crate.
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_SCHEMA).expect("bundled schema is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.len() != NUM_CLASSES {
            return Err(Error::Schema(format!(
                "expected {NUM_CLASSES} classes, found {}",
                self.classes.len()
            )));
        }
        let mut names = HashSet::new();
        for (i, class) in self.classes.iter().enumerate() {
            if class.class_id != i {
                return Err(Error::Schema(format!(
                    "class ids must be 0..{NUM_CLASSES} in order; position {i} holds {}",
                    class.class_id
                )));
            }
            if class.name.trim().is_empty() {
                return Err(Error::Schema(format!("class {i} has an empty name")));
            }
            if !names.insert(class.name.as_str()) {
                return Err(Error::Schema(format!("duplicate class name {:?}", class.name)));
            }
        }
        let social = self.count(Dimension::Social);
        let environmental = self.count(Dimension::Environmental);
        if social != NUM_SOCIAL || environmental != NUM_ENVIRONMENTAL {
            return Err(Error::Schema(format!(
                "expected {NUM_SOCIAL} social and {NUM_ENVIRONMENTAL} environmental classes, found {social} and {environmental}"
            )));
        }
        Ok(())
    }

    pub fn count(&self, dimension: Dimension) -> usize {
        self.classes.iter().filter(|c| c.dimension == dimension).count()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn contains(&self, class_id: ClassId) -> bool {
        class_id < self.classes.len()
    }

    pub fn name(&self, class_id: ClassId) -> Option<&str> {
        self.classes.get(class_id).map(|c| c.name.as_str())
    }

    /// Looks a class up by numeric id or by name.
    pub fn resolve(&self, key: &str) -> Option<ClassId> {
        if let Ok(id) = key.trim().parse::<ClassId>() {
            return self.contains(id).then_some(id);
        }
        self.classes
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(key.trim()))
            .map(|c| c.class_id)
    }
}

/// Expert keyword lists: brand names and per-class issue keywords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordLexicon {
    pub brands: Vec<String>,
    #[serde(rename = "issues")]
    pub issue_keywords: BTreeMap<ClassId, Vec<String>>,
}

impl KeywordLexicon {
    /// Parses a lexicon and validates it against `schema`.
    pub fn from_json(json: &str, schema: &LabelSchema) -> Result<Self> {
        let lexicon: KeywordLexicon =
            serde_json::from_str(json).map_err(|e| Error::Lexicon(e.to_string()))?;
        lexicon.validate(schema)?;
        Ok(lexicon)
    }

    pub fn load(path: impl AsRef<Path>, schema: &LabelSchema) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&body, schema)
    }

    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_LEXICON, &LabelSchema::builtin()).expect("bundled lexicon is valid")
    }

    pub fn validate(&self, schema: &LabelSchema) -> Result<()> {
        for (&class_id, keywords) in &self.issue_keywords {
            if !schema.contains(class_id) {
                return Err(Error::Lexicon(format!(
                    "issue keywords reference unknown class {class_id}"
                )));
            }
            if keywords.iter().any(|k| k.trim().is_empty()) {
                return Err(Error::Lexicon(format!("class {class_id} has an empty keyword")));
            }
        }
        for class in &schema.classes {
            let has_keyword = self
                .issue_keywords
                .get(&class.class_id)
                .is_some_and(|k| !k.is_empty());
            if !has_keyword {
                return Err(Error::Lexicon(format!(
                    "class {} ({}) has no issue keywords",
                    class.class_id, class.name
                )));
            }
        }
        if self.brands.iter().any(|b| b.trim().is_empty()) {
            return Err(Error::Lexicon("empty brand name".into()));
        }
        Ok(())
    }
}
