//! Question template registry.
//!
//! Templates live in `data/templates.json`, shipped with the crate, so the
//! exact phrasing is auditable and extensible without code changes.
//! Placeholders: `{a}` / `{b}` for object references, `{rel}` for a
//! directional phrase.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use super::{Category, QaError};

const EMBEDDED: &str = include_str!("../../data/templates.json");

/// Every (category, kind) pair the generator relies on.
const REQUIRED: &[(Category, &str)] = &[
    (Category::ViewSource, "majority_mcq"),
    (Category::ViewSource, "seam_tf_pos"),
    (Category::ViewSource, "seam_tf_neg"),
    (Category::ViewSource, "count_oe"),
    (Category::Distance, "how_far_oe"),
    (Category::Distance, "similar_tf_pos"),
    (Category::Distance, "similar_tf_neg"),
    (Category::Distance, "closer_mcq"),
    (Category::Environment, "attribute_tf_indoor"),
    (Category::Environment, "attribute_tf_outdoor"),
    (Category::Environment, "env_mcq"),
    (Category::Spatial, "where_oe"),
    (Category::Spatial, "axis_tf"),
    (Category::Attribute, "larger_mcq"),
    (Category::Attribute, "larger_tf_pos"),
    (Category::Attribute, "larger_tf_neg"),
    (Category::Attribute, "flatter_mcq"),
];

#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    map: BTreeMap<String, BTreeMap<String, String>>,
}

impl TemplateRegistry {
    pub fn from_json(json: &str) -> Result<Self, QaError> {
        let map: BTreeMap<String, BTreeMap<String, String>> =
            serde_json::from_str(json).map_err(|e| QaError::BadTemplates(e.to_string()))?;
        let registry = Self { map };
        for (category, kind) in REQUIRED {
            if registry.lookup(*category, kind).is_none() {
                return Err(QaError::MissingTemplate {
                    category: category.name().to_string(),
                    kind: (*kind).to_string(),
                });
            }
        }
        Ok(registry)
    }

    /// The registry shipped with the crate.
    pub fn embedded() -> Self {
        Self::from_json(EMBEDDED).expect("embedded templates are valid")
    }

    fn lookup(&self, category: Category, kind: &str) -> Option<&str> {
        self.map
            .get(category.name())
            .and_then(|kinds| kinds.get(kind))
            .map(String::as_str)
    }

    pub fn get(&self, category: Category, kind: &str) -> &str {
        self.lookup(category, kind)
            .expect("registry validated at construction")
    }

    /// Renders a template, substituting each `(placeholder, value)` pair.
    pub fn render(&self, category: Category, kind: &str, subs: &[(&str, &str)]) -> String {
        let mut out = self.get(category, kind).to_string();
        for (placeholder, value) in subs {
            out = out.replace(placeholder, value);
        }
        out
    }
}
