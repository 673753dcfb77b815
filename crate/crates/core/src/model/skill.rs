use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ModelError, PetriNet, ProcessTree};
use crate::petri::tree_to_petri;

/// A dense text embedding tagged with the model that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub model_tag: String,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>, model_tag: impl Into<String>) -> Self {
        Self {
            values,
            model_tag: model_tag.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Statistics of the log a skill was discovered from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub num_cases: usize,
    pub num_variants: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skill {
    pub skill_id: String,
    pub tree: ProcessTree,
    pub net: PetriNet,
    pub query_texts: Vec<String>,
    #[serde(default)]
    pub embedding: Option<EmbeddingVector>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl Skill {
    /// Builds a skill whose net is the translation of `tree`.
    pub fn from_tree(
        skill_id: impl Into<String>,
        tree: ProcessTree,
        query_texts: Vec<String>,
        provenance: Provenance,
    ) -> Result<Self, ModelError> {
        tree.validate()?;
        let net = tree_to_petri(&tree)?;
        Ok(Self {
            skill_id: skill_id.into(),
            tree,
            net,
            query_texts,
            embedding: None,
            provenance,
        })
    }

    /// The text that represents this skill for embedding retrieval.
    pub fn canonical_text(&self) -> Option<&str> {
        self.query_texts.first().map(String::as_str)
    }
}

/// Skills keyed by id. Iteration order is by id, independent of insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkillLibrary {
    skills: BTreeMap<String, Skill>,
}

impl SkillLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_skills(skills: impl IntoIterator<Item = Skill>) -> Result<Self, ModelError> {
        let mut lib = Self::new();
        for s in skills {
            lib.insert(s)?;
        }
        Ok(lib)
    }

    /// Inserts or replaces a skill. Embeddings must agree in dimension and model tag
    /// with the skills already present.
    pub fn insert(&mut self, skill: Skill) -> Result<Option<Skill>, ModelError> {
        if let Some(e) = &skill.embedding {
            if let Some(other) = self
                .skills
                .values()
                .filter(|s| s.skill_id != skill.skill_id)
                .find_map(|s| s.embedding.as_ref())
            {
                if other.dim() != e.dim() || other.model_tag != e.model_tag {
                    return Err(ModelError::EmbeddingMismatch {
                        skill_id: skill.skill_id.clone(),
                        expected: format!("{}[{}]", other.model_tag, other.dim()),
                        found: format!("{}[{}]", e.model_tag, e.dim()),
                    });
                }
            }
        }
        Ok(self.skills.insert(skill.skill_id.clone(), skill))
    }

    pub fn get(&self, id: &str) -> Option<&Skill> {
        self.skills.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.skills.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Skill> {
        self.skills.values()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Skill> {
        self.skills.values_mut()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.skills.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skill(id: &str, tree: &str) -> Skill {
        Skill::from_tree(
            id,
            tree.parse().unwrap(),
            vec![format!("do {id}")],
            Provenance::default(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_mixed_embeddings() {
        let mut a = skill("a", "'A'");
        a.embedding = Some(EmbeddingVector::new(vec![1.0, 0.0], "m"));
        let mut b = skill("b", "'B'");
        b.embedding = Some(EmbeddingVector::new(vec![1.0, 0.0, 0.0], "m"));
        let mut lib = SkillLibrary::new();
        lib.insert(a).unwrap();
        assert!(matches!(
            lib.insert(b),
            Err(ModelError::EmbeddingMismatch { .. })
        ));
    }

    #[test]
    fn iteration_independent_of_insertion_order() {
        let x = SkillLibrary::from_skills([skill("b", "'B'"), skill("a", "'A'")]).unwrap();
        let y = SkillLibrary::from_skills([skill("a", "'A'"), skill("b", "'B'")]).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.ids().collect::<Vec<_>>(), vec!["a", "b"]);
    }
}
