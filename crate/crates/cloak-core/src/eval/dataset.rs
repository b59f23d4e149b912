//! Benchmark dataset schemas and loaders.
//!
//! Four kinds are supported. Two measure answer quality with known
//! targets: topic-constrained writing (`tcw`, topic plus 5 or 10
//! questions) and logic-grid puzzles (`lgp`, puzzle text plus
//! questions). Two measure privacy handling with gold entity
//! annotations: synthetic personal profiles (`kpp`, exactly 5
//! questions) and passage questions with boolean answers (`lpp`).

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::entity::{EntityCategory, EntitySet, EntitySpan};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Tcw,
    Lgp,
    Kpp,
    Lpp,
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "tcw" => Ok(DatasetKind::Tcw),
            "lgp" => Ok(DatasetKind::Lgp),
            "kpp" => Ok(DatasetKind::Kpp),
            "lpp" => Ok(DatasetKind::Lpp),
            other => Err(Error::Config(format!(
                "unknown dataset kind \"{other}\" (expected tcw, lgp, kpp or lpp)"
            ))),
        }
    }
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DatasetKind::Tcw => "tcw",
            DatasetKind::Lgp => "lgp",
            DatasetKind::Kpp => "kpp",
            DatasetKind::Lpp => "lpp",
        })
    }
}

/// Gold entity annotation: surface plus category, no offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldEntity {
    pub surface: String,
    pub category: EntityCategory,
}

/// One benchmark instance, normalized across kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub kind: DatasetKind,
    /// TCW writing topic.
    pub topic: Option<String>,
    /// LGP puzzle text or KPP profile or LPP passage.
    pub passage: Option<String>,
    pub questions: Vec<String>,
    /// Acceptable target strings per question, aligned with `questions`.
    pub targets: Vec<Vec<String>>,
    /// Gold privacy annotation (KPP, LPP).
    pub gold_entities: Vec<GoldEntity>,
}

impl TaskInstance {
    /// Render the instance as one task text for the pipeline.
    pub fn task_text(&self) -> String {
        let mut out = String::new();
        if let Some(topic) = &self.topic {
            out.push_str(&format!("Write about the topic: {topic}\n\n"));
        }
        if let Some(passage) = &self.passage {
            out.push_str(passage);
            out.push_str("\n\n");
        }
        if self.questions.len() == 1 {
            out.push_str(&self.questions[0]);
        } else {
            out.push_str("Answer the following questions:\n");
            for (i, q) in self.questions.iter().enumerate() {
                out.push_str(&format!("{}. {q}\n", i + 1));
            }
        }
        out.trim_end().to_string()
    }

    pub fn gold_entity_set(&self) -> EntitySet {
        self.gold_entities
            .iter()
            .map(|g| EntitySpan::new(g.surface.clone(), g.category.clone(), 0, 0))
            .collect()
    }
}

/// Load and validate a dataset file: a JSON array of instances of the
/// stated kind. Violations are rejected with the offending instance id.
pub fn load_dataset(path: &Path, kind: DatasetKind) -> Result<Vec<TaskInstance>> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("dataset {}: {e}", path.display())))?;
    let values: Vec<Value> = serde_json::from_str(&body)
        .map_err(|e| Error::Config(format!("dataset {}: {e}", path.display())))?;
    let mut out = Vec::with_capacity(values.len());
    for (i, value) in values.into_iter().enumerate() {
        let id = value
            .get("id")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{i}"));
        out.push(parse_instance(&value, kind, &id)?);
    }
    Ok(out)
}

fn schema_err(id: &str, message: impl Into<String>) -> Error {
    Error::DatasetSchema { id: id.to_string(), message: message.into() }
}

fn parse_instance(value: &Value, kind: DatasetKind, id: &str) -> Result<TaskInstance> {
    match kind {
        DatasetKind::Tcw => {
            #[derive(Deserialize)]
            struct Raw {
                id: String,
                topic: String,
                questions: Vec<String>,
                targets: Vec<Vec<String>>,
            }
            let raw: Raw = parse_raw(value, id)?;
            if raw.questions.len() != 5 && raw.questions.len() != 10 {
                return Err(schema_err(
                    &raw.id,
                    format!("field questions must hold 5 or 10 entries, found {}", raw.questions.len()),
                ));
            }
            check_alignment(&raw.id, &raw.questions, &raw.targets)?;
            Ok(TaskInstance {
                id: raw.id,
                kind,
                topic: Some(raw.topic),
                passage: None,
                questions: raw.questions,
                targets: raw.targets,
                gold_entities: vec![],
            })
        }
        DatasetKind::Lgp => {
            #[derive(Deserialize)]
            struct Raw {
                id: String,
                puzzle: String,
                questions: Vec<String>,
                targets: Vec<Vec<String>>,
            }
            let raw: Raw = parse_raw(value, id)?;
            if raw.questions.is_empty() {
                return Err(schema_err(&raw.id, "field questions must not be empty"));
            }
            check_alignment(&raw.id, &raw.questions, &raw.targets)?;
            Ok(TaskInstance {
                id: raw.id,
                kind,
                topic: None,
                passage: Some(raw.puzzle),
                questions: raw.questions,
                targets: raw.targets,
                gold_entities: vec![],
            })
        }
        DatasetKind::Kpp => {
            #[derive(Deserialize)]
            struct Raw {
                id: String,
                private_profile: String,
                gold_entities: Vec<GoldEntity>,
                questions: Vec<String>,
                targets: Vec<Vec<String>>,
            }
            let raw: Raw = parse_raw(value, id)?;
            if raw.questions.len() != 5 {
                return Err(schema_err(
                    &raw.id,
                    format!("field questions must hold exactly 5 entries, found {}", raw.questions.len()),
                ));
            }
            check_alignment(&raw.id, &raw.questions, &raw.targets)?;
            Ok(TaskInstance {
                id: raw.id,
                kind,
                topic: None,
                passage: Some(raw.private_profile),
                questions: raw.questions,
                targets: raw.targets,
                gold_entities: raw.gold_entities,
            })
        }
        DatasetKind::Lpp => {
            #[derive(Deserialize)]
            struct Raw {
                id: String,
                passage: String,
                question: String,
                answer: bool,
                gold_entities: Vec<GoldEntity>,
            }
            let raw: Raw = parse_raw(value, id)?;
            Ok(TaskInstance {
                id: raw.id,
                kind,
                topic: None,
                passage: Some(raw.passage),
                questions: vec![raw.question],
                targets: vec![vec![raw.answer.to_string()]],
                gold_entities: raw.gold_entities,
            })
        }
    }
}

fn parse_raw<T: serde::de::DeserializeOwned>(value: &Value, id: &str) -> Result<T> {
    serde_json::from_value(value.clone()).map_err(|e| schema_err(id, e.to_string()))
}

fn check_alignment(id: &str, questions: &[String], targets: &[Vec<String>]) -> Result<()> {
    if questions.len() != targets.len() {
        return Err(schema_err(
            id,
            format!(
                "field targets must align with questions ({} questions, {} target lists)",
                questions.len(),
                targets.len()
            ),
        ));
    }
    if let Some(i) = questions.iter().position(|q| q.trim().is_empty()) {
        return Err(schema_err(id, format!("field questions entry {i} is empty")));
    }
    Ok(())
}
