//! Benchmark runner: push every dataset instance through a fresh
//! pipeline (bounded concurrency), then aggregate answer accuracy,
//! entity identification quality, and anonymization fidelity.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use crate::backend::AuditLog;
use crate::entity::EntitySet;
use crate::eval::{bleu, prf1_from_counts, score, similarity, ConfusionCounts, TaskInstance};
use crate::pipeline::{AnswerReport, Assets, Pipeline, PipelineConfig};
use crate::{Error, Real, Result};

/// How one instance fared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub id: String,
    pub ok: bool,
    pub error: Option<String>,
    pub leak_free: bool,
    /// BLEU-4 of the anonymized task against the original.
    pub bleu_anonymized: Option<Real>,
    /// Embedding similarity of the anonymized task to the original.
    pub similarity_anonymized: Option<Real>,
}

/// Aggregate metrics over a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub kind: String,
    pub total: usize,
    pub failed: usize,
    /// Fraction of questions whose output contains a target answer.
    /// Failed instances count with empty outputs.
    pub score: Real,
    /// Entity identification quality against gold annotations, pooled
    /// over the instances that carry them. Failures contribute their
    /// gold entities as misses.
    pub entity_precision: Option<Real>,
    pub entity_recall: Option<Real>,
    pub entity_f1: Option<Real>,
    /// Mean anonymization fidelity over successful instances.
    pub mean_bleu_anonymized: Option<Real>,
    pub mean_similarity_anonymized: Option<Real>,
    pub all_leak_free: bool,
    pub instances: Vec<InstanceOutcome>,
}

impl MetricsReport {
    /// More than 10% of instances failed.
    pub fn exceeded_failure_budget(&self) -> bool {
        self.failed * 10 > self.total
    }

    /// Aligned plain-text metrics table.
    pub fn render_table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("dataset".into(), self.kind.clone()),
            ("instances".into(), self.total.to_string()),
            ("failed".into(), self.failed.to_string()),
            ("score".into(), format!("{:.4}", self.score)),
        ];
        let mut push_opt = |label: &str, value: Option<Real>| {
            if let Some(v) = value {
                rows.push((label.into(), format!("{v:.4}")));
            }
        };
        push_opt("entity precision", self.entity_precision);
        push_opt("entity recall", self.entity_recall);
        push_opt("entity f1", self.entity_f1);
        push_opt("bleu (anonymized task)", self.mean_bleu_anonymized);
        push_opt("similarity (anonymized task)", self.mean_similarity_anonymized);
        rows.push((
            "leak-free".into(),
            if self.all_leak_free { "yes" } else { "NO" }.to_string(),
        ));
        let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (label, value) in rows {
            out.push_str(&format!("{label:<width$}  {value}\n"));
        }
        out
    }
}

/// The metrics plus every successful report, instance-ordered.
#[derive(Debug)]
pub struct BenchOutcome {
    pub metrics: MetricsReport,
    pub reports: Vec<Option<AnswerReport>>,
}

/// Run all instances. When `out_dir` is given, per-instance reports,
/// `metrics.json`, and `metrics.txt` land there.
pub async fn run_benchmark(
    config: Arc<PipelineConfig>,
    assets: Arc<Assets>,
    instances: &[TaskInstance],
    out_dir: Option<&Path>,
) -> Result<BenchOutcome> {
    if instances.is_empty() {
        return Err(Error::Eval("the dataset has no instances".into()));
    }
    let kind = instances[0].kind;
    let limit = config.parallelism.max(1);
    let semaphore = Arc::new(Semaphore::new(limit));
    let mut joins: JoinSet<(usize, std::result::Result<AnswerReport, String>)> = JoinSet::new();
    for (index, instance) in instances.iter().enumerate() {
        let config = config.clone();
        let assets = assets.clone();
        let task_text = instance.task_text();
        let semaphore = semaphore.clone();
        joins.spawn(async move {
            let _permit = semaphore.acquire_owned().await.expect("semaphore never closes");
            let outcome = match Pipeline::from_config(config, assets, AuditLog::in_memory()) {
                Ok(pipeline) => pipeline
                    .run_task(&task_text)
                    .await
                    .map_err(|failure| failure.error.to_string()),
                Err(error) => Err(error.to_string()),
            };
            (index, outcome)
        });
    }
    let mut slots: Vec<Option<std::result::Result<AnswerReport, String>>> =
        vec![None; instances.len()];
    while let Some(joined) = joins.join_next().await {
        let (index, outcome) = joined.map_err(|e| Error::Eval(format!("worker panicked: {e}")))?;
        slots[index] = Some(outcome);
    }

    let mut outputs: Vec<String> = Vec::with_capacity(instances.len());
    let mut reports: Vec<Option<AnswerReport>> = Vec::with_capacity(instances.len());
    let mut outcomes: Vec<InstanceOutcome> = Vec::with_capacity(instances.len());
    let mut counts = ConfusionCounts::default();
    let mut any_gold = false;
    let mut bleu_sum = 0.0;
    let mut sim_sum = 0.0;
    let mut success = 0usize;
    for (instance, slot) in instances.iter().zip(slots) {
        let outcome = slot.expect("every slot filled");
        let gold = instance.gold_entity_set();
        match outcome {
            Ok(report) => {
                success += 1;
                if !gold.is_empty() {
                    any_gold = true;
                    counts.add(&ConfusionCounts::from_sets(
                        &report.privacy_box.entity_set(),
                        &gold,
                    ));
                }
                let b = bleu::<Real>(&report.task_anonymized, &[&report.task_original], 4);
                bleu_sum += b;
                let sim = assets
                    .embedder
                    .as_ref()
                    .map(|e| similarity::<Real>(&report.task_original, &report.task_anonymized, e));
                sim_sum += sim.unwrap_or(0.0);
                outcomes.push(InstanceOutcome {
                    id: instance.id.clone(),
                    ok: true,
                    error: None,
                    leak_free: report.audit_summary.leak_free,
                    bleu_anonymized: Some(b),
                    similarity_anonymized: sim,
                });
                outputs.push(report.answer_final.clone());
                reports.push(Some(report));
            }
            Err(message) => {
                if !gold.is_empty() {
                    any_gold = true;
                    counts.add(&ConfusionCounts::from_sets(&EntitySet::new(), &gold));
                }
                outcomes.push(InstanceOutcome {
                    id: instance.id.clone(),
                    ok: false,
                    error: Some(message),
                    leak_free: true,
                    bleu_anonymized: None,
                    similarity_anonymized: None,
                });
                outputs.push(String::new());
                reports.push(None);
            }
        }
    }

    let (precision, recall, f1) = prf1_from_counts::<Real>(&counts);
    let has_embedder = assets.embedder.is_some();
    let metrics = MetricsReport {
        kind: kind.to_string(),
        total: instances.len(),
        failed: instances.len() - success,
        score: score::<Real>(&outputs, instances)?,
        entity_precision: any_gold.then_some(precision),
        entity_recall: any_gold.then_some(recall),
        entity_f1: any_gold.then_some(f1),
        mean_bleu_anonymized: (success > 0).then(|| bleu_sum / success as Real),
        mean_similarity_anonymized: (success > 0 && has_embedder)
            .then(|| sim_sum / success as Real),
        all_leak_free: outcomes.iter().all(|o| o.leak_free),
        instances: outcomes,
    };

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for (instance, report) in instances.iter().zip(&reports) {
            if let Some(report) = report {
                let path = dir.join(format!("{}.json", sanitize_file_stem(&instance.id)));
                std::fs::write(path, serde_json::to_string_pretty(report)?)?;
            }
        }
        std::fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&metrics)?)?;
        std::fs::write(dir.join("metrics.txt"), metrics.render_table())?;
    }
    Ok(BenchOutcome { metrics, reports })
}

/// Keep instance-derived file names flat and portable.
fn sanitize_file_stem(id: &str) -> String {
    let cleaned: String = id
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if cleaned.is_empty() { "instance".to_string() } else { cleaned }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::DatasetKind;
    use crate::pipeline::config::tests::scripted_config_json;

    fn lpp_instance(
        id: &str,
        question: &str,
        answer: bool,
        gold_surface: &str,
        category: crate::entity::EntityCategory,
    ) -> TaskInstance {
        TaskInstance {
            id: id.to_string(),
            kind: DatasetKind::Lpp,
            topic: None,
            passage: Some(format!("{gold_surface} works at the plant.")),
            questions: vec![question.to_string()],
            targets: vec![vec![answer.to_string()]],
            gold_entities: vec![crate::eval::GoldEntity {
                surface: gold_surface.to_string(),
                category,
            }],
        }
    }

    /// Each instance reloads the script fresh, so every queue holds one
    /// instance's worth of replies. There is no `view_fusion` queue: an
    /// instance whose views disagree underruns at fusion.
    fn write_script(dir: &Path) -> std::path::PathBuf {
        let map = serde_json::json!({
            "pia": ["[]"],
            "expert": ["the answer is true"],
            "disproof_expert": ["the answer is true"],
            "disproof_assistant": ["No contradiction"],
        });
        let path = dir.join("script.json");
        std::fs::write(&path, serde_json::to_string(&map).unwrap()).unwrap();
        path
    }

    #[test]
    fn benchmark_aggregates_and_counts_failures() {
        let dir = tempfile::tempdir().unwrap();
        let script = write_script(dir.path());
        let mut config: PipelineConfig =
            serde_json::from_str(&scripted_config_json(script.to_str().unwrap())).unwrap();
        config.enable_drke = false;
        config.parallelism = 1;
        let config = Arc::new(config);
        let assets = Assets::load(&config).unwrap();
        let instances = vec![
            // No pattern the local recognizer sees: views agree, runs clean.
            lpp_instance("a", "Is it true?", true, "Rosa Hartl", crate::entity::EntityCategory::Name),
            // The email is seen locally but denied by the scripted agent
            // view, so fusion is consulted — and has no reply: failure.
            lpp_instance(
                "b",
                "Is it true?",
                true,
                "ines.bauer@plant.example",
                crate::entity::EntityCategory::Email,
            ),
        ];
        let out_dir = dir.path().join("out");
        let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
        let outcome = rt
            .block_on(run_benchmark(config, assets, &instances, Some(&out_dir)))
            .unwrap();
        let metrics = &outcome.metrics;
        assert_eq!(metrics.total, 2);
        assert_eq!(metrics.failed, 1);
        assert!(metrics.exceeded_failure_budget());
        assert_eq!(metrics.instances[1].error.as_deref(), Some("script underrun for role \"view_fusion\""));
        // Instance a answered "the answer is true" → contains "true";
        // instance b failed and counts as an empty output.
        assert!((metrics.score - 0.5).abs() < 1e-12);
        // Neither instance produced a box entity against 2 gold entities.
        assert_eq!(metrics.entity_recall, Some(0.0));
        // Instance a's box is empty, so its anonymized task is unchanged.
        assert_eq!(metrics.mean_bleu_anonymized, Some(1.0));
        assert!(metrics.all_leak_free);
        assert!(out_dir.join("metrics.json").exists());
        assert!(out_dir.join("metrics.txt").exists());
        assert!(out_dir.join("a.json").exists());
        assert!(!out_dir.join("b.json").exists());
        let table = metrics.render_table();
        assert!(table.contains("score"));
        assert!(table.contains("0.5000"));
    }

    #[test]
    fn parallel_run_matches_serial_shape() {
        let dir = tempfile::tempdir().unwrap();
        let script = write_script(dir.path());
        let mut config: PipelineConfig =
            serde_json::from_str(&scripted_config_json(script.to_str().unwrap())).unwrap();
        config.enable_drke = false;
        config.parallelism = 4;
        let config = Arc::new(config);
        let assets = Assets::load(&config).unwrap();
        let instances: Vec<TaskInstance> = (0..4)
            .map(|i| {
                lpp_instance(
                    &format!("i{i}"),
                    "Is it true?",
                    true,
                    "Mara Vogel",
                    crate::entity::EntityCategory::Name,
                )
            })
            .collect();
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .build()
            .unwrap();
        let outcome = rt.block_on(run_benchmark(config, assets, &instances, None)).unwrap();
        assert_eq!(outcome.metrics.total, 4);
        assert_eq!(outcome.metrics.failed, 0);
        assert_eq!(outcome.reports.len(), 4);
        assert!((outcome.metrics.score - 1.0).abs() < 1e-12);
        assert!(!outcome.metrics.exceeded_failure_budget());
        // Outcomes stay in instance order even under concurrency.
        for (i, o) in outcome.metrics.instances.iter().enumerate() {
            assert_eq!(o.id, format!("i{i}"));
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let script = "/tmp/unused.json";
        let mut config: PipelineConfig =
            serde_json::from_str(&scripted_config_json(script)).unwrap();
        config.enable_drke = false;
        let config = Arc::new(config);
        let assets = Assets::load(&config).unwrap();
        let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
        let err = rt.block_on(run_benchmark(config, assets, &[], None)).unwrap_err();
        assert!(matches!(err, Error::Eval(_)));
    }

    #[test]
    fn file_stems_stay_portable() {
        assert_eq!(sanitize_file_stem("tcw/12:3"), "tcw_12_3");
        assert_eq!(sanitize_file_stem(""), "instance");
    }
}
