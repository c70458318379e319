//! Benchmark ingestion, the evasion-rate metric, the strategy × detector
//! experiment matrix, and the whitespace-normalization defense.

pub mod report;

use std::collections::HashSet;
use std::path::Path;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{DetectionResult, Detector, Verdict};
use crate::gateway::{Gateway, GatewayError};
use crate::perturb::{apply_strategy, prompt_for, PerturbError, Strategy};
use crate::text::{Document, Origin};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("duplicate document id `{id}` in {path}")]
    DuplicateId { id: String, path: String },
    #[error("{path}: benchmark has no items")]
    EmptyBenchmark { path: String },
    #[error("evasion rate over an empty verdict list is undefined")]
    EmptyVerdicts,
    #[error("item `{item}`: no pre-generated response and no gateway configured")]
    MissingResponse { item: String },
    #[error("strategy `{strategy}` generates at prompt time but no gateway is configured")]
    MissingGateway { strategy: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
}

/// One benchmark instruction plus an optional pre-generated response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub id: String,
    pub question: String,
    pub response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub name: String,
    pub items: Vec<BenchmarkItem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkFormat {
    JsonArray,
    JsonLines,
}

/// Loads a benchmark file. Items keep file order; `id` falls back to the
/// zero-based index, `instruction` is accepted for `question` and `output`
/// for `response`.
pub fn load_benchmark(path: &Path, format: BenchmarkFormat) -> Result<Benchmark, HarnessError> {
    let display = path.display().to_string();
    let raw = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: display.clone(),
        source,
    })?;

    let values: Vec<(usize, serde_json::Value)> = match format {
        BenchmarkFormat::JsonArray => {
            let top: serde_json::Value =
                serde_json::from_str(&raw).map_err(|e| HarnessError::Parse {
                    path: display.clone(),
                    line: e.line(),
                    message: e.to_string(),
                })?;
            let items = top.as_array().ok_or_else(|| HarnessError::Parse {
                path: display.clone(),
                line: 1,
                message: "expected a top-level JSON array".into(),
            })?;
            items
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, v)| (i + 1, v))
                .collect()
        }
        BenchmarkFormat::JsonLines => {
            let mut out = Vec::new();
            for (i, line) in raw.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let value = serde_json::from_str(line).map_err(|e| HarnessError::Parse {
                    path: display.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                out.push((i + 1, value));
            }
            out
        }
    };

    let mut items = Vec::with_capacity(values.len());
    let mut seen = HashSet::new();
    for (index, (line, value)) in values.into_iter().enumerate() {
        let question = value
            .get("question")
            .or_else(|| value.get("instruction"))
            .and_then(|v| v.as_str())
            .ok_or_else(|| HarnessError::Parse {
                path: display.clone(),
                line,
                message: "missing `question` (or `instruction`) field".into(),
            })?
            .to_string();
        let id = match value.get("id") {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(serde_json::Value::Number(n)) => n.to_string(),
            _ => index.to_string(),
        };
        if id.is_empty() {
            return Err(HarnessError::Parse {
                path: display,
                line,
                message: "document id must be non-empty".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(HarnessError::DuplicateId { id, path: display });
        }
        let response = value
            .get("response")
            .or_else(|| value.get("output"))
            .and_then(|v| v.as_str())
            .map(|s| s.to_string());
        items.push(BenchmarkItem {
            id,
            question,
            response,
        });
    }
    if items.is_empty() {
        return Err(HarnessError::EmptyBenchmark { path: display });
    }
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("benchmark")
        .to_string();
    Ok(Benchmark { name, items })
}

/// Fraction of verdicts that read as human-generated. Ties stay in the
/// denominator but never count as evaded.
pub fn evasion_rate(verdicts: &[Verdict]) -> Result<f64, HarnessError> {
    if verdicts.is_empty() {
        return Err(HarnessError::EmptyVerdicts);
    }
    let human = verdicts.iter().filter(|v| **v == Verdict::Human).count();
    Ok(human as f64 / verdicts.len() as f64)
}

/// Deletes every whitespace run that immediately precedes one of
/// `, . ; : ! ?`. Nothing else changes; idempotent.
pub fn normalize_defense(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            pending.push(c);
        } else {
            if matches!(c, ',' | '.' | ';' | ':' | '!' | '?') {
                pending.clear();
            } else if !pending.is_empty() {
                out.push_str(&pending);
                pending.clear();
            }
            out.push(c);
        }
    }
    out.push_str(&pending);
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefenseConfig {
    #[serde(default)]
    pub enabled: bool,
}

/// Per-cell outcome counts. `undetermined` holds detector errors (remote
/// failures); they are excluded from the evasion-rate denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub evaded: usize,
    pub detected: usize,
    pub tie: usize,
    pub undetermined: usize,
    pub evasion_rate: f64,
}

impl CellStats {
    fn absorb(&mut self, verdict: Option<Verdict>) {
        match verdict {
            Some(Verdict::Human) => self.evaded += 1,
            Some(Verdict::Ai) => self.detected += 1,
            Some(Verdict::Tie) => self.tie += 1,
            None => self.undetermined += 1,
        }
    }

    fn finalize(&mut self) {
        let denominator = self.evaded + self.detected + self.tie;
        self.evasion_rate = if denominator > 0 {
            self.evaded as f64 / denominator as f64
        } else {
            0.0
        };
    }

    pub fn total(&self) -> usize {
        self.evaded + self.detected + self.tie + self.undetermined
    }
}

/// Audit record for one (strategy, detector, item) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub strategy: String,
    pub detector: String,
    pub item_id: String,
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perplexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burstiness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ai_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
}

/// Strategy × detector results for one benchmark, plus per-item audit
/// records and run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMatrix {
    pub benchmark: String,
    pub strategies: Vec<String>,
    pub detectors: Vec<String>,
    /// Row-major: `cells[strategy_index][detector_index]`.
    pub cells: Vec<Vec<CellStats>>,
    pub records: Vec<ItemRecord>,
    pub metadata: RunMetadata,
}

impl ResultMatrix {
    pub fn cell(&self, strategy_id: &str, detector_id: &str) -> Option<&CellStats> {
        let row = self.strategies.iter().position(|s| s == strategy_id)?;
        let col = self.detectors.iter().position(|d| d == detector_id)?;
        self.cells.get(row)?.get(col)
    }

    /// Per-item verdicts of one cell, in benchmark item order.
    pub fn verdicts(&self, strategy_id: &str, detector_id: &str) -> Vec<Option<Verdict>> {
        self.records
            .iter()
            .filter(|r| r.strategy == strategy_id && r.detector == detector_id)
            .map(|r| r.verdict)
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: u64,
    pub defense: DefenseConfig,
    pub config_digest: Option<String>,
}

/// Runs every strategy against every detector over one benchmark.
///
/// Edit strategies perturb the plain (no-prompt) response; prompt
/// strategies generate their own response through the gateway. With the
/// defense enabled, detectors see [`normalize_defense`] of each text.
/// Detector failures are recorded as undetermined and never abort the run.
pub fn run_matrix(
    benchmark: &Benchmark,
    strategies: &[Strategy],
    detectors: &[&dyn Detector],
    gateway: Option<&Gateway>,
    options: &RunOptions,
) -> Result<ResultMatrix, HarnessError> {
    let started_at = Utc::now();

    // Plain responses, needed by the identity strategy and by every edit
    // strategy. Items with pre-generated responses never touch the gateway.
    let needs_base = strategies.iter().any(Strategy::is_edit);
    let base_texts: Vec<String> = if needs_base {
        benchmark
            .items
            .par_iter()
            .map(|item| match (&item.response, gateway) {
                (Some(text), _) => Ok(text.clone()),
                (None, Some(gw)) => Ok(gw.generate_cached(&item.question)?),
                (None, None) => Err(HarnessError::MissingResponse {
                    item: item.id.clone(),
                }),
            })
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };

    let mut cells: Vec<Vec<CellStats>> = Vec::with_capacity(strategies.len());
    let mut records: Vec<ItemRecord> = Vec::new();

    for strategy in strategies {
        let texts: Vec<String> = if strategy.is_edit() {
            benchmark
                .items
                .par_iter()
                .zip(&base_texts)
                .map(|(item, base)| {
                    let doc = Document::new(
                        item.id.clone(),
                        item.question.clone(),
                        base.clone(),
                        Origin::AiGenerated,
                    );
                    Ok(apply_strategy(strategy, &doc)?.text)
                })
                .collect::<Result<_, HarnessError>>()?
        } else {
            let gw = gateway.ok_or_else(|| HarnessError::MissingGateway {
                strategy: strategy.id().to_string(),
            })?;
            benchmark
                .items
                .par_iter()
                .map(|item| {
                    let prompt = prompt_for(strategy, &item.question)?;
                    Ok(gw.generate_cached(&prompt)?)
                })
                .collect::<Result<_, HarnessError>>()?
        };

        let docs: Vec<Document> = benchmark
            .items
            .iter()
            .zip(&texts)
            .map(|(item, text)| {
                let seen = if options.defense.enabled {
                    normalize_defense(text)
                } else {
                    text.clone()
                };
                Document::new(
                    item.id.clone(),
                    item.question.clone(),
                    seen,
                    Origin::AiGenerated,
                )
            })
            .collect();

        let mut row = Vec::with_capacity(detectors.len());
        for detector in detectors {
            let outcomes: Vec<Result<DetectionResult, _>> =
                docs.par_iter().map(|doc| detector.detect(doc)).collect();
            let mut stats = CellStats::default();
            for (item, outcome) in benchmark.items.iter().zip(outcomes) {
                let record = match outcome {
                    Ok(result) => ItemRecord {
                        strategy: strategy.id().to_string(),
                        detector: detector.id().to_string(),
                        item_id: item.id.clone(),
                        verdict: Some(result.verdict),
                        perplexity: result.perplexity,
                        burstiness: result.burstiness,
                        ai_probability: result.ai_probability,
                        error: None,
                    },
                    Err(e) => {
                        log::warn!("detector {} failed on item {}: {e}", detector.id(), item.id);
                        ItemRecord {
                            strategy: strategy.id().to_string(),
                            detector: detector.id().to_string(),
                            item_id: item.id.clone(),
                            verdict: None,
                            perplexity: None,
                            burstiness: None,
                            ai_probability: None,
                            error: Some(e.to_string()),
                        }
                    }
                };
                stats.absorb(record.verdict);
                records.push(record);
            }
            stats.finalize();
            row.push(stats);
        }
        cells.push(row);
    }

    Ok(ResultMatrix {
        benchmark: benchmark.name.clone(),
        strategies: strategies.iter().map(|s| s.id().to_string()).collect(),
        detectors: detectors.iter().map(|d| d.id().to_string()).collect(),
        cells,
        records,
        metadata: RunMetadata {
            seed: options.seed,
            started_at,
            finished_at: Utc::now(),
            config_digest: options.config_digest.clone(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::DetectError;

    struct FixedDetector {
        id: &'static str,
        verdict: Verdict,
    }

    impl Detector for FixedDetector {
        fn id(&self) -> &str {
            self.id
        }
        fn detect(&self, _doc: &Document) -> Result<DetectionResult, DetectError> {
            Ok(DetectionResult {
                detector_id: self.id.to_string(),
                verdict: self.verdict,
                perplexity: None,
                burstiness: None,
                ai_probability: None,
            })
        }
    }

    struct FailingDetector;

    impl Detector for FailingDetector {
        fn id(&self) -> &str {
            "broken"
        }
        fn detect(&self, _doc: &Document) -> Result<DetectionResult, DetectError> {
            Err(DetectError::DegenerateText)
        }
    }

    fn bench(n: usize) -> Benchmark {
        Benchmark {
            name: "toy".into(),
            items: (0..n)
                .map(|i| BenchmarkItem {
                    id: i.to_string(),
                    question: format!("question {i}"),
                    response: Some(format!("answer {i}, as text. it is fine.")),
                })
                .collect(),
        }
    }

    #[test]
    fn evasion_rate_examples() {
        use Verdict::*;
        assert_eq!(evasion_rate(&[Human, Human, Ai, Ai]).unwrap(), 0.5);
        assert_eq!(evasion_rate(&[Human, Tie, Ai, Ai]).unwrap(), 0.25);
        assert_eq!(evasion_rate(&[Ai, Ai]).unwrap(), 0.0);
        assert!(matches!(
            evasion_rate(&[]),
            Err(HarnessError::EmptyVerdicts)
        ));
    }

    #[test]
    fn normalize_defense_examples() {
        assert_eq!(normalize_defense("charge ,"), "charge,");
        assert_eq!(normalize_defense("a  ,b ."), "a,b.");
        assert_eq!(normalize_defense("clean already."), "clean already.");
        // trailing whitespace and inner runs untouched
        assert_eq!(normalize_defense("a  b "), "a  b ");
        assert_eq!(normalize_defense("x \t; y"), "x; y");
    }

    #[test]
    fn all_ai_detector_gives_zero_evasion() {
        let benchmark = bench(5);
        let always_ai = FixedDetector {
            id: "ai",
            verdict: Verdict::Ai,
        };
        let always_human = FixedDetector {
            id: "hum",
            verdict: Verdict::Human,
        };
        let detectors: Vec<&dyn Detector> = vec![&always_ai, &always_human];
        let strategies = [Strategy::NoPrompt, Strategy::SpaceInfi { seed: 1 }];
        let matrix = run_matrix(
            &benchmark,
            &strategies,
            &detectors,
            None,
            &RunOptions::default(),
        )
        .unwrap();
        for strategy in ["noprompt", "spaceinfi"] {
            assert_eq!(matrix.cell(strategy, "ai").unwrap().evasion_rate, 0.0);
            assert_eq!(matrix.cell(strategy, "hum").unwrap().evasion_rate, 1.0);
        }
    }

    #[test]
    fn cell_counts_always_sum_to_benchmark_size() {
        let benchmark = bench(7);
        let ok = FixedDetector {
            id: "ok",
            verdict: Verdict::Tie,
        };
        let broken = FailingDetector;
        let detectors: Vec<&dyn Detector> = vec![&ok, &broken];
        let matrix = run_matrix(
            &benchmark,
            &[Strategy::NoPrompt],
            &detectors,
            None,
            &RunOptions::default(),
        )
        .unwrap();
        for row in &matrix.cells {
            for cell in row {
                assert_eq!(cell.total(), 7);
            }
        }
        // the failing detector is all undetermined, rate 0 by convention
        let cell = matrix.cell("noprompt", "broken").unwrap();
        assert_eq!(cell.undetermined, 7);
        assert_eq!(cell.evasion_rate, 0.0);
    }

    #[test]
    fn noprompt_rate_is_seed_independent() {
        use crate::detect::{PerplexityDetector, PerplexityThresholds};
        use crate::ngram::NgramModel;
        use crate::text::TokenizeMode;

        let corpus = crate::synth::clean_training_corpus(8_000, 0x91);
        let model = NgramModel::train(&corpus, 3, 0.1, TokenizeMode::Char).unwrap();
        let detector = PerplexityDetector::new(model, PerplexityThresholds::new(1.7, 0.1).unwrap());
        let detectors: Vec<&dyn Detector> = vec![&detector];

        let benchmark = Benchmark {
            name: "toy".into(),
            items: crate::synth::ai_corpus(10, 0x92)
                .into_iter()
                .enumerate()
                .map(|(i, text)| BenchmarkItem {
                    id: i.to_string(),
                    question: String::new(),
                    response: Some(text),
                })
                .collect(),
        };
        let mut rates = Vec::new();
        for seed in [1u64, 99, 123456] {
            let strategies = [Strategy::NoPrompt, Strategy::SpaceInfi { seed }];
            let options = RunOptions {
                seed,
                ..RunOptions::default()
            };
            let matrix = run_matrix(&benchmark, &strategies, &detectors, None, &options).unwrap();
            rates.push(matrix.cell("noprompt", "perplexity").unwrap().evasion_rate);
        }
        assert_eq!(rates[0], rates[1]);
        assert_eq!(rates[1], rates[2]);
    }

    #[test]
    fn prompt_strategy_without_gateway_is_an_error() {
        let benchmark = bench(2);
        let det = FixedDetector {
            id: "d",
            verdict: Verdict::Ai,
        };
        let detectors: Vec<&dyn Detector> = vec![&det];
        let result = run_matrix(
            &benchmark,
            &[Strategy::Slang],
            &detectors,
            None,
            &RunOptions::default(),
        );
        assert!(matches!(result, Err(HarnessError::MissingGateway { .. })));
    }

    #[test]
    fn missing_response_without_gateway_is_an_error() {
        let mut benchmark = bench(2);
        benchmark.items[1].response = None;
        let det = FixedDetector {
            id: "d",
            verdict: Verdict::Ai,
        };
        let detectors: Vec<&dyn Detector> = vec![&det];
        let result = run_matrix(
            &benchmark,
            &[Strategy::NoPrompt],
            &detectors,
            None,
            &RunOptions::default(),
        );
        assert!(matches!(result, Err(HarnessError::MissingResponse { .. })));
    }

    #[test]
    fn load_benchmark_array_with_aliases() {
        let dir = tempfile::tempdir().unwrap();
        let array = dir.path().join("bench.json");
        std::fs::write(
            &array,
            r#"[{"id":"a1","question":"q1","response":"r1"},{"instruction":"q2","output":"r2"}]"#,
        )
        .unwrap();
        let b = load_benchmark(&array, BenchmarkFormat::JsonArray).unwrap();
        assert_eq!(b.items.len(), 2);
        assert_eq!(b.items[0].id, "a1");
        assert_eq!(b.items[0].response.as_deref(), Some("r1"));
        assert_eq!(b.items[1].id, "1"); // synthesized zero-based index
        assert_eq!(b.items[1].question, "q2");
        assert_eq!(b.items[1].response.as_deref(), Some("r2"));
    }

    #[test]
    fn synthesized_ids_are_zero_based_positions() {
        let dir = tempfile::tempdir().unwrap();
        let lines = dir.path().join("bench.jsonl");
        std::fs::write(
            &lines,
            "{\"question\":\"a\"}\n{\"question\":\"b\",\"response\":\"rb\"}\n",
        )
        .unwrap();
        let b = load_benchmark(&lines, BenchmarkFormat::JsonLines).unwrap();
        assert_eq!(b.items[0].id, "0");
        assert_eq!(b.items[1].id, "1");
        assert_eq!(b.items[1].response.as_deref(), Some("rb"));
        assert_eq!(b.name, "bench");
    }

    #[test]
    fn duplicate_or_empty_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.jsonl");
        std::fs::write(
            &path,
            "{\"id\":\"x\",\"question\":\"a\"}\n{\"id\":\"x\",\"question\":\"b\"}\n",
        )
        .unwrap();
        assert!(matches!(
            load_benchmark(&path, BenchmarkFormat::JsonLines),
            Err(HarnessError::DuplicateId { .. })
        ));

        let path = dir.path().join("empty-id.jsonl");
        std::fs::write(&path, "{\"id\":\"\",\"question\":\"a\"}\n").unwrap();
        assert!(matches!(
            load_benchmark(&path, BenchmarkFormat::JsonLines),
            Err(HarnessError::Parse { .. })
        ));
    }

    #[test]
    fn missing_question_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"question\":\"ok\"}\n{\"id\":\"2\"}\n").unwrap();
        match load_benchmark(&path, BenchmarkFormat::JsonLines) {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalize_defense_is_idempotent(text in "[a-z ,.;:!?\\t]{0,60}") {
                let once = normalize_defense(&text);
                prop_assert_eq!(normalize_defense(&once), once.clone());
                // only deletions of whitespace happen
                let kept: String = text.chars().filter(|c| !c.is_whitespace()).collect();
                let kept_once: String = once.chars().filter(|c| !c.is_whitespace()).collect();
                prop_assert_eq!(kept, kept_once);
            }

            #[test]
            fn evasion_rate_matches_hand_count(
                verdicts in prop::collection::vec(
                    prop::sample::select(vec![Verdict::Ai, Verdict::Human, Verdict::Tie]),
                    1..12,
                )
            ) {
                let rate = evasion_rate(&verdicts).unwrap();
                let human = verdicts.iter().filter(|v| **v == Verdict::Human).count();
                prop_assert_eq!(rate, human as f64 / verdicts.len() as f64);
            }
        }
    }
}
