//! Constraint metrics and generation statistics:
//! success rate (does the output match its expression), concept coverage
//! (are the required keywords present after lemmatization), choice accuracy,
//! and retry statistics (average tries, first-attempt success rate).

pub mod lemma;

pub use lemma::{lemmatize, Lemmatizer};

use crate::engine::{InstanceResult, TrialLog};
use crate::expr::{normalize_whitespace, Document, Expression, Node};
use crate::pattern::validate_output;
use crate::task::TaskInstance;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("empty evaluation set")]
    EmptyEvalSet,
    #[error("results and gold labels differ in length ({results} vs {gold})")]
    LengthMismatch { results: usize, gold: usize },
}

/// Fraction of outputs that match their input expression.
pub fn success_rate(pairs: &[(Expression, String)]) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyEvalSet);
    }
    let hits = pairs
        .iter()
        .filter(|(expr, text)| validate_output(expr, text).verdict)
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Average per-instance fraction of concepts present in the lemmatized
/// output tokens.
pub fn concept_coverage(instances: &[(Vec<String>, String)]) -> Result<f64, MetricsError> {
    if instances.is_empty() {
        return Err(MetricsError::EmptyEvalSet);
    }
    let mut total = 0.0;
    for (concepts, output) in instances {
        let output_lemmas: HashSet<String> =
            output.split_whitespace().map(lemmatize).collect();
        let present = concepts
            .iter()
            .filter(|concept| output_lemmas.contains(&lemmatize(concept)))
            .count();
        total += if concepts.is_empty() {
            1.0
        } else {
            present as f64 / concepts.len() as f64
        };
    }
    Ok(total / instances.len() as f64)
}

/// Exact-match fraction of chosen indices against gold.
pub fn choice_accuracy(results: &[usize], gold: &[usize]) -> Result<f64, MetricsError> {
    if results.len() != gold.len() {
        return Err(MetricsError::LengthMismatch {
            results: results.len(),
            gold: gold.len(),
        });
    }
    if results.is_empty() {
        return Err(MetricsError::EmptyEvalSet);
    }
    let hits = results.iter().zip(gold).filter(|(r, g)| r == g).count();
    Ok(hits as f64 / results.len() as f64)
}

/// Which choice a realized output took: the one whose fixed text the output
/// ends with, after whitespace normalization. The longest match wins ties.
pub fn recover_choice(doc: &Document, output: &str) -> Option<usize> {
    let (_, choices, _) = doc.expr.split_first_options()?;
    let normalized = normalize_whitespace(output);
    let mut best: Option<(usize, usize)> = None;
    for (index, choice) in choices.iter().enumerate() {
        let tail = fixed_text(&choice.body);
        if tail.is_empty() || !normalized.ends_with(&tail) {
            continue;
        }
        if best.map(|(_, len)| tail.len() > len).unwrap_or(true) {
            best = Some((index, tail.len()));
        }
    }
    best.map(|(index, _)| index)
}

fn fixed_text(body: &[Node]) -> String {
    let mut words = Vec::new();
    for node in body {
        match node {
            Node::Literal(text) => words.push(text.clone()),
            Node::Lexicon { surface, .. } => words.push(surface.clone()),
            Node::Mask(_) | Node::Options(_) => {}
        }
    }
    normalize_whitespace(&words.join(" "))
}

/// Retry statistics over a set of trial logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TryStats {
    /// Mean tries over instances that produced an accepted output; absent
    /// when nothing succeeded.
    pub avg_try: Option<f64>,
    /// Fraction of instances whose first attempt was valid.
    pub first_sr: f64,
}

pub fn try_stats(logs: &[TrialLog], max_tries: u32) -> Result<TryStats, MetricsError> {
    if logs.is_empty() {
        return Err(MetricsError::EmptyEvalSet);
    }
    let successes: Vec<&TrialLog> = logs.iter().filter(|log| log.accepted.is_some()).collect();
    let avg_try = if successes.is_empty() {
        None
    } else {
        let avg = successes.iter().map(|log| log.tries_used as f64).sum::<f64>()
            / successes.len() as f64;
        debug_assert!(avg <= max_tries as f64);
        Some(avg)
    };
    let first_sr = logs.iter().filter(|log| log.first_try_success).count() as f64
        / logs.len() as f64;
    Ok(TryStats { avg_try, first_sr })
}

/// Evaluation report over one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n_instances: usize,
    pub success_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_try: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_sr: Option<f64>,
}

impl EvalSummary {
    /// Plain-text table with the retry statistics columns.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("instances     {}\n", self.n_instances));
        out.push_str(&format!(
            "success rate  {:.4}\n",
            self.success_rate
        ));
        if let Some(coverage) = self.coverage {
            out.push_str(&format!("coverage      {coverage:.4}\n"));
        }
        if let Some(accuracy) = self.accuracy {
            out.push_str(&format!("accuracy      {accuracy:.4}\n"));
        }
        out.push_str("\nAvg. Try  First SR.\n");
        let avg = self
            .avg_try
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "-".to_string());
        let first = self
            .first_sr
            .map(|v| format!("{:.1}", v * 100.0))
            .unwrap_or_else(|| "-".to_string());
        out.push_str(&format!("{avg:<9} {first}\n"));
        out
    }
}

/// Evaluate a batch run: success rate over all instances (missing outputs
/// count as failures), coverage over instances with concepts, accuracy over
/// instances with a gold choice, retry statistics from the trial logs.
pub fn summarize(
    instances: &[TaskInstance],
    results: &[InstanceResult],
    max_tries: u32,
) -> Result<EvalSummary, MetricsError> {
    if instances.is_empty() {
        return Err(MetricsError::EmptyEvalSet);
    }
    let by_id: HashMap<&str, &InstanceResult> = results
        .iter()
        .map(|result| (result.id.as_str(), result))
        .collect();

    let mut successes = 0usize;
    let mut coverage_items: Vec<(Vec<String>, String)> = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    let mut gold: Vec<usize> = Vec::new();
    let mut logs: Vec<TrialLog> = Vec::new();

    for instance in instances {
        let result = by_id.get(instance.id.as_str());
        let accepted = result.and_then(|r| r.accepted.as_deref());
        if let Some(text) = accepted {
            if validate_output(&instance.doc.expr, text).verdict {
                successes += 1;
            }
            if let Some(concepts) = &instance.concepts {
                coverage_items.push((concepts.clone(), text.to_string()));
            }
            if let Some(gold_choice) = instance.gold_choice {
                if let Some(index) = recover_choice(&instance.doc, text) {
                    chosen.push(index);
                    gold.push(gold_choice);
                }
            }
        }
        if let Some(log) = result.and_then(|r| r.log.clone()) {
            logs.push(log);
        }
    }

    let coverage = if coverage_items.is_empty() {
        None
    } else {
        Some(concept_coverage(&coverage_items)?)
    };
    let accuracy = if chosen.is_empty() {
        None
    } else {
        Some(choice_accuracy(&chosen, &gold)?)
    };
    let stats = if logs.is_empty() {
        None
    } else {
        Some(try_stats(&logs, max_tries)?)
    };

    Ok(EvalSummary {
        n_instances: instances.len(),
        success_rate: successes as f64 / instances.len() as f64,
        coverage,
        accuracy,
        avg_try: stats.and_then(|s| s.avg_try),
        first_sr: stats.map(|s| s.first_sr),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_document;
    use crate::fixtures;
    use crate::pattern::ValidationReport;

    fn expr_of(input: &str) -> Expression {
        parse_document(input).unwrap().expr
    }

    #[test]
    fn success_rate_is_the_verdict_mean() {
        let expr = expr_of(fixtures::POSITION_LEXICON_INPUT);
        let pairs = vec![
            (expr.clone(), fixtures::POSITION_LEXICON_REALIZED.to_string()),
            (expr.clone(), "Stephen tripped over a vase.".to_string()),
            (expr.clone(), "He knocked twice.".to_string()),
            (expr, "Then knocked over it went.".to_string()),
        ];
        assert_eq!(success_rate(&pairs).unwrap(), 0.75);
        assert_eq!(
            success_rate(&[]).unwrap_err(),
            MetricsError::EmptyEvalSet
        );
    }

    #[test]
    fn coverage_counts_lemma_matches() {
        let concepts = vec!["stand".to_string(), "field".to_string(), "look".to_string()];
        let full = vec![(
            concepts.clone(),
            fixtures::LEXICON_LENGTH_REALIZED.to_string(),
        )];
        assert_eq!(concept_coverage(&full).unwrap(), 1.0);

        let missing = vec![(
            concepts.clone(),
            "The player stood in the field".to_string(),
        )];
        let coverage = concept_coverage(&missing).unwrap();
        assert!((coverage - 2.0 / 3.0).abs() < 1e-9);

        let inflected = vec![(vec!["look".to_string()], "she looks away".to_string())];
        assert_eq!(concept_coverage(&inflected).unwrap(), 1.0);
    }

    #[test]
    fn choice_recovery_uses_the_ending() {
        let doc = parse_document(fixtures::ALTERNATIVE_ENDING_INPUT).unwrap();
        assert_eq!(
            recover_choice(&doc, fixtures::ALTERNATIVE_ENDING_REALIZED),
            Some(1)
        );
        let flipped = format!(
            "I danced terribly. {}",
            fixtures::ALTERNATIVE_ENDING_CHOICE_0
        );
        assert_eq!(recover_choice(&doc, &flipped), Some(0));
        assert_eq!(recover_choice(&doc, "No ending at all"), None);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(choice_accuracy(&[1, 0], &[1, 1]).unwrap(), 0.5);
        assert_eq!(
            choice_accuracy(&[], &[]).unwrap_err(),
            MetricsError::EmptyEvalSet
        );
        assert_eq!(
            choice_accuracy(&[1], &[1, 0]).unwrap_err(),
            MetricsError::LengthMismatch {
                results: 1,
                gold: 2
            }
        );
    }

    fn log_with(tries: u32, accepted: bool) -> TrialLog {
        let report = ValidationReport {
            regex_ok: accepted,
            length_ok: accepted,
            word_count: 0,
            verdict: accepted,
        };
        TrialLog {
            attempts: (0..tries)
                .map(|_| crate::engine::Attempt {
                    candidate: String::new(),
                    report,
                })
                .collect(),
            accepted: accepted.then(|| "ok".to_string()),
            tries_used: tries,
            first_try_success: accepted && tries == 1,
        }
    }

    #[test]
    fn try_stats_arithmetic() {
        let logs = vec![
            log_with(1, true),
            log_with(1, true),
            log_with(2, true),
            log_with(4, true),
        ];
        let stats = try_stats(&logs, 8).unwrap();
        assert_eq!(stats.avg_try, Some(2.0));
        assert_eq!(stats.first_sr, 0.5);
    }

    #[test]
    fn try_stats_without_successes_has_no_avg() {
        let logs = vec![log_with(8, false)];
        let stats = try_stats(&logs, 8).unwrap();
        assert_eq!(stats.avg_try, None);
        assert_eq!(stats.first_sr, 0.0);
    }

    #[test]
    fn summary_table_mirrors_the_stats_columns() {
        let summary = EvalSummary {
            n_instances: 10,
            success_rate: 1.0,
            coverage: Some(0.5),
            accuracy: None,
            avg_try: Some(1.0),
            first_sr: Some(1.0),
        };
        let table = summary.to_table();
        assert!(table.contains("Avg. Try  First SR."));
        assert!(table.contains("1.00"));
        assert!(table.contains("100.0"));
    }
}
