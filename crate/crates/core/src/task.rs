//! Converters from raw dataset rows to constraint documents, one builder per
//! task layout: infilling between observations (with optional keyword and
//! word-count variants), hypothesis choice, ordered-concept generation,
//! story completion with alternative endings, headline generation with a
//! length target, and terminology-constrained translation.
//!
//! Rows arrive as JSONL with per-kind field names; nothing is fetched over
//! the network.

use crate::expr::{Choice, Document, Expression, Node};
use crate::metrics::lemmatize;
use crate::pattern::count_words;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Anlg,
    AnlgLength,
    AnlgLexicon,
    AnlgLengthLexicon,
    Anli,
    Commongen,
    CommongenLength,
    StoryclozeInfill,
    GigawordLength,
    MtTerms,
}

impl TaskKind {
    pub const ALL: [TaskKind; 10] = [
        TaskKind::Anlg,
        TaskKind::AnlgLength,
        TaskKind::AnlgLexicon,
        TaskKind::AnlgLengthLexicon,
        TaskKind::Anli,
        TaskKind::Commongen,
        TaskKind::CommongenLength,
        TaskKind::StoryclozeInfill,
        TaskKind::GigawordLength,
        TaskKind::MtTerms,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Anlg => "anlg",
            TaskKind::AnlgLength => "anlg_length",
            TaskKind::AnlgLexicon => "anlg_lexicon",
            TaskKind::AnlgLengthLexicon => "anlg_length_lexicon",
            TaskKind::Anli => "anli",
            TaskKind::Commongen => "commongen",
            TaskKind::CommongenLength => "commongen_length",
            TaskKind::StoryclozeInfill => "storycloze_infill",
            TaskKind::GigawordLength => "gigaword_length",
            TaskKind::MtTerms => "mt_terms",
        }
    }

    /// Kinds whose expression carries the ordered concept keywords.
    pub fn uses_concepts(&self) -> bool {
        matches!(self, TaskKind::Commongen | TaskKind::CommongenLength)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL
            .into_iter()
            .find(|kind| kind.as_str() == s)
            .ok_or_else(|| format!("unknown task kind {s:?}"))
    }
}

/// A raw dataset row. Field presence depends on the task kind.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RawRow {
    pub id: Option<String>,
    /// Past/future observations.
    pub o1: Option<String>,
    pub o2: Option<String>,
    /// Competing hypotheses.
    pub h1: Option<String>,
    pub h2: Option<String>,
    /// Leading story sentences.
    pub s1: Option<String>,
    pub s2: Option<String>,
    pub s3: Option<String>,
    /// Alternative endings.
    pub e1: Option<String>,
    pub e2: Option<String>,
    /// Source text for summarization or translation.
    pub text: Option<String>,
    /// Concept lemmas (order and word sense recovered from the reference).
    pub concepts: Option<Vec<String>>,
    pub keyword: Option<String>,
    pub terms: Option<Vec<String>>,
    pub length: Option<u32>,
    pub references: Option<Vec<String>>,
    pub gold_choice: Option<usize>,
}

/// A converted row, ready for generation and evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub kind: TaskKind,
    pub doc: Document,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_choice: Option<usize>,
    /// Ordered concept surfaces, when the kind uses them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concepts: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub contexts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("{kind} row missing field {field:?}")]
    MissingField { kind: TaskKind, field: &'static str },
    #[error("concept {lemma:?} not found in the reference text")]
    ConceptNotFound { lemma: String },
}

fn require<'a>(
    kind: TaskKind,
    field: &'static str,
    value: &'a Option<String>,
) -> Result<&'a str, TaskError> {
    value
        .as_deref()
        .ok_or(TaskError::MissingField { kind, field })
}

/// Length target: explicit field, else the word count of the first
/// reference.
fn require_length(kind: TaskKind, row: &RawRow) -> Result<u32, TaskError> {
    if let Some(length) = row.length {
        return Ok(length);
    }
    row.references
        .as_ref()
        .and_then(|refs| refs.first())
        .map(|reference| count_words(reference))
        .filter(|&n| n > 0)
        .ok_or(TaskError::MissingField {
            kind,
            field: "length",
        })
}

/// Keyword for the lexicon variants: explicit field, else a naive
/// first-verb heuristic over the first reference (the first token that an
/// -ed/-ing strip changes).
fn require_keyword(kind: TaskKind, row: &RawRow) -> Result<String, TaskError> {
    if let Some(keyword) = &row.keyword {
        return Ok(keyword.clone());
    }
    row.references
        .as_ref()
        .and_then(|refs| refs.first())
        .and_then(|reference| naive_first_verb(reference))
        .ok_or(TaskError::MissingField {
            kind,
            field: "keyword",
        })
}

/// Heuristic only: the first token whose surface changes when an -ed/-ing
/// suffix is stripped.
pub fn naive_first_verb(reference: &str) -> Option<String> {
    reference.split_whitespace().find_map(|token| {
        let trimmed = token.trim_matches(|c: char| !c.is_alphanumeric());
        let lower = trimmed.to_lowercase();
        let stripped = lower
            .strip_suffix("ing")
            .or_else(|| lower.strip_suffix("ed"));
        match stripped {
            Some(stem) if stem.len() >= 2 => Some(trimmed.to_string()),
            _ => None,
        }
    })
}

fn lexicon(surface: &str, serial: u32) -> Node {
    Node::Lexicon {
        surface: surface.to_string(),
        serial,
    }
}

/// Masks interleaved with keywords: `<mask_0> w0(0) <mask_1> ... <mask_k>`.
fn interleaved(words: &[String]) -> Vec<Node> {
    let mut items = Vec::with_capacity(words.len() * 2 + 1);
    items.push(Node::Mask(0));
    for (i, word) in words.iter().enumerate() {
        items.push(lexicon(word, i as u32));
        items.push(Node::Mask(i as u32 + 1));
    }
    items
}

fn two_choice(first: &str, second: &str) -> Node {
    Node::Options(vec![
        Choice {
            id: 0,
            body: vec![Node::Literal(first.to_string())],
        },
        Choice {
            id: 1,
            body: vec![Node::Literal(second.to_string())],
        },
    ])
}

/// Build one instance from a raw row. CommonGen kinds expect `concepts` to
/// already hold ordered surfaces (see [`align_concepts`]).
pub fn build_instance(kind: TaskKind, index: usize, row: &RawRow) -> Result<TaskInstance, TaskError> {
    let id = row
        .id
        .clone()
        .unwrap_or_else(|| format!("{kind}-{index:05}"));
    let mut contexts = BTreeMap::new();
    let mut keyword = None;
    let mut terms = None;
    let mut length = None;
    let mut concepts = None;

    let doc = match kind {
        TaskKind::Anlg | TaskKind::AnlgLength => {
            let o1 = require(kind, "o1", &row.o1)?;
            let o2 = require(kind, "o2", &row.o2)?;
            contexts.insert("o1".to_string(), o1.to_string());
            contexts.insert("o2".to_string(), o2.to_string());
            let mut expr = Expression::new(vec![Node::Mask(0)]);
            if kind == TaskKind::AnlgLength {
                let n = require_length(kind, row)?;
                expr.length_constraint = Some(n);
                length = Some(n);
            }
            Document {
                prefix: format!("{o1} "),
                expr,
                suffix: format!(" {o2}"),
            }
        }
        TaskKind::AnlgLexicon | TaskKind::AnlgLengthLexicon => {
            let o1 = require(kind, "o1", &row.o1)?;
            let o2 = require(kind, "o2", &row.o2)?;
            contexts.insert("o1".to_string(), o1.to_string());
            contexts.insert("o2".to_string(), o2.to_string());
            let word = require_keyword(kind, row)?;
            keyword = Some(word.clone());
            let mut expr =
                Expression::new(vec![Node::Mask(0), lexicon(&word, 0), Node::Mask(1)]);
            if kind == TaskKind::AnlgLengthLexicon {
                let n = require_length(kind, row)?;
                expr.length_constraint = Some(n);
                length = Some(n);
            }
            Document {
                prefix: format!("{o1} "),
                expr,
                suffix: format!(" {o2}"),
            }
        }
        TaskKind::Anli => {
            let o1 = require(kind, "o1", &row.o1)?;
            let o2 = require(kind, "o2", &row.o2)?;
            let h1 = require(kind, "h1", &row.h1)?;
            let h2 = require(kind, "h2", &row.h2)?;
            contexts.insert("o1".to_string(), o1.to_string());
            contexts.insert("o2".to_string(), o2.to_string());
            contexts.insert("h1".to_string(), h1.to_string());
            contexts.insert("h2".to_string(), h2.to_string());
            Document {
                prefix: format!("{o1} "),
                expr: Expression::new(vec![two_choice(h1, h2)]),
                suffix: format!(" {o2}"),
            }
        }
        TaskKind::Commongen | TaskKind::CommongenLength => {
            let surfaces = row
                .concepts
                .clone()
                .filter(|c| !c.is_empty())
                .ok_or(TaskError::MissingField {
                    kind,
                    field: "concepts",
                })?;
            concepts = Some(surfaces.clone());
            let mut expr = Expression::new(interleaved(&surfaces));
            if kind == TaskKind::CommongenLength {
                let n = require_length(kind, row)?;
                expr.length_constraint = Some(n);
                length = Some(n);
            }
            Document::bare(expr)
        }
        TaskKind::StoryclozeInfill => {
            let s1 = require(kind, "s1", &row.s1)?;
            let s2 = require(kind, "s2", &row.s2)?;
            let s3 = require(kind, "s3", &row.s3)?;
            let e1 = require(kind, "e1", &row.e1)?;
            let e2 = require(kind, "e2", &row.e2)?;
            for (name, value) in [("s1", s1), ("s2", s2), ("s3", s3), ("e1", e1), ("e2", e2)] {
                contexts.insert(name.to_string(), value.to_string());
            }
            Document {
                prefix: format!("{s1} {s2} {s3} "),
                expr: Expression::new(vec![Node::Mask(0), two_choice(e1, e2)]),
                suffix: String::new(),
            }
        }
        TaskKind::GigawordLength => {
            let text = require(kind, "text", &row.text)?;
            contexts.insert("text".to_string(), text.to_string());
            let n = require_length(kind, row)?;
            length = Some(n);
            Document {
                prefix: format!(
                    "{text}\n Summarize the aforementioned text in a single phrase.\n "
                ),
                expr: Expression::with_length(vec![Node::Mask(0)], n),
                suffix: String::new(),
            }
        }
        TaskKind::MtTerms => {
            let text = require(kind, "text", &row.text)?;
            contexts.insert("text".to_string(), text.to_string());
            let term_list = row
                .terms
                .clone()
                .filter(|t| !t.is_empty())
                .ok_or(TaskError::MissingField {
                    kind,
                    field: "terms",
                })?;
            terms = Some(term_list.clone());
            Document {
                prefix: format!("Translate from English to German:\n\n English: {text} \n German: "),
                expr: Expression::new(interleaved(&term_list)),
                suffix: String::new(),
            }
        }
    };

    Ok(TaskInstance {
        id,
        kind,
        doc,
        references: row.references.clone().unwrap_or_default(),
        gold_choice: row.gold_choice,
        concepts,
        keyword,
        terms,
        length,
        contexts,
    })
}

/// Recover concept order and word sense from a reference: for each lemma,
/// the earliest unconsumed reference token with the same lemma; results in
/// first-occurrence order.
pub fn align_concepts(lemmas: &[String], reference: &str) -> Result<Vec<String>, TaskError> {
    let tokens: Vec<(String, String)> = reference
        .split_whitespace()
        .map(|token| {
            let surface = token
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_string();
            let lemma = lemmatize(token);
            (surface, lemma)
        })
        .collect();

    let mut consumed = vec![false; tokens.len()];
    let mut located: Vec<(usize, String)> = Vec::with_capacity(lemmas.len());
    for lemma in lemmas {
        let target = lemmatize(lemma);
        let position = tokens
            .iter()
            .enumerate()
            .position(|(i, (surface, token_lemma))| {
                !consumed[i] && !surface.is_empty() && *token_lemma == target
            })
            .ok_or_else(|| TaskError::ConceptNotFound {
                lemma: lemma.clone(),
            })?;
        consumed[position] = true;
        located.push((position, tokens[position].0.clone()));
    }
    located.sort_by_key(|(position, _)| *position);
    Ok(located.into_iter().map(|(_, surface)| surface).collect())
}

/// A row set aside during conversion, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub index: usize,
    pub id: Option<String>,
    pub reason: String,
}

/// Convert rows to instances. CommonGen kinds first recover concept order
/// and word sense from the first reference; rows whose concepts cannot be
/// located are skipped with a reason rather than silently mismatched.
pub fn convert_rows(
    kind: TaskKind,
    rows: &[RawRow],
) -> Result<(Vec<TaskInstance>, Vec<SkippedRow>), TaskError> {
    let mut instances = Vec::with_capacity(rows.len());
    let mut skipped = Vec::new();
    for (index, row) in rows.iter().enumerate() {
        let mut row = row.clone();
        if kind.uses_concepts() {
            let lemmas = row.concepts.clone().ok_or(TaskError::MissingField {
                kind,
                field: "concepts",
            })?;
            let reference = row
                .references
                .as_ref()
                .and_then(|refs| refs.first())
                .ok_or(TaskError::MissingField {
                    kind,
                    field: "references",
                })?;
            match align_concepts(&lemmas, reference) {
                Ok(surfaces) => row.concepts = Some(surfaces),
                Err(TaskError::ConceptNotFound { lemma }) => {
                    skipped.push(SkippedRow {
                        index,
                        id: row.id.clone(),
                        reason: format!("concept {lemma:?} not found in the reference"),
                    });
                    continue;
                }
                Err(other) => return Err(other),
            }
        }
        instances.push(build_instance(kind, index, &row)?);
    }
    Ok((instances, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_document;
    use crate::fixtures;

    fn row() -> RawRow {
        RawRow::default()
    }

    #[test]
    fn anli_layout_matches_the_template() {
        let instance = build_instance(
            TaskKind::Anli,
            0,
            &RawRow {
                o1: Some("It was a cold morning.".into()),
                o2: Some("Everyone stayed inside.".into()),
                h1: Some("The furnace had broken overnight.".into()),
                h2: Some("Summer had arrived early.".into()),
                gold_choice: Some(0),
                ..row()
            },
        )
        .unwrap();
        assert_eq!(instance.doc.render(), fixtures::TASK_TEMPLATE_INPUTS[2]);
    }

    #[test]
    fn gigaword_layout_is_byte_exact() {
        let instance = build_instance(
            TaskKind::GigawordLength,
            0,
            &RawRow {
                text: Some("japan 's toyota team europe were banned from the world rally championship for one year here on friday in a crushing ruling by the world council of the international automobile federation.".into()),
                length: Some(6),
                ..row()
            },
        )
        .unwrap();
        assert_eq!(instance.doc.render(), fixtures::SUMMARY_LENGTH_INPUT);
    }

    #[test]
    fn concepts_with_length_match_the_worked_example() {
        let instance = build_instance(
            TaskKind::CommongenLength,
            0,
            &RawRow {
                concepts: Some(
                    ["dance", "performed", "stage", "wearing", "costumes"]
                        .map(String::from)
                        .to_vec(),
                ),
                length: Some(11),
                ..row()
            },
        )
        .unwrap();
        assert_eq!(instance.doc.render(), fixtures::CONCEPTS_LENGTH_INPUT);
    }

    #[test]
    fn translation_layout_is_byte_exact() {
        let instance = build_instance(
            TaskKind::MtTerms,
            0,
            &RawRow {
                text: Some("Jennifer Aniston need not always be perfect or successful.".into()),
                terms: Some(vec!["erfolgreich".into()]),
                ..row()
            },
        )
        .unwrap();
        assert_eq!(instance.doc.render(), fixtures::TRANSLATION_TERM_INPUT);
    }

    #[test]
    fn story_layout_puts_the_mask_before_the_options() {
        let instance = build_instance(
            TaskKind::StoryclozeInfill,
            0,
            &RawRow {
                s1: Some("Anna packed her bag.".into()),
                s2: Some("She walked to the station.".into()),
                s3: Some("The train was late.".into()),
                e1: Some("She finally boarded and slept the whole way.".into()),
                e2: Some("She decided to buy a car instead.".into()),
                gold_choice: Some(0),
                ..row()
            },
        )
        .unwrap();
        assert_eq!(instance.doc.render(), fixtures::TASK_TEMPLATE_INPUTS[7]);
    }

    #[test]
    fn every_kind_round_trips_with_its_canonical_signature() {
        let full_row = RawRow {
            o1: Some("O1.".into()),
            o2: Some("O2.".into()),
            h1: Some("H1.".into()),
            h2: Some("H2.".into()),
            s1: Some("S1.".into()),
            s2: Some("S2.".into()),
            s3: Some("S3.".into()),
            e1: Some("E1.".into()),
            e2: Some("E2.".into()),
            text: Some("source text".into()),
            concepts: Some(vec!["dog".into(), "ball".into(), "yard".into()]),
            keyword: Some("ran".into()),
            terms: Some(vec!["Interview".into(), "Termin".into()]),
            length: Some(7),
            references: Some(vec!["The dog chased the ball.".into()]),
            gold_choice: Some(1),
            ..row()
        };
        let expected = [
            (TaskKind::Anlg, "mask"),
            (TaskKind::AnlgLength, "mask len"),
            (TaskKind::AnlgLexicon, "mask lex mask"),
            (TaskKind::AnlgLengthLexicon, "mask lex mask len"),
            (TaskKind::Anli, "opt(2)"),
            (TaskKind::Commongen, "mask lex mask lex mask lex mask"),
            (
                TaskKind::CommongenLength,
                "mask lex mask lex mask lex mask len",
            ),
            (TaskKind::StoryclozeInfill, "mask opt(2)"),
            (TaskKind::GigawordLength, "mask len"),
            (TaskKind::MtTerms, "mask lex mask lex mask"),
        ];
        for (kind, signature) in expected {
            let instance = build_instance(kind, 0, &full_row).unwrap();
            let rendered = instance.doc.render();
            let reparsed = parse_document(&rendered)
                .unwrap_or_else(|e| panic!("{kind}: {e} in {rendered:?}"));
            assert_eq!(reparsed, instance.doc, "{kind} round trip");
            assert_eq!(
                instance.doc.signature().to_string(),
                signature,
                "{kind} signature"
            );
        }
    }

    #[test]
    fn missing_fields_are_reported_by_name() {
        let err = build_instance(TaskKind::Anli, 0, &row()).unwrap_err();
        assert_eq!(
            err,
            TaskError::MissingField {
                kind: TaskKind::Anli,
                field: "o1"
            }
        );
        let err = build_instance(TaskKind::GigawordLength, 0, &RawRow {
            text: Some("words".into()),
            ..row()
        })
        .unwrap_err();
        assert_eq!(
            err,
            TaskError::MissingField {
                kind: TaskKind::GigawordLength,
                field: "length"
            }
        );
    }

    #[test]
    fn length_falls_back_to_the_reference_word_count() {
        let instance = build_instance(
            TaskKind::AnlgLength,
            0,
            &RawRow {
                o1: Some("O1.".into()),
                o2: Some("O2.".into()),
                references: Some(vec!["five words are right here".into()]),
                ..row()
            },
        )
        .unwrap();
        assert_eq!(instance.length, Some(5));
        assert_eq!(instance.doc.expr.length_constraint, Some(5));
    }

    #[test]
    fn aligns_concepts_to_reference_surfaces() {
        let lemmas: Vec<String> = ["stand", "field", "look"].map(String::from).to_vec();
        let surfaces = align_concepts(&lemmas, fixtures::LEXICON_LENGTH_REALIZED).unwrap();
        assert_eq!(surfaces, vec!["stood", "field", "looking"]);
    }

    #[test]
    fn alignment_order_follows_the_reference() {
        let lemmas: Vec<String> = ["look", "stand"].map(String::from).to_vec();
        let surfaces = align_concepts(&lemmas, fixtures::LEXICON_LENGTH_REALIZED).unwrap();
        // "stood" appears before "looking" in the reference.
        assert_eq!(surfaces, vec!["stood", "looking"]);
    }

    #[test]
    fn missing_concept_is_an_error() {
        let lemmas = vec!["zebra".to_string()];
        let err = align_concepts(&lemmas, "no such animal here").unwrap_err();
        assert_eq!(
            err,
            TaskError::ConceptNotFound {
                lemma: "zebra".to_string()
            }
        );
    }

    #[test]
    fn duplicate_lemmas_consume_earliest_tokens_first() {
        let lemmas: Vec<String> = ["walk", "walk"].map(String::from).to_vec();
        let surfaces = align_concepts(&lemmas, "walking home while walked fast").unwrap();
        assert_eq!(surfaces, vec!["walking", "walked"]);
    }

    #[test]
    fn convert_skips_unalignable_rows_with_a_reason() {
        let rows = vec![
            RawRow {
                concepts: Some(vec!["dog".into(), "ball".into()]),
                references: Some(vec!["The dog chased the ball.".into()]),
                ..row()
            },
            RawRow {
                id: Some("bad".into()),
                concepts: Some(vec!["zebra".into()]),
                references: Some(vec!["nothing matches".into()]),
                ..row()
            },
        ];
        let (instances, skipped) = convert_rows(TaskKind::Commongen, &rows).unwrap();
        assert_eq!(instances.len(), 1);
        assert_eq!(instances[0].concepts.as_deref().unwrap(), ["dog", "ball"]);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].id.as_deref(), Some("bad"));
        assert!(skipped[0].reason.contains("zebra"));
    }

    #[test]
    fn naive_first_verb_finds_an_inflected_token() {
        assert_eq!(
            naive_first_verb("The player stood in the field looking away"),
            Some("looking".to_string())
        );
        assert_eq!(naive_first_verb("no such token"), None);
    }
}
