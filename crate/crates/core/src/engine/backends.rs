//! Reference backends for desk-scale verification.
//!
//! - [`OracleBackend`] always emits a valid realization, deterministically.
//! - [`MockBackend`] emits a valid realization with a configured
//!   probability, otherwise a corrupted variant, seeded and reproducible.
//! - [`ScriptedBackend`] replays a transcript of candidates keyed by
//!   instance id.

use super::{BackendCapabilities, BackendError, GenerationConfig, GeneratorBackend, ProduceRequest};
use crate::expr::{Document, Expression, Node};
use crate::labels::{self, LabelBase};
use async_trait::async_trait;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;

/// The expression's fixed words cannot meet the word-count constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cannot realize exactly {required} words: the expression fixes {fixed} and has {masks} masks")]
pub struct InfeasibleLength {
    pub required: u32,
    pub fixed: u32,
    pub masks: u32,
}

/// Gold information the oracle may use: which choice to take and which words
/// to fill masks with.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GoldHint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infill: Option<Vec<String>>,
}

/// One realized piece of the chosen path.
#[derive(Debug, Clone)]
enum Segment {
    Filler(Vec<String>),
    Keyword { surface: String, serial: u32 },
    Text(String),
}

const FILLER_WORDS: [&str; 6] = ["some", "more", "words", "fill", "this", "gap"];

/// Deterministically realize a document: masks receive filler words, options
/// resolve to the hinted choice (default 0), and any word-count budget is
/// split across masks as evenly as possible with earlier masks taking the
/// remainder. The result always satisfies validation.
pub fn oracle_fill(doc: &Document, hint: Option<&GoldHint>) -> Result<String, InfeasibleLength> {
    Ok(render_segments(&fill_plan(&doc.expr, hint)?, false, LabelBase::OneBased).0)
}

fn chosen_path(expr: &Expression, hint: Option<&GoldHint>) -> Vec<Node> {
    let pick = hint.and_then(|h| h.choice).unwrap_or(0);
    let picks = vec![pick; expr.options_group_count()];
    expr.flatten_with_choices(&picks)
}

fn fill_plan(
    expr: &Expression,
    hint: Option<&GoldHint>,
) -> Result<Vec<Segment>, InfeasibleLength> {
    let path = chosen_path(expr, hint);
    let fixed: u32 = path
        .iter()
        .map(|node| match node {
            Node::Literal(text) => text.split_whitespace().count() as u32,
            Node::Lexicon { .. } => 1,
            Node::Mask(_) | Node::Options(_) => 0,
        })
        .sum();
    let mask_count = path.iter().filter(|n| matches!(n, Node::Mask(_))).count() as u32;

    let budgets: Vec<u32> = match expr.length_constraint {
        Some(required) => {
            if required < fixed || (mask_count == 0 && required > fixed) {
                return Err(InfeasibleLength {
                    required,
                    fixed,
                    masks: mask_count,
                });
            }
            let total = required - fixed;
            let base = if mask_count > 0 { total / mask_count } else { 0 };
            let extra = if mask_count > 0 { total % mask_count } else { 0 };
            (0..mask_count)
                .map(|i| base + u32::from(i < extra))
                .collect()
        }
        None => vec![2; mask_count as usize],
    };

    let pool: Vec<String> = match hint.and_then(|h| h.infill.as_ref()) {
        Some(words) if !words.is_empty() => words.clone(),
        _ => FILLER_WORDS.iter().map(|w| w.to_string()).collect(),
    };

    let mut pool_position = 0usize;
    let mut mask_index = 0usize;
    let mut segments = Vec::new();
    for node in &path {
        match node {
            Node::Mask(_) => {
                let budget = budgets[mask_index] as usize;
                mask_index += 1;
                let words = (0..budget)
                    .map(|_| {
                        let word = pool[pool_position % pool.len()].clone();
                        pool_position += 1;
                        word
                    })
                    .collect();
                segments.push(Segment::Filler(words));
            }
            Node::Literal(text) => segments.push(Segment::Text(text.clone())),
            Node::Lexicon { surface, serial } => segments.push(Segment::Keyword {
                surface: surface.clone(),
                serial: *serial,
            }),
            Node::Options(_) => unreachable!("options resolved by chosen_path"),
        }
    }
    Ok(segments)
}

/// Join segments into realized text. With `serial_labels` the keywords keep
/// their `(i)` suffix, mirroring the fine-tune output format.
fn render_segments(
    segments: &[Segment],
    serial_labels: bool,
    _base: LabelBase,
) -> (String, usize) {
    let mut words = Vec::new();
    for segment in segments {
        match segment {
            Segment::Filler(fill) => words.extend(fill.iter().cloned()),
            Segment::Keyword { surface, serial } => {
                if serial_labels {
                    words.push(format!("{surface}({serial})"));
                } else {
                    words.push(surface.clone());
                }
            }
            Segment::Text(text) => words.extend(text.split_whitespace().map(str::to_string)),
        }
    }
    let count = words.len();
    (words.join(" "), count)
}

/// Wrap a realization in the tagged, labeled output format a fine-tuned
/// model emits: serial labels on keywords, word labels when a length
/// constraint is present.
fn to_model_output(segments: &[Segment], labeled: bool, base: LabelBase) -> String {
    let (with_serials, _) = render_segments(segments, true, base);
    let inner = if labeled {
        labels::add_word_labels_with(&with_serials, base)
            .expect("oracle text carries no word labels yet")
            .text
    } else {
        with_serials
    };
    if inner.is_empty() {
        "<expression> </expression>".to_string()
    } else {
        format!("<expression> {inner} </expression>")
    }
}

/// Always-valid reference backend.
#[derive(Debug, Default)]
pub struct OracleBackend {
    hints: HashMap<String, GoldHint>,
    label_base: LabelBase,
}

impl OracleBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_hints(hints: HashMap<String, GoldHint>) -> Self {
        OracleBackend {
            hints,
            label_base: LabelBase::OneBased,
        }
    }

    pub fn label_base(mut self, base: LabelBase) -> Self {
        self.label_base = base;
        self
    }
}

#[async_trait]
impl GeneratorBackend for OracleBackend {
    fn capabilities(&self) -> BackendCapabilities {
        BackendCapabilities {
            supports_beam: true,
            concurrent_calls: true,
        }
    }

    async fn produce(
        &self,
        request: &ProduceRequest<'_>,
        _config: &GenerationConfig,
    ) -> Result<String, BackendError> {
        let hint = self.hints.get(request.instance_id);
        let segments = fill_plan(&request.document.expr, hint)?;
        let labeled = request.document.expr.length_constraint.is_some();
        Ok(to_model_output(&segments, labeled, self.label_base))
    }
}

/// How a corrupted candidate is produced.
enum Corruption {
    DropKeyword(usize),
    ExtraWord,
    Garbage,
    None,
}

/// Emit a valid realization with probability `p_valid`, otherwise a
/// corrupted variant: a dropped keyword, one extra word when a length
/// constraint exists, or garbage for choice-only expressions. Expressions
/// with nothing to violate always come out valid.
pub fn mock_generate(doc: &Document, p_valid: f64, seed: u64) -> String {
    let (segments, corruption) = mock_segments(&doc.expr, p_valid, seed);
    realize_corrupted(&segments, &corruption, false)
}

fn mock_segments(expr: &Expression, p_valid: f64, seed: u64) -> (Vec<Segment>, Corruption) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let valid = rng.random::<f64>() < p_valid;

    let segments = match fill_plan(expr, None) {
        Ok(segments) => segments,
        // Infeasible word count: nothing the mock emits can be valid.
        Err(_) => {
            return (
                vec![Segment::Text("infeasible".to_string())],
                Corruption::None,
            )
        }
    };
    if valid {
        return (segments, Corruption::None);
    }

    let keyword_count = segments
        .iter()
        .filter(|s| matches!(s, Segment::Keyword { .. }))
        .count();
    let has_length = expr.length_constraint.is_some();
    let has_options = expr.options_group_count() > 0;

    let corruption = if keyword_count > 0 && has_length {
        if rng.random::<f64>() < 0.5 {
            Corruption::DropKeyword(rng.random_range(0..keyword_count))
        } else {
            Corruption::ExtraWord
        }
    } else if keyword_count > 0 {
        Corruption::DropKeyword(rng.random_range(0..keyword_count))
    } else if has_length {
        Corruption::ExtraWord
    } else if has_options {
        Corruption::Garbage
    } else {
        // Nothing to violate: a bare-mask expression accepts anything.
        Corruption::None
    };
    (segments, corruption)
}

fn realize_corrupted(segments: &[Segment], corruption: &Corruption, serial_labels: bool) -> String {
    match corruption {
        Corruption::Garbage => "zxqv mumble unrelated".to_string(),
        Corruption::None => render_segments(segments, serial_labels, LabelBase::OneBased).0,
        Corruption::ExtraWord => {
            let (text, _) = render_segments(segments, serial_labels, LabelBase::OneBased);
            if text.is_empty() {
                "extra".to_string()
            } else {
                format!("{text} extra")
            }
        }
        Corruption::DropKeyword(index) => {
            let mut seen = 0usize;
            let kept: Vec<Segment> = segments
                .iter()
                .filter(|segment| {
                    if matches!(segment, Segment::Keyword { .. }) {
                        let keep = seen != *index;
                        seen += 1;
                        keep
                    } else {
                        true
                    }
                })
                .cloned()
                .collect();
            render_segments(&kept, serial_labels, LabelBase::OneBased).0
        }
    }
}

/// Statistical test backend: valid with probability `p_valid` per attempt.
#[derive(Debug)]
pub struct MockBackend {
    p_valid: f64,
    label_base: LabelBase,
}

impl MockBackend {
    pub fn new(p_valid: f64) -> Self {
        MockBackend {
            p_valid,
            label_base: LabelBase::OneBased,
        }
    }

    pub fn label_base(mut self, base: LabelBase) -> Self {
        self.label_base = base;
        self
    }
}

#[async_trait]
impl GeneratorBackend for MockBackend {
    fn capabilities(&self) -> BackendCapabilities {
        BackendCapabilities {
            supports_beam: false,
            concurrent_calls: true,
        }
    }

    async fn produce(
        &self,
        request: &ProduceRequest<'_>,
        _config: &GenerationConfig,
    ) -> Result<String, BackendError> {
        let expr = &request.document.expr;
        let (segments, corruption) = mock_segments(expr, self.p_valid, request.seed);
        let clean = realize_corrupted(&segments, &corruption, true);
        let labeled = if expr.length_constraint.is_some() && !clean.is_empty() {
            labels::add_word_labels_with(&clean, self.label_base)
                .map(|l| l.text)
                .unwrap_or(clean)
        } else {
            clean
        };
        Ok(format!("<expression> {labeled} </expression>"))
    }
}

/// One transcript line: the ordered candidates for an instance. Attempt `n`
/// consumes the n-th candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub id: String,
    pub candidates: Vec<String>,
}

/// Replays candidates from a transcript, keyed by instance id. Sub-parts of
/// recursive decoding use derived ids (`{id}#choice0`, `{id}#select`,
/// `{id}#rest`).
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    entries: Mutex<HashMap<String, VecDeque<String>>>,
}

impl ScriptedBackend {
    pub fn new(records: impl IntoIterator<Item = TranscriptRecord>) -> Self {
        let entries = records
            .into_iter()
            .map(|record| (record.id, record.candidates.into_iter().collect()))
            .collect();
        ScriptedBackend {
            entries: Mutex::new(entries),
        }
    }

    /// Parse a JSONL transcript: one [`TranscriptRecord`] per line.
    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut records = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str::<TranscriptRecord>(line)?);
        }
        Ok(Self::new(records))
    }

    pub fn from_path(path: &Path) -> Result<Self, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_jsonl(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[async_trait]
impl GeneratorBackend for ScriptedBackend {
    fn capabilities(&self) -> BackendCapabilities {
        BackendCapabilities {
            supports_beam: false,
            concurrent_calls: true,
        }
    }

    async fn produce(
        &self,
        request: &ProduceRequest<'_>,
        _config: &GenerationConfig,
    ) -> Result<String, BackendError> {
        let mut entries = self.entries.lock().expect("transcript lock");
        entries
            .get_mut(request.instance_id)
            .and_then(|queue| queue.pop_front())
            .ok_or_else(|| BackendError::TranscriptExhausted {
                id: request.instance_id.to_string(),
                attempt: request.attempt,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_document;
    use crate::fixtures;
    use crate::pattern::validate_output;

    #[test]
    fn oracle_splits_budget_evenly_with_early_remainder() {
        // 3 fixed keywords, target 10: 7 filler words over 4 masks = 2,2,2,1.
        let doc = parse_document(fixtures::LEXICON_LENGTH_INPUT).unwrap();
        let segments = fill_plan(&doc.expr, None).unwrap();
        let budgets: Vec<usize> = segments
            .iter()
            .filter_map(|s| match s {
                Segment::Filler(words) => Some(words.len()),
                _ => None,
            })
            .collect();
        assert_eq!(budgets, vec![2, 2, 2, 1]);

        let text = oracle_fill(&doc, None).unwrap();
        let report = validate_output(&doc.expr, &text);
        assert!(report.verdict, "oracle output invalid: {text:?}");
        assert_eq!(report.word_count, 10);
    }

    #[test]
    fn oracle_with_exact_fixed_count_leaves_masks_empty() {
        let doc = parse_document(
            "<expression> <mask_0> stood(0) <mask_1> field(1) <mask_2> <length=2> </expression>",
        )
        .unwrap();
        let text = oracle_fill(&doc, None).unwrap();
        assert_eq!(text, "stood field");
        assert!(validate_output(&doc.expr, &text).verdict);
    }

    #[test]
    fn oracle_rejects_infeasible_length() {
        let doc = parse_document(
            "<expression> <mask_0> stood(0) <mask_1> field(1) <mask_2> <length=1> </expression>",
        )
        .unwrap();
        let err = oracle_fill(&doc, None).unwrap_err();
        assert_eq!(err.required, 1);
        assert_eq!(err.fixed, 2);
    }

    #[test]
    fn oracle_resolves_options_to_hint() {
        let doc = parse_document(fixtures::ALTERNATIVE_ENDING_INPUT).unwrap();
        let default = oracle_fill(&doc, None).unwrap();
        assert!(default.ends_with(fixtures::ALTERNATIVE_ENDING_CHOICE_0));
        let hinted = oracle_fill(
            &doc,
            Some(&GoldHint {
                choice: Some(1),
                infill: None,
            }),
        )
        .unwrap();
        assert!(hinted.ends_with(fixtures::ALTERNATIVE_ENDING_CHOICE_1));
        assert!(validate_output(&doc.expr, &hinted).verdict);
    }

    #[test]
    fn mock_with_certainty_matches_oracle() {
        let doc = parse_document(fixtures::LEXICON_LENGTH_INPUT).unwrap();
        assert_eq!(mock_generate(&doc, 1.0, 42), oracle_fill(&doc, None).unwrap());
    }

    #[test]
    fn mock_with_zero_probability_fails_the_regex() {
        let doc = parse_document(fixtures::POSITION_LEXICON_INPUT).unwrap();
        for seed in 0..20 {
            let text = mock_generate(&doc, 0.0, seed);
            let report = validate_output(&doc.expr, &text);
            assert!(!report.verdict, "seed {seed} produced valid {text:?}");
        }
    }

    #[test]
    fn mock_validity_fraction_tracks_probability() {
        let doc = parse_document(fixtures::LEXICON_LENGTH_INPUT).unwrap();
        let trials = 10_000;
        let valid = (0..trials)
            .filter(|&seed| validate_output(&doc.expr, &mock_generate(&doc, 0.5, seed)).verdict)
            .count();
        let fraction = valid as f64 / trials as f64;
        assert!(
            (fraction - 0.5).abs() < 0.02,
            "validity fraction {fraction} out of bounds"
        );
    }

    #[test]
    fn scripted_replays_in_order_and_exhausts() {
        let backend = ScriptedBackend::new(vec![TranscriptRecord {
            id: "a".to_string(),
            candidates: vec!["first".to_string(), "second".to_string()],
        }]);
        let doc = parse_document("<expression> <mask_0> </expression>").unwrap();
        let config = GenerationConfig::api();
        let request = |attempt| ProduceRequest {
            instance_id: "a",
            attempt,
            prompt: "",
            document: &doc,
            seed: 0,
            mode: super::super::DecodeMode::Sample,
        };
        futures::executor::block_on(async {
            assert_eq!(backend.produce(&request(1), &config).await.unwrap(), "first");
            assert_eq!(backend.produce(&request(2), &config).await.unwrap(), "second");
            let err = backend.produce(&request(3), &config).await.unwrap_err();
            assert!(matches!(err, BackendError::TranscriptExhausted { attempt: 3, .. }));
        });
    }
}
