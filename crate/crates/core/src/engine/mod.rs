//! Generation driver: rejection sampling against a pluggable backend, with a
//! retry cap, plus recursive decoding over options groups.
//!
//! Constraint failure after the retry cap is a reported outcome (a
//! [`TrialLog`] without an accepted text), not an error; only transport and
//! backend faults raise.

pub mod backends;
pub mod http;

use crate::expr::{normalize_whitespace, Document, Expression, Node};
use crate::labels;
use crate::pattern::{ValidationReport, Validator};
use crate::prompt::{self, Demonstration};
use crate::stable_hash;
use async_trait::async_trait;
use futures::future::BoxFuture;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Sampling and retry knobs.
///
/// `local_model` mode allows many retries and leads with beam search;
/// `api` mode keeps the retry cap small to bound request costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub max_tries: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub beam_size: u32,
    pub beam_first: bool,
}

impl GenerationConfig {
    pub fn local_model() -> Self {
        GenerationConfig {
            max_tries: 512,
            temperature: 0.7,
            top_p: 0.95,
            beam_size: 4,
            beam_first: true,
        }
    }

    pub fn api() -> Self {
        GenerationConfig {
            max_tries: 8,
            temperature: 0.7,
            top_p: 0.95,
            beam_size: 4,
            beam_first: false,
        }
    }
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig::api()
    }
}

/// How attempt text should be decoded by the backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    Beam,
    Sample,
}

/// What a backend supports and how it may be called.
#[derive(Debug, Clone, Copy)]
pub struct BackendCapabilities {
    pub supports_beam: bool,
    /// When false the engine serializes all calls to the backend.
    pub concurrent_calls: bool,
}

/// One generation call.
#[derive(Debug)]
pub struct ProduceRequest<'a> {
    pub instance_id: &'a str,
    /// 1-based attempt number within the rejection loop.
    pub attempt: u32,
    pub prompt: &'a str,
    pub document: &'a Document,
    /// Per-attempt seed; deterministic backends must key their randomness
    /// off this alone.
    pub seed: u64,
    pub mode: DecodeMode,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("auth token missing: environment variable {var} is not set")]
    AuthMissing { var: String },
    #[error("http status {status}")]
    Http { status: u16 },
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("transcript has no candidate for instance {id:?} attempt {attempt}")]
    TranscriptExhausted { id: String, attempt: u32 },
    #[error(transparent)]
    InfeasibleLength(#[from] backends::InfeasibleLength),
}

/// Text generator contract. Production backends wrap completion APIs; the
/// oracle, mock, and scripted backends in [`backends`] support desk-scale
/// verification.
#[async_trait]
pub trait GeneratorBackend: Send + Sync {
    fn capabilities(&self) -> BackendCapabilities;

    async fn produce(
        &self,
        request: &ProduceRequest<'_>,
        config: &GenerationConfig,
    ) -> Result<String, BackendError>;
}

/// One validated attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub candidate: String,
    pub report: ValidationReport,
}

/// Full record of one rejection-sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub attempts: Vec<Attempt>,
    /// Present iff some attempt passed validation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<String>,
    pub tries_used: u32,
    pub first_try_success: bool,
}

/// Derive the per-attempt seed from the instance seed. Splitmix64 finalizer,
/// stable across platforms.
pub fn mix_seed(seed: u64, attempt: u32) -> u64 {
    let mut z = seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One instance to generate for.
#[derive(Debug)]
pub struct GenerationRequest<'a> {
    pub id: &'a str,
    pub doc: &'a Document,
    pub prompt: &'a str,
    pub seed: u64,
}

/// Sample until a candidate passes validation or the retry cap is reached.
/// The first attempt uses beam search when configured and supported.
pub async fn generate_with_rejection(
    request: &GenerationRequest<'_>,
    backend: &dyn GeneratorBackend,
    config: &GenerationConfig,
) -> Result<TrialLog, BackendError> {
    let validator = Validator::new(&request.doc.expr);
    let capabilities = backend.capabilities();
    let mut attempts = Vec::new();
    let mut accepted = None;

    for attempt in 1..=config.max_tries.max(1) {
        let mode = if attempt == 1 && config.beam_first && capabilities.supports_beam {
            DecodeMode::Beam
        } else {
            DecodeMode::Sample
        };
        let produce_request = ProduceRequest {
            instance_id: request.id,
            attempt,
            prompt: request.prompt,
            document: request.doc,
            seed: mix_seed(request.seed, attempt),
            mode,
        };
        let raw = backend.produce(&produce_request, config).await?;
        // Output missing a closing tag is a failed attempt, not a fault:
        // validate the raw text and let the constraint check reject it.
        let candidate = labels::extract_realization(&raw, &request.doc.expr)
            .unwrap_or_else(|_| raw.trim().to_string());
        let report = validator.check(&candidate);
        let verdict = report.verdict;
        attempts.push(Attempt {
            candidate: candidate.clone(),
            report,
        });
        if verdict {
            accepted = Some(candidate);
            break;
        }
    }

    let tries_used = attempts.len() as u32;
    let first_try_success = attempts.first().map(|a| a.report.verdict).unwrap_or(false);
    Ok(TrialLog {
        attempts,
        accepted,
        tries_used,
        first_try_success,
    })
}

/// Convenience entry point for a lone document: the prompt is the rendered
/// document itself.
pub async fn generate_document(
    doc: &Document,
    backend: &dyn GeneratorBackend,
    config: &GenerationConfig,
) -> Result<TrialLog, BackendError> {
    let prompt = doc.render();
    generate_with_rejection(
        &GenerationRequest {
            id: "doc",
            doc,
            prompt: &prompt,
            seed: 0,
        },
        backend,
        config,
    )
    .await
}

/// Knobs for recursive decoding over options groups.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecursiveOptions {
    /// Resolve the remainder with a single plain generation call instead of
    /// recursing into further options groups.
    pub literal_remainder: bool,
    /// Prepend the realized choice to the remainder's context instead of
    /// solving the remainder independently.
    pub remainder_context: bool,
}

/// Trial log of one sub-expression solved during recursive decoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubTrial {
    pub part: String,
    pub log: TrialLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursiveOutcome {
    pub text: String,
    pub sub_trials: Vec<SubTrial>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("constraints unsatisfied after {tries} tries ({part})")]
    Unsatisfied { part: String, tries: u32 },
    #[error("prompt construction failed for {id}: {source}")]
    Prompt {
        id: String,
        source: prompt::PromptError,
    },
}

/// Solve each choice as prefix-plus-choice-body, select among the fully
/// realized alternatives with a choice-only expression, then resolve the
/// remainder and concatenate.
///
/// Options groups are handled strictly left to right; a document without any
/// group reduces to plain rejection sampling.
pub async fn recursive_decode(
    id: &str,
    doc: &Document,
    backend: &dyn GeneratorBackend,
    config: &GenerationConfig,
    options: RecursiveOptions,
    seed: u64,
) -> Result<RecursiveOutcome, EngineError> {
    let mut sub_trials = Vec::new();
    let text = decode_part(id, doc, backend, config, options, seed, &mut sub_trials).await?;
    Ok(RecursiveOutcome { text, sub_trials })
}

#[allow(clippy::too_many_arguments)]
fn decode_part<'a>(
    part_id: &'a str,
    doc: &'a Document,
    backend: &'a dyn GeneratorBackend,
    config: &'a GenerationConfig,
    options: RecursiveOptions,
    seed: u64,
    sub_trials: &'a mut Vec<SubTrial>,
) -> BoxFuture<'a, Result<String, EngineError>> {
    Box::pin(async move {
        if !doc.expr.has_nonterminal() {
            return Ok(realize_fixed(&doc.expr.items));
        }
        if doc.expr.options_group_count() == 0 {
            return solve_by_generation(part_id, doc, backend, config, seed, sub_trials).await;
        }

        let (before, choices, after) = doc
            .expr
            .split_first_options()
            .expect("options group present");

        // Solve each choice as prefix + choice body.
        let mut realized = Vec::with_capacity(choices.len());
        for (index, choice) in choices.iter().enumerate() {
            let mut items = before.clone();
            items.extend(choice.body.iter().cloned());
            let sub_expr = Expression::new(items).renumbered();
            if !sub_expr.has_nonterminal() {
                // Fully literal alternative: its only valid realization is
                // itself, no generation needed.
                realized.push(realize_fixed(&sub_expr.items));
                continue;
            }
            let choice_id = format!("{part_id}#choice{index}");
            let sub_doc = Document {
                prefix: doc.prefix.clone(),
                expr: sub_expr,
                suffix: doc.suffix.clone(),
            };
            let text = solve_by_generation(
                &choice_id,
                &sub_doc,
                backend,
                config,
                derive_seed(seed, &choice_id),
                sub_trials,
            )
            .await?;
            realized.push(text);
        }

        // Select among the completed alternatives with a choice-only
        // expression.
        let selection_expr = Expression::new(vec![Node::Options(
            realized
                .iter()
                .enumerate()
                .map(|(i, text)| crate::expr::Choice {
                    id: i as u32,
                    body: literal_body(text),
                })
                .collect(),
        )]);
        let selection_doc = Document {
            prefix: doc.prefix.clone(),
            expr: selection_expr,
            suffix: doc.suffix.clone(),
        };
        let selection_id = format!("{part_id}#select");
        let best = solve_by_generation(
            &selection_id,
            &selection_doc,
            backend,
            config,
            derive_seed(seed, &selection_id),
            sub_trials,
        )
        .await?;

        if after.is_empty() {
            return Ok(best);
        }

        // Resolve the remainder. Word-count constraints apply to the whole
        // expression and cannot be attributed to one segment, so they are
        // not carried into the split.
        let rest_expr = Expression::new(after).renumbered();
        let rest_id = format!("{part_id}#rest");
        let rest_prefix = if options.remainder_context {
            join_realized(&doc.prefix, &best)
        } else {
            doc.prefix.clone()
        };
        let rest_doc = Document {
            prefix: rest_prefix,
            expr: rest_expr,
            suffix: doc.suffix.clone(),
        };
        let rest_seed = derive_seed(seed, &rest_id);
        let rest = if options.literal_remainder {
            solve_by_generation(&rest_id, &rest_doc, backend, config, rest_seed, sub_trials)
                .await?
        } else {
            decode_part(
                &rest_id, &rest_doc, backend, config, options, rest_seed, sub_trials,
            )
            .await?
        };
        Ok(join_realized(&best, &rest))
    })
}

/// Seed for a derived sub-part, stable in the part id alone.
fn derive_seed(seed: u64, part_id: &str) -> u64 {
    seed ^ stable_hash(part_id)
}

async fn solve_by_generation(
    part_id: &str,
    doc: &Document,
    backend: &dyn GeneratorBackend,
    config: &GenerationConfig,
    seed: u64,
    sub_trials: &mut Vec<SubTrial>,
) -> Result<String, EngineError> {
    let prompt = doc.render();
    let log = generate_with_rejection(
        &GenerationRequest {
            id: part_id,
            doc,
            prompt: &prompt,
            seed,
        },
        backend,
        config,
    )
    .await?;
    let accepted = log.accepted.clone();
    let tries = log.tries_used;
    sub_trials.push(SubTrial {
        part: part_id.to_string(),
        log,
    });
    accepted.ok_or(EngineError::Unsatisfied {
        part: part_id.to_string(),
        tries,
    })
}

/// Realize an expression with no masks or options left: its literal and
/// keyword words in order.
fn realize_fixed(items: &[Node]) -> String {
    let mut words = Vec::new();
    for node in items {
        match node {
            Node::Literal(text) => words.push(text.clone()),
            Node::Lexicon { surface, .. } => words.push(surface.clone()),
            Node::Mask(_) | Node::Options(_) => {}
        }
    }
    words.join(" ")
}

fn literal_body(text: &str) -> Vec<Node> {
    let normalized = normalize_whitespace(text);
    if normalized.is_empty() {
        Vec::new()
    } else {
        vec![Node::Literal(normalized)]
    }
}

fn join_realized(left: &str, right: &str) -> String {
    match (left.is_empty(), right.is_empty()) {
        (true, _) => right.to_string(),
        (_, true) => left.to_string(),
        _ => format!("{left} {right}"),
    }
}

// ---------------------------------------------------------------------------
// Batch runner
// ---------------------------------------------------------------------------

/// How the prompt for each instance is built.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PromptStrategy {
    /// The rendered document itself.
    RenderedDocument,
    /// Few-shot JSON-lines prompt from structure-matched demonstrations.
    FewShot {
        demos: Vec<Demonstration>,
        shots: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BatchMode {
    Generate,
    Recursive(RecursiveOptions),
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub seed: u64,
    pub jobs: usize,
    pub mode: BatchMode,
    pub prompting: PromptStrategy,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            seed: 0,
            jobs: 8,
            mode: BatchMode::Generate,
            prompting: PromptStrategy::RenderedDocument,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchItem {
    pub id: String,
    pub doc: Document,
}

/// Per-instance outcome of a batch run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<TrialLog>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sub_trials: Vec<SubTrial>,
    /// Which sub-expression exhausted its retries, for recursive runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_part: Option<String>,
}

/// Run a batch of instances concurrently. Per-instance seeds derive from the
/// batch seed and the instance id, so results do not depend on scheduling.
/// Backends that do not declare themselves safe for concurrent calls are
/// processed one instance at a time.
pub async fn run_batch(
    items: &[BatchItem],
    backend: Arc<dyn GeneratorBackend>,
    config: &GenerationConfig,
    options: &BatchOptions,
) -> Result<Vec<InstanceResult>, EngineError> {
    let parallelism = if backend.capabilities().concurrent_calls {
        options.jobs.max(1)
    } else {
        1
    };

    let futures = items.iter().enumerate().map(|(index, item)| {
        let backend = Arc::clone(&backend);
        async move {
            let result = run_instance(item, backend.as_ref(), config, options).await?;
            Ok::<(usize, InstanceResult), EngineError>((index, result))
        }
    });

    let mut indexed: Vec<(usize, InstanceResult)> = stream::iter(futures)
        .buffer_unordered(parallelism)
        .collect::<Vec<_>>()
        .await
        .into_iter()
        .collect::<Result<_, _>>()?;
    indexed.sort_by_key(|(index, _)| *index);
    Ok(indexed.into_iter().map(|(_, result)| result).collect())
}

async fn run_instance(
    item: &BatchItem,
    backend: &dyn GeneratorBackend,
    config: &GenerationConfig,
    options: &BatchOptions,
) -> Result<InstanceResult, EngineError> {
    let seed = options.seed ^ stable_hash(&item.id);
    match options.mode {
        BatchMode::Generate => {
            let prompt = match &options.prompting {
                PromptStrategy::RenderedDocument => item.doc.render(),
                PromptStrategy::FewShot { demos, shots } => {
                    prompt::build_fewshot_prompt(&item.doc, demos, *shots).map_err(|source| {
                        EngineError::Prompt {
                            id: item.id.clone(),
                            source,
                        }
                    })?
                }
            };
            let log = generate_with_rejection(
                &GenerationRequest {
                    id: &item.id,
                    doc: &item.doc,
                    prompt: &prompt,
                    seed,
                },
                backend,
                config,
            )
            .await?;
            Ok(InstanceResult {
                id: item.id.clone(),
                accepted: log.accepted.clone(),
                log: Some(log),
                sub_trials: Vec::new(),
                failed_part: None,
            })
        }
        BatchMode::Recursive(recursive_options) => {
            match recursive_decode(&item.id, &item.doc, backend, config, recursive_options, seed)
                .await
            {
                Ok(outcome) => Ok(InstanceResult {
                    id: item.id.clone(),
                    accepted: Some(outcome.text),
                    log: None,
                    sub_trials: outcome.sub_trials,
                    failed_part: None,
                }),
                Err(EngineError::Unsatisfied { part, .. }) => Ok(InstanceResult {
                    id: item.id.clone(),
                    accepted: None,
                    log: None,
                    sub_trials: Vec::new(),
                    failed_part: Some(part),
                }),
                Err(other) => Err(other),
            }
        }
    }
}
