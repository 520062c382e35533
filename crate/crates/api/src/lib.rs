//! Request and response types for the HTTP service. Domain types come from
//! the core crate; this crate only adds the envelopes.

use rei_core::engine::backends::{GoldHint, TranscriptRecord};
use rei_core::engine::http::ApiConfig;
use rei_core::engine::{GenerationConfig, InstanceResult, RecursiveOptions};
use rei_core::expr::Document;
use rei_core::labels::LabelBase;
use rei_core::metrics::{EvalSummary, TryStats};
use rei_core::pattern::{CompiledPattern, ValidationReport};
use rei_core::prompt::Demonstration;
use rei_core::task::{RawRow, SkippedRow, TaskInstance, TaskKind};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Error body every endpoint returns on failure. `kind` distinguishes bad
/// input (HTTP 400, exit code 1) from backend faults (HTTP 502, exit 2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub kind: ErrorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Input,
    Backend,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParseRequest {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParseResponse {
    pub document: Document,
    pub signature: String,
    /// More than one options group: outside the single-group default.
    pub extended: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderRequest {
    pub document: Document,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderResponse {
    pub text: String,
}

/// Compile and validate requests take either raw markup or a parsed
/// document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentSource {
    Text(String),
    Document(Document),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompileRequest {
    #[serde(flatten)]
    pub source: DocumentSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompileResponse {
    pub pattern: CompiledPattern,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateRequest {
    #[serde(flatten)]
    pub source: DocumentSource,
    pub candidate: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub report: ValidationReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvertRequest {
    pub kind: TaskKind,
    pub rows: Vec<RawRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvertResponse {
    pub instances: Vec<TaskInstance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptRequest {
    pub query: String,
    pub demos: Vec<Demonstration>,
    pub shots: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptResponse {
    pub prompt: String,
    pub lines: usize,
}

/// Which generator the service should drive.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BackendSpec {
    Oracle {
        #[serde(default, skip_serializing_if = "HashMap::is_empty")]
        hints: HashMap<String, GoldHint>,
    },
    Mock {
        p_valid: f64,
    },
    Scripted {
        transcript: Vec<TranscriptRecord>,
    },
    Http {
        api: ApiConfig,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PromptingSpec {
    RenderedDocument,
    FewShot {
        demos: Vec<Demonstration>,
        shots: usize,
    },
}

impl Default for PromptingSpec {
    fn default() -> Self {
        PromptingSpec::RenderedDocument
    }
}

fn default_jobs() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub instances: Vec<TaskInstance>,
    pub backend: BackendSpec,
    #[serde(default)]
    pub config: GenerationConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub prompting: PromptingSpec,
    /// Compatibility switch for the zero-based word-label variant.
    #[serde(default)]
    pub label_base: LabelBase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub results: Vec<InstanceResult>,
    /// Retry statistics over the trial logs; absent when the run produced
    /// no top-level logs (recursive decoding).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<TryStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodeRecursiveRequest {
    #[serde(flatten)]
    pub generate: GenerateRequest,
    #[serde(default)]
    pub recursive: RecursiveOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRequest {
    pub instances: Vec<TaskInstance>,
    pub results: Vec<InstanceResult>,
    #[serde(default = "default_max_tries")]
    pub max_tries: u32,
}

fn default_max_tries() -> u32 {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalResponse {
    pub summary: EvalSummary,
    pub table: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub version: String,
}
