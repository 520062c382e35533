//! Auxiliary generation-time labels.
//!
//! Two label kinds ride along with generated text: word-count suffixes
//! (`The_1 player_2 ...`) that let a model track how many words it has
//! produced, and keyword serials (`stood(0)`) that fix keyword identity and
//! order. Both are stripped before validation.

use crate::expr::Expression;
use serde::{Deserialize, Serialize};

/// Which auxiliary labels a piece of text carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    WordLabels,
    SerialLabels,
    Both,
}

/// Text known to carry auxiliary labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledText {
    pub text: String,
    pub scheme: LabelScheme,
}

/// Word labels count from 1 so the final label equals the length target.
/// The zero-based variant is kept as a compatibility switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelBase {
    #[default]
    OneBased,
    ZeroBased,
}

impl LabelBase {
    fn first(self) -> usize {
        match self {
            LabelBase::OneBased => 1,
            LabelBase::ZeroBased => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotateError {
    #[error("text already carries word labels (token {token:?})")]
    AlreadyLabeled { token: String },
    #[error("model output opens an expression span but never closes it")]
    MissingExpressionSpan,
}

/// Append `_i` to every whitespace token, counting from 1. Whitespace is
/// preserved verbatim.
pub fn add_word_labels(text: &str) -> Result<LabeledText, AnnotateError> {
    add_word_labels_with(text, LabelBase::OneBased)
}

pub fn add_word_labels_with(text: &str, base: LabelBase) -> Result<LabeledText, AnnotateError> {
    for token in text.split_whitespace() {
        if word_label_split(token).is_some() {
            return Err(AnnotateError::AlreadyLabeled {
                token: token.to_string(),
            });
        }
    }
    let mut index = base.first();
    let labeled = map_tokens(text, |token| {
        let out = format!("{token}_{index}");
        index += 1;
        out
    });
    Ok(LabeledText {
        text: labeled,
        scheme: LabelScheme::WordLabels,
    })
}

/// Remove one trailing `_N` from every token that carries one; everything
/// else passes through, whitespace included.
pub fn strip_word_labels(text: &str) -> String {
    map_tokens(text, |token| {
        match word_label_split(token) {
            Some((stem, _)) => stem.to_string(),
            None => token.to_string(),
        }
    })
}

/// Rewrite each `surface(i)` back to `surface`, following the lexicon order.
/// Parentheses not attached to a known surface are left alone.
pub fn strip_serial_labels(text: &str, surfaces: &[&str]) -> String {
    let mut out = text.to_string();
    for (serial, surface) in surfaces.iter().enumerate() {
        let needle = format!("{surface}({serial})");
        out = out.replace(&needle, surface);
    }
    out
}

/// Pull the realized text out of raw model output: take the expression span
/// when tags are present (bare text otherwise), then strip word labels and
/// keyword serials.
pub fn extract_realization(model_output: &str, expr: &Expression) -> Result<String, AnnotateError> {
    let inner = expression_span(model_output)?;
    let without_word_labels = strip_word_labels(inner);
    let surfaces = expr.lexicon_surfaces();
    let clean = strip_serial_labels(&without_word_labels, &surfaces);
    Ok(clean.trim().to_string())
}

fn expression_span(text: &str) -> Result<&str, AnnotateError> {
    const OPEN: &str = "<expression>";
    const CLOSE: &str = "</expression>";
    match text.find(OPEN) {
        Some(open) => {
            let start = open + OPEN.len();
            let end = text[start..]
                .find(CLOSE)
                .ok_or(AnnotateError::MissingExpressionSpan)?;
            Ok(&text[start..start + end])
        }
        None => Ok(text),
    }
}

/// `token_N` split when the token ends with an underscore label.
fn word_label_split(token: &str) -> Option<(&str, u32)> {
    let underscore = token.rfind('_')?;
    if underscore == 0 {
        return None;
    }
    let digits = &token[underscore + 1..];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((&token[..underscore], digits.parse().ok()?))
}

/// Apply `f` to each maximal non-whitespace run, leaving whitespace intact.
fn map_tokens(text: &str, mut f: impl FnMut(&str) -> String) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
        out.push_str(&rest[..start]);
        let tail = &rest[start..];
        let end = tail
            .find(char::is_whitespace)
            .unwrap_or(tail.len());
        out.push_str(&f(&tail[..end]));
        rest = &tail[end..];
    }
    out.push_str(rest);
    out
}
