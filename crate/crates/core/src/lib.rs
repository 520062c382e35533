//! Constraint-directed text generation toolkit.
//!
//! The pieces, bottom to top:
//!
//! - [`expr`]: the markup constraint language (masks, keywords, options,
//!   length labels), its parser, renderer, and structure signatures.
//! - [`pattern`]: compilation of expressions to anchored regular expressions
//!   and validation of candidate realizations.
//! - [`labels`]: the auxiliary generation-time labels (word-count suffixes,
//!   keyword serials) and realization extraction from raw model output.
//! - [`prompt`]: few-shot prompt construction in the JSON-lines
//!   demonstration format, and completion parsing.
//! - [`task`]: converters from raw dataset rows to constraint documents.
//! - [`engine`]: rejection-sampled generation against pluggable backends,
//!   plus recursive decoding over options groups.
//! - [`metrics`]: success rate, concept coverage, choice accuracy, and
//!   retry statistics.

pub mod engine;
pub mod expr;
pub mod fixtures;
pub mod labels;
pub mod metrics;
pub mod pattern;
pub mod prompt;
pub mod task;

#[cfg(feature = "testkit")]
pub mod testkit;

/// Stable 64-bit FNV-1a, used to derive per-instance seeds from ids.
pub fn stable_hash(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
