//! Compile expressions to anchored regular expressions and validate
//! candidate realizations against them.
//!
//! A mask becomes a dotall wildcard, keywords and literal runs are escaped
//! verbatim, and an options group becomes one alternation group. The word
//! count constraint is carried separately and checked by counting, not
//! encoded in the pattern.

use crate::expr::{normalize_whitespace, Expression, Node};
use regex::Regex;
use serde::{Deserialize, Serialize};

/// An anchored pattern plus the optional word-count requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledPattern {
    pub regex_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_word_count: Option<u32>,
}

/// Outcome of checking one candidate against one expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub regex_ok: bool,
    /// Vacuously true when the expression has no length constraint.
    pub length_ok: bool,
    pub word_count: u32,
    pub verdict: bool,
}

/// Compile an expression to its anchored pattern.
pub fn compile(expr: &Expression) -> CompiledPattern {
    let mut source = String::from("(?s)^");
    emit_items(&expr.items, &mut source);
    source.push('$');
    CompiledPattern {
        regex_source: source,
        required_word_count: expr.length_constraint,
    }
}

fn emit_items(items: &[Node], out: &mut String) {
    // Adjacent solid segments (text, keywords, option groups) are separated
    // by one space in the realization; masks absorb their own separators.
    let mut prev_solid = false;
    for node in items {
        match node {
            Node::Mask(_) => {
                out.push_str(".*");
                prev_solid = false;
            }
            Node::Literal(text) => {
                if prev_solid {
                    out.push(' ');
                }
                out.push_str(&regex::escape(text));
                prev_solid = true;
            }
            Node::Lexicon { surface, .. } => {
                if prev_solid {
                    out.push(' ');
                }
                out.push_str(&regex::escape(surface));
                prev_solid = true;
            }
            Node::Options(choices) => {
                if prev_solid {
                    out.push(' ');
                }
                out.push('(');
                for (i, choice) in choices.iter().enumerate() {
                    if i > 0 {
                        out.push('|');
                    }
                    emit_items(&choice.body, out);
                }
                out.push(')');
                prev_solid = true;
            }
        }
    }
}

/// Whole-candidate match after whitespace normalization.
pub fn full_match(pattern: &CompiledPattern, candidate: &str) -> bool {
    let regex = Regex::new(&pattern.regex_source).expect("compiled patterns are valid regexes");
    regex.is_match(&normalize_whitespace(candidate))
}

/// Number of maximal non-whitespace runs.
pub fn count_words(candidate: &str) -> u32 {
    candidate.split_whitespace().count() as u32
}

/// Run both checks against a candidate realization.
pub fn validate_output(expr: &Expression, candidate: &str) -> ValidationReport {
    Validator::new(expr).check(candidate)
}

/// A compiled expression reused across many candidates.
#[derive(Debug, Clone)]
pub struct Validator {
    pattern: CompiledPattern,
    regex: Regex,
}

impl Validator {
    pub fn new(expr: &Expression) -> Self {
        Self::from_pattern(compile(expr))
    }

    pub fn from_pattern(pattern: CompiledPattern) -> Self {
        let regex =
            Regex::new(&pattern.regex_source).expect("compiled patterns are valid regexes");
        Validator { pattern, regex }
    }

    pub fn pattern(&self) -> &CompiledPattern {
        &self.pattern
    }

    pub fn check(&self, candidate: &str) -> ValidationReport {
        let normalized = normalize_whitespace(candidate);
        let regex_ok = self.regex.is_match(&normalized);
        let word_count = count_words(&normalized);
        let length_ok = match self.pattern.required_word_count {
            Some(required) => word_count == required,
            None => true,
        };
        ValidationReport {
            regex_ok,
            length_ok,
            word_count,
            verdict: regex_ok && length_ok,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_document;
    use crate::fixtures;

    fn expr_of(input: &str) -> Expression {
        parse_document(input).unwrap().expr
    }

    #[test]
    fn compiles_keyword_sequence() {
        let expr = expr_of("<expression> <mask_0> stood(0) <mask_1> field(1) <mask_2> looking(2) <mask_3> </expression>");
        let pattern = compile(&expr);
        assert_eq!(pattern.regex_source, "(?s)^.*stood.*field.*looking.*$");
        assert_eq!(pattern.required_word_count, None);
    }

    #[test]
    fn compiles_choice_alternation() {
        let expr =
            expr_of("<expression> <options> <choice_0> H1 </choice_0> <choice_1> H2 </choice_1> </options> </expression>");
        let pattern = compile(&expr);
        assert_eq!(pattern.regex_source, "(?s)^(H1|H2)$");
    }

    #[test]
    fn compiles_single_mask() {
        let expr = expr_of("<expression> <mask_0> </expression>");
        let pattern = compile(&expr);
        assert_eq!(pattern.regex_source, "(?s)^.*$");
        assert_eq!(pattern.required_word_count, None);
    }

    #[test]
    fn length_constraint_is_carried_not_encoded() {
        let expr = expr_of(fixtures::LEXICON_LENGTH_INPUT);
        let pattern = compile(&expr);
        assert_eq!(pattern.required_word_count, Some(10));
        assert!(!pattern.regex_source.contains("10"));
    }

    #[test]
    fn full_match_accepts_known_realizations() {
        for (input, realized) in fixtures::realized_pairs() {
            let expr = expr_of(input);
            assert!(
                full_match(&compile(&expr), realized),
                "{realized:?} should match {input:?}"
            );
        }
    }

    #[test]
    fn missing_keyword_fails_the_match() {
        let expr = expr_of(fixtures::POSITION_LEXICON_INPUT);
        let pattern = compile(&expr);
        assert!(full_match(&pattern, fixtures::POSITION_LEXICON_REALIZED));
        assert!(!full_match(&pattern, "Stephen over a vase while drunk."));
    }

    #[test]
    fn adjacent_text_requires_single_space() {
        let expr = expr_of("<expression> <mask_0> alternative Medizin(0) <mask_1> </expression>");
        let pattern = compile(&expr);
        assert_eq!(pattern.regex_source, "(?s)^.*alternative Medizin.*$");
        assert!(full_match(&pattern, "ist alternative Medizin gut"));
        assert!(full_match(&pattern, "ist  alternative   Medizin gut"));
        assert!(!full_match(&pattern, "ist alternativeMedizin gut"));
    }

    #[test]
    fn choice_with_mask_matches_infilled_ending() {
        let expr = expr_of(fixtures::ALTERNATIVE_ENDING_INPUT);
        let pattern = compile(&expr);
        assert!(full_match(&pattern, fixtures::ALTERNATIVE_ENDING_REALIZED));
        // Neither ending alone is wrong: the mask may be empty.
        assert!(full_match(&pattern, fixtures::ALTERNATIVE_ENDING_CHOICE_0));
        // Text matching no ending fails.
        assert!(!full_match(&pattern, "Something entirely different."));
    }

    #[test]
    fn count_words_examples() {
        assert_eq!(count_words(fixtures::LEXICON_LENGTH_REALIZED), 10);
        assert_eq!(count_words(""), 0);
        assert_eq!(count_words("a  b\tc"), 3);
        assert_eq!(count_words("  padded   "), 1);
    }

    #[test]
    fn validate_checks_both_components() {
        let expr = expr_of(fixtures::LEXICON_LENGTH_INPUT);
        let report = validate_output(&expr, fixtures::LEXICON_LENGTH_REALIZED);
        assert!(report.verdict);
        assert_eq!(report.word_count, 10);

        let longer = format!("{} today", fixtures::LEXICON_LENGTH_REALIZED);
        let report = validate_output(&expr, &longer);
        assert!(report.regex_ok);
        assert!(!report.length_ok);
        assert!(!report.verdict);
        assert_eq!(report.word_count, 11);
    }

    #[test]
    fn validate_without_length_is_vacuously_length_ok() {
        let expr = expr_of("<expression> <mask_0> </expression>");
        let report = validate_output(&expr, "anything at all");
        assert!(report.regex_ok && report.length_ok && report.verdict);
    }
}
