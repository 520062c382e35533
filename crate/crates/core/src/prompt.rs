//! Few-shot prompt construction and completion parsing.
//!
//! Demonstrations are emitted one JSON object per line,
//! `{"input": ..., "output": ...}`, and the final line is the query object
//! truncated right after `"output": "` so the model continues the string.
//! JSON escaping stands in for an escape character: markup labels or
//! newlines inside the data never collide with the prompt structure.

use crate::expr::Document;
use serde::{Deserialize, Serialize};

/// One input/output example, both sides in rendered markup form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("need {shots} demonstrations with matching structure, found {available}")]
    NotEnoughDemos { shots: usize, available: usize },
    #[error("completion ended before the closing quote")]
    UnterminatedCompletion,
}

/// Stop sequence matching the truncated query object: generation should halt
/// once the model closes the output string.
pub const COMPLETION_STOP: &str = "\"}";

/// Build a prompt from the first `shots` demonstrations whose input has the
/// same structure signature as the query.
pub fn build_fewshot_prompt(
    query: &Document,
    demos: &[Demonstration],
    shots: usize,
) -> Result<String, PromptError> {
    let signature = query.signature();
    let matching: Vec<&Demonstration> = demos
        .iter()
        .filter(|demo| {
            Document::parse(&demo.input)
                .map(|doc| doc.signature() == signature)
                .unwrap_or(false)
        })
        .collect();
    if matching.len() < shots {
        return Err(PromptError::NotEnoughDemos {
            shots,
            available: matching.len(),
        });
    }

    let mut lines: Vec<String> = matching[..shots]
        .iter()
        .map(|demo| {
            format!(
                "{{\"input\": {}, \"output\": {}}}",
                json_string(&demo.input),
                json_string(&demo.output)
            )
        })
        .collect();
    lines.push(format!(
        "{{\"input\": {}, \"output\": \"",
        json_string(&query.render())
    ));
    Ok(lines.join("\n"))
}

fn json_string(text: &str) -> String {
    serde_json::to_string(text).expect("strings always serialize")
}

/// Decode the model continuation of the query line: everything up to the
/// first unescaped `"` that is immediately followed by `}`. Anything after
/// the terminator is discarded.
pub fn parse_completion(raw: &str) -> Result<String, PromptError> {
    let mut out = String::new();
    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                let escaped = chars.next().ok_or(PromptError::UnterminatedCompletion)?;
                out.push(decode_escape(escaped, &mut chars)?);
            }
            '"' => {
                if chars.peek() == Some(&'}') {
                    return Ok(out);
                }
                // A stray quote the model failed to escape; keep it.
                out.push('"');
            }
            other => out.push(other),
        }
    }
    Err(PromptError::UnterminatedCompletion)
}

fn decode_escape(
    escaped: char,
    chars: &mut std::iter::Peekable<std::str::Chars<'_>>,
) -> Result<char, PromptError> {
    Ok(match escaped {
        '"' => '"',
        '\\' => '\\',
        '/' => '/',
        'n' => '\n',
        't' => '\t',
        'r' => '\r',
        'b' => '\u{0008}',
        'f' => '\u{000C}',
        'u' => decode_unicode_escape(chars)?,
        other => other,
    })
}

fn decode_unicode_escape(
    chars: &mut std::iter::Peekable<std::str::Chars<'_>>,
) -> Result<char, PromptError> {
    let high = read_hex4(chars)?;
    if (0xD800..0xDC00).contains(&high) {
        // Surrogate pair: expect the low half next.
        if chars.next() != Some('\\') || chars.next() != Some('u') {
            return Err(PromptError::UnterminatedCompletion);
        }
        let low = read_hex4(chars)?;
        if !(0xDC00..0xE000).contains(&low) {
            return Err(PromptError::UnterminatedCompletion);
        }
        let combined = 0x10000 + ((high - 0xD800) << 10) + (low - 0xDC00);
        return char::from_u32(combined).ok_or(PromptError::UnterminatedCompletion);
    }
    char::from_u32(high).ok_or(PromptError::UnterminatedCompletion)
}

fn read_hex4(
    chars: &mut std::iter::Peekable<std::str::Chars<'_>>,
) -> Result<u32, PromptError> {
    let mut value = 0u32;
    for _ in 0..4 {
        let c = chars.next().ok_or(PromptError::UnterminatedCompletion)?;
        let digit = c
            .to_digit(16)
            .ok_or(PromptError::UnterminatedCompletion)?;
        value = value * 16 + digit;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_document;
    use crate::fixtures;

    fn demo(input: &str, output: &str) -> Demonstration {
        Demonstration {
            input: input.to_string(),
            output: output.to_string(),
        }
    }

    fn keyword_demo(word: &str) -> Demonstration {
        demo(
            &format!("Ctx. <expression> <mask_0> {word}(0) <mask_1> </expression> After."),
            &format!("<expression> Someone {word}(0) something. </expression>"),
        )
    }

    #[test]
    fn two_demos_and_query_make_three_lines() {
        let query = parse_document(fixtures::POSITION_LEXICON_INPUT).unwrap();
        let demos = vec![keyword_demo("ran"), keyword_demo("jumped")];
        let prompt = build_fewshot_prompt(&query, &demos, 2).unwrap();
        let lines: Vec<&str> = prompt.split('\n').collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[2].ends_with("\"output\": \""));
        // Every full line is a well-formed JSON object.
        for line in &lines[..2] {
            let value: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(value.get("input").is_some() && value.get("output").is_some());
        }
    }

    #[test]
    fn zero_shots_is_just_the_query_line() {
        let query = parse_document(fixtures::POSITION_LEXICON_INPUT).unwrap();
        let prompt = build_fewshot_prompt(&query, &[], 0).unwrap();
        assert_eq!(prompt.split('\n').count(), 1);
        assert!(prompt.starts_with("{\"input\": "));
        assert!(prompt.ends_with("\"output\": \""));
    }

    #[test]
    fn mismatched_structure_is_excluded_before_counting() {
        let query = parse_document(fixtures::POSITION_LEXICON_INPUT).unwrap();
        let demos = vec![
            keyword_demo("ran"),
            // Mask-only: different structure, must not count.
            demo(
                "Ctx. <expression> <mask_0> </expression> After.",
                "<expression> Filler. </expression>",
            ),
        ];
        let err = build_fewshot_prompt(&query, &demos, 2).unwrap_err();
        assert_eq!(
            err,
            PromptError::NotEnoughDemos {
                shots: 2,
                available: 1
            }
        );
    }

    #[test]
    fn demo_content_is_unchanged_by_prompting() {
        let query = parse_document(fixtures::POSITION_LEXICON_INPUT).unwrap();
        let demos = vec![keyword_demo("spun")];
        let prompt = build_fewshot_prompt(&query, &demos, 1).unwrap();
        let first_line = prompt.split('\n').next().unwrap();
        let value: serde_json::Value = serde_json::from_str(first_line).unwrap();
        assert_eq!(value["input"].as_str().unwrap(), demos[0].input);
        assert_eq!(value["output"].as_str().unwrap(), demos[0].output);
    }

    #[test]
    fn parse_completion_stops_at_terminator() {
        let out = parse_completion("<expression> done </expression>\"} trailing junk").unwrap();
        assert_eq!(out, "<expression> done </expression>");
    }

    #[test]
    fn parse_completion_decodes_escapes() {
        let out = parse_completion(r#"he said \"hi\" and left"}"#).unwrap();
        assert_eq!(out, "he said \"hi\" and left");
        let out = parse_completion(r#"line\nbreak"}"#).unwrap();
        assert_eq!(out, "line\nbreak");
        let out = parse_completion(r#"snow ☃ done"}"#).unwrap();
        assert_eq!(out, "snow \u{2603} done");
    }

    #[test]
    fn stray_quote_is_not_a_terminator() {
        let out = parse_completion(r#"a "quoted" word"}"#).unwrap();
        assert_eq!(out, "a \"quoted\" word");
    }

    #[test]
    fn missing_terminator_is_an_error() {
        assert_eq!(
            parse_completion("never closes"),
            Err(PromptError::UnterminatedCompletion)
        );
    }

    #[test]
    fn round_trips_serialized_output() {
        for text in [
            "plain",
            "with \"quotes\" and {braces}",
            "newline\nand tab\t",
            "unicode \u{1F600} beyond the basic plane",
            "",
        ] {
            let serialized = serde_json::to_string(text).unwrap();
            let continuation = format!("{}}}", &serialized[1..]);
            assert_eq!(parse_completion(&continuation).unwrap(), text);
        }
    }
}
