//! Test support: a brute-force matcher that interprets expressions directly
//! over candidate strings (independent of the regex compilation path), plus
//! seeded generators for random expressions, documents, and sentences.
//!
//! Compiled only with the `testkit` feature; production code must not
//! depend on it.

use crate::expr::{Choice, Document, Expression, Node};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Direct recursive interpretation of an expression over a candidate string:
/// masks match any substring, text segments match verbatim with a single
/// space between adjacent solid segments, options try every choice. The
/// candidate must already be whitespace-normalized.
pub fn brute_force_match(expr: &Expression, candidate: &str) -> bool {
    let mut memo = Memo::new(expr.items.len(), candidate.len());
    match_items(&expr.items, candidate, 0, &mut memo)
}

/// Flat (item position, suffix length) grid; the suffix length identifies
/// the position within the candidate.
struct Memo {
    grid: Vec<u8>,
    width: usize,
}

impl Memo {
    fn new(item_count: usize, text_len: usize) -> Self {
        Memo {
            grid: vec![0; (item_count + 1) * (text_len + 1)],
            width: text_len + 1,
        }
    }

    fn get(&self, item_index: usize, suffix_len: usize) -> Option<bool> {
        match self.grid[item_index * self.width + suffix_len] {
            1 => Some(false),
            2 => Some(true),
            _ => None,
        }
    }

    fn set(&mut self, item_index: usize, suffix_len: usize, value: bool) {
        self.grid[item_index * self.width + suffix_len] = if value { 2 } else { 1 };
    }
}

fn match_items(items: &[Node], text: &str, item_index: usize, memo: &mut Memo) -> bool {
    if let Some(cached) = memo.get(item_index, text.len()) {
        return cached;
    }
    let result = match items.first() {
        None => text.is_empty(),
        Some(node) => {
            let rest = &items[1..];
            match node {
                Node::Mask(_) => (0..=text.len())
                    .filter(|&i| text.is_char_boundary(i))
                    .any(|i| match_items(rest, &text[i..], item_index + 1, memo)),
                Node::Literal(expected)
                | Node::Lexicon {
                    surface: expected, ..
                } => match strip_segment(text, expected, rest) {
                    Some(remainder) => match_items(rest, remainder, item_index + 1, memo),
                    None => false,
                },
                Node::Options(choices) => {
                    let solid_follows = next_is_solid(rest);
                    (0..=text.len())
                        .filter(|&i| text.is_char_boundary(i))
                        .any(|i| {
                            let (head, tail) = text.split_at(i);
                            let remainder = if solid_follows {
                                match tail.strip_prefix(' ') {
                                    Some(stripped) => stripped,
                                    None => return false,
                                }
                            } else {
                                tail
                            };
                            choices.iter().any(|choice| brute_choice(choice, head))
                                && match_items(rest, remainder, item_index + 1, memo)
                        })
                }
            }
        }
    };
    memo.set(item_index, text.len(), result);
    result
}

fn brute_choice(choice: &Choice, text: &str) -> bool {
    let mut memo = Memo::new(choice.body.len(), text.len());
    match_items(&choice.body, text, 0, &mut memo)
}

/// Match a verbatim segment at the head of `text`; when another solid
/// segment follows, one space must separate them.
fn strip_segment<'a>(text: &'a str, expected: &str, rest: &[Node]) -> Option<&'a str> {
    let remainder = text.strip_prefix(expected)?;
    if next_is_solid(rest) {
        remainder.strip_prefix(' ')
    } else {
        Some(remainder)
    }
}

fn next_is_solid(rest: &[Node]) -> bool {
    matches!(
        rest.first(),
        Some(Node::Literal(_) | Node::Lexicon { .. } | Node::Options(_))
    )
}

/// All strings over `alphabet` with length 0..=`max_len`.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * alphabet.len());
        for prefix in &frontier {
            for &c in alphabet {
                let mut s = prefix.clone();
                s.push(c);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

const SMALL_WORDS: [&str; 6] = ["a", "b", "ab", "ba", "aa", "bb"];

fn small_word(rng: &mut ChaCha8Rng) -> String {
    SMALL_WORDS.choose(rng).unwrap().to_string()
}

/// A random small expression over the {a, b} word alphabet, respecting all
/// structural invariants: sequential mask ids and serials, no nested
/// options, at most one options group.
pub fn random_expression(seed: u64) -> Expression {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let node_count = rng.random_range(1..=6);
    let mut next_mask = 0u32;
    let mut next_serial = 0u32;
    let mut options_used = false;
    let mut items: Vec<Node> = Vec::with_capacity(node_count);

    for _ in 0..node_count {
        // Adjacent literal runs would merge on reparse, so avoid generating
        // them back to back.
        let after_literal = matches!(items.last(), Some(Node::Literal(_)));
        let kind = rng.random_range(0..4);
        match kind {
            0 => {
                items.push(Node::Mask(next_mask));
                next_mask += 1;
            }
            1 if !after_literal => {
                let words = (0..rng.random_range(1..=2))
                    .map(|_| small_word(&mut rng))
                    .collect::<Vec<_>>()
                    .join(" ");
                items.push(Node::Literal(words));
            }
            2 => {
                items.push(Node::Lexicon {
                    surface: small_word(&mut rng),
                    serial: next_serial,
                });
                next_serial += 1;
            }
            3 if !options_used => {
                options_used = true;
                let choices = (0..rng.random_range(2..=3))
                    .map(|id| {
                        let mut body: Vec<Node> = Vec::new();
                        for _ in 0..rng.random_range(1..=2) {
                            if rng.random_bool(0.5) && !matches!(body.last(), Some(Node::Literal(_))) {
                                body.push(Node::Literal(small_word(&mut rng)));
                            } else {
                                body.push(Node::Mask(next_mask));
                                next_mask += 1;
                            }
                        }
                        Choice { id, body }
                    })
                    .collect();
                items.push(Node::Options(choices));
            }
            _ => {
                items.push(Node::Mask(next_mask));
                next_mask += 1;
            }
        }
    }
    Expression::new(items)
}

/// A random valid document: random expression plus simple context, and an
/// occasional feasible length constraint.
pub fn random_document(seed: u64) -> Document {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD0C5);
    let mut expr = random_expression(seed);
    let path = expr.flatten_with_choices(&[0]);
    let fixed: u32 = path
        .iter()
        .map(|node| match node {
            Node::Literal(text) => text.split_whitespace().count() as u32,
            Node::Lexicon { .. } => 1,
            _ => 0,
        })
        .sum();
    let masks = path.iter().filter(|n| matches!(n, Node::Mask(_))).count() as u32;
    if masks > 0 && rng.random_bool(0.4) {
        expr.length_constraint = Some((fixed + rng.random_range(0..=masks * 2)).max(1));
    }
    Document {
        prefix: if rng.random_bool(0.5) {
            "Context sentence. ".to_string()
        } else {
            String::new()
        },
        expr,
        suffix: if rng.random_bool(0.5) {
            " Trailing context.".to_string()
        } else {
            String::new()
        },
    }
}

const SENTENCE_WORDS: [&str; 16] = [
    "the", "a", "quick", "brown", "fox", "jumps", "over", "lazy", "dog", "while", "birds",
    "watch", "from", "tall", "green", "trees",
];

/// A random label-free sentence (no token ends with an underscore label).
pub fn random_sentence(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5E17);
    let len = rng.random_range(0..=12);
    (0..len)
        .map(|_| *SENTENCE_WORDS.choose(&mut rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_document;
    use crate::fixtures;

    #[test]
    fn brute_force_agrees_on_fixtures() {
        for (input, realized) in fixtures::realized_pairs() {
            let expr = parse_document(input).unwrap().expr;
            let normalized = crate::expr::normalize_whitespace(realized);
            assert!(
                brute_force_match(&expr, &normalized),
                "{realized:?} vs {input:?}"
            );
        }
    }

    #[test]
    fn brute_force_rejects_missing_keyword() {
        let expr = parse_document(fixtures::POSITION_LEXICON_INPUT).unwrap().expr;
        assert!(!brute_force_match(&expr, "Stephen tripped over a vase."));
    }

    #[test]
    fn all_strings_counts_match() {
        let strings = all_strings(&['a', 'b'], 3);
        // 1 + 2 + 4 + 8
        assert_eq!(strings.len(), 15);
    }

    #[test]
    fn random_expressions_render_and_reparse() {
        for seed in 0..200 {
            let doc = random_document(seed);
            let rendered = doc.render();
            let reparsed = parse_document(&rendered)
                .unwrap_or_else(|e| panic!("seed {seed}: {e} in {rendered:?}"));
            assert_eq!(reparsed, doc, "seed {seed}");
        }
    }
}
