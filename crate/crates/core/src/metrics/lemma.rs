//! Rule-based lemmatizer for coverage checking.
//!
//! Deterministic, dependency-free: trailing punctuation is stripped and the
//! token lowercased, irregular forms go through an exception table, then
//! ordered suffix rules apply (first match wins). Not a full morphological
//! analyzer; the exception table is extendable where the rules fall short.

use std::collections::HashMap;
use std::sync::LazyLock;

/// Common irregular forms. Shipped as data so callers can extend it.
pub const IRREGULAR_FORMS: [(&str, &str); 66] = [
    ("am", "be"),
    ("are", "be"),
    ("ate", "eat"),
    ("been", "be"),
    ("began", "begin"),
    ("being", "be"),
    ("bought", "buy"),
    ("broke", "break"),
    ("broken", "break"),
    ("brought", "bring"),
    ("built", "build"),
    ("came", "come"),
    ("caught", "catch"),
    ("children", "child"),
    ("chose", "choose"),
    ("did", "do"),
    ("does", "do"),
    ("done", "do"),
    ("drank", "drink"),
    ("drove", "drive"),
    ("fell", "fall"),
    ("feet", "foot"),
    ("felt", "feel"),
    ("flew", "fly"),
    ("found", "find"),
    ("gave", "give"),
    ("geese", "goose"),
    ("gone", "go"),
    ("got", "get"),
    ("grew", "grow"),
    ("had", "have"),
    ("has", "have"),
    ("held", "hold"),
    ("is", "be"),
    ("kept", "keep"),
    ("knew", "know"),
    ("left", "leave"),
    ("lost", "lose"),
    ("made", "make"),
    ("men", "man"),
    ("met", "meet"),
    ("mice", "mouse"),
    ("paid", "pay"),
    ("people", "person"),
    ("ran", "run"),
    ("rode", "ride"),
    ("said", "say"),
    ("sang", "sing"),
    ("sat", "sit"),
    ("saw", "see"),
    ("sold", "sell"),
    ("spent", "spend"),
    ("spoke", "speak"),
    ("stood", "stand"),
    ("swam", "swim"),
    ("taught", "teach"),
    ("teeth", "tooth"),
    ("thought", "think"),
    ("threw", "throw"),
    ("told", "tell"),
    ("took", "take"),
    ("was", "be"),
    ("went", "go"),
    ("were", "be"),
    ("women", "woman"),
    ("wore", "wear"),
];

pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

static DEFAULT: LazyLock<Lemmatizer> = LazyLock::new(Lemmatizer::new);

/// Lemmatize with the built-in exception table.
pub fn lemmatize(token: &str) -> String {
    DEFAULT.lemma(token)
}

impl Default for Lemmatizer {
    fn default() -> Self {
        Self::new()
    }
}

impl Lemmatizer {
    pub fn new() -> Self {
        Lemmatizer {
            exceptions: IRREGULAR_FORMS
                .iter()
                .map(|(form, lemma)| (form.to_string(), lemma.to_string()))
                .collect(),
        }
    }

    pub fn with_exceptions(extra: impl IntoIterator<Item = (String, String)>) -> Self {
        let mut lemmatizer = Self::new();
        lemmatizer.exceptions.extend(extra);
        lemmatizer
    }

    pub fn lemma(&self, token: &str) -> String {
        let trimmed = token.trim_matches(|c: char| !c.is_alphanumeric());
        let lower = trimmed.to_lowercase();
        if lower.is_empty() {
            return lower;
        }
        if let Some(lemma) = self.exceptions.get(&lower) {
            return lemma.clone();
        }
        apply_suffix_rules(&lower)
    }
}

const VOWELS: [char; 5] = ['a', 'e', 'i', 'o', 'u'];

fn is_vowel(c: char) -> bool {
    VOWELS.contains(&c)
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(is_vowel)
}

/// Ordered suffix rules; the first applicable rule wins.
fn apply_suffix_rules(word: &str) -> String {
    // ies -> y
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.len() >= 2 {
            return format!("{stem}y");
        }
    }
    // sses -> ss
    if let Some(stem) = word.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    // es -> e, or dropped entirely after sibilants and o
    if let Some(stem) = word.strip_suffix("es") {
        if stem.len() >= 2 {
            if stem.ends_with('x')
                || stem.ends_with("ch")
                || stem.ends_with("sh")
                || stem.ends_with("ss")
                || stem.ends_with('z')
                || stem.ends_with('o')
            {
                return stem.to_string();
            }
            return format!("{stem}e");
        }
    }
    // plain plural s
    if word.len() >= 4
        && word.ends_with('s')
        && !word.ends_with("ss")
        && !word.ends_with("us")
        && !word.ends_with("is")
    {
        return word[..word.len() - 1].to_string();
    }
    // eed -> ee when something precedes (agreed -> agree, feed unchanged)
    if let Some(stem) = word.strip_suffix("eed") {
        if has_vowel(stem) {
            return format!("{stem}ee");
        }
        return word.to_string();
    }
    // ing / ed: drop, undouble a doubled consonant, restore a silent e
    if let Some(stem) = word.strip_suffix("ing") {
        if stem.len() >= 3 && has_vowel(stem) {
            return repair_stem(stem);
        }
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ed") {
        if stem.len() >= 2 && has_vowel(stem) {
            return repair_stem(stem);
        }
    }
    word.to_string()
}

/// After removing `ing`/`ed`: undouble `stopp -> stop`, restore the silent e
/// of `mak -> make` / `danc -> dance`.
fn repair_stem(stem: &str) -> String {
    let chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n >= 2 && chars[n - 1] == chars[n - 2] && !is_vowel(chars[n - 1]) {
        // Doubled consonant, except the ll/ss/zz family (fall, pass, buzz).
        if !matches!(chars[n - 1], 'l' | 's' | 'z') {
            return chars[..n - 1].iter().collect();
        }
        return stem.to_string();
    }
    if ends_cvc(&chars) && !matches!(chars[n - 1], 'w' | 'x' | 'y') {
        return format!("{stem}e");
    }
    // Endings that always carry a silent e.
    if matches!(chars[n - 1], 'c' | 'g' | 'v' | 'u' | 's') {
        return format!("{stem}e");
    }
    stem.to_string()
}

fn ends_cvc(chars: &[char]) -> bool {
    let n = chars.len();
    n >= 3 && !is_vowel(chars[n - 3]) && is_vowel(chars[n - 2]) && !is_vowel(chars[n - 1])
}
