//! AST and parser for the markup constraint language.
//!
//! A document is free text surrounding exactly one `<expression>` span. The
//! expression body is a sequence of masks (`<mask_i>`, matching any text),
//! serial-labeled keywords (`word(i)`), literal runs, and at most one
//! `<options>` group of `<choice_i>` alternatives, optionally terminated by a
//! `<length=n>` word-count label.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const EXPR_OPEN: &str = "<expression>";
const EXPR_CLOSE: &str = "</expression>";
const OPTIONS_OPEN: &str = "<options>";
const OPTIONS_CLOSE: &str = "</options>";
const MASK_PREFIX: &str = "<mask_";
const CHOICE_PREFIX: &str = "<choice_";
const CHOICE_CLOSE_PREFIX: &str = "</choice_";
const LENGTH_PREFIX: &str = "<length=";

/// One node of an expression body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// `<mask_i>`: zero or more tokens may be generated here.
    Mask(u32),
    /// A run of plain text that must appear verbatim.
    Literal(String),
    /// `surface(serial)`: a required keyword with its order label.
    Lexicon { surface: String, serial: u32 },
    /// `<options>`: exactly one choice must be realized.
    Options(Vec<Choice>),
}

/// One alternative inside an options group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub id: u32,
    pub body: Vec<Node>,
}

/// A parsed expression: the node sequence plus an optional word-count
/// constraint, which always renders last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expression {
    pub items: Vec<Node>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_constraint: Option<u32>,
}

/// Context text around exactly one expression. Prefix and suffix are kept
/// verbatim; only the expression body is whitespace-normalized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub prefix: String,
    pub expr: Expression,
    pub suffix: String,
}

/// Parse failure, anchored to the byte offset of the offending input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("unbalanced expression tags at byte {offset}")]
    UnbalancedTags { offset: usize },
    #[error("mask id {found} at byte {offset}, expected {expected}")]
    NonSequentialMaskIds {
        offset: usize,
        found: u32,
        expected: u32,
    },
    #[error("lexicon serial {found} at byte {offset}, expected {expected}")]
    NonSequentialSerials {
        offset: usize,
        found: u32,
        expected: u32,
    },
    #[error("duplicate length label at byte {offset}")]
    DuplicateLengthLabel { offset: usize },
    #[error("nested options group at byte {offset}")]
    NestedOptions { offset: usize },
    #[error("malformed label at byte {offset}: {detail}")]
    MalformedLabel { offset: usize, detail: String },
}

impl ParseError {
    /// Byte offset of the offending input.
    pub fn offset(&self) -> usize {
        match self {
            ParseError::UnbalancedTags { offset }
            | ParseError::NonSequentialMaskIds { offset, .. }
            | ParseError::NonSequentialSerials { offset, .. }
            | ParseError::DuplicateLengthLabel { offset }
            | ParseError::NestedOptions { offset }
            | ParseError::MalformedLabel { offset, .. } => *offset,
        }
    }
}

/// Collapse whitespace runs to single spaces and trim the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parse a raw document containing exactly one `<expression>` span.
pub fn parse_document(raw: &str) -> Result<Document, ParseError> {
    let open = raw
        .find(EXPR_OPEN)
        .ok_or(ParseError::UnbalancedTags { offset: 0 })?;
    let after_open = open + EXPR_OPEN.len();
    if let Some(second) = raw[after_open..].find(EXPR_OPEN) {
        return Err(ParseError::UnbalancedTags {
            offset: after_open + second,
        });
    }
    let close = raw
        .find(EXPR_CLOSE)
        .ok_or(ParseError::UnbalancedTags { offset: open })?;
    if close < open {
        return Err(ParseError::UnbalancedTags { offset: close });
    }
    let after_close = close + EXPR_CLOSE.len();
    if let Some(extra) = raw[after_close..].find(EXPR_CLOSE) {
        return Err(ParseError::UnbalancedTags {
            offset: after_close + extra,
        });
    }

    let expr = parse_body(&raw[after_open..close], after_open)?;
    Ok(Document {
        prefix: raw[..open].to_string(),
        expr,
        suffix: raw[after_close..].to_string(),
    })
}

/// Render a document back to markup text. Expression tokens are joined by
/// single spaces; prefix and suffix are emitted verbatim.
pub fn render_document(doc: &Document) -> String {
    format!("{}{}{}", doc.prefix, doc.expr.render(), doc.suffix)
}

/// Compute the structure signature of a document's expression.
pub fn signature(doc: &Document) -> StructureSignature {
    doc.expr.signature()
}

impl Document {
    pub fn parse(raw: &str) -> Result<Self, ParseError> {
        parse_document(raw)
    }

    pub fn render(&self) -> String {
        render_document(self)
    }

    pub fn signature(&self) -> StructureSignature {
        self.expr.signature()
    }

    /// A document whose context is empty on both sides.
    pub fn bare(expr: Expression) -> Self {
        Document {
            prefix: String::new(),
            expr,
            suffix: String::new(),
        }
    }
}

impl Expression {
    pub fn new(items: Vec<Node>) -> Self {
        Expression {
            items,
            length_constraint: None,
        }
    }

    pub fn with_length(items: Vec<Node>, length: u32) -> Self {
        Expression {
            items,
            length_constraint: Some(length),
        }
    }

    pub fn render(&self) -> String {
        let mut tokens: Vec<String> = vec![EXPR_OPEN.to_string()];
        for node in &self.items {
            push_node_tokens(node, &mut tokens);
        }
        if let Some(n) = self.length_constraint {
            tokens.push(format!("{LENGTH_PREFIX}{n}>"));
        }
        tokens.push(EXPR_CLOSE.to_string());
        tokens.join(" ")
    }

    pub fn signature(&self) -> StructureSignature {
        let mut tokens = Vec::new();
        for node in &self.items {
            tokens.push(match node {
                Node::Mask(_) => SigToken::Mask,
                Node::Literal(_) => SigToken::Lit,
                Node::Lexicon { .. } => SigToken::Lex,
                Node::Options(choices) => SigToken::Opt(choices.len() as u32),
            });
        }
        if self.length_constraint.is_some() {
            tokens.push(SigToken::Len);
        }
        StructureSignature(tokens)
    }

    /// Lexicon surfaces in reading order, including those inside choices.
    pub fn lexicon_surfaces(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for node in &self.items {
            collect_surfaces(node, &mut out);
        }
        out
    }

    /// Number of `<options>` groups at the top level.
    pub fn options_group_count(&self) -> usize {
        self.items
            .iter()
            .filter(|n| matches!(n, Node::Options(_)))
            .count()
    }

    /// More than one options group: parsed, but outside the single-group
    /// default contract.
    pub fn is_extended(&self) -> bool {
        self.options_group_count() > 1
    }

    /// True when any mask or options group remains to be realized.
    pub fn has_nonterminal(&self) -> bool {
        self.items.iter().any(|n| match n {
            Node::Mask(_) => true,
            Node::Options(_) => true,
            Node::Literal(_) | Node::Lexicon { .. } => false,
        })
    }

    /// Split at the first options group: (before, choices, after).
    pub fn split_first_options(&self) -> Option<(Vec<Node>, &[Choice], Vec<Node>)> {
        let idx = self
            .items
            .iter()
            .position(|n| matches!(n, Node::Options(_)))?;
        let before = self.items[..idx].to_vec();
        let after = self.items[idx + 1..].to_vec();
        let Node::Options(choices) = &self.items[idx] else {
            unreachable!();
        };
        Some((before, choices.as_slice(), after))
    }

    /// Rewrite mask ids and lexicon serials to the canonical 0.. sequences in
    /// reading order. Needed after slicing an expression into sub-expressions.
    pub fn renumbered(&self) -> Expression {
        let mut next_mask = 0;
        let mut next_serial = 0;
        let items = self
            .items
            .iter()
            .map(|n| renumber_node(n, &mut next_mask, &mut next_serial))
            .collect();
        Expression {
            items,
            length_constraint: self.length_constraint,
        }
    }

    /// Replace the i-th options group with the body of the picked choice.
    /// Picks beyond the provided slice default to choice 0.
    pub fn flatten_with_choices(&self, picks: &[usize]) -> Vec<Node> {
        let mut out = Vec::new();
        let mut group = 0;
        for node in &self.items {
            match node {
                Node::Options(choices) => {
                    let pick = picks.get(group).copied().unwrap_or(0).min(choices.len() - 1);
                    out.extend(choices[pick].body.iter().cloned());
                    group += 1;
                }
                other => out.push(other.clone()),
            }
        }
        out
    }
}

fn renumber_node(node: &Node, next_mask: &mut u32, next_serial: &mut u32) -> Node {
    match node {
        Node::Mask(_) => {
            let id = *next_mask;
            *next_mask += 1;
            Node::Mask(id)
        }
        Node::Literal(t) => Node::Literal(t.clone()),
        Node::Lexicon { surface, .. } => {
            let serial = *next_serial;
            *next_serial += 1;
            Node::Lexicon {
                surface: surface.clone(),
                serial,
            }
        }
        Node::Options(choices) => Node::Options(
            choices
                .iter()
                .enumerate()
                .map(|(i, c)| Choice {
                    id: i as u32,
                    body: c
                        .body
                        .iter()
                        .map(|n| renumber_node(n, next_mask, next_serial))
                        .collect(),
                })
                .collect(),
        ),
    }
}

fn collect_surfaces<'a>(node: &'a Node, out: &mut Vec<&'a str>) {
    match node {
        Node::Lexicon { surface, .. } => out.push(surface),
        Node::Options(choices) => {
            for choice in choices {
                for n in &choice.body {
                    collect_surfaces(n, out);
                }
            }
        }
        Node::Mask(_) | Node::Literal(_) => {}
    }
}

fn push_node_tokens(node: &Node, tokens: &mut Vec<String>) {
    match node {
        Node::Mask(i) => tokens.push(format!("{MASK_PREFIX}{i}>")),
        Node::Literal(t) => tokens.push(t.clone()),
        Node::Lexicon { surface, serial } => tokens.push(format!("{surface}({serial})")),
        Node::Options(choices) => {
            tokens.push(OPTIONS_OPEN.to_string());
            for choice in choices {
                tokens.push(format!("{CHOICE_PREFIX}{}>", choice.id));
                for n in &choice.body {
                    push_node_tokens(n, tokens);
                }
                tokens.push(format!("{CHOICE_CLOSE_PREFIX}{}>", choice.id));
            }
            tokens.push(OPTIONS_CLOSE.to_string());
        }
    }
}

/// The node-kind skeleton of an expression, content-blind. Used to pick
/// demonstrations with the same shape as a query.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct StructureSignature(Vec<SigToken>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SigToken {
    Mask,
    Lex,
    Lit,
    Opt(u32),
    Len,
}

impl StructureSignature {
    pub fn tokens(&self) -> &[SigToken] {
        &self.0
    }
}

impl fmt::Display for StructureSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, tok) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match tok {
                SigToken::Mask => write!(f, "mask")?,
                SigToken::Lex => write!(f, "lex")?,
                SigToken::Lit => write!(f, "lit")?,
                SigToken::Opt(c) => write!(f, "opt({c})")?,
                SigToken::Len => write!(f, "len")?,
            }
        }
        Ok(())
    }
}

impl From<StructureSignature> for String {
    fn from(sig: StructureSignature) -> String {
        sig.to_string()
    }
}

impl FromStr for StructureSignature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut tokens = Vec::new();
        for word in s.split_whitespace() {
            let tok = match word {
                "mask" => SigToken::Mask,
                "lex" => SigToken::Lex,
                "lit" => SigToken::Lit,
                "len" => SigToken::Len,
                other => {
                    let inner = other
                        .strip_prefix("opt(")
                        .and_then(|r| r.strip_suffix(')'))
                        .ok_or_else(|| format!("unknown signature token {other:?}"))?;
                    let c = inner
                        .parse::<u32>()
                        .map_err(|_| format!("bad choice count in {other:?}"))?;
                    SigToken::Opt(c)
                }
            };
            tokens.push(tok);
        }
        Ok(StructureSignature(tokens))
    }
}

impl TryFrom<String> for StructureSignature {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

// ---------------------------------------------------------------------------
// Body scanner
// ---------------------------------------------------------------------------

enum Chunk<'a> {
    Mask(u32),
    OptionsOpen,
    OptionsClose,
    ChoiceOpen(u32),
    ChoiceClose(u32),
    Length(u32),
    Text(&'a str),
}

struct OptionsState {
    offset: usize,
    choices: Vec<Choice>,
    current: Option<(u32, Vec<Node>)>,
}

struct BodyParser {
    items: Vec<Node>,
    pending_literal: Vec<String>,
    options: Option<OptionsState>,
    next_mask: u32,
    next_serial: u32,
    length: Option<u32>,
}

fn parse_body(body: &str, base_offset: usize) -> Result<Expression, ParseError> {
    let mut parser = BodyParser {
        items: Vec::new(),
        pending_literal: Vec::new(),
        options: None,
        next_mask: 0,
        next_serial: 0,
        length: None,
    };

    for (rel, chunk_text) in whitespace_chunks(body) {
        let offset = base_offset + rel;
        let chunk = classify_chunk(chunk_text, offset)?;
        parser.consume(chunk, offset)?;
    }

    parser.finish(base_offset + body.len())
}

/// Maximal non-whitespace runs with their byte offsets.
fn whitespace_chunks(body: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut chunks = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in body.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                chunks.push((s, &body[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        chunks.push((s, &body[s..]));
    }
    chunks.into_iter()
}

/// Decimal integer without leading zeros.
fn parse_plain_int(digits: &str) -> Option<u32> {
    if digits.is_empty() || (digits.len() > 1 && digits.starts_with('0')) {
        return None;
    }
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn labeled_int(chunk: &str, prefix: &str) -> Option<u32> {
    chunk
        .strip_prefix(prefix)
        .and_then(|rest| rest.strip_suffix('>'))
        .and_then(parse_plain_int)
}

fn classify_chunk(chunk: &str, offset: usize) -> Result<Chunk<'_>, ParseError> {
    match chunk {
        OPTIONS_OPEN => return Ok(Chunk::OptionsOpen),
        OPTIONS_CLOSE => return Ok(Chunk::OptionsClose),
        _ => {}
    }
    if chunk.starts_with(MASK_PREFIX) {
        return labeled_int(chunk, MASK_PREFIX)
            .map(Chunk::Mask)
            .ok_or_else(|| malformed(offset, chunk));
    }
    if chunk.starts_with(CHOICE_CLOSE_PREFIX) {
        return labeled_int(chunk, CHOICE_CLOSE_PREFIX)
            .map(Chunk::ChoiceClose)
            .ok_or_else(|| malformed(offset, chunk));
    }
    if chunk.starts_with(CHOICE_PREFIX) {
        return labeled_int(chunk, CHOICE_PREFIX)
            .map(Chunk::ChoiceOpen)
            .ok_or_else(|| malformed(offset, chunk));
    }
    if chunk.starts_with(LENGTH_PREFIX) {
        let n = labeled_int(chunk, LENGTH_PREFIX).ok_or_else(|| malformed(offset, chunk))?;
        if n == 0 {
            return Err(ParseError::MalformedLabel {
                offset,
                detail: "length must be a positive word count".to_string(),
            });
        }
        return Ok(Chunk::Length(n));
    }
    // Plain text may not embed any markup label.
    for (i, _) in chunk.match_indices('<') {
        let rest = &chunk[i..];
        let label_like = rest.starts_with(MASK_PREFIX)
            || rest.starts_with(CHOICE_PREFIX)
            || rest.starts_with(CHOICE_CLOSE_PREFIX)
            || rest.starts_with(LENGTH_PREFIX)
            || rest.starts_with(OPTIONS_OPEN)
            || rest.starts_with(OPTIONS_CLOSE)
            || rest.starts_with(EXPR_OPEN)
            || rest.starts_with(EXPR_CLOSE);
        if label_like {
            return Err(ParseError::MalformedLabel {
                offset: offset + i,
                detail: format!("markup label embedded in text {chunk:?}"),
            });
        }
    }
    Ok(Chunk::Text(chunk))
}

fn malformed(offset: usize, chunk: &str) -> ParseError {
    ParseError::MalformedLabel {
        offset,
        detail: format!("unrecognized label {chunk:?}"),
    }
}

/// `surface(d)` split, used by the serial disambiguation rule.
fn split_serial_suffix(token: &str) -> Option<(&str, u32)> {
    let rest = token.strip_suffix(')')?;
    let open = rest.rfind('(')?;
    if open == 0 {
        return None;
    }
    let serial = parse_plain_int(&rest[open + 1..])?;
    Some((&rest[..open], serial))
}

impl BodyParser {
    fn in_choice(&self) -> bool {
        self.options
            .as_ref()
            .is_some_and(|state| state.current.is_some())
    }

    fn flush_literal(&mut self) {
        if self.pending_literal.is_empty() {
            return;
        }
        let text = self.pending_literal.join(" ");
        self.pending_literal.clear();
        self.push_node(Node::Literal(text));
    }

    fn push_node(&mut self, node: Node) {
        match &mut self.options {
            Some(state) => match &mut state.current {
                Some((_, body)) => body.push(node),
                None => unreachable!("content outside a choice is rejected before push"),
            },
            None => self.items.push(node),
        }
    }

    /// Content is only legal at the top level or inside an open choice.
    fn require_content_position(&self, offset: usize) -> Result<(), ParseError> {
        if self.options.is_some() && !self.in_choice() {
            return Err(ParseError::MalformedLabel {
                offset,
                detail: "content inside <options> must be wrapped in a choice".to_string(),
            });
        }
        Ok(())
    }

    fn consume(&mut self, chunk: Chunk<'_>, offset: usize) -> Result<(), ParseError> {
        if self.length.is_some() {
            // The length label closes the body.
            return Err(match chunk {
                Chunk::Length(_) => ParseError::DuplicateLengthLabel { offset },
                _ => ParseError::MalformedLabel {
                    offset,
                    detail: "content after the length label, which must be last".to_string(),
                },
            });
        }
        match chunk {
            Chunk::Text(token) => {
                self.require_content_position(offset)?;
                if let Some((surface, serial)) = split_serial_suffix(token) {
                    if serial == self.next_serial {
                        self.flush_literal();
                        self.push_node(Node::Lexicon {
                            surface: surface.to_string(),
                            serial,
                        });
                        self.next_serial += 1;
                        return Ok(());
                    }
                }
                self.pending_literal.push(token.to_string());
            }
            Chunk::Mask(id) => {
                self.require_content_position(offset)?;
                if id != self.next_mask {
                    return Err(ParseError::NonSequentialMaskIds {
                        offset,
                        found: id,
                        expected: self.next_mask,
                    });
                }
                self.flush_literal();
                self.push_node(Node::Mask(id));
                self.next_mask += 1;
            }
            Chunk::Length(n) => {
                if self.options.is_some() {
                    return Err(ParseError::MalformedLabel {
                        offset,
                        detail: "length label is not allowed inside an options group".to_string(),
                    });
                }
                if self.length.is_some() {
                    return Err(ParseError::DuplicateLengthLabel { offset });
                }
                self.flush_literal();
                self.length = Some(n);
            }
            Chunk::OptionsOpen => {
                if self.options.is_some() {
                    return Err(ParseError::NestedOptions { offset });
                }
                self.flush_literal();
                self.options = Some(OptionsState {
                    offset,
                    choices: Vec::new(),
                    current: None,
                });
            }
            Chunk::ChoiceOpen(id) => {
                let Some(state) = &mut self.options else {
                    return Err(ParseError::MalformedLabel {
                        offset,
                        detail: "choice tag outside an options group".to_string(),
                    });
                };
                if state.current.is_some() {
                    return Err(ParseError::MalformedLabel {
                        offset,
                        detail: "choice opened before the previous choice closed".to_string(),
                    });
                }
                let expected = state.choices.len() as u32;
                if id != expected {
                    return Err(ParseError::MalformedLabel {
                        offset,
                        detail: format!("choice id {id}, expected {expected}"),
                    });
                }
                state.current = Some((id, Vec::new()));
            }
            Chunk::ChoiceClose(id) => {
                self.flush_literal();
                let Some(state) = &mut self.options else {
                    return Err(ParseError::MalformedLabel {
                        offset,
                        detail: "choice close tag outside an options group".to_string(),
                    });
                };
                let Some((open_id, body)) = state.current.take() else {
                    return Err(ParseError::MalformedLabel {
                        offset,
                        detail: "choice close tag without an open choice".to_string(),
                    });
                };
                if open_id != id {
                    return Err(ParseError::MalformedLabel {
                        offset,
                        detail: format!("choice close id {id} does not match open id {open_id}"),
                    });
                }
                state.choices.push(Choice { id, body });
            }
            Chunk::OptionsClose => {
                let Some(state) = &self.options else {
                    return Err(ParseError::MalformedLabel {
                        offset,
                        detail: "options close tag without an open group".to_string(),
                    });
                };
                if state.current.is_some() {
                    return Err(ParseError::UnbalancedTags { offset });
                }
                if state.choices.is_empty() {
                    return Err(ParseError::MalformedLabel {
                        offset,
                        detail: "options group with no choices".to_string(),
                    });
                }
                let state = self.options.take().expect("checked above");
                self.items.push(Node::Options(state.choices));
            }
        }
        Ok(())
    }

    fn finish(mut self, end_offset: usize) -> Result<Expression, ParseError> {
        if let Some(state) = &self.options {
            return Err(ParseError::UnbalancedTags {
                offset: state.offset,
            });
        }
        let _ = end_offset;
        self.flush_literal();
        Ok(Expression {
            items: self.items,
            length_constraint: self.length,
        })
    }
}
