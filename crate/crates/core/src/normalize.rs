//! Answer normalization and exact-match scoring.
//!
//! Normalization applies, in order: Unicode lowercasing, removal of
//! punctuation (general categories `P*` plus `` ` `` and `'`), removal of the
//! standalone articles `a`, `an`, `the`, and whitespace collapsing. The result
//! is a space-separated token stream; [`TokenizedText`] exposes the same
//! tokens together with byte offsets back into the raw input.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Output of [`normalize`]. Only constructible through normalization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NormalizedText(String);

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_string(self) -> String {
        self.0
    }

    /// Tokens of the normalized text (split on single spaces).
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ').filter(|t| !t.is_empty())
    }
}

impl fmt::Display for NormalizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NormalizedText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Whether `c` is stripped during normalization.
pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        return matches!(
            c,
            '!' | '"'
                | '#'
                | '%'
                | '&'
                | '\''
                | '('
                | ')'
                | '*'
                | ','
                | '-'
                | '.'
                | '/'
                | ':'
                | ';'
                | '?'
                | '@'
                | '['
                | '\\'
                | ']'
                | '_'
                | '`'
                | '{'
                | '}'
        );
    }
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Lowercase and strip punctuation from one whitespace-free run, appending
/// the result to `out`.
fn push_clean_run(run: &str, out: &mut String) {
    if run.is_ascii() {
        out.extend(
            run.bytes()
                .map(|b| b.to_ascii_lowercase() as char)
                .filter(|&c| !is_punctuation(c)),
        );
    } else {
        // str::to_lowercase (not per-char) so that word-final sigma is handled.
        out.extend(run.to_lowercase().chars().filter(|&c| !is_punctuation(c)));
    }
}

/// Iterate over maximal runs of non-whitespace characters with byte offsets.
fn whitespace_runs(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = text;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let tail = &rest[start..];
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        let run = &tail[..len];
        let at = offset + start;
        offset = at + len;
        rest = &tail[len..];
        Some((at, run))
    })
}

/// Normalized token stream of a raw string, with a byte-offset map back into
/// the raw input.
#[derive(Debug, Clone, Default)]
pub struct TokenizedText {
    normalized: String,
    // (range in `normalized`, range in raw input)
    tokens: Vec<(Range<usize>, Range<usize>)>,
}

impl TokenizedText {
    pub fn new(raw: &str) -> Self {
        let mut t = TokenizedText::default();
        t.push_text(raw, 0);
        t
    }

    /// Append the tokens of `raw`; raw offsets are shifted by `raw_base`.
    pub(crate) fn push_text(&mut self, raw: &str, raw_base: usize) {
        for (at, run) in whitespace_runs(raw) {
            let mark = self.normalized.len();
            let sep = usize::from(mark > 0);
            if sep == 1 {
                self.normalized.push(' ');
            }
            push_clean_run(run, &mut self.normalized);
            let tok = mark + sep..self.normalized.len();
            let word = &self.normalized[tok.clone()];
            if word.is_empty() || ARTICLES.contains(&word) {
                self.normalized.truncate(mark);
                continue;
            }
            self.tokens
                .push((tok, raw_base + at..raw_base + at + run.len()));
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.normalized[self.tokens[i].0.clone()]
    }

    pub fn tokens(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.tokens.iter().map(|(r, _)| &self.normalized[r.clone()])
    }

    /// Byte range of token `i` in the raw text it was built from.
    pub fn raw_range(&self, i: usize) -> Range<usize> {
        self.tokens[i].1.clone()
    }

    /// The whole normalized string (tokens joined by single spaces).
    pub fn as_str(&self) -> &str {
        &self.normalized
    }

    pub fn into_normalized(self) -> NormalizedText {
        NormalizedText(self.normalized)
    }
}

/// Normalize a raw answer or prediction string.
pub fn normalize(text: &str) -> NormalizedText {
    TokenizedText::new(text).into_normalized()
}

/// Exact match between two raw strings: 1 iff their normalized forms are equal.
pub fn em_single(prediction: &str, gold: &str) -> u8 {
    u8::from(normalize(prediction) == normalize(gold))
}

/// Set-based exact match: the maximum of [`em_single`] over every answer.
pub fn em_set(prediction: &str, answers: &AnswerSet) -> u8 {
    u8::from(answers.contains_normalized(&normalize(prediction)))
}

/// Non-empty gold answer set for one question.
///
/// `answers` keeps the raw strings exactly as given; `normalized` holds their
/// normalized forms deduplicated in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct AnswerSet {
    answers: Vec<String>,
    normalized: Vec<NormalizedText>,
    // index into `answers` of the first raw string for each normalized form
    representatives: Vec<usize>,
}

impl AnswerSet {
    pub fn new<I, S>(answers: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let answers: Vec<String> = answers.into_iter().map(Into::into).collect();
        if answers.is_empty() {
            return Err(Error::InvalidInput("answer set is empty".into()));
        }
        let mut set = AnswerSet {
            answers: Vec::with_capacity(answers.len()),
            normalized: Vec::with_capacity(answers.len()),
            representatives: Vec::with_capacity(answers.len()),
        };
        for a in answers {
            set.push(a);
        }
        Ok(set)
    }

    /// Append `raw`; returns true if its normalized form was new.
    pub(crate) fn push(&mut self, raw: String) -> bool {
        let norm = normalize(&raw);
        self.push_normalized(raw, norm)
    }

    pub(crate) fn push_normalized(&mut self, raw: String, norm: NormalizedText) -> bool {
        let fresh = !self.normalized.contains(&norm);
        if fresh {
            self.normalized.push(norm);
            self.representatives.push(self.answers.len());
        }
        self.answers.push(raw);
        fresh
    }

    /// Raw answers as given.
    pub fn answers(&self) -> &[String] {
        &self.answers
    }

    /// Deduplicated normalized forms.
    pub fn normalized(&self) -> &[NormalizedText] {
        &self.normalized
    }

    /// One `(raw, normalized)` pair per distinct normalized form.
    pub fn unique(&self) -> impl Iterator<Item = (&str, &NormalizedText)> {
        self.representatives
            .iter()
            .zip(&self.normalized)
            .map(|(&i, n)| (self.answers[i].as_str(), n))
    }

    /// Number of distinct normalized answers.
    pub fn len(&self) -> usize {
        self.normalized.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_normalized(&self, norm: &NormalizedText) -> bool {
        self.normalized.contains(norm)
    }
}

impl TryFrom<Vec<String>> for AnswerSet {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        AnswerSet::new(v)
    }
}

impl From<AnswerSet> for Vec<String> {
    fn from(s: AnswerSet) -> Self {
        s.answers
    }
}
