//! Gold answer expansion with knowledge-base aliases, plus the dataset-level
//! statistics (average answers before/after, share of answers with aliases).

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kb::AliasIndex;
use crate::normalize::{normalize, AnswerSet, NormalizedText};

/// One question from a QA dataset.
///
/// Serialized as `{"id", "question", "answers"}`; expanded records also carry
/// `"original_answers"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QARecord {
    #[serde(rename = "id")]
    pub question_id: String,
    pub question: String,
    pub answers: AnswerSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_answers: Option<AnswerSet>,
}

impl QARecord {
    pub fn new(id: impl Into<String>, question: impl Into<String>, answers: AnswerSet) -> Self {
        QARecord {
            question_id: id.into(),
            question: question.into(),
            answers,
            original_answers: None,
        }
    }

    /// The pre-expansion answers: `original_answers` when present, otherwise
    /// `answers`.
    pub fn gold(&self) -> &AnswerSet {
        self.original_answers.as_ref().unwrap_or(&self.answers)
    }
}

/// Dataset-level expansion statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionStats {
    pub questions: u64,
    pub avg_original_answers: f64,
    pub matched_answers_pct: f64,
    pub avg_augmented_answers: f64,
}

/// Raw counts behind [`ExpansionStats`]. `merge` is associative and
/// commutative, so partial accumulators from any partitioning of the data
/// combine to the same result.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StatsAccumulator {
    pub questions: u64,
    pub original_answers: u64,
    pub matched_answers: u64,
    pub augmented_answers: u64,
}

impl StatsAccumulator {
    pub fn merge(self, other: StatsAccumulator) -> StatsAccumulator {
        StatsAccumulator {
            questions: self.questions + other.questions,
            original_answers: self.original_answers + other.original_answers,
            matched_answers: self.matched_answers + other.matched_answers,
            augmented_answers: self.augmented_answers + other.augmented_answers,
        }
    }

    pub fn finish(&self) -> ExpansionStats {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        ExpansionStats {
            questions: self.questions,
            avg_original_answers: ratio(self.original_answers, self.questions),
            matched_answers_pct: 100.0 * ratio(self.matched_answers, self.original_answers),
            avg_augmented_answers: ratio(self.augmented_answers, self.questions),
        }
    }
}

/// Outcome of expanding one answer set.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub answers: AnswerSet,
    /// Distinct original answers that gained at least one alias.
    pub matched: usize,
}

/// Expands answer sets against one index, memoizing alias lookups per
/// normalized answer.
#[derive(Debug)]
pub struct Expander<'a> {
    index: &'a AliasIndex,
    cache: HashMap<NormalizedText, Vec<(String, NormalizedText)>>,
}

impl<'a> Expander<'a> {
    pub fn new(index: &'a AliasIndex) -> Self {
        Expander {
            index,
            cache: HashMap::new(),
        }
    }

    fn aliases(&mut self, norm: &NormalizedText) -> &[(String, NormalizedText)] {
        let index = self.index;
        self.cache.entry(norm.clone()).or_insert_with(|| {
            index
                .aliases_of_normalized(norm)
                .into_iter()
                .map(|a| (a.to_owned(), normalize(a)))
                .collect()
        })
    }

    /// Original answers first, then every alias of every original answer
    /// whose normalized form is not already present.
    pub fn expand(&mut self, answers: &AnswerSet) -> Expansion {
        let mut out = answers.clone();
        let mut matched = 0;
        for norm in answers.normalized() {
            let aliases = self.aliases(norm);
            if !aliases.is_empty() {
                matched += 1;
            }
            for (raw, alias_norm) in aliases {
                if !out.contains_normalized(alias_norm) {
                    out.push_normalized(raw.clone(), alias_norm.clone());
                }
            }
        }
        Expansion {
            answers: out,
            matched,
        }
    }

    /// Expand a record from its gold answers. Re-expanding an already
    /// expanded record starts again from `original_answers`, so the result
    /// is unchanged.
    pub fn expand_record(&mut self, record: &QARecord) -> (QARecord, StatsAccumulator) {
        let gold = record.gold().clone();
        let Expansion { answers, matched } = self.expand(&gold);
        let acc = StatsAccumulator {
            questions: 1,
            original_answers: gold.len() as u64,
            matched_answers: matched as u64,
            augmented_answers: answers.len() as u64,
        };
        let expanded = QARecord {
            question_id: record.question_id.clone(),
            question: record.question.clone(),
            answers,
            original_answers: Some(gold),
        };
        (expanded, acc)
    }
}

/// Expand a single answer set.
pub fn expand_answers(answers: &AnswerSet, index: &AliasIndex) -> AnswerSet {
    Expander::new(index).expand(answers).answers
}

/// Set of ids held as 128-bit SHA-256 prefixes: fixed memory per id and no
/// per-id allocation.
#[derive(Debug, Clone, Default)]
pub struct IdSet(HashSet<u128>);

impl IdSet {
    fn key(id: &str) -> u128 {
        let d = Sha256::digest(id.as_bytes());
        u128::from_le_bytes(d[..16].try_into().expect("16 bytes"))
    }

    /// Returns `false` if `id` was already present.
    pub fn insert(&mut self, id: &str) -> bool {
        self.0.insert(Self::key(id))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains(&Self::key(id))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Streaming dataset expansion. Yields expanded records in input order and
/// accumulates statistics; a repeated question id yields an
/// [`Error::InvalidDataset`].
pub struct ExpandDataset<'a, I> {
    records: I,
    expander: Expander<'a>,
    seen: IdSet,
    acc: StatsAccumulator,
}

impl<'a, I> ExpandDataset<'a, I> {
    pub fn stats(&self) -> ExpansionStats {
        self.acc.finish()
    }

    pub fn accumulator(&self) -> StatsAccumulator {
        self.acc
    }
}

impl<I> Iterator for ExpandDataset<'_, I>
where
    I: Iterator<Item = Result<QARecord>>,
{
    type Item = Result<QARecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let record = match self.records.next()? {
            Ok(r) => r,
            Err(e) => return Some(Err(e)),
        };
        if !self.seen.insert(&record.question_id) {
            return Some(Err(Error::InvalidDataset(format!(
                "duplicate question id {:?}",
                record.question_id
            ))));
        }
        let (expanded, acc) = self.expander.expand_record(&record);
        self.acc = self.acc.merge(acc);
        Some(Ok(expanded))
    }
}

pub fn expand_dataset<I>(records: I, index: &AliasIndex) -> ExpandDataset<'_, I::IntoIter>
where
    I: IntoIterator<Item = Result<QARecord>>,
{
    ExpandDataset {
        records: records.into_iter(),
        expander: Expander::new(index),
        seen: IdSet::default(),
        acc: StatsAccumulator::default(),
    }
}

/// Expand a whole in-memory dataset and return the records with their stats.
pub fn expand_all(
    records: &[QARecord],
    index: &AliasIndex,
) -> Result<(Vec<QARecord>, ExpansionStats)> {
    let mut it = expand_dataset(records.iter().cloned().map(Ok), index);
    let out = it.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((out, it.stats()))
}
