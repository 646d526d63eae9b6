//! Distant supervision over retrieved passages.
//!
//! A passage is positive when its normalized token stream contains the
//! normalized token sequence of some accepted answer. Training examples pair
//! one sampled positive with `m - 1` sampled negatives; sampling uses an RNG
//! derived from `(seed, question_id)` so results do not depend on processing
//! order or thread count.

use std::collections::{HashMap, HashSet};
use std::ops::Range;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expansion::{Expander, QARecord};
use crate::kb::AliasIndex;
use crate::matcher::PhraseMatcher;
use crate::normalize::{em_set, AnswerSet, TokenizedText};

/// One retrieved passage for a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievedPassage {
    #[serde(rename = "pid")]
    pub passage_id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
    pub rank: u32,
}

/// Retrieval results for one question: `{"id", "passages": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Retrieval {
    pub id: String,
    pub passages: Vec<RetrievedPassage>,
}

/// Which passage fields are searched for answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchScope {
    #[default]
    TitleAndText,
    TextOnly,
}

/// A matched answer occurrence, as inclusive token indices into the
/// passage's normalized tokenization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSpan {
    pub token_start: usize,
    pub token_end: usize,
    pub matched_answer: String,
}

impl MatchSpan {
    pub fn bounds(&self) -> (usize, usize) {
        (self.token_start, self.token_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Title,
    Text,
}

/// Normalized tokens of a passage: title tokens (unless text-only) followed
/// by text tokens. Matches never cross from the title into the text.
#[derive(Debug, Clone)]
pub struct PassageTokens {
    title: TokenizedText,
    text: TokenizedText,
}

impl PassageTokens {
    pub fn new(passage: &RetrievedPassage, scope: MatchScope) -> Self {
        let title = match scope {
            MatchScope::TitleAndText => TokenizedText::new(&passage.title),
            MatchScope::TextOnly => TokenizedText::default(),
        };
        PassageTokens {
            title,
            text: TokenizedText::new(&passage.text),
        }
    }

    pub fn len(&self) -> usize {
        self.title.len() + self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.title.tokens().chain(self.text.tokens())
    }

    /// Field and raw byte range covered by tokens `start..=end`, or `None` if
    /// the span crosses fields.
    pub fn raw_span(&self, start: usize, end: usize) -> Option<(Field, Range<usize>)> {
        let t = self.title.len();
        if end < t {
            Some((
                Field::Title,
                self.title.raw_range(start).start..self.title.raw_range(end).end,
            ))
        } else if start >= t && end < self.len() {
            Some((
                Field::Text,
                self.text.raw_range(start - t).start..self.text.raw_range(end - t).end,
            ))
        } else {
            None
        }
    }
}

/// Multi-pattern matcher for one answer set.
#[derive(Debug, Clone)]
pub struct AnswerMatcher {
    matcher: PhraseMatcher,
    answers: Vec<String>,
}

impl AnswerMatcher {
    pub fn new(answers: &AnswerSet) -> Self {
        let (raw, norm): (Vec<String>, Vec<&str>) = answers
            .unique()
            .map(|(r, n)| (r.to_owned(), n.as_str()))
            .unzip();
        AnswerMatcher {
            matcher: PhraseMatcher::new(norm),
            answers: raw,
        }
    }

    /// Every answer occurrence in the passage, sorted by
    /// `(token_start, token_end, answer order)`.
    pub fn find(&self, tokens: &PassageTokens) -> Vec<MatchSpan> {
        self.find_with_pattern(tokens)
            .into_iter()
            .map(|(_, span)| span)
            .collect()
    }

    /// As [`find`](Self::find) but also returning the index of the matched
    /// answer among the set's distinct normalized answers.
    pub fn find_with_pattern(&self, tokens: &PassageTokens) -> Vec<(usize, MatchSpan)> {
        let offset = tokens.title.len();
        let mut hits = self.matcher.find_all(tokens.title.tokens());
        hits.extend(
            self.matcher
                .find_all(tokens.text.tokens())
                .into_iter()
                .map(|mut m| {
                    m.start += offset;
                    m.end += offset;
                    m
                }),
        );
        hits.sort_unstable_by_key(|m| (m.start, m.end, m.pattern));
        hits.into_iter()
            .map(|m| {
                (
                    m.pattern,
                    MatchSpan {
                        token_start: m.start,
                        token_end: m.end,
                        matched_answer: self.answers[m.pattern].clone(),
                    },
                )
            })
            .collect()
    }

    pub fn is_positive(&self, tokens: &PassageTokens) -> bool {
        self.matcher.is_match(tokens.title.tokens()) || self.matcher.is_match(tokens.text.tokens())
    }
}

/// A positive passage and all of its answer matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositivePassage {
    pub passage_id: String,
    pub spans: Vec<MatchSpan>,
}

/// Positive passages in input order.
pub fn find_positives(
    passages: &[RetrievedPassage],
    answers: &AnswerSet,
    scope: MatchScope,
) -> Vec<PositivePassage> {
    let matcher = AnswerMatcher::new(answers);
    passages
        .iter()
        .filter_map(|p| {
            let spans = matcher.find(&PassageTokens::new(p, scope));
            (!spans.is_empty()).then(|| PositivePassage {
                passage_id: p.passage_id.clone(),
                spans,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningConfig {
    /// Passages per example: one positive plus `m - 1` negatives.
    pub m: usize,
    pub seed: u64,
    /// Only passages with `rank <= top_k` are considered.
    pub top_k: u32,
    pub scope: MatchScope,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            m: 24,
            seed: 0,
            top_k: 100,
            scope: MatchScope::TitleAndText,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub question_id: String,
    pub positive: RetrievedPassage,
    pub spans: Vec<MatchSpan>,
    pub negatives: Vec<RetrievedPassage>,
}

/// Line format of the training-set JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingLine {
    pub id: String,
    pub positive: PositiveRef,
    pub negatives: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveRef {
    pub pid: String,
    pub spans: Vec<[usize; 2]>,
}

impl TrainingExample {
    pub fn to_line(&self) -> TrainingLine {
        TrainingLine {
            id: self.question_id.clone(),
            positive: PositiveRef {
                pid: self.positive.passage_id.clone(),
                spans: self
                    .spans
                    .iter()
                    .map(|s| [s.token_start, s.token_end])
                    .collect(),
            },
            negatives: self
                .negatives
                .iter()
                .map(|p| p.passage_id.clone())
                .collect(),
        }
    }
}

/// Per-run mining counters. Summing is associative, so per-thread counts can
/// be merged in any order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningCounts {
    pub questions: u64,
    /// Questions with at least one positive under the original answers.
    pub original_positives: u64,
    /// Questions with at least one positive under the expanded answers.
    pub augmented_positives: u64,
    pub emitted: u64,
    pub discarded: u64,
    /// Examples emitted with fewer than `m - 1` negatives.
    pub short_negatives: u64,
}

impl MiningCounts {
    pub fn merge(self, o: MiningCounts) -> MiningCounts {
        MiningCounts {
            questions: self.questions + o.questions,
            original_positives: self.original_positives + o.original_positives,
            augmented_positives: self.augmented_positives + o.augmented_positives,
            emitted: self.emitted + o.emitted,
            discarded: self.discarded + o.discarded,
            short_negatives: self.short_negatives + o.short_negatives,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuestionOutcome {
    pub counts: MiningCounts,
    pub example: Option<TrainingExample>,
}

/// Seeded RNG for one question.
pub fn question_rng(seed: u64, question_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(question_id.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn check_ranks(id: &str, passages: &[RetrievedPassage]) -> Result<()> {
    let mut seen = HashSet::with_capacity(passages.len());
    for p in passages {
        if p.rank == 0 {
            return Err(Error::InvalidInput(format!(
                "question {id:?}: rank 0 (ranks start at 1)"
            )));
        }
        if !seen.insert(p.rank) {
            return Err(Error::InvalidInput(format!(
                "question {id:?}: duplicate rank {}",
                p.rank
            )));
        }
    }
    Ok(())
}

/// Label and sample one question.
///
/// `original` decides the "original positives" count; `expanded` (a superset
/// of `original`) decides positives and negatives of the emitted example.
pub fn mine_question(
    question_id: &str,
    original: &AnswerSet,
    expanded: &AnswerSet,
    passages: &[RetrievedPassage],
    config: &MiningConfig,
) -> Result<QuestionOutcome> {
    if config.m < 2 {
        return Err(Error::InvalidInput(format!(
            "m must be at least 2, got {}",
            config.m
        )));
    }
    check_ranks(question_id, passages)?;
    let mut order: Vec<&RetrievedPassage> =
        passages.iter().filter(|p| p.rank <= config.top_k).collect();
    order.sort_by_key(|p| p.rank);

    let matcher = AnswerMatcher::new(expanded);
    let is_original: Vec<bool> = expanded
        .normalized()
        .iter()
        .map(|n| original.contains_normalized(n))
        .collect();

    let mut positives: Vec<(&RetrievedPassage, Vec<MatchSpan>)> = Vec::new();
    let mut negatives: Vec<&RetrievedPassage> = Vec::new();
    let mut any_original = false;
    for p in order {
        let hits = matcher.find_with_pattern(&PassageTokens::new(p, config.scope));
        if hits.is_empty() {
            negatives.push(p);
        } else {
            any_original |= hits.iter().any(|(pat, _)| is_original[*pat]);
            positives.push((p, hits.into_iter().map(|(_, s)| s).collect()));
        }
    }

    let mut counts = MiningCounts {
        questions: 1,
        original_positives: u64::from(any_original),
        augmented_positives: u64::from(!positives.is_empty()),
        ..MiningCounts::default()
    };
    if positives.is_empty() {
        counts.discarded = 1;
        return Ok(QuestionOutcome {
            counts,
            example: None,
        });
    }

    let mut rng = question_rng(config.seed, question_id);
    let (positive, spans) = positives.swap_remove(rng.random_range(0..positives.len()));
    let want = config.m - 1;
    let take = want.min(negatives.len());
    let mut picked = sample(&mut rng, negatives.len(), take).into_vec();
    picked.sort_unstable();
    counts.emitted = 1;
    counts.short_negatives = u64::from(take < want);
    Ok(QuestionOutcome {
        counts,
        example: Some(TrainingExample {
            question_id: question_id.to_owned(),
            positive: positive.clone(),
            spans,
            negatives: picked.into_iter().map(|i| negatives[i].clone()).collect(),
        }),
    })
}

/// Build an augmented training set. Answers are expanded with `index` when
/// given; otherwise original answers are used for both counts. Examples are
/// returned sorted by question id.
pub fn build_training_set(
    records: &[QARecord],
    retrievals: &HashMap<String, Vec<RetrievedPassage>>,
    index: Option<&AliasIndex>,
    config: &MiningConfig,
) -> Result<(Vec<TrainingExample>, MiningCounts)> {
    let missing: Vec<&str> = records
        .iter()
        .filter(|r| !retrievals.contains_key(&r.question_id))
        .map(|r| r.question_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!(
            "questions without retrieval results: {missing:?}"
        )));
    }
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.question_id.as_str()) {
            return Err(Error::InvalidDataset(format!(
                "duplicate question id {:?}",
                r.question_id
            )));
        }
    }

    let outcomes: Vec<QuestionOutcome> = match index {
        Some(index) => records
            .par_iter()
            .map_init(
                || Expander::new(index),
                |ex, r| {
                    let gold = r.gold();
                    let expanded = ex.expand(gold).answers;
                    mine_question(
                        &r.question_id,
                        gold,
                        &expanded,
                        &retrievals[&r.question_id],
                        config,
                    )
                },
            )
            .collect::<Result<_>>()?,
        None => records
            .par_iter()
            .map(|r| {
                let gold = r.gold();
                mine_question(
                    &r.question_id,
                    gold,
                    gold,
                    &retrievals[&r.question_id],
                    config,
                )
            })
            .collect::<Result<_>>()?,
    };

    let mut counts = MiningCounts::default();
    let mut examples = Vec::new();
    for o in outcomes {
        counts = counts.merge(o.counts);
        examples.extend(o.example);
    }
    examples.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    Ok((examples, counts))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub prediction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionEval {
    pub id: String,
    pub prediction: String,
    pub em_original: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em_expanded: Option<u8>,
}

/// Exact-match evaluation under the original and (optionally) expanded
/// answer sets. Percentages are in `[0, 100]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub questions: usize,
    pub em_original: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em_expanded: Option<f64>,
    pub per_question: Vec<QuestionEval>,
}

fn id_mismatch(what: &str, mut ids: Vec<&str>) -> Error {
    ids.sort_unstable();
    Error::InvalidInput(format!("{what}: {ids:?}"))
}

/// Score predictions against gold records and, when given, expanded records.
///
/// Expanded-setting scores use the union of a record's expanded and gold
/// answers, so they are never below the original-setting scores.
pub fn evaluate_predictions(
    predictions: &HashMap<String, String>,
    gold: &[QARecord],
    expanded: Option<&[QARecord]>,
) -> Result<EvalReport> {
    let gold_ids: HashSet<&str> = gold.iter().map(|r| r.question_id.as_str()).collect();
    if gold_ids.len() != gold.len() {
        return Err(Error::InvalidDataset(
            "duplicate question ids in gold data".into(),
        ));
    }
    let missing: Vec<&str> = gold
        .iter()
        .map(|r| r.question_id.as_str())
        .filter(|id| !predictions.contains_key(*id))
        .collect();
    if !missing.is_empty() {
        return Err(id_mismatch("questions without a prediction", missing));
    }
    let extra: Vec<&str> = predictions
        .keys()
        .map(String::as_str)
        .filter(|id| !gold_ids.contains(id))
        .collect();
    if !extra.is_empty() {
        return Err(id_mismatch("predictions for unknown questions", extra));
    }

    let expanded_map: Option<HashMap<&str, &QARecord>> = match expanded {
        None => None,
        Some(ex) => {
            let map: HashMap<&str, &QARecord> =
                ex.iter().map(|r| (r.question_id.as_str(), r)).collect();
            if map.len() != ex.len() {
                return Err(Error::InvalidDataset(
                    "duplicate question ids in expanded data".into(),
                ));
            }
            let missing: Vec<&str> = gold_ids
                .iter()
                .copied()
                .filter(|id| !map.contains_key(id))
                .collect();
            if !missing.is_empty() {
                return Err(id_mismatch("expanded data lacks questions", missing));
            }
            let extra: Vec<&str> = map
                .keys()
                .copied()
                .filter(|id| !gold_ids.contains(id))
                .collect();
            if !extra.is_empty() {
                return Err(id_mismatch("expanded data has unknown questions", extra));
            }
            Some(map)
        }
    };

    let mut per_question = Vec::with_capacity(gold.len());
    let (mut hit_orig, mut hit_exp) = (0usize, 0usize);
    for r in gold {
        let pred = &predictions[&r.question_id];
        let em_original = em_set(pred, r.gold());
        let em_expanded = expanded_map.as_ref().map(|m| {
            let ex = m[r.question_id.as_str()];
            em_original.max(em_set(pred, &ex.answers))
        });
        hit_orig += em_original as usize;
        hit_exp += em_expanded.unwrap_or(0) as usize;
        per_question.push(QuestionEval {
            id: r.question_id.clone(),
            prediction: pred.clone(),
            em_original,
            em_expanded,
        });
    }
    let pct = |hits: usize| {
        if gold.is_empty() {
            0.0
        } else {
            100.0 * hits as f64 / gold.len() as f64
        }
    };
    Ok(EvalReport {
        questions: gold.len(),
        em_original: pct(hit_orig),
        em_expanded: expanded_map.map(|_| pct(hit_exp)),
        per_question,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::expand_answers;
    use crate::kb::{AliasIndexBuilder, SourceTag};

    fn passage(pid: &str, title: &str, text: &str, rank: u32) -> RetrievedPassage {
        RetrievedPassage {
            passage_id: pid.into(),
            title: title.into(),
            text: text.into(),
            rank,
        }
    }

    fn set(v: &[&str]) -> AnswerSet {
        AnswerSet::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn tim_cook_span() {
        let p = passage("p1", "Apple", "… chief executive Tim Cook announced …", 1);
        let pos = find_positives(
            std::slice::from_ref(&p),
            &set(&["Tim Cook"]),
            MatchScope::TitleAndText,
        );
        assert_eq!(pos.len(), 1);
        let span = &pos[0].spans[0];
        // tokens: apple | chief executive tim cook announced ("…" is dropped)
        assert_eq!(span.bounds(), (3, 4));
        let toks = PassageTokens::new(&p, MatchScope::TitleAndText);
        let (field, range) = toks.raw_span(3, 4).unwrap();
        assert_eq!(field, Field::Text);
        assert_eq!(&p.text[range], "Tim Cook");
        let text_only = find_positives(&[p], &set(&["Tim Cook"]), MatchScope::TextOnly);
        assert_eq!(text_only[0].spans[0].bounds(), (2, 3));
    }

    #[test]
    fn wrong_context_alias_still_matches() {
        let p = passage(
            "p",
            "",
            "In the APG III system, the celastraceae family was expanded",
            1,
        );
        assert_eq!(
            find_positives(&[p], &set(&["III"]), MatchScope::TitleAndText).len(),
            1
        );
    }

    #[test]
    fn no_match_and_boundaries() {
        let ps = [passage("p", "Rufuses", "The Rufuses played on", 1)];
        assert!(find_positives(&ps, &set(&["Rufus"]), MatchScope::TitleAndText).is_empty());
        let ps = [passage("p", "Band", "Rufus and Chaka", 1)];
        assert!(find_positives(&ps, &set(&["Chaka Khan"]), MatchScope::TitleAndText).is_empty());
    }

    #[test]
    fn title_text_boundary_not_crossed() {
        let ps = [passage("p", "Tim", "Cook announced", 1)];
        assert!(find_positives(&ps, &set(&["Tim Cook"]), MatchScope::TitleAndText).is_empty());
        assert_eq!(
            find_positives(&ps, &set(&["Tim"]), MatchScope::TitleAndText).len(),
            1
        );
        assert!(find_positives(&ps, &set(&["Tim"]), MatchScope::TextOnly).is_empty());
    }

    fn filler(n: usize) -> Vec<RetrievedPassage> {
        (1..=n)
            .map(|i| {
                passage(
                    &format!("p{i}"),
                    "",
                    &format!("nothing relevant here {i}"),
                    i as u32,
                )
            })
            .collect()
    }

    #[test]
    fn m24_of_100() {
        let mut ps = filler(100);
        for i in [5, 40, 77] {
            ps[i].text = "the answer is Tim Cook".into();
        }
        let ans = set(&["Tim Cook"]);
        let cfg = MiningConfig::default();
        let out = mine_question("q", &ans, &ans, &ps, &cfg).unwrap();
        let ex = out.example.unwrap();
        assert_eq!(ex.negatives.len(), 23);
        assert!(["p6", "p41", "p78"].contains(&ex.positive.passage_id.as_str()));
        assert!(ex
            .negatives
            .iter()
            .all(|n| !["p6", "p41", "p78"].contains(&n.passage_id.as_str())));
        let uniq: HashSet<_> = ex.negatives.iter().map(|n| &n.passage_id).collect();
        assert_eq!(uniq.len(), 23);
        assert_eq!(out.counts.short_negatives, 0);

        let again = mine_question("q", &ans, &ans, &ps, &cfg)
            .unwrap()
            .example
            .unwrap();
        assert_eq!(again, ex);
    }

    #[test]
    fn short_negatives_flagged_and_discard() {
        let mut ps = filler(5);
        ps[0].text = "Tim Cook".into();
        let ans = set(&["Tim Cook"]);
        let out = mine_question("q", &ans, &ans, &ps, &MiningConfig::default()).unwrap();
        assert_eq!(out.example.unwrap().negatives.len(), 4);
        assert_eq!(out.counts.short_negatives, 1);

        let none = mine_question("q", &ans, &ans, &filler(5), &MiningConfig::default()).unwrap();
        assert!(none.example.is_none());
        assert_eq!(none.counts.discarded, 1);
    }

    #[test]
    fn top_k_and_rank_validation() {
        let mut ps = filler(5);
        ps[4].text = "Tim Cook".into();
        let ans = set(&["Tim Cook"]);
        let cfg = MiningConfig {
            top_k: 4,
            ..MiningConfig::default()
        };
        assert!(mine_question("q", &ans, &ans, &ps, &cfg)
            .unwrap()
            .example
            .is_none());
        ps[1].rank = 1;
        assert!(matches!(
            mine_question("q", &ans, &ans, &ps, &MiningConfig::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn expansion_rescues_questions() {
        let idx = AliasIndexBuilder::new(SourceTag::Freebase)
            .entity("m.cook", "Timothy Donald Cook", ["Tim Cook"])
            .build();
        let records = vec![
            QARecord::new("q1", "", set(&["Timothy Donald Cook"])),
            QARecord::new("q2", "", set(&["Paris"])),
        ];
        let mut retrievals = HashMap::new();
        let mut a = filler(10);
        a[3].text = "Tim Cook said".into();
        retrievals.insert("q1".to_owned(), a);
        retrievals.insert("q2".to_owned(), filler(10));
        let cfg = MiningConfig::default();
        let (ex, counts) = build_training_set(&records, &retrievals, Some(&idx), &cfg).unwrap();
        assert_eq!(counts.original_positives, 0);
        assert_eq!(counts.augmented_positives, 1);
        assert_eq!(counts.emitted + counts.discarded, counts.questions);
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].positive.passage_id, "p4");

        let (_, plain) = build_training_set(&records, &retrievals, None, &cfg).unwrap();
        assert_eq!(plain.augmented_positives, 0);

        retrievals.remove("q2");
        assert!(matches!(
            build_training_set(&records, &retrievals, Some(&idx), &cfg),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn evaluation_tim_cook() {
        let idx = AliasIndexBuilder::new(SourceTag::Freebase)
            .entity("m.cook", "Timothy Donald Cook", ["Tim Cook"])
            .build();
        let gold = vec![QARecord::new("q", "", set(&["Timothy Donald Cook"]))];
        let mut expanded = gold.clone();
        expanded[0].answers = expand_answers(&gold[0].answers, &idx);
        let preds = HashMap::from([("q".to_owned(), "Tim Cook".to_owned())]);
        let report = evaluate_predictions(&preds, &gold, Some(&expanded)).unwrap();
        assert_eq!(report.per_question[0].em_original, 0);
        assert_eq!(report.per_question[0].em_expanded, Some(1));
        assert_eq!(report.em_original, 0.0);
        assert_eq!(report.em_expanded, Some(100.0));
    }

    #[test]
    fn evaluation_id_errors() {
        let gold = vec![
            QARecord::new("q1", "", set(&["a"])),
            QARecord::new("q2", "", set(&["b"])),
        ];
        let preds = HashMap::from([
            ("q1".to_owned(), "a".to_owned()),
            ("q9".to_owned(), "b".to_owned()),
        ]);
        let err = evaluate_predictions(&preds, &gold, None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("q2"), "{err}");
        let preds = HashMap::from([
            ("q1".to_owned(), "a".to_owned()),
            ("q2".to_owned(), "b".to_owned()),
            ("q9".to_owned(), "b".to_owned()),
        ]);
        let err = evaluate_predictions(&preds, &gold, None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("q9"), "{err}");
        let preds: HashMap<_, _> = preds.into_iter().filter(|(k, _)| k != "q9").collect();
        let r = evaluate_predictions(&preds, &gold, None).unwrap();
        assert_eq!(r.em_original, 100.0);
        assert!(evaluate_predictions(&preds, &gold, Some(&gold[..1])).is_err());
    }

    #[test]
    fn training_line_format() {
        let ex = TrainingExample {
            question_id: "q".into(),
            positive: passage("p1", "", "x", 1),
            spans: vec![MatchSpan {
                token_start: 2,
                token_end: 3,
                matched_answer: "a b".into(),
            }],
            negatives: vec![passage("p2", "", "y", 2)],
        };
        assert_eq!(
            serde_json::to_string(&ex.to_line()).unwrap(),
            r#"{"id":"q","positive":{"pid":"p1","spans":[[2,3]]},"negatives":["p2"]}"#
        );
    }
}
