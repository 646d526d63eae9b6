//! Reader probability model over caller-supplied passage encodings.
//!
//! Each passage is an `L × h` matrix whose row 0 is the sequence-start
//! token. Passage selection scores `w_r · P_i[0]` are soft-maxed across the
//! `k` passages; start and end scores `w_s · P[j]`, `w_e · P[j]` are
//! soft-maxed over the `L` positions of one passage. The training objective
//! is the negative log-likelihood of the positive passage plus the negative
//! log of the marginal probability of its gold spans.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_SPAN_LEN: usize = 10;

/// Row-major `L × h` passage encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageEncoding {
    len: usize,
    hidden: usize,
    data: Vec<f64>,
}

impl PassageEncoding {
    pub fn new(len: usize, hidden: usize, data: Vec<f64>) -> Result<Self> {
        if len == 0 || hidden == 0 {
            return Err(Error::Shape(format!(
                "encoding must be at least 1×1, got {len}×{hidden}"
            )));
        }
        if data.len() != len * hidden {
            return Err(Error::Shape(format!(
                "{len}×{hidden} encoding needs {} values, got {}",
                len * hidden,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "encoding has non-finite entries".into(),
            ));
        }
        Ok(PassageEncoding { len, hidden, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let hidden = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != hidden) {
            return Err(Error::Shape("ragged encoding rows".into()));
        }
        PassageEncoding::new(rows.len(), hidden, rows.concat())
    }

    /// Sequence length `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Hidden size `h`.
    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.hidden..(j + 1) * self.hidden]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn scores(&self, w: &[f64]) -> Vec<f64> {
        (0..self.len).map(|j| dot(self.row(j), w)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReaderWeights {
    pub passage: Vec<f64>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl ReaderWeights {
    pub fn new(passage: Vec<f64>, start: Vec<f64>, end: Vec<f64>) -> Result<Self> {
        if passage.is_empty() || passage.len() != start.len() || passage.len() != end.len() {
            return Err(Error::Shape(format!(
                "weight vectors must share a non-zero length, got {}/{}/{}",
                passage.len(),
                start.len(),
                end.len()
            )));
        }
        if passage
            .iter()
            .chain(&start)
            .chain(&end)
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidInput(
                "weights have non-finite entries".into(),
            ));
        }
        Ok(ReaderWeights {
            passage,
            start,
            end,
        })
    }

    pub fn zeros(hidden: usize) -> Self {
        ReaderWeights {
            passage: vec![0.0; hidden],
            start: vec![0.0; hidden],
            end: vec![0.0; hidden],
        }
    }

    pub fn hidden(&self) -> usize {
        self.passage.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanPrediction {
    pub passage_index: usize,
    pub token_start: usize,
    pub token_end: usize,
    pub score: f64,
}

/// Gradients of [`mml_loss`] with respect to each weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReaderGradients {
    pub passage: Vec<f64>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log Σ exp(x)` with max subtraction. Empty input gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn check_hidden(encodings: &[PassageEncoding], hidden: usize) -> Result<()> {
    if encodings.is_empty() {
        return Err(Error::Shape("need at least one passage".into()));
    }
    for (i, e) in encodings.iter().enumerate() {
        if e.hidden != hidden {
            return Err(Error::Shape(format!(
                "passage {i} has hidden size {}, weights have {hidden}",
                e.hidden
            )));
        }
    }
    Ok(())
}

fn passage_scores(encodings: &[PassageEncoding], w_r: &[f64]) -> Vec<f64> {
    encodings.iter().map(|e| dot(e.row(0), w_r)).collect()
}

/// Passage selection distribution across the `k` passages.
pub fn passage_probs(encodings: &[PassageEncoding], w_r: &[f64]) -> Result<Vec<f64>> {
    check_hidden(encodings, w_r.len())?;
    Ok(softmax(&passage_scores(encodings, w_r)))
}

/// Start and end distributions over the `L` positions of one passage.
pub fn span_probs(
    encoding: &PassageEncoding,
    w_s: &[f64],
    w_e: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if w_s.len() != encoding.hidden || w_e.len() != encoding.hidden {
        return Err(Error::Shape(format!(
            "hidden size {} vs weights {}/{}",
            encoding.hidden,
            w_s.len(),
            w_e.len()
        )));
    }
    Ok((
        softmax(&encoding.scores(w_s)),
        softmax(&encoding.scores(w_e)),
    ))
}

/// Highest-probability `(passage, start, end)` with `start <= end <
/// start + max_span_len`. Ties go to the lowest passage, then start, then end.
pub fn select_prediction(
    encodings: &[PassageEncoding],
    weights: &ReaderWeights,
    max_span_len: usize,
) -> Result<SpanPrediction> {
    if max_span_len == 0 {
        return Err(Error::InvalidInput(
            "max_span_len must be at least 1".into(),
        ));
    }
    let p_sel = passage_probs(encodings, &weights.passage)?;
    let mut best: Option<SpanPrediction> = None;
    for (i, enc) in encodings.iter().enumerate() {
        let (start, end) = span_probs(enc, &weights.start, &weights.end)?;
        for (j, s) in start.iter().enumerate() {
            let stop = (j + max_span_len).min(enc.len);
            for (k, e) in end.iter().enumerate().take(stop).skip(j) {
                let score = p_sel[i] * s * e;
                if best.is_none_or(|b| score > b.score) {
                    best = Some(SpanPrediction {
                        passage_index: i,
                        token_start: j,
                        token_end: k,
                        score,
                    });
                }
            }
        }
    }
    Ok(best.expect("at least one passage with at least one position"))
}

fn check_gold(
    encodings: &[PassageEncoding],
    positive_index: usize,
    gold_spans: &[(usize, usize)],
) -> Result<()> {
    if positive_index >= encodings.len() {
        return Err(Error::InvalidInput(format!(
            "positive index {positive_index} out of range for {} passages",
            encodings.len()
        )));
    }
    if gold_spans.is_empty() {
        return Err(Error::InvalidInput("gold span list is empty".into()));
    }
    let len = encodings[positive_index].len;
    for &(s, e) in gold_spans {
        if s > e || e >= len {
            return Err(Error::InvalidInput(format!(
                "gold span ({s}, {e}) invalid for passage of length {len}"
            )));
        }
    }
    Ok(())
}

/// Intermediate quantities shared by the loss and its gradient.
struct Forward {
    passage_logits: Vec<f64>,
    start_logits: Vec<f64>,
    end_logits: Vec<f64>,
    gold_logits: Vec<f64>,
}

fn forward(
    encodings: &[PassageEncoding],
    weights: &ReaderWeights,
    positive_index: usize,
    gold_spans: &[(usize, usize)],
) -> Result<Forward> {
    check_hidden(encodings, weights.hidden())?;
    check_gold(encodings, positive_index, gold_spans)?;
    let pos = &encodings[positive_index];
    let start_logits = pos.scores(&weights.start);
    let end_logits = pos.scores(&weights.end);
    let gold_logits = gold_spans
        .iter()
        .map(|&(s, e)| start_logits[s] + end_logits[e])
        .collect();
    Ok(Forward {
        passage_logits: passage_scores(encodings, &weights.passage),
        start_logits,
        end_logits,
        gold_logits,
    })
}

impl Forward {
    fn loss(&self, positive_index: usize) -> f64 {
        let passage_nll = log_sum_exp(&self.passage_logits) - self.passage_logits[positive_index];
        let span_nll = log_sum_exp(&self.start_logits) + log_sum_exp(&self.end_logits)
            - log_sum_exp(&self.gold_logits);
        passage_nll + span_nll
    }
}

/// `-log P_r(positive) - log Σ_{(j,k) ∈ gold} P_s(j) P_e(k)`.
///
/// Gold spans are summed as given: a repeated span counts twice.
pub fn mml_loss(
    encodings: &[PassageEncoding],
    weights: &ReaderWeights,
    positive_index: usize,
    gold_spans: &[(usize, usize)],
) -> Result<f64> {
    Ok(forward(encodings, weights, positive_index, gold_spans)?.loss(positive_index))
}

/// Analytic gradient of [`mml_loss`].
pub fn mml_grad(
    encodings: &[PassageEncoding],
    weights: &ReaderWeights,
    positive_index: usize,
    gold_spans: &[(usize, usize)],
) -> Result<ReaderGradients> {
    let fwd = forward(encodings, weights, positive_index, gold_spans)?;
    let h = weights.hidden();

    // d/dw_r = Σ_i (p_i - [i = pos]) P_i[0]
    let p_sel = softmax(&fwd.passage_logits);
    let mut passage = vec![0.0; h];
    for (i, enc) in encodings.iter().enumerate() {
        let coef = p_sel[i] - f64::from(u8::from(i == positive_index));
        axpy(&mut passage, coef, enc.row(0));
    }

    // d/dw_s = Σ_j P_s(j) P[j] - Σ_{(j,k) ∈ gold} q_jk P[j], q = posterior over gold spans
    let pos = &encodings[positive_index];
    let q = softmax(&fwd.gold_logits);
    let mut start = vec![0.0; h];
    let mut end = vec![0.0; h];
    for (j, (ps, pe)) in softmax(&fwd.start_logits)
        .into_iter()
        .zip(softmax(&fwd.end_logits))
        .enumerate()
    {
        axpy(&mut start, ps, pos.row(j));
        axpy(&mut end, pe, pos.row(j));
    }
    for (&(s, e), &w) in gold_spans.iter().zip(&q) {
        axpy(&mut start, -w, pos.row(s));
        axpy(&mut end, -w, pos.row(e));
    }
    Ok(ReaderGradients {
        passage,
        start,
        end,
    })
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Random instance for self-checks: entries uniform in `[-1, 1]`.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    passages: usize,
    len: usize,
    hidden: usize,
) -> (Vec<PassageEncoding>, ReaderWeights) {
    let mut draw = |n: usize| {
        (0..n)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect::<Vec<f64>>()
    };
    let encodings = (0..passages)
        .map(|_| PassageEncoding::new(len, hidden, draw(len * hidden)).expect("valid shape"))
        .collect();
    let weights = ReaderWeights {
        passage: draw(hidden),
        start: draw(hidden),
        end: draw(hidden),
    };
    (encodings, weights)
}

/// Central finite-difference comparison of [`mml_grad`] against
/// [`mml_loss`]. Returns the largest norm-relative error over the three
/// weight vectors, `‖g - g_fd‖ / max(‖g‖, ‖g_fd‖, 1e-12)`.
pub fn gradient_check(
    encodings: &[PassageEncoding],
    weights: &ReaderWeights,
    positive_index: usize,
    gold_spans: &[(usize, usize)],
    step: f64,
) -> Result<f64> {
    let analytic = mml_grad(encodings, weights, positive_index, gold_spans)?;
    let mut worst: f64 = 0.0;
    for which in 0..3 {
        let g = match which {
            0 => &analytic.passage,
            1 => &analytic.start,
            _ => &analytic.end,
        };
        let mut fd = vec![0.0; g.len()];
        for (d, slot) in fd.iter_mut().enumerate() {
            let probe = |delta: f64| {
                let mut w = weights.clone();
                let v = match which {
                    0 => &mut w.passage,
                    1 => &mut w.start,
                    _ => &mut w.end,
                };
                v[d] += delta;
                mml_loss(encodings, &w, positive_index, gold_spans)
            };
            *slot = (probe(step)? - probe(-step)?) / (2.0 * step);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(g).max(norm(&fd)).max(1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn enc(rows: &[&[f64]]) -> PassageEncoding {
        PassageEncoding::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn passage_prob_examples() {
        let e = enc(&[&[2.0]]);
        assert_eq!(
            passage_probs(std::slice::from_ref(&e), &[1.0]).unwrap(),
            [1.0]
        );
        let p = passage_probs(&[e.clone(), e], &[0.7]).unwrap();
        assert_eq!(p, [0.5, 0.5]);
        // scores 0 and ln 3: e^0 / (1 + 3) = 1/4
        let p = passage_probs(&[enc(&[&[0.0]]), enc(&[&[3f64.ln()]])], &[1.0]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn span_prob_examples() {
        let e = enc(&[&[1.0, 2.0], &[3.0, -1.0], &[0.5, 0.5]]);
        let (s, t) = span_probs(&e, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(s.iter().chain(&t).all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        let (s, t) = span_probs(&enc(&[&[4.0]]), &[1.0], &[-2.0]).unwrap();
        assert_eq!((s, t), (vec![1.0], vec![1.0]));

        // w_s = (1, 0): logits 1, 3, 0.5. Denominator e + e^3 + e^0.5.
        let (s, _) = span_probs(&e, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let z = 1f64.exp() + 3f64.exp() + 0.5f64.exp();
        let want = [1f64.exp() / z, 3f64.exp() / z, 0.5f64.exp() / z];
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_errors() {
        let e = enc(&[&[1.0, 2.0]]);
        assert!(matches!(
            passage_probs(std::slice::from_ref(&e), &[1.0]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(passage_probs(&[], &[1.0]), Err(Error::Shape(_))));
        assert!(matches!(
            span_probs(&e, &[1.0], &[1.0, 1.0]),
            Err(Error::Shape(_))
        ));
        assert!(ReaderWeights::new(vec![1.0], vec![1.0], vec![]).is_err());
        assert!(PassageEncoding::new(2, 2, vec![0.0; 3]).is_err());
        assert!(PassageEncoding::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn selection_examples() {
        let w = ReaderWeights::new(vec![1.0], vec![1.0], vec![1.0]).unwrap();
        let p = select_prediction(&[enc(&[&[0.3]])], &w, 10).unwrap();
        assert_eq!((p.passage_index, p.token_start, p.token_end), (0, 0, 0));
        assert_eq!(p.score, 1.0);

        // hidden 3: dims are (passage, start, end) indicators
        let mut rows = vec![vec![0.0; 3]; 6];
        rows[0][0] = 5.0;
        rows[2][1] = 8.0;
        rows[4][2] = 8.0;
        let hot = PassageEncoding::from_rows(&rows).unwrap();
        let cold = PassageEncoding::from_rows(&vec![vec![0.0; 3]; 6]).unwrap();
        let w = ReaderWeights::new(
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        )
        .unwrap();
        let p = select_prediction(&[cold, hot.clone()], &w, 10).unwrap();
        assert_eq!((p.passage_index, p.token_start, p.token_end), (1, 2, 4));
        // a cap of 2 tokens rules out (2, 4)
        let p = select_prediction(&[hot], &w, 2).unwrap();
        assert!(p.token_end - p.token_start < 2);
        assert!(select_prediction(&[enc(&[&[0.0, 0.0, 0.0]])], &w, 0).is_err());
    }

    #[test]
    fn selection_ties_prefer_lowest() {
        let cold = PassageEncoding::from_rows(&vec![vec![0.0]; 4]).unwrap();
        let w = ReaderWeights::zeros(1);
        let p = select_prediction(&[cold.clone(), cold], &w, 3).unwrap();
        assert_eq!((p.passage_index, p.token_start, p.token_end), (0, 0, 0));
    }

    #[test]
    fn loss_examples() {
        let w = ReaderWeights::new(vec![0.4], vec![-1.0], vec![2.0]).unwrap();
        let l = mml_loss(&[enc(&[&[1.5]])], &w, 0, &[(0, 0)]).unwrap();
        assert_eq!(l, 0.0);
        let encs = [enc(&[&[1.0], &[0.5], &[-0.2]])];
        let once = mml_loss(&encs, &w, 0, &[(0, 1)]).unwrap();
        let twice = mml_loss(&encs, &w, 0, &[(0, 1), (0, 1)]).unwrap();
        assert!((once - twice - 2f64.ln()).abs() < 1e-12);
        assert!(matches!(
            mml_loss(&encs, &w, 0, &[]),
            Err(Error::InvalidInput(_))
        ));
        assert!(mml_loss(&encs, &w, 0, &[(2, 1)]).is_err());
        assert!(mml_loss(&encs, &w, 0, &[(0, 3)]).is_err());
        assert!(mml_loss(&encs, &w, 1, &[(0, 0)]).is_err());
    }

    #[test]
    fn gradient_zero_weights_closed_form() {
        // k = 2, L = 2, h = 2, zero weights: every distribution is uniform.
        let a = enc(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = enc(&[&[5.0, -1.0], &[0.0, 0.0]]);
        let g = mml_grad(&[a, b], &ReaderWeights::zeros(2), 0, &[(1, 1)]).unwrap();
        // passage: 0.5*(1,2) + 0.5*(5,-1) - (1,2) = (2, -1.5)
        assert_eq!(g.passage, [2.0, -1.5]);
        // start/end: mean rows (2, 3) minus gold row (3, 4)
        assert_eq!(g.start, [-1.0, -1.0]);
        assert_eq!(g.end, [-1.0, -1.0]);
    }

    #[test]
    fn gradient_symmetric_passages() {
        // Two passages whose CLS rows are negatives of each other, zero weights:
        // the passage gradient is -(P_pos[0] - mean) = -(x - 0) for pos = 0.
        let a = enc(&[&[0.7, -0.2]]);
        let b = enc(&[&[-0.7, 0.2]]);
        let w = ReaderWeights::zeros(2);
        let g0 = mml_grad(&[a.clone(), b.clone()], &w, 0, &[(0, 0)]).unwrap();
        let g1 = mml_grad(&[a, b], &w, 1, &[(0, 0)]).unwrap();
        for d in 0..2 {
            assert!((g0.passage[d] + g1.passage[d]).abs() < 1e-15);
        }
        assert!((g0.passage[0] + 0.7).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let (encs, w) = random_instance(&mut rng, 3, 8, 4);
            let err = gradient_check(&encs, &w, 1, &[(0, 2), (3, 3), (5, 7)], 1e-5).unwrap();
            assert!(err <= 1e-4, "{err}");
        }
    }

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        let p = softmax(&[1e4, 0.0]);
        assert_eq!(p, [1.0, 0.0]);
    }

    #[test]
    fn loss_descends_along_negative_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let (encs, w) = random_instance(&mut rng, 3, 8, 4);
            let gold = [(1, 2), (4, 6)];
            let before = mml_loss(&encs, &w, 2, &gold).unwrap();
            let g = mml_grad(&encs, &w, 2, &gold).unwrap();
            let mut stepped = w.clone();
            axpy(&mut stepped.passage, -1e-3, &g.passage);
            axpy(&mut stepped.start, -1e-3, &g.start);
            axpy(&mut stepped.end, -1e-3, &g.end);
            assert!(mml_loss(&encs, &stepped, 2, &gold).unwrap() < before);
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn brute_force(
        encs: &[PassageEncoding],
        w: &ReaderWeights,
        cap: usize,
    ) -> (usize, usize, usize) {
        let p = passage_probs(encs, &w.passage).unwrap();
        let mut best = (f64::NEG_INFINITY, (0, 0, 0));
        for (i, e) in encs.iter().enumerate() {
            let (s, t) = span_probs(e, &w.start, &w.end).unwrap();
            for j in 0..e.len() {
                for k in j..e.len() {
                    if k - j < cap && p[i] * s[j] * t[k] > best.0 {
                        best = (p[i] * s[j] * t[k], (i, j, k));
                    }
                }
            }
        }
        best.1
    }

    proptest::proptest! {
        #[test]
        fn probabilities_and_shift_invariance(seed: u64, k in 1usize..5, len in 1usize..12, shift in -50.0f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut encs, mut w) = random_instance(&mut rng, k, len, 3);
            let p = passage_probs(&encs, &w.passage).unwrap();
            proptest::prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            proptest::prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
            for e in &encs {
                let (s, t) = span_probs(e, &w.start, &w.end).unwrap();
                for v in [&s, &t] {
                    proptest::prop_assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                    proptest::prop_assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
                }
            }
            // An extra hidden unit, constant across passages, shifts every
            // passage score by `shift`.
            for e in &mut encs {
                let rows: Vec<Vec<f64>> = (0..e.len()).map(|j| {
                    let mut r = e.row(j).to_vec();
                    r.push(1.0);
                    r
                }).collect();
                *e = PassageEncoding::from_rows(&rows).unwrap();
            }
            w.passage.push(shift);
            w.start.push(0.0);
            w.end.push(0.0);
            let shifted = passage_probs(&encs, &w.passage).unwrap();
            for (a, b) in p.iter().zip(&shifted) {
                proptest::prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn selection_matches_enumeration(seed: u64, k in 1usize..4, len in 1usize..16, cap in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (encs, w) = random_instance(&mut rng, k, len, 2);
            let p = select_prediction(&encs, &w, cap).unwrap();
            proptest::prop_assert_eq!((p.passage_index, p.token_start, p.token_end), brute_force(&encs, &w, cap));
            proptest::prop_assert!(p.token_end - p.token_start < cap);
        }
    }
}
