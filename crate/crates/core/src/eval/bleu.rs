//! Corpus and sentence BLEU with clipped n-gram precision and brevity penalty.

use std::collections::HashMap;
use std::hash::Hash;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BleuConfig {
    pub max_n: usize,
    /// Add-one smoothing of counts for n ≥ 2.
    pub smoothing: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_n: 4,
            smoothing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuBreakdown {
    pub score: f64,
    /// Modified precisions `p_1 ..= p_max_n`.
    pub ngram_precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub candidate_length: usize,
    pub reference_length: usize,
}

/// Sufficient statistics for BLEU; sum them to pool over a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BleuStats {
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
    /// Largest n-gram count of any reference, per order.
    pub reference_totals: Vec<usize>,
    pub candidate_length: usize,
    pub reference_length: usize,
}

impl BleuStats {
    fn zero(max_n: usize) -> Self {
        BleuStats {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            reference_totals: vec![0; max_n],
            ..Default::default()
        }
    }

    fn accumulate(&mut self, other: &BleuStats) {
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        for (a, b) in self.reference_totals.iter_mut().zip(&other.reference_totals) {
            *a += b;
        }
        self.candidate_length += other.candidate_length;
        self.reference_length += other.reference_length;
    }

    /// Scores the statistics. An order with no n-grams on either side (every
    /// sentence shorter than n) has precision 1: nothing was there to match.
    pub fn score(&self, smoothing: bool) -> BleuBreakdown {
        let c = self.candidate_length;
        let r = self.reference_length;
        let precisions: Vec<f64> = self
            .matches
            .iter()
            .zip(&self.totals)
            .zip(&self.reference_totals)
            .enumerate()
            .map(|(i, ((&m, &t), &rt))| {
                if t == 0 && rt == 0 {
                    1.0
                } else if smoothing && i > 0 {
                    (m + 1) as f64 / (t + 1) as f64
                } else if t == 0 {
                    0.0
                } else {
                    m as f64 / t as f64
                }
            })
            .collect();
        let brevity_penalty = if c == 0 {
            0.0
        } else if c > r {
            1.0
        } else {
            (1.0 - r as f64 / c as f64).exp()
        };
        let score = if c == 0 || precisions.iter().any(|&p| p == 0.0) {
            0.0
        } else {
            let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
            brevity_penalty * mean_log.exp()
        };
        BleuBreakdown {
            score,
            ngram_precisions: precisions,
            brevity_penalty,
            candidate_length: c,
            reference_length: r,
        }
    }
}

fn ngram_counts<W: Eq + Hash>(tokens: &[W], n: usize) -> HashMap<&[W], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and the candidate's n-gram count. Each candidate
/// n-gram count is clipped by its largest count in any single reference.
pub fn modified_ngram_precision<W, R>(candidate: &[W], references: &[R], n: usize) -> (usize, usize)
where
    W: Eq + Hash,
    R: AsRef<[W]>,
{
    let cand = ngram_counts(candidate, n);
    let total = cand.values().sum();
    let ref_counts: Vec<_> = references.iter().map(|r| ngram_counts(r.as_ref(), n)).collect();
    let matches = cand
        .iter()
        .map(|(gram, &count)| {
            let max_ref = ref_counts.iter().filter_map(|rc| rc.get(gram)).copied().max().unwrap_or(0);
            count.min(max_ref)
        })
        .sum();
    (matches, total)
}

/// Per-sentence statistics. The reference length is the one closest to the
/// candidate length, preferring the shorter on ties.
pub fn sentence_stats<W, R>(candidate: &[W], references: &[R], max_n: usize) -> Result<BleuStats>
where
    W: Eq + Hash,
    R: AsRef<[W]>,
{
    if references.is_empty() {
        return Err(Error::contract("BLEU needs at least one reference"));
    }
    if max_n == 0 {
        return Err(Error::contract("max_n must be at least 1"));
    }
    let c = candidate.len();
    let reference_length = references
        .iter()
        .map(|r| r.as_ref().len())
        .min_by_key(|&len| (len.abs_diff(c), len))
        .expect("non-empty references");
    let mut stats = BleuStats::zero(max_n);
    for n in 1..=max_n {
        let (m, t) = modified_ngram_precision(candidate, references, n);
        stats.matches[n - 1] = m;
        stats.totals[n - 1] = t;
        stats.reference_totals[n - 1] = references
            .iter()
            .map(|r| (r.as_ref().len() + 1).saturating_sub(n))
            .max()
            .unwrap_or(0);
    }
    stats.candidate_length = c;
    stats.reference_length = reference_length;
    Ok(stats)
}

pub fn sentence_bleu<W, R>(candidate: &[W], references: &[R], config: BleuConfig) -> Result<BleuBreakdown>
where
    W: Eq + Hash,
    R: AsRef<[W]>,
{
    if candidate.is_empty() {
        warn!("empty candidate scores BLEU 0");
    }
    Ok(sentence_stats(candidate, references, config.max_n)?.score(config.smoothing))
}

/// Pools clipped counts and lengths over all pairs before scoring.
pub fn corpus_bleu<W, C, R>(pairs: &[(C, Vec<R>)], config: BleuConfig) -> Result<BleuBreakdown>
where
    W: Eq + Hash,
    C: AsRef<[W]>,
    R: AsRef<[W]>,
{
    if pairs.is_empty() {
        return Err(Error::contract("corpus BLEU over an empty corpus"));
    }
    let mut pooled = BleuStats::zero(config.max_n);
    for (candidate, references) in pairs {
        pooled.accumulate(&sentence_stats(candidate.as_ref(), references, config.max_n)?);
    }
    Ok(pooled.score(config.smoothing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn clipping_example() {
        let cand = toks("the the the the the the the");
        let refs = [toks("the cat is on the mat")];
        assert_eq!(modified_ngram_precision(&cand, &refs, 1), (2, 7));
    }

    #[test]
    fn clipping_uses_max_over_references() {
        let cand = toks("the the the the the the the");
        let refs = [toks("the cat is on the mat"), toks("there is a cat on the mat")];
        assert_eq!(modified_ngram_precision(&cand, &refs, 1), (2, 7));
    }

    #[test]
    fn identity_and_disjoint() {
        let s = toks("a b c d e");
        for n in 1..=5 {
            let (m, t) = modified_ngram_precision(&s, &[s.clone()], n);
            assert_eq!(m, t);
        }
        assert_eq!(modified_ngram_precision(&toks("x y z"), &[toks("a b c")], 2), (0, 2));
        assert_eq!(modified_ngram_precision(&toks("x"), &[toks("a b c")], 2), (0, 0));
    }

    #[test]
    fn perfect_sentence() {
        let s = toks("dear students , the talk is today .");
        let b = sentence_bleu(&s, &[s.clone()], BleuConfig::default()).unwrap();
        assert_eq!(b.score, 1.0);
        assert_eq!(b.ngram_precisions, vec![1.0; 4]);
        assert_eq!(b.brevity_penalty, 1.0);
    }

    #[test]
    fn short_candidate_without_higher_order_ngrams() {
        let b = sentence_bleu(&toks("the cat"), &[toks("the cat is on the mat")], BleuConfig::default()).unwrap();
        assert_eq!(&b.ngram_precisions, &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(b.score, 0.0);
        assert!((b.brevity_penalty - (1.0f64 - 6.0 / 2.0).exp()).abs() < 1e-15);
        assert_eq!((b.candidate_length, b.reference_length), (2, 6));
    }

    #[test]
    fn smoothing_keeps_short_candidates_nonzero() {
        let cfg = BleuConfig { smoothing: true, ..BleuConfig::default() };
        let b = sentence_bleu(&toks("the cat"), &[toks("the cat is on the mat")], cfg).unwrap();
        // p = [1, 2/2, 1/1, 1/1] under add-one for n ≥ 2
        assert_eq!(&b.ngram_precisions, &[1.0, 1.0, 1.0, 1.0]);
        assert!((b.score - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn identity_holds_for_sentences_shorter_than_max_n() {
        let s = toks("terima kasih");
        let b = sentence_bleu(&s, &[s.clone()], BleuConfig::default()).unwrap();
        assert_eq!(b.score, 1.0);
        assert_eq!(b.ngram_precisions, vec![1.0; 4]);
        // a longer reference still has 3-grams the candidate failed to produce
        let b = sentence_bleu(&s, &[toks("terima kasih banyak")], BleuConfig::default()).unwrap();
        assert_eq!(b.ngram_precisions[2], 0.0);
    }

    #[test]
    fn closest_reference_prefers_shorter_on_tie() {
        let stats = sentence_stats(&toks("a b c d"), &[toks("a b c d e f"), toks("a b")], 4).unwrap();
        assert_eq!(stats.reference_length, 2);
    }

    #[test]
    fn empty_candidate_scores_zero() {
        let b = sentence_bleu::<&str, _>(&[], &[toks("a b")], BleuConfig::default()).unwrap();
        assert_eq!(b.score, 0.0);
    }

    #[test]
    fn contract_errors() {
        let none: [Vec<&str>; 0] = [];
        assert!(sentence_bleu(&toks("a"), &none, BleuConfig::default()).is_err());
        let empty: [(Vec<&str>, Vec<Vec<&str>>); 0] = [];
        assert!(corpus_bleu(&empty, BleuConfig::default()).is_err());
    }

    #[test]
    fn pooling_differs_from_sentence_average() {
        let perfect = toks("a b c d e");
        let corpus = vec![
            (perfect.clone(), vec![perfect.clone()]),
            (toks("w x y z"), vec![toks("p q r s")]),
        ];
        let pooled = corpus_bleu(&corpus, BleuConfig::default()).unwrap();
        // matches/totals: 5/9, 4/7, 3/5, 2/3; lengths 9 vs 9
        let expected = (5.0f64 / 9.0 * 4.0 / 7.0 * 3.0 / 5.0 * 2.0 / 3.0).powf(0.25);
        assert!((pooled.score - expected).abs() < 1e-12);
        assert!((pooled.score - 0.596_949_2).abs() < 1e-6);
        let mean = corpus
            .iter()
            .map(|(c, r)| sentence_bleu(c, r, BleuConfig::default()).unwrap().score)
            .sum::<f64>()
            / 2.0;
        assert_eq!(mean, 0.5);
    }

    proptest! {
        #[test]
        fn invariants(
            cand in prop::collection::vec(0u8..6, 1..12),
            refr in prop::collection::vec(0u8..6, 1..12),
            copies in 1usize..4,
        ) {
            let b = sentence_bleu(&cand, &[refr.clone()], BleuConfig::default()).unwrap();
            prop_assert!((0.0..=1.0).contains(&b.score));
            prop_assert!(b.brevity_penalty > 0.0 && b.brevity_penalty <= 1.0);

            let self_score = sentence_bleu(&cand, &[cand.clone()], BleuConfig::default()).unwrap();
            prop_assert_eq!(self_score.score, 1.0);

            for n in 1..=4 {
                let (m, t) = modified_ngram_precision(&cand, &[refr.clone()], n);
                prop_assert!(m <= t);
                let dup = modified_ngram_precision(&cand, &[refr.clone(), refr.clone()], n);
                prop_assert_eq!(dup, (m, t));
            }

            let corpus: Vec<_> = (0..copies).map(|_| (cand.clone(), vec![refr.clone()])).collect();
            let pooled = corpus_bleu(&corpus, BleuConfig::default()).unwrap();
            prop_assert!((pooled.score - b.score).abs() < 1e-12);
        }
    }
}
