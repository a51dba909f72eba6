use std::cmp::Ordering;

use log::warn;
use rayon::prelude::*;

use crate::corpus::{Token, UtterancePair};

use super::lattice::{for_each_span, is_alignable};
use super::model::sym_key;
use super::symbol::cmp_spans;
use super::{AlignError, AlignedUtterance, AlignmentConfig, AlignmentModel, PairSymbol};

/// Probability assigned to symbols the model has never seen.
pub const UNSEEN_SYMBOL_PROBABILITY: f64 = 1e-12;

#[derive(Clone, Copy)]
struct Span {
    i: usize,
    j: usize,
    a: usize,
    b: usize,
}

#[derive(Clone)]
struct Best {
    score: f64,
    path: Vec<Span>,
}

fn cmp_paths(hyp: &[Token], reference: &[Token], x: &[Span], y: &[Span]) -> Ordering {
    for (s, t) in x.iter().zip(y) {
        let ord = cmp_spans(
            (&hyp[s.i..s.i + s.a], &reference[s.j..s.j + s.b]),
            (&hyp[t.i..t.i + t.a], &reference[t.j..t.j + t.b]),
        );
        if ord != Ordering::Equal {
            return ord;
        }
    }
    x.len().cmp(&y.len())
}

/// Highest-probability segmentation of `pair`. Ties prefer fewer symbols, then
/// the lexicographically smaller symbol sequence.
pub fn viterbi_align(
    pair: &UtterancePair,
    model: &AlignmentModel,
    cfg: &AlignmentConfig,
) -> Result<AlignedUtterance, AlignError> {
    let (hyp, reference) = (&pair.hypothesis, &pair.reference);
    let (n, m) = (hyp.len(), reference.len());
    if !is_alignable(n, m, cfg) {
        return Err(AlignError::Unalignable(pair.id.clone()));
    }
    let vocab = model.vocab();
    let hyp_ids: Vec<Option<u32>> = hyp.iter().map(|t| vocab.get(t)).collect();
    let ref_ids: Vec<Option<u32>> = reference.iter().map(|t| vocab.get(t)).collect();
    let floor = UNSEEN_SYMBOL_PROBABILITY.ln();
    let score_of = |i: usize, j: usize, a: usize, b: usize| -> f64 {
        let src: Option<Vec<u32>> = hyp_ids[i..i + a].iter().copied().collect();
        let tgt: Option<Vec<u32>> = ref_ids[j..j + b].iter().copied().collect();
        match (src, tgt) {
            (Some(s), Some(t)) => model
                .key_probability(&sym_key(&s, &t))
                .map_or(floor, f64::ln),
            _ => floor,
        }
    };

    let width = m + 1;
    let mut best: Vec<Option<Best>> = vec![None; (n + 1) * width];
    best[0] = Some(Best {
        score: 0.0,
        path: Vec::new(),
    });
    for_each_span(n, m, cfg, |i, j, a, b| {
        let Some(prev) = &best[i * width + j] else {
            return;
        };
        let score = prev.score + score_of(i, j, a, b);
        let target = (i + a) * width + j + b;
        let span = Span { i, j, a, b };
        let better = match &best[target] {
            None => true,
            Some(cur) => {
                let len = prev.path.len() + 1;
                if score != cur.score {
                    score > cur.score
                } else if len != cur.path.len() {
                    len < cur.path.len()
                } else {
                    let mut candidate = prev.path.clone();
                    candidate.push(span);
                    cmp_paths(hyp, reference, &candidate, &cur.path) == Ordering::Less
                }
            }
        };
        if better {
            let mut path = prev.path.clone();
            path.push(span);
            best[target] = Some(Best { score, path });
        }
    });

    let Some(winner) = best[n * width + m].take() else {
        return Err(AlignError::Unalignable(pair.id.clone()));
    };
    let symbols = winner
        .path
        .iter()
        .map(|s| PairSymbol {
            source: hyp[s.i..s.i + s.a].to_vec(),
            target: reference[s.j..s.j + s.b].to_vec(),
        })
        .collect();
    Ok(AlignedUtterance {
        id: pair.id.clone(),
        symbols,
        weight: pair.weight,
    })
}

#[derive(Debug, Clone, Default)]
pub struct AlignedCorpus {
    pub utterances: Vec<AlignedUtterance>,
    pub skipped: usize,
}

/// Viterbi-aligns every pair, preserving corpus order and skipping
/// unalignable pairs.
pub fn align_corpus(
    corpus: &[UtterancePair],
    model: &AlignmentModel,
    cfg: &AlignmentConfig,
) -> AlignedCorpus {
    let results: Vec<Option<AlignedUtterance>> = corpus
        .par_iter()
        .map(|p| viterbi_align(p, model, cfg).ok())
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    if skipped > 0 {
        warn!("{skipped} pairs could not be aligned");
    }
    AlignedCorpus {
        utterances: results.into_iter().flatten().collect(),
        skipped,
    }
}
