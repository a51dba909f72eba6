use std::collections::HashMap;

use log::{debug, warn};
use rayon::prelude::*;

use crate::corpus::UtterancePair;

use super::lattice::{for_each_span, forward_backward, is_alignable, CompactEdge};
use super::model::{sym_key, AlignmentModel, SymKey, TokenVocab};
use super::{AlignError, AlignmentConfig};

/// Lattices per accumulation chunk. Chunk boundaries depend only on corpus
/// order, so partial counts merge identically for any thread count.
const CHUNK: usize = 256;

#[derive(Debug, Clone)]
pub struct EmReport {
    pub model: AlignmentModel,
    /// Corpus log-likelihood (natural log, weighted) of the model entering
    /// each iteration; entry 0 is the uniform initialization.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Pairs skipped because their lattice has no complete path.
    pub skipped: usize,
}

struct PreparedLattice {
    num_nodes: u32,
    edges: Vec<CompactEdge>,
    weight: f64,
}

/// Lattices sharing a chunk-local symbol table.
struct Chunk {
    globals: Vec<u32>,
    lattices: Vec<PreparedLattice>,
}

struct Prepared {
    vocab: TokenVocab,
    keys: Vec<SymKey>,
    chunks: Vec<Chunk>,
    skipped: usize,
}

fn prepare(corpus: &[UtterancePair], cfg: &AlignmentConfig) -> Prepared {
    let mut vocab = TokenVocab::default();
    // identical pairs share one lattice with summed weight
    let mut groups: Vec<(Vec<u32>, Vec<u32>, f64)> = Vec::new();
    let mut group_index: HashMap<(Vec<u32>, Vec<u32>), usize> = HashMap::new();
    let mut skipped = 0;
    for pair in corpus {
        let (n, m) = (pair.hypothesis.len(), pair.reference.len());
        if !is_alignable(n, m, cfg) {
            skipped += 1;
            continue;
        }
        let hyp: Vec<u32> = pair.hypothesis.iter().map(|t| vocab.intern(t)).collect();
        let reference: Vec<u32> = pair.reference.iter().map(|t| vocab.intern(t)).collect();
        match group_index.get(&(hyp.clone(), reference.clone())) {
            Some(&g) => groups[g].2 += pair.weight,
            None => {
                group_index.insert((hyp.clone(), reference.clone()), groups.len());
                groups.push((hyp, reference, pair.weight));
            }
        }
    }
    drop(group_index);

    let mut index: HashMap<SymKey, u32> = HashMap::new();
    let mut keys: Vec<SymKey> = Vec::new();
    let mut chunks = Vec::new();
    for group_chunk in groups.chunks(CHUNK) {
        let mut local: HashMap<u32, u32> = HashMap::new();
        let mut globals = Vec::new();
        let mut lattices = Vec::with_capacity(group_chunk.len());
        for (hyp, reference, weight) in group_chunk {
            let (n, m) = (hyp.len(), reference.len());
            let width = m + 1;
            let mut edges = Vec::new();
            for_each_span(n, m, cfg, |i, j, a, b| {
                let key = sym_key(&hyp[i..i + a], &reference[j..j + b]);
                let global = *index.entry(key).or_insert_with_key(|k| {
                    keys.push(k.clone());
                    (keys.len() - 1) as u32
                });
                let sym = *local.entry(global).or_insert_with(|| {
                    globals.push(global);
                    (globals.len() - 1) as u32
                });
                edges.push(CompactEdge {
                    from: (i * width + j) as u32,
                    to: ((i + a) * width + j + b) as u32,
                    sym,
                });
            });
            lattices.push(PreparedLattice {
                num_nodes: ((n + 1) * width) as u32,
                edges,
                weight: *weight,
            });
        }
        chunks.push(Chunk { globals, lattices });
    }
    Prepared {
        vocab,
        keys,
        chunks,
        skipped,
    }
}

/// Expected symbol counts for one chunk, in chunk-local slots, plus the
/// chunk's weighted log-likelihood.
fn expect_chunk(chunk: &Chunk, logp: &[f64]) -> (Vec<f64>, f64) {
    let local_logp: Vec<f64> = chunk.globals.iter().map(|&g| logp[g as usize]).collect();
    let mut counts = vec![0.0; chunk.globals.len()];
    let mut ll = 0.0;
    for lat in &chunk.lattices {
        let n = lat.num_nodes as usize;
        let (alpha, beta) = forward_backward(n, &lat.edges, &local_logp);
        let log_z = alpha[n - 1];
        if log_z == f64::NEG_INFINITY {
            // every path uses a symbol whose probability collapsed to zero
            continue;
        }
        ll += lat.weight * log_z;
        for e in &lat.edges {
            let a = alpha[e.from as usize];
            let b = beta[e.to as usize];
            if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
                continue;
            }
            let post = (a + local_logp[e.sym as usize] + b - log_z).exp();
            counts[e.sym as usize] += lat.weight * post;
        }
    }
    (counts, ll)
}

/// Learns pair-symbol probabilities by EM over the alignment lattices of
/// every alignable pair, starting from a uniform distribution.
pub fn em_train(corpus: &[UtterancePair], cfg: &AlignmentConfig) -> Result<EmReport, AlignError> {
    cfg.validate()?;
    let prepared = prepare(corpus, cfg);
    if prepared.skipped > 0 {
        warn!("skipped {} unalignable pairs", prepared.skipped);
    }
    if prepared.chunks.is_empty() {
        return Err(AlignError::NothingAlignable(prepared.skipped));
    }
    let num_symbols = prepared.keys.len();
    let mut logp = vec![-(num_symbols as f64).ln(); num_symbols];
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut counts = vec![0.0; num_symbols];
    while iterations < cfg.max_iterations {
        let partials: Vec<(Vec<f64>, f64)> = prepared
            .chunks
            .par_iter()
            .map(|c| expect_chunk(c, &logp))
            .collect();
        counts.iter_mut().for_each(|c| *c = 0.0);
        let mut ll = 0.0;
        for (chunk, (local, chunk_ll)) in prepared.chunks.iter().zip(partials) {
            for (&g, c) in chunk.globals.iter().zip(local) {
                counts[g as usize] += c;
            }
            ll += chunk_ll;
        }
        if !ll.is_finite() {
            return Err(AlignError::Numerical(format!(
                "corpus log-likelihood {ll} at iteration {}",
                iterations + 1
            )));
        }
        debug!("EM iteration {}: log-likelihood {ll}", iterations + 1);
        let previous = history.last().copied();
        history.push(ll);

        let total: f64 = counts.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(AlignError::Numerical(format!("expected count mass {total}")));
        }
        for (lp, &c) in logp.iter_mut().zip(&counts) {
            *lp = if c > 0.0 { (c / total).ln() } else { f64::NEG_INFINITY };
        }
        iterations += 1;
        if let Some(prev) = previous {
            if (ll - prev) / prev.abs().max(f64::MIN_POSITIVE) < cfg.convergence_epsilon {
                converged = true;
                break;
            }
        }
    }

    let total: f64 = counts.iter().sum();
    let mut keys = Vec::new();
    let mut probs = Vec::new();
    for (key, &c) in prepared.keys.into_iter().zip(&counts) {
        if c > 0.0 {
            keys.push(key);
            probs.push(c / total);
        }
    }
    Ok(EmReport {
        model: AlignmentModel::from_parts(prepared.vocab, keys, probs),
        log_likelihoods: history,
        iterations,
        converged,
        skipped: prepared.skipped,
    })
}
