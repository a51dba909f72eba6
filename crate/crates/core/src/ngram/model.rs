use std::collections::HashMap;

use crate::alignment::{AlignedUtterance, PairSymbol};

use super::{NGramKey, SymbolTable, BOS, EOS};

/// Natural-log probability charged for a symbol outside the vocabulary.
pub const OOV_LOG_PROB: f64 = -20.0;

/// Id standing in for out-of-vocabulary symbols inside a history.
const OOV_ID: u32 = u32::MAX;

/// Backoff-form joint n-gram model. Values are stored as base-10 logs, the
/// same representation the model file uses.
#[derive(Debug, Clone)]
pub struct JointNGramModel {
    pub(crate) order: usize,
    pub(crate) symbols: SymbolTable,
    /// `probs[k - 1]` holds k-grams: context followed by the predicted symbol.
    pub(crate) probs: Vec<HashMap<NGramKey, f64>>,
    pub(crate) backoffs: HashMap<NGramKey, f64>,
}

impl JointNGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &PairSymbol> {
        self.symbols.pair_ids().filter_map(|id| self.symbols.symbol(id))
    }

    /// Number of explicit probabilities across all levels.
    pub fn num_entries(&self) -> usize {
        self.probs.iter().map(HashMap::len).sum()
    }

    /// Explicit k-gram entries for `k` in `1..=order`, as `(ids, log10 p)`.
    pub fn entries(&self, k: usize) -> impl Iterator<Item = (&[u32], f64)> {
        self.probs[k - 1].iter().map(|(g, &p)| (g.as_slice(), p))
    }

    /// Stored non-empty contexts with their log10 backoff weight.
    pub fn backoff_entries(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.backoffs.iter().map(|(c, &b)| (c.as_slice(), b))
    }

    pub fn backoff_log10(&self, context: &[u32]) -> Option<f64> {
        self.backoffs.get(context).copied()
    }

    pub fn explicit_log10(&self, context: &[u32], symbol: u32) -> Option<f64> {
        let k = context.len() + 1;
        if k > self.order {
            return None;
        }
        let mut key = NGramKey::from_slice(context);
        key.push(symbol);
        self.probs[k - 1].get(&key).copied()
    }

    /// log10 p(symbol | context) following backoff chains; `None` when the
    /// symbol has no unigram entry.
    pub fn log10_prob(&self, context: &[u32], symbol: u32) -> Option<f64> {
        let start = context.len().saturating_sub(self.order - 1);
        let mut ctx = &context[start..];
        let mut acc = 0.0;
        loop {
            if let Some(p) = self.explicit_log10(ctx, symbol) {
                return Some(acc + p);
            }
            if ctx.is_empty() {
                return None;
            }
            acc += self.backoff_log10(ctx).unwrap_or(0.0);
            ctx = &ctx[1..];
        }
    }

    /// Natural-log probability with the out-of-vocabulary floor applied.
    pub fn ln_prob(&self, context: &[u32], symbol: u32) -> f64 {
        self.log10_prob(context, symbol)
            .map_or(OOV_LOG_PROB, |lp| lp * std::f64::consts::LN_10)
    }

    fn ids_of_rendered(&self, rendered: &[&str]) -> Option<Vec<u32>> {
        rendered.iter().map(|s| self.symbols.id_of_rendered(s)).collect()
    }

    /// Linear probability for rendered symbols, e.g. `(&["<s>"], "a}a")`.
    pub fn prob_rendered(&self, context: &[&str], symbol: &str) -> Option<f64> {
        let ctx = self.ids_of_rendered(context)?;
        let sym = self.symbols.id_of_rendered(symbol)?;
        self.log10_prob(&ctx, sym).map(|lp| 10f64.powf(lp))
    }

    /// Total probability over every pair symbol and the sentence end.
    pub fn context_mass(&self, context: &[u32]) -> f64 {
        std::iter::once(EOS)
            .chain(self.symbols.pair_ids())
            .map(|w| self.log10_prob(context, w).map_or(0.0, |lp| 10f64.powf(lp)))
            .sum()
    }

    /// Every stored context: the empty one plus each context with a backoff weight.
    pub fn contexts(&self) -> Vec<NGramKey> {
        let mut out: Vec<NGramKey> = vec![NGramKey::new()];
        out.extend(self.backoffs.keys().cloned());
        out.sort();
        out
    }

    pub(crate) fn start_context(&self) -> Vec<u32> {
        vec![BOS; self.order - 1]
    }

    fn symbol_ids(&self, symbols: &[PairSymbol]) -> Vec<u32> {
        symbols
            .iter()
            .map(|s| self.symbols.get(s).unwrap_or(OOV_ID))
            .collect()
    }
}

/// Natural-log probability of a symbol sequence followed by the sentence end,
/// starting from the sentence-start context.
pub fn sequence_logprob(model: &JointNGramModel, symbols: &[PairSymbol]) -> f64 {
    let mut history = model.start_context();
    let mut total = 0.0;
    for id in model.symbol_ids(symbols).into_iter().chain(std::iter::once(EOS)) {
        total += if id == OOV_ID {
            OOV_LOG_PROB
        } else {
            model.ln_prob(&history, id)
        };
        history.push(id);
    }
    total
}

/// Weighted per-symbol perplexity; every utterance also predicts its end.
pub fn perplexity(model: &JointNGramModel, corpus: &[AlignedUtterance]) -> f64 {
    let mut logprob = 0.0;
    let mut events = 0.0;
    for utt in corpus {
        logprob += utt.weight * sequence_logprob(model, &utt.symbols);
        events += utt.weight * (utt.symbols.len() + 1) as f64;
    }
    (-logprob / events).exp()
}
