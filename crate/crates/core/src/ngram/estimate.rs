use std::collections::HashMap;

use super::discount::{adjusted_counts, sorted_entries};
use super::{Discounts, JointNGramModel, NGramCounts, NGramError, NGramKey};

/// Rounding slack tolerated before a probability above one is an error.
const LOG_SLACK: f64 = 1e-12;

struct ContextStats {
    total: f64,
    discounted: f64,
}

/// Interpolated modified Kneser-Ney estimate, stored in backoff form: each
/// explicit entry holds the interpolated probability, and each context holds
/// the weight its lower-order distribution is scaled by.
pub fn estimate_modified_kneser_ney(
    counts: &NGramCounts,
    discounts: &Discounts,
) -> Result<JointNGramModel, NGramError> {
    let order = counts.order;
    if order == 0 || order > super::MAX_ORDER {
        return Err(NGramError::Order(order));
    }
    if counts.levels[0].is_empty() {
        return Err(NGramError::Empty);
    }
    if discounts.levels.len() != order {
        return Err(NGramError::Format(format!(
            "{} discount levels for an order-{order} model",
            discounts.levels.len()
        )));
    }
    let adjusted = adjusted_counts(counts);
    let mut model = JointNGramModel {
        order,
        symbols: counts.symbols.clone(),
        probs: Vec::with_capacity(order),
        backoffs: HashMap::new(),
    };
    // every pair symbol plus the sentence end
    let vocab_size = (counts.symbols.len() - 1) as f64;

    for (k, level) in adjusted.iter().enumerate().map(|(i, l)| (i + 1, l)) {
        let level_d = discounts.levels[k - 1];
        let discount = |c: f64| level_d.applied(c);

        let entries = sorted_entries(level);
        let mut stats: HashMap<&[u32], ContextStats> = HashMap::new();
        for &(gram, &c) in &entries {
            let s = stats.entry(&gram[..k - 1]).or_insert(ContextStats {
                total: 0.0,
                discounted: 0.0,
            });
            s.total += c;
            s.discounted += discount(c);
        }

        let mut probs: HashMap<NGramKey, f64> = HashMap::with_capacity(level.len());
        for &(gram, &c) in &entries {
            let ctx = &gram[..k - 1];
            let s = &stats[ctx];
            let gamma = s.discounted / s.total;
            let lower = if k == 1 {
                1.0 / vocab_size
            } else {
                10f64.powf(model.log10_prob(&gram[1..k - 1], gram[k - 1]).unwrap_or(f64::NEG_INFINITY))
            };
            let p = (c - discount(c)) / s.total + gamma * lower;
            let mut lp = p.log10();
            if lp > 0.0 && lp <= LOG_SLACK {
                lp = 0.0;
            }
            if !(lp <= 0.0) || !lp.is_finite() {
                return Err(NGramError::Estimation {
                    ngram: gram
                        .iter()
                        .map(|&id| counts.symbols.render(id))
                        .collect::<Vec<_>>()
                        .join(" "),
                    value: lp,
                });
            }
            probs.insert(gram.clone(), lp);
        }
        if k == 1 {
            // vocabulary members without an adjusted count still receive their
            // share of the uniform mass
            let s = &stats[&[][..]];
            let floor = (s.discounted / s.total / vocab_size).log10();
            for id in std::iter::once(super::EOS).chain(counts.symbols.pair_ids()) {
                probs.entry(NGramKey::from_slice(&[id])).or_insert(floor);
            }
        }
        if k >= 2 {
            for (ctx, s) in &stats {
                model
                    .backoffs
                    .insert(NGramKey::from_slice(ctx), (s.discounted / s.total).log10());
            }
        }
        model.probs.push(probs);
    }
    Ok(model)
}
