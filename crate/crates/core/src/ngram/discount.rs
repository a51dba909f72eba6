use std::collections::HashMap;

use log::warn;

use super::{NGramCounts, NGramKey, BOS};

/// Discount used when count-of-counts are too sparse for the closed form.
pub const FALLBACK_DISCOUNT: f64 = 0.5;
/// Discounts never drop below this, so every context keeps some backoff mass.
pub const MIN_DISCOUNT: f64 = 0.01;
const MAX_FRACTION_OF_COUNT: f64 = 0.99;

/// Count-bucketed discounts for one n-gram level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelDiscounts {
    pub d1: f64,
    pub d2: f64,
    pub d3plus: f64,
    /// Set when the level fell back to [`FALLBACK_DISCOUNT`].
    pub fallback: bool,
}

impl LevelDiscounts {
    pub fn uniform(d: f64) -> Self {
        LevelDiscounts {
            d1: d,
            d2: d,
            d3plus: d,
            fallback: false,
        }
    }

    /// Bucket discount for an (adjusted) count; buckets use the rounded count.
    pub fn for_count(&self, count: f64) -> f64 {
        match bucket(count) {
            0 => self.d1,
            1 => self.d2,
            _ => self.d3plus,
        }
    }

    /// Discount actually subtracted from `count`: the bucket value, capped
    /// below the count itself so every seen n-gram keeps positive mass.
    pub fn applied(&self, count: f64) -> f64 {
        self.for_count(count).min(MAX_FRACTION_OF_COUNT * count).max(0.0)
    }
}

/// Bucket index 0, 1, 2 for rounded counts `<= 1`, `2` and `>= 3`.
fn bucket(count: f64) -> usize {
    let r = count.round();
    if r <= 1.0 {
        0
    } else if r == 2.0 {
        1
    } else {
        2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discounts {
    /// `levels[k - 1]` discounts k-grams.
    pub levels: Vec<LevelDiscounts>,
}

impl Discounts {
    pub fn uniform(order: usize, d: f64) -> Self {
        Discounts {
            levels: vec![LevelDiscounts::uniform(d); order],
        }
    }
}

/// Counts that each level discounts: raw counts at the highest order and for
/// n-grams led by `<s>`, continuation counts everywhere else. A left
/// extension contributes `min(1, count)` to the continuation count, which is
/// the usual type count for integer data and keeps a rare fractional
/// hypothesis from weighing as much as a real type.
/// Entries in key order, so floating-point sums over a level do not depend
/// on hash iteration order.
pub(crate) fn sorted_entries(level: &HashMap<NGramKey, f64>) -> Vec<(&NGramKey, &f64)> {
    let mut entries: Vec<_> = level.iter().collect();
    entries.sort_unstable_by(|a, b| a.0.cmp(b.0));
    entries
}

pub(crate) fn adjusted_counts(counts: &NGramCounts) -> Vec<HashMap<NGramKey, f64>> {
    let order = counts.order;
    let mut adjusted: Vec<HashMap<NGramKey, f64>> = Vec::with_capacity(order);
    for k in 1..order {
        let mut level: HashMap<NGramKey, f64> = HashMap::with_capacity(counts.levels[k - 1].len());
        for (gram, &c) in sorted_entries(&counts.levels[k]) {
            let suffix = &gram[1..];
            if suffix[0] != BOS {
                *level.entry(NGramKey::from_slice(suffix)).or_insert(0.0) += c.min(1.0);
            }
        }
        for (gram, &c) in &counts.levels[k - 1] {
            if gram[0] == BOS {
                level.insert(gram.clone(), c);
            }
        }
        adjusted.push(level);
    }
    adjusted.push(counts.levels[order - 1].clone());
    adjusted
}

/// Closed-form modified Kneser-Ney discounts from count-of-counts, per level.
pub(crate) fn discounts_from_adjusted(adjusted: &[HashMap<NGramKey, f64>]) -> Discounts {
    let levels = adjusted
        .iter()
        .enumerate()
        .map(|(k, level)| {
            let mut n = [0usize; 5];
            // smallest rounded count per bucket, never below one; counts
            // smaller than that are capped individually when applied
            let mut min_in_bucket = [f64::INFINITY; 3];
            for &c in level.values() {
                let r = c.round();
                if (1.0..=4.0).contains(&r) {
                    n[r as usize] += 1;
                }
                let b = bucket(c);
                min_in_bucket[b] = min_in_bucket[b].min(r.max(1.0));
            }
            let (mut d, fallback) = if n[1..].contains(&0) {
                warn!(
                    "level {}: sparse count-of-counts {:?}, using discount {FALLBACK_DISCOUNT}",
                    k + 1,
                    &n[1..]
                );
                ([FALLBACK_DISCOUNT; 3], true)
            } else {
                let (n1, n2, n3, n4) = (n[1] as f64, n[2] as f64, n[3] as f64, n[4] as f64);
                let y = n1 / (n1 + 2.0 * n2);
                (
                    [
                        1.0 - 2.0 * y * n2 / n1,
                        2.0 - 3.0 * y * n3 / n2,
                        3.0 - 4.0 * y * n4 / n3,
                    ],
                    false,
                )
            };
            for (b, value) in d.iter_mut().enumerate() {
                if min_in_bucket[b].is_finite() {
                    let hi = MAX_FRACTION_OF_COUNT * min_in_bucket[b];
                    *value = value.max(MIN_DISCOUNT.min(hi)).min(hi);
                } else {
                    *value = value.max(MIN_DISCOUNT);
                }
            }
            LevelDiscounts {
                d1: d[0],
                d2: d[1],
                d3plus: d[2],
                fallback,
            }
        })
        .collect();
    Discounts { levels }
}

pub fn estimate_discounts(counts: &NGramCounts) -> Discounts {
    discounts_from_adjusted(&adjusted_counts(counts))
}
