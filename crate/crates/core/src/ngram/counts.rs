use std::collections::HashMap;

use crate::alignment::AlignedUtterance;

use super::{NGramKey, SymbolTable, BOS, EOS};

/// Weighted n-gram counts for levels `1..=order` over joint symbols.
#[derive(Debug, Clone)]
pub struct NGramCounts {
    pub(crate) order: usize,
    pub(crate) symbols: SymbolTable,
    /// `levels[k - 1]` maps k-grams (context followed by the predicted symbol)
    /// to their weighted count.
    pub(crate) levels: Vec<HashMap<NGramKey, f64>>,
}

impl NGramCounts {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    /// Builds counts from explicit entries, `(rendered symbols, count)`.
    /// Intended for fixtures; symbols are rendered as in the model file.
    pub fn from_entries<'a>(
        order: usize,
        entries: impl IntoIterator<Item = (&'a [&'a str], f64)>,
    ) -> Result<Self, super::NGramError> {
        let mut symbols = SymbolTable::new();
        let mut levels = vec![HashMap::new(); order];
        for (gram, count) in entries {
            if gram.is_empty() || gram.len() > order {
                return Err(super::NGramError::Format(format!(
                    "n-gram of length {} does not fit order {order}",
                    gram.len()
                )));
            }
            let key = gram
                .iter()
                .map(|s| symbols.intern_rendered(s))
                .collect::<Result<NGramKey, _>>()?;
            *levels[key.len() - 1].entry(key).or_insert(0.0) += count;
        }
        Ok(NGramCounts {
            order,
            symbols,
            levels,
        })
    }

    /// Count of the n-gram given by rendered symbols, if present.
    pub fn get(&self, gram: &[&str]) -> Option<f64> {
        let key: Option<NGramKey> = gram.iter().map(|s| self.symbols.id_of_rendered(s)).collect();
        self.levels.get(gram.len().checked_sub(1)?)?.get(&key?).copied()
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All counts as rendered n-grams, sorted, for inspection and tests.
    pub fn rendered(&self) -> Vec<(Vec<String>, f64)> {
        let mut out: Vec<(Vec<String>, f64)> = self
            .levels
            .iter()
            .flat_map(|level| level.iter())
            .map(|(k, &c)| (k.iter().map(|&id| self.symbols.render(id)).collect(), c))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

/// Counts every n-gram of length `1..=order` in each utterance padded with
/// `order - 1` sentence starts and one sentence end, scaled by the utterance
/// weight.
pub fn count_ngrams(aligned: &[AlignedUtterance], order: usize) -> NGramCounts {
    assert!(order >= 1, "n-gram order must be at least 1");
    let mut symbols = SymbolTable::new();
    let mut levels: Vec<HashMap<NGramKey, f64>> = vec![HashMap::new(); order];
    let mut seq: Vec<u32> = Vec::new();
    for utt in aligned {
        seq.clear();
        seq.extend(std::iter::repeat_n(BOS, order - 1));
        seq.extend(utt.symbols.iter().map(|s| symbols.intern(s)));
        seq.push(EOS);
        for p in order - 1..seq.len() {
            for k in 1..=order {
                let key = NGramKey::from_slice(&seq[p + 1 - k..=p]);
                *levels[k - 1].entry(key).or_insert(0.0) += utt.weight;
            }
        }
    }
    NGramCounts {
        order,
        symbols,
        levels,
    }
}
