use std::collections::HashMap;

use smallvec::SmallVec;

use crate::corpus::Token;

use super::PairSymbol;

/// Interned token ids.
#[derive(Debug, Clone, Default)]
pub struct TokenVocab {
    ids: HashMap<Token, u32>,
    tokens: Vec<Token>,
}

impl TokenVocab {
    pub fn intern(&mut self, token: &Token) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.clone());
        self.ids.insert(token.clone(), id);
        id
    }

    pub fn get(&self, token: &Token) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &Token {
        &self.tokens[id as usize]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Compact symbol key: `[source_len, source ids.., target ids..]`.
pub(crate) type SymKey = SmallVec<[u32; 8]>;

pub(crate) fn sym_key(source: &[u32], target: &[u32]) -> SymKey {
    let mut key = SymKey::with_capacity(1 + source.len() + target.len());
    key.push(source.len() as u32);
    key.extend_from_slice(source);
    key.extend_from_slice(target);
    key
}

/// A probability distribution over pair symbols.
#[derive(Debug, Clone, Default)]
pub struct AlignmentModel {
    vocab: TokenVocab,
    index: HashMap<SymKey, u32>,
    keys: Vec<SymKey>,
    probs: Vec<f64>,
}

impl AlignmentModel {
    pub(crate) fn from_parts(vocab: TokenVocab, keys: Vec<SymKey>, probs: Vec<f64>) -> Self {
        let index = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i as u32))
            .collect();
        AlignmentModel {
            vocab,
            index,
            keys,
            probs,
        }
    }

    /// Builds a model from explicit probabilities. Entries are taken as given;
    /// callers are responsible for normalization.
    pub fn from_probabilities(entries: impl IntoIterator<Item = (PairSymbol, f64)>) -> Self {
        let mut vocab = TokenVocab::default();
        let mut keys = Vec::new();
        let mut probs = Vec::new();
        for (sym, p) in entries {
            let src: Vec<u32> = sym.source.iter().map(|t| vocab.intern(t)).collect();
            let tgt: Vec<u32> = sym.target.iter().map(|t| vocab.intern(t)).collect();
            keys.push(sym_key(&src, &tgt));
            probs.push(p);
        }
        AlignmentModel::from_parts(vocab, keys, probs)
    }

    pub(crate) fn vocab(&self) -> &TokenVocab {
        &self.vocab
    }

    pub(crate) fn key_probability(&self, key: &SymKey) -> Option<f64> {
        self.index.get(key).map(|&i| self.probs[i as usize])
    }

    pub fn probability(&self, symbol: &PairSymbol) -> Option<f64> {
        let ids = |side: &[Token]| -> Option<Vec<u32>> {
            side.iter().map(|t| self.vocab.get(t)).collect()
        };
        let key = sym_key(&ids(&symbol.source)?, &ids(&symbol.target)?);
        self.key_probability(&key)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn symbol(&self, key: &SymKey) -> PairSymbol {
        let split = key[0] as usize + 1;
        let side = |ids: &[u32]| ids.iter().map(|&i| self.vocab.token(i).clone()).collect();
        PairSymbol {
            source: side(&key[1..split]),
            target: side(&key[split..]),
        }
    }

    /// All symbols with their probabilities, in training discovery order.
    pub fn iter(&self) -> impl Iterator<Item = (PairSymbol, f64)> + '_ {
        self.keys
            .iter()
            .zip(&self.probs)
            .map(|(k, &p)| (self.symbol(k), p))
    }
}
