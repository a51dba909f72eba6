//! Joint n-gram language model over pair symbols with interpolated modified
//! Kneser-Ney smoothing.

mod counts;
mod discount;
mod estimate;
mod io;
mod model;

use std::collections::HashMap;

use smallvec::SmallVec;
use thiserror::Error;

use crate::alignment::PairSymbol;
use crate::corpus::{SENTENCE_END, SENTENCE_START};

pub use counts::{count_ngrams, NGramCounts};
pub use discount::{estimate_discounts, Discounts, LevelDiscounts};
pub use estimate::estimate_modified_kneser_ney;
pub use io::{load_model, read_model, write_model};
pub use model::{perplexity, sequence_logprob, JointNGramModel, OOV_LOG_PROB};

pub const DEFAULT_ORDER: usize = 5;
pub const MAX_ORDER: usize = 9;

pub(crate) const BOS: u32 = 0;
pub(crate) const EOS: u32 = 1;

pub(crate) type NGramKey = SmallVec<[u32; 6]>;

#[derive(Debug, Error)]
pub enum NGramError {
    #[error("n-gram order must be between 1 and {MAX_ORDER}, got {0}")]
    Order(usize),
    #[error("cannot estimate a model from empty counts")]
    Empty,
    #[error("estimation produced log-probability {value} for `{ngram}`")]
    Estimation { ngram: String, value: f64 },
    #[error("model file: {0}")]
    Format(String),
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

/// Joint symbols indexed by id; ids 0 and 1 are the sentence boundaries.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    symbols: Vec<Option<PairSymbol>>,
    index: HashMap<PairSymbol, u32>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        SymbolTable::new()
    }
}

impl SymbolTable {
    pub fn new() -> Self {
        SymbolTable {
            symbols: vec![None, None],
            index: HashMap::new(),
        }
    }

    pub fn intern(&mut self, sym: &PairSymbol) -> u32 {
        if let Some(&id) = self.index.get(sym) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(Some(sym.clone()));
        self.index.insert(sym.clone(), id);
        id
    }

    pub(crate) fn intern_rendered(&mut self, text: &str) -> Result<u32, NGramError> {
        match text {
            SENTENCE_START => Ok(BOS),
            SENTENCE_END => Ok(EOS),
            _ => PairSymbol::parse(text)
                .map(|s| self.intern(&s))
                .map_err(|e| NGramError::Format(e.to_string())),
        }
    }

    pub(crate) fn id_of_rendered(&self, text: &str) -> Option<u32> {
        match text {
            SENTENCE_START => Some(BOS),
            SENTENCE_END => Some(EOS),
            _ => self.get(&PairSymbol::parse(text).ok()?),
        }
    }

    pub fn get(&self, sym: &PairSymbol) -> Option<u32> {
        self.index.get(sym).copied()
    }

    /// The pair symbol behind `id`, or `None` for the sentence boundaries.
    pub fn symbol(&self, id: u32) -> Option<&PairSymbol> {
        self.symbols[id as usize].as_ref()
    }

    pub fn render(&self, id: u32) -> String {
        match id {
            BOS => SENTENCE_START.to_string(),
            EOS => SENTENCE_END.to_string(),
            _ => self.symbols[id as usize].as_ref().unwrap().to_string(),
        }
    }

    /// Number of ids including both sentence boundaries.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.len() == 2
    }

    /// Ids of the pair symbols (excluding boundaries).
    pub fn pair_ids(&self) -> impl Iterator<Item = u32> {
        2..self.symbols.len() as u32
    }
}
