//! Many-to-many monotone word alignment between ASR hypotheses and their
//! reference transcriptions.
//!
//! Each hypothesis/reference pair is expanded into a lattice whose edges
//! consume up to `max_x` hypothesis words and up to `max_y` reference words.
//! EM over those lattices learns a distribution over [`PairSymbol`]s, and the
//! Viterbi path under that distribution segments each pair into the joint
//! tokens the n-gram model is trained on.

mod em;
mod io;
mod lattice;
mod model;
mod symbol;
mod viterbi;

use thiserror::Error;

pub use em::{em_train, EmReport};
pub use io::{
    load_aligned_corpus, read_aligned_corpus, read_alignment_model, write_aligned_corpus, write_alignment_model,
};
pub use lattice::{build_lattice, edge_posteriors, Lattice, LatticeEdge};
pub use model::{AlignmentModel, TokenVocab};
pub use symbol::PairSymbol;
pub use viterbi::{align_corpus, viterbi_align, AlignedCorpus, UNSEEN_SYMBOL_PROBABILITY};

use crate::corpus::Token;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("a pair symbol needs at least one word on one side")]
    EmptySymbol,
    #[error("malformed pair symbol `{0}`: {1}")]
    BadSymbol(String, String),
    #[error("pair `{0}` has no monotone alignment under the current limits")]
    Unalignable(String),
    #[error("corpus contains no alignable pairs ({0} skipped)")]
    NothingAlignable(usize),
    #[error("invalid alignment configuration: {0}")]
    Config(String),
    #[error("numerical failure during EM: {0}")]
    Numerical(String),
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentConfig {
    pub max_x: usize,
    pub max_y: usize,
    pub allow_source_deletion: bool,
    pub allow_target_insertion: bool,
    pub max_iterations: usize,
    /// Relative corpus log-likelihood improvement below which EM stops.
    pub convergence_epsilon: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig {
            max_x: 3,
            max_y: 3,
            allow_source_deletion: true,
            allow_target_insertion: true,
            max_iterations: 20,
            convergence_epsilon: 1e-6,
        }
    }
}

impl AlignmentConfig {
    pub fn validate(&self) -> Result<(), AlignError> {
        if self.max_x == 0 || self.max_y == 0 {
            return Err(AlignError::Config("max_x and max_y must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(AlignError::Config("max_iterations must be positive".into()));
        }
        if !(self.convergence_epsilon > 0.0) {
            return Err(AlignError::Config("convergence_epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// A pair segmented into joint tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedUtterance {
    pub id: String,
    pub symbols: Vec<PairSymbol>,
    pub weight: f64,
}

impl AlignedUtterance {
    pub fn source(&self) -> Vec<Token> {
        self.symbols.iter().flat_map(|s| s.source.iter().cloned()).collect()
    }

    pub fn target(&self) -> Vec<Token> {
        self.symbols.iter().flat_map(|s| s.target.iter().cloned()).collect()
    }
}
