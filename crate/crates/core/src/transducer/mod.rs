//! Weighted transducer compiled from a joint n-gram model, and N-best
//! decoding of word sequences through it.
//!
//! Costs are negative natural logs in the tropical semiring. Label 0 is
//! epsilon; label 1 is the passthrough class, which on input matches any word
//! and on output copies the matched word.

mod build;
mod decode;
mod io;

use std::collections::HashMap;

use thiserror::Error;

use crate::corpus::{Token, EPSILON, UNKNOWN};

pub use build::build_transducer;
pub use decode::{
    apply_corpus, nbest_decode, nbest_paths, ApplyOutcome, Candidate, DecodeResult, DecodedPath,
};
pub use io::{
    load_decode_results, load_transducer, read_decode_results, read_transducer, write_decode_results,
    write_transducer, MAGIC,
};

pub const EPS_LABEL: u32 = 0;
pub const UNK_LABEL: u32 = 1;

pub const DEFAULT_NBEST: usize = 500;
pub const DEFAULT_PASSTHROUGH_PENALTY: f64 = 8.0;

#[derive(Debug, Error)]
pub enum TransducerError {
    #[error("model has positive log-probability {0} and cannot be compiled")]
    PositiveLogProb(f64),
    #[error("invalid decode configuration: {0}")]
    Config(String),
    #[error("no complete path; matched {matched} of {len} input tokens")]
    NoPath { matched: usize, len: usize },
    #[error("transducer file {origin}: line {line}: {message}")]
    Format {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeConfig {
    /// Distinct output strings the search collects.
    pub nbest: usize,
    /// Cost width around the best complete path; `None` is unbounded.
    pub beam: Option<f64>,
    /// Cost of the identity copy of one word; `None` disables passthrough.
    pub passthrough_penalty: Option<f64>,
    pub output_top_k: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            nbest: DEFAULT_NBEST,
            beam: None,
            passthrough_penalty: Some(DEFAULT_PASSTHROUGH_PENALTY),
            output_top_k: 1,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<(), TransducerError> {
        if self.nbest == 0 || self.output_top_k == 0 {
            return Err(TransducerError::Config("nbest and output_top_k must be positive".into()));
        }
        if self.output_top_k > self.nbest {
            return Err(TransducerError::Config(format!(
                "output_top_k {} exceeds nbest {}",
                self.output_top_k, self.nbest
            )));
        }
        if let Some(b) = self.beam {
            if !(b > 0.0) {
                return Err(TransducerError::Config("beam must be positive".into()));
            }
        }
        if let Some(p) = self.passthrough_penalty {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(TransducerError::Config("passthrough penalty must be non-negative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub ilabel: u32,
    pub olabel: u32,
    pub cost: f64,
    pub next: u32,
}

/// Label alphabet with `<eps>` and `<unk>` at ids 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl Default for LabelTable {
    fn default() -> Self {
        LabelTable::new()
    }
}

impl LabelTable {
    pub fn new() -> Self {
        let mut t = LabelTable {
            labels: Vec::new(),
            index: HashMap::new(),
        };
        t.push(EPSILON);
        t.push(UNKNOWN);
        t
    }

    fn push(&mut self, label: &str) -> u32 {
        let id = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn intern(&mut self, label: &str) -> u32 {
        match self.index.get(label) {
            Some(&id) => id,
            None => self.push(label),
        }
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }
}

/// A weighted transducer from hypothesis words to reference words.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingTransducer {
    pub(crate) order: usize,
    pub(crate) input_labels: LabelTable,
    pub(crate) output_labels: LabelTable,
    /// Outgoing arcs per state, sorted by input label.
    pub(crate) states: Vec<Vec<Arc>>,
    /// Final cost per state; infinite when the state is not final.
    pub(crate) finals: Vec<f64>,
    pub(crate) start: u32,
}

impl MappingTransducer {
    /// Assembles a transducer from raw parts; arcs are sorted by input label.
    pub fn from_parts(
        order: usize,
        input_labels: LabelTable,
        output_labels: LabelTable,
        mut states: Vec<Vec<Arc>>,
        finals: Vec<f64>,
        start: u32,
    ) -> Self {
        assert_eq!(states.len(), finals.len());
        assert!((start as usize) < states.len());
        for arcs in &mut states {
            arcs.sort_by_key(|a| a.ilabel);
        }
        MappingTransducer {
            order,
            input_labels,
            output_labels,
            states,
            finals,
            start,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.states.iter().map(Vec::len).sum()
    }

    pub fn arcs(&self, state: u32) -> &[Arc] {
        &self.states[state as usize]
    }

    pub fn final_cost(&self, state: u32) -> Option<f64> {
        let c = self.finals[state as usize];
        c.is_finite().then_some(c)
    }

    pub fn input_labels(&self) -> &LabelTable {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &LabelTable {
        &self.output_labels
    }

    pub(crate) fn input_label_of(&self, token: &Token) -> Option<u32> {
        self.input_labels.get(token.as_str())
    }

    /// Arcs of `state` whose input label is `label`.
    pub(crate) fn arcs_with_input(&self, state: u32, label: u32) -> &[Arc] {
        let arcs = &self.states[state as usize];
        let lo = arcs.partition_point(|a| a.ilabel < label);
        let hi = arcs.partition_point(|a| a.ilabel <= label);
        &arcs[lo..hi]
    }
}
