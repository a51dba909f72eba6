//! Learned word-level text-to-text mappings for post-processing ASR output.
//!
//! The toolkit aligns ASR hypotheses with reference transcriptions into joint
//! word-pair tokens, estimates a smoothed joint n-gram model over them,
//! compiles that model into a weighted transducer and decodes new hypotheses
//! through it. Evaluation and a synthetic noisy-channel corpus generator round
//! out the pipeline.

pub mod alignment;
pub mod corpus;
pub mod eval;
pub mod ngram;
pub mod pipeline;
pub mod synthgen;
pub mod transducer;
