//! Noisy-channel generator for synthetic paired and N-best corpora.
//!
//! Clean reference utterances are corrupted by an ordered list of
//! phrase-replacement rules plus independent word deletions. The random
//! stream of utterance `i` is ChaCha8 seeded with the model seed and set to
//! stream `i`, so output depends only on the seed and the input.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{NBestEntry, NBestList, Token, Utterance, UtterancePair, EPSILON};

/// The shipped rule set in the rule file format.
pub const DEFAULT_RULES: &str = include_str!("../data/rules.tsv");

pub const DEFAULT_DELETION_PROB: f64 = 0.05;
pub const DEFAULT_NBEST_SIZE: usize = 25;
pub const DEFAULT_TEMPERATURE: f64 = 0.5;

/// Extra corruption draws per requested alternative before giving up on
/// finding more distinct variants.
const DRAWS_PER_ALTERNATIVE: usize = 4;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("invalid corruption model: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionRule {
    pub pattern: Vec<Token>,
    pub replacement: Vec<Token>,
    pub probability: f64,
}

impl CorruptionRule {
    pub fn new(pattern: Vec<Token>, replacement: Vec<Token>, probability: f64) -> Result<Self, SynthError> {
        if pattern.is_empty() || pattern.len() > 3 || replacement.len() > 3 {
            return Err(SynthError::Config(
                "rules match 1 to 3 words and emit at most 3".into(),
            ));
        }
        if !(probability > 0.0 && probability <= 1.0) {
            return Err(SynthError::Config(format!(
                "rule probability {probability} outside (0, 1]"
            )));
        }
        Ok(CorruptionRule {
            pattern,
            replacement,
            probability,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionModel {
    pub rules: Vec<CorruptionRule>,
    pub word_deletion_prob: f64,
    pub seed: u64,
}

impl CorruptionModel {
    pub fn new(rules: Vec<CorruptionRule>, word_deletion_prob: f64, seed: u64) -> Result<Self, SynthError> {
        if !(0.0..1.0).contains(&word_deletion_prob) {
            return Err(SynthError::Config(format!(
                "word deletion probability {word_deletion_prob} outside [0, 1)"
            )));
        }
        Ok(CorruptionModel {
            rules,
            word_deletion_prob,
            seed,
        })
    }

    /// Rule index matching at `pos`: longest pattern first, then list order.
    fn rule_at(&self, reference: &[Token], pos: usize) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, r) in self.rules.iter().enumerate() {
            let fits = reference[pos..].starts_with(&r.pattern);
            if fits && best.is_none_or(|b| r.pattern.len() > self.rules[b].pattern.len()) {
                best = Some(i);
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub nbest_size: usize,
    /// Spread of the per-draw probability perturbation used for ranks 2 and up.
    pub alternative_temperature: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            nbest_size: DEFAULT_NBEST_SIZE,
            alternative_temperature: DEFAULT_TEMPERATURE,
        }
    }
}

pub fn read_rules<R: BufRead>(reader: R, origin: &str) -> Result<Vec<CorruptionRule>, SynthError> {
    let mut rules = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SynthError::Io(origin.to_string(), e))?;
        let err = |message: String| SynthError::Parse {
            origin: origin.to_string(),
            line: i + 1,
            message,
        };
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(err(format!("expected 3 columns, found {}", cols.len())));
        }
        let words = |s: &str| -> Result<Vec<Token>, SynthError> {
            if s == EPSILON {
                return Ok(Vec::new());
            }
            s.split_whitespace()
                .map(Token::new)
                .collect::<Result<_, _>>()
                .map_err(|e| err(e.to_string()))
        };
        let probability: f64 = cols[2]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad probability `{}`", cols[2])))?;
        let rule = CorruptionRule::new(words(cols[0])?, words(cols[1])?, probability)
            .map_err(|e| err(e.to_string()))?;
        rules.push(rule);
    }
    Ok(rules)
}

pub fn load_rules(path: &Path) -> Result<Vec<CorruptionRule>, SynthError> {
    let origin = path.display().to_string();
    let file = File::open(path).map_err(|e| SynthError::Io(origin.clone(), e))?;
    read_rules(BufReader::new(file), &origin)
}

pub fn default_rules() -> Vec<CorruptionRule> {
    read_rules(DEFAULT_RULES.as_bytes(), "rules.tsv").expect("shipped rules parse")
}

fn corrupt_with(
    reference: &[Token],
    model: &CorruptionModel,
    probs: &[f64],
    deletion: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Token> {
    let mut out = Vec::with_capacity(reference.len() + 2);
    let mut pos = 0;
    while pos < reference.len() {
        if let Some(r) = model.rule_at(reference, pos) {
            let rule = &model.rules[r];
            let span = rule.pattern.len();
            if rng.gen::<f64>() < probs[r] {
                out.extend(rule.replacement.iter().cloned());
            } else {
                for t in &reference[pos..pos + span] {
                    if rng.gen::<f64>() >= deletion {
                        out.push(t.clone());
                    }
                }
            }
            pos += span;
        } else {
            if rng.gen::<f64>() >= deletion {
                out.push(reference[pos].clone());
            }
            pos += 1;
        }
    }
    out
}

/// One corruption draw of `reference` from `stream`.
pub fn corrupt_utterance(reference: &[Token], model: &CorruptionModel, stream: &mut ChaCha8Rng) -> Vec<Token> {
    let probs: Vec<f64> = model.rules.iter().map(|r| r.probability).collect();
    corrupt_with(reference, model, &probs, model.word_deletion_prob, stream)
}

/// Random stream used for the utterance at `index`.
pub fn utterance_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Paired corpus of rank-1 hypotheses and N-best lists whose later ranks
/// come from draws with randomly rescaled probabilities. Lists hold distinct
/// hypotheses; scores are `rank / 10`.
pub fn generate_corpus(
    refs: &[Utterance],
    model: &CorruptionModel,
    cfg: &SynthConfig,
) -> Result<(Vec<UtterancePair>, Vec<NBestList>), SynthError> {
    if cfg.nbest_size == 0 {
        return Err(SynthError::Config("nbest size must be positive".into()));
    }
    if !(cfg.alternative_temperature >= 0.0) {
        return Err(SynthError::Config("temperature must be non-negative".into()));
    }
    let mut pairs = Vec::with_capacity(refs.len());
    let mut lists = Vec::with_capacity(refs.len());
    for (index, r) in refs.iter().enumerate() {
        let mut rng = utterance_stream(model.seed, index as u64);
        let first = corrupt_utterance(&r.tokens, model, &mut rng);
        let mut seen: HashSet<Vec<Token>> = HashSet::new();
        seen.insert(first.clone());
        let mut hyps = vec![first.clone()];
        let mut draws = 0;
        while hyps.len() < cfg.nbest_size && draws < cfg.nbest_size * DRAWS_PER_ALTERNATIVE {
            draws += 1;
            let t = cfg.alternative_temperature;
            let mut scale = || (t * rng.gen_range(-1.0..=1.0f64)).exp();
            let probs: Vec<f64> = model
                .rules
                .iter()
                .map(|rule| (rule.probability * scale()).min(1.0))
                .collect();
            let deletion = (model.word_deletion_prob * scale()).min(0.99);
            let hyp = corrupt_with(&r.tokens, model, &probs, deletion, &mut rng);
            if seen.insert(hyp.clone()) {
                hyps.push(hyp);
            }
        }
        pairs.push(UtterancePair::new(r.id.clone(), first, r.tokens.clone()));
        lists.push(NBestList {
            id: r.id.clone(),
            entries: hyps
                .into_iter()
                .enumerate()
                .map(|(i, tokens)| NBestEntry {
                    rank: i + 1,
                    score: (i + 1) as f64 / 10.0,
                    tokens,
                })
                .collect(),
        });
    }
    Ok((pairs, lists))
}

const FILLER: &[&str] = &[
    "il", "lo", "la", "un", "una", "di", "da", "in", "con", "su", "per", "tra", "e", "ma", "non",
    "io", "tu", "lui", "lei", "noi", "voi", "loro", "questo", "quello", "casa", "tempo", "giorno",
    "notte", "anno", "mondo", "vita", "amico", "amica", "città", "strada", "lavoro", "scuola",
    "acqua", "pane", "vino", "caffè", "libro", "film", "canzone", "radio", "telefono", "messaggio",
    "voglio", "vorrei", "posso", "puoi", "fammi", "dimmi", "metti", "apri", "chiudi", "cerca",
    "leggi", "ascolta", "guarda", "trova", "imposta", "ricorda", "mostra", "cucina", "piove",
    "caldo", "freddo", "presto", "tardi", "subito", "ancora", "sempre", "mai", "molto", "poco",
    "più", "meno", "grande", "piccolo", "bello", "nuovo", "vecchio", "primo", "ultimo", "alto",
];

/// Synthetic clean Italian utterances in which rule patterns are frequent.
/// Each slot holds a rule pattern with probability `rule_share`, otherwise a
/// filler word.
pub fn generate_references(
    count: usize,
    rules: &[CorruptionRule],
    rule_share: f64,
    seed: u64,
) -> Vec<Utterance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let slots = rng.gen_range(3..=7);
            let mut tokens = Vec::new();
            for _ in 0..slots {
                if !rules.is_empty() && rng.gen::<f64>() < rule_share {
                    let r = &rules[rng.gen_range(0..rules.len())];
                    tokens.extend(r.pattern.iter().cloned());
                } else {
                    let w = FILLER[rng.gen_range(0..FILLER.len())];
                    tokens.push(Token::new(w).expect("filler words are tokens"));
                }
            }
            Utterance {
                id: format!("utt{i:05}"),
                tokens,
            }
        })
        .collect()
}
