//! Paired text corpora, N-best hypothesis lists and their TSV formats.
//!
//! Three line-oriented formats are supported, all UTF-8 with LF endings and
//! no header:
//!
//! * paired: `id<TAB>hypothesis<TAB>reference`
//! * N-best: `id<TAB>rank<TAB>score<TAB>hypothesis`
//! * transcript: `id<TAB>text`

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Symbols with a fixed meaning inside models and transducers.
pub const EPSILON: &str = "<eps>";
pub const SENTENCE_START: &str = "<s>";
pub const SENTENCE_END: &str = "</s>";
pub const UNKNOWN: &str = "<unk>";

pub const RESERVED: [&str; 4] = [EPSILON, SENTENCE_START, SENTENCE_END, UNKNOWN];

const STRIPPED_PUNCTUATION: [char; 9] = ['.', ',', '!', '?', ';', ':', '"', '(', ')'];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid token `{0}`: reserved symbols cannot appear in text")]
    ReservedToken(String),
    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{origin}:{line}: duplicate id `{id}`")]
    DuplicateId {
        origin: String,
        line: usize,
        id: String,
    },
    #[error("no reference transcription for id `{0}`")]
    MissingReference(String),
    #[error("N-best expansion size must be at least 1")]
    ZeroNBest,
    #[error("{0}: {1}")]
    Io(String, #[source] io::Error),
}

/// A single normalized word.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, CorpusError> {
        let text = text.into();
        if RESERVED.contains(&text.as_str()) {
            return Err(CorpusError::ReservedToken(text));
        }
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(CorpusError::InvalidToken(text));
        }
        Ok(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Lowercases, NFC-normalizes, strips `. , ! ? ; : " ( )` and splits on
/// whitespace. Hyphens and apostrophes stay inside tokens.
pub fn normalize_text(raw: &str) -> Result<Vec<Token>, CorpusError> {
    let lowered: String = raw.nfc().collect::<String>().to_lowercase();
    let cleaned: String = lowered
        .nfc()
        .filter(|c| !STRIPPED_PUNCTUATION.contains(c))
        .collect();
    cleaned.split_whitespace().map(Token::new).collect()
}

pub fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_str());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub tokens: Vec<Token>,
}

/// One hypothesis/reference training or evaluation unit.
#[derive(Debug, Clone, PartialEq)]
pub struct UtterancePair {
    pub id: String,
    pub hypothesis: Vec<Token>,
    pub reference: Vec<Token>,
    pub weight: f64,
}

impl UtterancePair {
    pub fn new(id: impl Into<String>, hypothesis: Vec<Token>, reference: Vec<Token>) -> Self {
        UtterancePair {
            id: id.into(),
            hypothesis,
            reference,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NBestEntry {
    pub rank: usize,
    pub score: f64,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NBestList {
    pub id: String,
    pub entries: Vec<NBestEntry>,
}

/// How the hypotheses of one N-best list share the unit weight of their utterance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NBestWeighting {
    #[default]
    Uniform,
    /// Rank r receives weight proportional to `decay^(r-1)`.
    RankDecay(f64),
}

fn parse_error(origin: &str, line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        origin: origin.to_string(),
        line,
        message: message.into(),
    }
}

fn normalize_field(origin: &str, line: usize, field: &str) -> Result<Vec<Token>, CorpusError> {
    normalize_text(field).map_err(|e| parse_error(origin, line, e.to_string()))
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CorpusError::Io(path.display().to_string(), e))
}

fn read_lines<'a, R: BufRead + 'a>(
    reader: R,
    origin: &'a str,
) -> impl Iterator<Item = Result<(usize, String), CorpusError>> + 'a {
    reader.lines().enumerate().map(move |(i, line)| {
        line.map(|l| (i + 1, l))
            .map_err(|e| CorpusError::Io(origin.to_string(), e))
    })
}

fn check_id(origin: &str, line: usize, id: &str, seen: &mut HashSet<String>) -> Result<(), CorpusError> {
    if id.is_empty() {
        return Err(parse_error(origin, line, "empty id"));
    }
    if !seen.insert(id.to_string()) {
        return Err(CorpusError::DuplicateId {
            origin: origin.to_string(),
            line,
            id: id.to_string(),
        });
    }
    Ok(())
}

pub fn read_paired_corpus<R: BufRead>(
    reader: R,
    origin: &str,
) -> Result<Vec<UtterancePair>, CorpusError> {
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    for item in read_lines(reader, origin) {
        let (line_no, line) = item?;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(parse_error(
                origin,
                line_no,
                format!("expected 3 tab-separated columns, found {}", cols.len()),
            ));
        }
        check_id(origin, line_no, cols[0], &mut seen)?;
        let hypothesis = normalize_field(origin, line_no, cols[1])?;
        let reference = normalize_field(origin, line_no, cols[2])?;
        if reference.is_empty() {
            return Err(parse_error(origin, line_no, "empty reference"));
        }
        pairs.push(UtterancePair::new(cols[0], hypothesis, reference));
    }
    Ok(pairs)
}

pub fn load_paired_corpus(path: &Path) -> Result<Vec<UtterancePair>, CorpusError> {
    read_paired_corpus(open(path)?, &path.display().to_string())
}

pub fn read_nbest_corpus<R: BufRead>(reader: R, origin: &str) -> Result<Vec<NBestList>, CorpusError> {
    let mut lists: Vec<NBestList> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for item in read_lines(reader, origin) {
        let (line_no, line) = item?;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(parse_error(
                origin,
                line_no,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let id = cols[0];
        if id.is_empty() {
            return Err(parse_error(origin, line_no, "empty id"));
        }
        let rank: usize = cols[1]
            .parse()
            .map_err(|_| parse_error(origin, line_no, format!("bad rank `{}`", cols[1])))?;
        let score: f64 = cols[2]
            .parse()
            .map_err(|_| parse_error(origin, line_no, format!("bad score `{}`", cols[2])))?;
        if !score.is_finite() {
            return Err(parse_error(origin, line_no, "score must be finite"));
        }
        let tokens = normalize_field(origin, line_no, cols[3])?;
        let slot = *index.entry(id.to_string()).or_insert_with(|| {
            lists.push(NBestList {
                id: id.to_string(),
                entries: Vec::new(),
            });
            lists.len() - 1
        });
        let list = &mut lists[slot];
        let expected = list.entries.len() + 1;
        if rank != expected {
            return Err(parse_error(
                origin,
                line_no,
                format!("id `{id}`: expected rank {expected}, found {rank}"),
            ));
        }
        list.entries.push(NBestEntry { rank, score, tokens });
    }
    Ok(lists)
}

pub fn load_nbest_corpus(path: &Path) -> Result<Vec<NBestList>, CorpusError> {
    read_nbest_corpus(open(path)?, &path.display().to_string())
}

pub fn read_transcripts<R: BufRead>(reader: R, origin: &str) -> Result<Vec<Utterance>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for item in read_lines(reader, origin) {
        let (line_no, line) = item?;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(parse_error(
                origin,
                line_no,
                format!("expected 2 tab-separated columns, found {}", cols.len()),
            ));
        }
        check_id(origin, line_no, cols[0], &mut seen)?;
        out.push(Utterance {
            id: cols[0].to_string(),
            tokens: normalize_field(origin, line_no, cols[1])?,
        });
    }
    Ok(out)
}

pub fn load_transcripts(path: &Path) -> Result<Vec<Utterance>, CorpusError> {
    read_transcripts(open(path)?, &path.display().to_string())
}

pub fn write_corpus<W: Write>(mut out: W, pairs: &[UtterancePair]) -> io::Result<()> {
    for p in pairs {
        writeln!(
            out,
            "{}\t{}\t{}",
            p.id,
            join_tokens(&p.hypothesis),
            join_tokens(&p.reference)
        )?;
    }
    Ok(())
}

pub fn write_nbest<W: Write>(mut out: W, lists: &[NBestList]) -> io::Result<()> {
    for list in lists {
        for e in &list.entries {
            writeln!(out, "{}\t{}\t{}\t{}", list.id, e.rank, e.score, join_tokens(&e.tokens))?;
        }
    }
    Ok(())
}

pub fn write_transcripts<W: Write>(mut out: W, utterances: &[Utterance]) -> io::Result<()> {
    for u in utterances {
        writeln!(out, "{}\t{}", u.id, join_tokens(&u.tokens))?;
    }
    Ok(())
}

/// Pairs the top `n` hypotheses of every list with its reference. Each
/// utterance contributes a total weight of one, split by `weighting`.
pub fn expand_nbest_to_pairs(
    lists: &[NBestList],
    refs: &HashMap<String, Vec<Token>>,
    n: usize,
    weighting: NBestWeighting,
) -> Result<Vec<UtterancePair>, CorpusError> {
    if n == 0 {
        return Err(CorpusError::ZeroNBest);
    }
    let mut pairs = Vec::new();
    for list in lists {
        let reference = refs
            .get(&list.id)
            .ok_or_else(|| CorpusError::MissingReference(list.id.clone()))?;
        let take = n.min(list.entries.len());
        let raw: Vec<f64> = match weighting {
            NBestWeighting::Uniform => vec![1.0; take],
            NBestWeighting::RankDecay(decay) => (0..take).map(|r| decay.powi(r as i32)).collect(),
        };
        let total: f64 = raw.iter().sum();
        for (entry, w) in list.entries.iter().take(take).zip(raw) {
            pairs.push(UtterancePair {
                id: format!("{}#{}", list.id, entry.rank),
                hypothesis: entry.tokens.clone(),
                reference: reference.clone(),
                weight: w / total,
            });
        }
    }
    Ok(pairs)
}

/// Reference map keyed by utterance id.
pub fn reference_map(utterances: &[Utterance]) -> HashMap<String, Vec<Token>> {
    utterances
        .iter()
        .map(|u| (u.id.clone(), u.tokens.clone()))
        .collect()
}
