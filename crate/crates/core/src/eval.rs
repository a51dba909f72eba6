//! Word error rate with a substitution/deletion/insertion breakdown, and
//! normalized WER against a fixed reference value.

use std::collections::{HashMap, HashSet};
use std::io::{self, Write};
use std::ops::AddAssign;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Token, Utterance};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("reference side has no words")]
    NoReferenceWords,
    #[error("reference WER must be positive, got {0}")]
    ReferenceWer(f64),
    #[error("baseline NWER must be positive, got {0}")]
    Baseline(f64),
    #[error("{count} utterance ids lack a counterpart, e.g. {}", .first.join(", "))]
    Mismatch { count: usize, first: Vec<String> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EditOps {
    pub matches: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl EditOps {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    pub fn reference_len(&self) -> usize {
        self.matches + self.substitutions + self.deletions
    }

    pub fn hypothesis_len(&self) -> usize {
        self.matches + self.substitutions + self.insertions
    }

    /// Ordering among alignments: fewer errors, then more matches, then
    /// fewer substitutions.
    fn rank(&self) -> (usize, std::cmp::Reverse<usize>, usize) {
        (self.errors(), std::cmp::Reverse(self.matches), self.substitutions)
    }
}

impl AddAssign for EditOps {
    fn add_assign(&mut self, o: EditOps) {
        self.matches += o.matches;
        self.substitutions += o.substitutions;
        self.deletions += o.deletions;
        self.insertions += o.insertions;
    }
}

/// Levenshtein alignment with unit costs. Among minimal alignments the one
/// with more matches, then fewer substitutions, is reported.
pub fn align_edit_distance(hyp: &[Token], reference: &[Token]) -> EditOps {
    let n = reference.len();
    // row over reference prefix lengths
    let mut prev: Vec<EditOps> = (0..=n)
        .map(|j| EditOps {
            deletions: j,
            ..EditOps::default()
        })
        .collect();
    let mut cur = prev.clone();
    for (i, h) in hyp.iter().enumerate() {
        cur[0] = EditOps {
            insertions: i + 1,
            ..EditOps::default()
        };
        for j in 1..=n {
            let mut diag = prev[j - 1];
            if *h == reference[j - 1] {
                diag.matches += 1;
            } else {
                diag.substitutions += 1;
            }
            let mut ins = prev[j];
            ins.insertions += 1;
            let mut del = cur[j - 1];
            del.deletions += 1;
            cur[j] = [diag, ins, del].into_iter().min_by_key(EditOps::rank).unwrap();
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n]
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceScore {
    pub id: String,
    pub ops: EditOps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WerReport {
    pub ops: EditOps,
    pub reference_words: usize,
    pub wer: f64,
    pub nwer: Option<f64>,
    pub utterances: Vec<UtteranceScore>,
}

impl WerReport {
    pub fn with_reference_wer(mut self, reference_wer: f64) -> Result<Self, EvalError> {
        self.nwer = Some(nwer(self.wer, reference_wer)?);
        Ok(self)
    }
}

/// Corpus WER from `(id, hypothesis, reference)` triples: errors summed over
/// the corpus divided by the summed reference length.
pub fn corpus_wer<'a, I>(pairs: I) -> Result<WerReport, EvalError>
where
    I: IntoIterator<Item = (&'a str, &'a [Token], &'a [Token])>,
{
    let mut total = EditOps::default();
    let utterances: Vec<UtteranceScore> = pairs
        .into_iter()
        .map(|(id, hyp, reference)| {
            let ops = align_edit_distance(hyp, reference);
            total += ops;
            UtteranceScore { id: id.to_string(), ops }
        })
        .collect();
    let reference_words = total.reference_len();
    if reference_words == 0 {
        return Err(EvalError::NoReferenceWords);
    }
    Ok(WerReport {
        ops: total,
        reference_words,
        wer: total.errors() as f64 / reference_words as f64,
        nwer: None,
        utterances,
    })
}

/// Scores hypotheses against references matched by id, in reference order.
/// Every id must appear on both sides.
pub fn score_transcripts(hyps: &[Utterance], refs: &[Utterance]) -> Result<WerReport, EvalError> {
    let by_id: HashMap<&str, &Utterance> = hyps.iter().map(|u| (u.id.as_str(), u)).collect();
    let ref_ids: HashSet<&str> = refs.iter().map(|u| u.id.as_str()).collect();
    let mut missing: Vec<String> = refs
        .iter()
        .filter(|r| !by_id.contains_key(r.id.as_str()))
        .map(|r| r.id.clone())
        .collect();
    missing.extend(
        hyps.iter()
            .filter(|h| !ref_ids.contains(h.id.as_str()))
            .map(|h| h.id.clone()),
    );
    if !missing.is_empty() {
        let count = missing.len();
        missing.truncate(10);
        return Err(EvalError::Mismatch { count, first: missing });
    }
    corpus_wer(
        refs.iter()
            .map(|r| (r.id.as_str(), by_id[r.id.as_str()].tokens.as_slice(), r.tokens.as_slice())),
    )
}

pub fn nwer(wer: f64, reference_wer: f64) -> Result<f64, EvalError> {
    if !(reference_wer > 0.0) {
        return Err(EvalError::ReferenceWer(reference_wer));
    }
    Ok(wer / reference_wer)
}

/// Relative reduction from `baseline` to `system`, in percent.
pub fn relative_reduction(baseline: f64, system: f64) -> Result<f64, EvalError> {
    if !(baseline > 0.0) {
        return Err(EvalError::Baseline(baseline));
    }
    Ok(100.0 * (baseline - system) / baseline)
}

/// Orders systems by NWER, best (lowest) first.
pub fn compare_nwer(a: f64, b: f64) -> std::cmp::Ordering {
    a.total_cmp(&b)
}

/// Per-utterance rows followed by a TOTAL row.
pub fn write_report_tsv<W: Write>(mut out: W, report: &WerReport) -> io::Result<()> {
    writeln!(out, "id\tsub\tdel\tins\tref_words\twer")?;
    let row = |out: &mut W, id: &str, ops: &EditOps| -> io::Result<()> {
        let n = ops.reference_len();
        let wer = if n == 0 {
            "nan".to_string()
        } else {
            format!("{:.6}", ops.errors() as f64 / n as f64)
        };
        writeln!(
            out,
            "{id}\t{}\t{}\t{}\t{n}\t{wer}",
            ops.substitutions, ops.deletions, ops.insertions
        )
    };
    for u in &report.utterances {
        row(&mut out, &u.id, &u.ops)?;
    }
    row(&mut out, "TOTAL", &report.ops)
}

#[derive(Serialize)]
struct Summary {
    sub: usize,
    del: usize,
    ins: usize,
    ref_words: usize,
    wer: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nwer: Option<f64>,
}

pub fn report_json(report: &WerReport) -> String {
    serde_json::to_string_pretty(&Summary {
        sub: report.ops.substitutions,
        del: report.ops.deletions,
        ins: report.ops.insertions,
        ref_words: report.reference_words,
        wer: report.wer,
        nwer: report.nwer,
    })
    .expect("summary serializes")
}
