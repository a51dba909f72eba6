//! Text serialization of [`MappingTransducer`] and of decoding results.
//!
//! ```text
//! T2TFST1
//! order	3
//! start	1
//! states	4
//! isyms	3
//! <eps>
//! <unk>
//! bonjour
//! osyms	3
//! <eps>
//! <unk>
//! buongiorno
//! 0	0	<unk>	<unk>	8
//! 1	2	bonjour	buongiorno	0.6931471805599453
//! final	0	1.3862943611198906
//! ```
//!
//! Arc lines are `source target input output cost`, written state by state in
//! stored order. Costs use the shortest representation that parses back to
//! the same value.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use crate::corpus::{join_tokens, normalize_text, EPSILON, UNKNOWN};

use super::{Arc, Candidate, DecodeResult, LabelTable, MappingTransducer, TransducerError};

pub const MAGIC: &str = "T2TFST1";

pub fn write_transducer<W: Write>(mut out: W, fst: &MappingTransducer) -> io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "order\t{}", fst.order)?;
    writeln!(out, "start\t{}", fst.start)?;
    writeln!(out, "states\t{}", fst.states.len())?;
    for (name, table) in [("isyms", &fst.input_labels), ("osyms", &fst.output_labels)] {
        writeln!(out, "{name}\t{}", table.len())?;
        for label in table.iter() {
            writeln!(out, "{label}")?;
        }
    }
    for (s, arcs) in fst.states.iter().enumerate() {
        for a in arcs {
            writeln!(
                out,
                "{s}\t{}\t{}\t{}\t{}",
                a.next,
                fst.input_labels.label(a.ilabel),
                fst.output_labels.label(a.olabel),
                a.cost
            )?;
        }
    }
    for (s, c) in fst.finals.iter().enumerate() {
        if c.is_finite() {
            writeln!(out, "final\t{s}\t{c}")?;
        }
    }
    Ok(())
}

struct Lines<'a, R> {
    inner: std::iter::Enumerate<io::Lines<R>>,
    origin: &'a str,
    line: usize,
}

impl<R: BufRead> Lines<'_, R> {
    fn err(&self, message: impl Into<String>) -> TransducerError {
        TransducerError::Format {
            origin: self.origin.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<Option<String>, TransducerError> {
        match self.inner.next() {
            None => Ok(None),
            Some((i, l)) => {
                self.line = i + 1;
                l.map(Some).map_err(|e| TransducerError::Io(self.origin.to_string(), e))
            }
        }
    }

    fn expect_line(&mut self, what: &str) -> Result<String, TransducerError> {
        self.next_line()?
            .ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn header(&mut self, key: &str) -> Result<usize, TransducerError> {
        let line = self.expect_line(key)?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix('\t'))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| self.err(format!("expected `{key}\\t<n>`, found `{line}`")))
    }

    fn table(&mut self, key: &str) -> Result<LabelTable, TransducerError> {
        let n = self.header(key)?;
        if n < 2 {
            return Err(self.err(format!("{key} table must hold {EPSILON} and {UNKNOWN}")));
        }
        let mut table = LabelTable::new();
        for i in 0..n {
            let label = self.expect_line("a label")?;
            let ok = match i {
                0 => label == EPSILON,
                1 => label == UNKNOWN,
                _ => !label.is_empty() && !label.contains(char::is_whitespace) && table.get(&label).is_none(),
            };
            if !ok {
                return Err(self.err(format!("bad label `{label}` at index {i}")));
            }
            table.intern(&label);
        }
        Ok(table)
    }
}

pub fn read_transducer<R: BufRead>(reader: R, origin: &str) -> Result<MappingTransducer, TransducerError> {
    let mut lines = Lines {
        inner: reader.lines().enumerate(),
        origin,
        line: 0,
    };
    let magic = lines.expect_line("the magic line")?;
    if magic != MAGIC {
        return Err(lines.err(format!("expected `{MAGIC}`, found `{magic}`")));
    }
    let order = lines.header("order")?;
    let start = lines.header("start")?;
    let num_states = lines.header("states")?;
    if start >= num_states {
        return Err(lines.err(format!("start state {start} out of range")));
    }
    let input_labels = lines.table("isyms")?;
    let output_labels = lines.table("osyms")?;
    let mut states: Vec<Vec<Arc>> = vec![Vec::new(); num_states];
    let mut finals = vec![f64::INFINITY; num_states];

    while let Some(line) = lines.next_line()? {
        let cols: Vec<&str> = line.split('\t').collect();
        let state = |s: &str| s.parse::<usize>().ok().filter(|&v| v < num_states);
        let cost = |s: &str| s.parse::<f64>().ok().filter(|c| c.is_finite());
        if cols[0] == "final" {
            match (cols.len(), cols.get(1).and_then(|s| state(s)), cols.get(2).and_then(|s| cost(s))) {
                (3, Some(s), Some(c)) => finals[s] = c,
                _ => return Err(lines.err(format!("bad final line `{line}`"))),
            }
            continue;
        }
        if cols.len() != 5 {
            return Err(lines.err(format!("expected 5 columns, found {}", cols.len())));
        }
        let (Some(src), Some(dst)) = (state(cols[0]), state(cols[1])) else {
            return Err(lines.err(format!("bad state in `{line}`")));
        };
        let Some(ilabel) = input_labels.get(cols[2]) else {
            return Err(lines.err(format!("unknown input label `{}`", cols[2])));
        };
        let Some(olabel) = output_labels.get(cols[3]) else {
            return Err(lines.err(format!("unknown output label `{}`", cols[3])));
        };
        let Some(c) = cost(cols[4]) else {
            return Err(lines.err(format!("bad cost `{}`", cols[4])));
        };
        states[src].push(Arc {
            ilabel,
            olabel,
            cost: c,
            next: dst as u32,
        });
    }
    Ok(MappingTransducer::from_parts(
        order,
        input_labels,
        output_labels,
        states,
        finals,
        start as u32,
    ))
}

pub fn load_transducer(path: &Path) -> Result<MappingTransducer, TransducerError> {
    let origin = path.display().to_string();
    let file = File::open(path).map_err(|e| TransducerError::Io(origin.clone(), e))?;
    read_transducer(BufReader::new(file), &origin)
}

/// Writes `id rank cost tokens` rows; copied-through fallbacks show cost `inf`.
pub fn write_decode_results<W: Write>(mut out: W, results: &[DecodeResult]) -> io::Result<()> {
    for r in results {
        for (rank, c) in r.candidates.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}\t{}", r.id, rank + 1, c.cost, join_tokens(&c.tokens))?;
        }
    }
    Ok(())
}

/// Reads rows written by [`write_decode_results`]. Rows of one id must be
/// contiguous with ranks counting up from 1; an infinite cost marks a
/// copied-through fallback.
pub fn read_decode_results<R: BufRead>(reader: R, origin: &str) -> Result<Vec<DecodeResult>, TransducerError> {
    let mut lines = Lines {
        inner: reader.lines().enumerate(),
        origin,
        line: 0,
    };
    let mut results: Vec<DecodeResult> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    while let Some(line) = lines.next_line()? {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(lines.err(format!("expected 4 columns, found {}", cols.len())));
        }
        let rank: usize = cols[1]
            .parse()
            .map_err(|_| lines.err(format!("bad rank `{}`", cols[1])))?;
        let cost: f64 = cols[2]
            .parse()
            .ok()
            .filter(|c: &f64| !c.is_nan())
            .ok_or_else(|| lines.err(format!("bad cost `{}`", cols[2])))?;
        let tokens = normalize_text(cols[3]).map_err(|e| lines.err(e.to_string()))?;
        let candidate = Candidate { tokens, cost };
        match results.last_mut() {
            Some(last) if last.id == cols[0] => {
                if rank != last.candidates.len() + 1 {
                    return Err(lines.err(format!("id `{}`: rank {rank} out of sequence", cols[0])));
                }
                last.candidates.push(candidate);
            }
            _ => {
                if rank != 1 || !seen.insert(cols[0].to_string()) {
                    return Err(lines.err(format!("id `{}`: rows must be contiguous from rank 1", cols[0])));
                }
                results.push(DecodeResult {
                    id: cols[0].to_string(),
                    fallback: cost.is_infinite(),
                    candidates: vec![candidate],
                });
            }
        }
    }
    Ok(results)
}

pub fn load_decode_results(path: &Path) -> Result<Vec<DecodeResult>, TransducerError> {
    let origin = path.display().to_string();
    let file = File::open(path).map_err(|e| TransducerError::Io(origin.clone(), e))?;
    read_decode_results(BufReader::new(file), &origin)
}
