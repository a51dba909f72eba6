use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use super::{AlignError, AlignedUtterance, AlignmentModel, PairSymbol};

/// Writes `id<TAB>weight<TAB>sym1 sym2 ...` lines.
pub fn write_aligned_corpus<W: Write>(mut out: W, corpus: &[AlignedUtterance]) -> io::Result<()> {
    for utt in corpus {
        write!(out, "{}\t{}\t", utt.id, utt.weight)?;
        for (k, sym) in utt.symbols.iter().enumerate() {
            if k > 0 {
                out.write_all(b" ")?;
            }
            write!(out, "{sym}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_aligned_corpus<R: BufRead>(reader: R, origin: &str) -> Result<Vec<AlignedUtterance>, AlignError> {
    let parse_err = |line: usize, message: String| AlignError::Parse {
        origin: origin.to_string(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| AlignError::Io(origin.to_string(), e))?;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(parse_err(line_no, format!("expected 3 columns, found {}", cols.len())));
        }
        let weight: f64 = cols[1]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad weight `{}`", cols[1])))?;
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(parse_err(line_no, format!("weight must be positive, got {weight}")));
        }
        let symbols = cols[2]
            .split(' ')
            .filter(|s| !s.is_empty())
            .map(|s| PairSymbol::parse(s).map_err(|e| parse_err(line_no, e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if symbols.is_empty() {
            return Err(parse_err(line_no, "no symbols".into()));
        }
        out.push(AlignedUtterance {
            id: cols[0].to_string(),
            symbols,
            weight,
        });
    }
    Ok(out)
}

pub fn load_aligned_corpus(path: &Path) -> Result<Vec<AlignedUtterance>, AlignError> {
    let origin = path.display().to_string();
    let file = File::open(path).map_err(|e| AlignError::Io(origin.clone(), e))?;
    read_aligned_corpus(BufReader::new(file), &origin)
}

/// Writes `symbol<TAB>probability` lines in discovery order, probabilities
/// with 17 significant digits so the file reads back exactly.
pub fn write_alignment_model<W: Write>(mut out: W, model: &AlignmentModel) -> io::Result<()> {
    for (sym, p) in model.iter() {
        writeln!(out, "{sym}\t{p:.16e}")?;
    }
    Ok(())
}

pub fn read_alignment_model<R: BufRead>(reader: R, origin: &str) -> Result<AlignmentModel, AlignError> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| AlignError::Io(origin.to_string(), e))?;
        let parse_err = |message: String| AlignError::Parse {
            origin: origin.to_string(),
            line: i + 1,
            message,
        };
        let (sym, p) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `symbol<TAB>probability`".into()))?;
        let sym = PairSymbol::parse(sym).map_err(|e| parse_err(e.to_string()))?;
        let p: f64 = p
            .parse()
            .ok()
            .filter(|p: &f64| (0.0..=1.0).contains(p))
            .ok_or_else(|| parse_err(format!("bad probability `{p}`")))?;
        entries.push((sym, p));
    }
    Ok(AlignmentModel::from_probabilities(entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_what_it_writes() {
        let text = "u1#1\t0.04\tbueno|no|te}buonanotte a}a\nu2\t1\t<eps>}sì\n";
        let parsed = read_aligned_corpus(text.as_bytes(), "mem").unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].weight, 0.04);
        assert_eq!(parsed[0].symbols[0], PairSymbol::parse_words("bueno no te", "buonanotte"));
        assert!(parsed[1].symbols[0].source.is_empty());
        let mut out = Vec::new();
        write_aligned_corpus(&mut out, &parsed).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(read_aligned_corpus("u\t1\n".as_bytes(), "m").is_err());
        assert!(read_aligned_corpus("u\tx\ta}a\n".as_bytes(), "m").is_err());
        assert!(read_aligned_corpus("u\t0\ta}a\n".as_bytes(), "m").is_err());
        assert!(matches!(
            read_aligned_corpus("u\t1\ta}a\nv\t1\tnope\n".as_bytes(), "m"),
            Err(AlignError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn model_file_round_trips() {
        let model = AlignmentModel::from_probabilities([
            (PairSymbol::parse_words("she", "sì"), 0.25),
            (PairSymbol::parse_words("", "sì"), 0.1 / 3.0),
            (PairSymbol::parse_words("a", "a"), 1.0 - 0.25 - 0.1 / 3.0),
        ]);
        let mut out = Vec::new();
        write_alignment_model(&mut out, &model).unwrap();
        let back = read_alignment_model(out.as_slice(), "m").unwrap();
        assert_eq!(back.probability(&PairSymbol::parse_words("", "sì")), Some(0.1 / 3.0));
        let mut again = Vec::new();
        write_alignment_model(&mut again, &back).unwrap();
        assert_eq!(out, again);
        assert!(read_alignment_model("a}a\t1.5\n".as_bytes(), "m").is_err());
    }
}
