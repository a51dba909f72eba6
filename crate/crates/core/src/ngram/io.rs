//! ARPA-style text serialization of [`JointNGramModel`].
//!
//! ```text
//! \t2tmap-jointlm order=2\
//!
//! \1-grams:
//! -6.9897000433601875e-1	</s>
//! -3.0102999566398120e-1	a}a	-3.0102999566398120e-1
//!
//! \2-grams:
//! -9.9000000000000000e1	<s>	-1.0000000000000000e0
//! ...
//! \end\
//! ```
//!
//! Values are base-10 logs printed with 17 significant digits. Contexts that
//! are never predicted themselves (runs of `<s>`) carry the placeholder
//! probability `-99`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use super::{JointNGramModel, NGramError, NGramKey, SymbolTable, BOS, MAX_ORDER};

const PLACEHOLDER_LOG_PROB: f64 = -99.0;

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_model<W: Write>(mut out: W, model: &JointNGramModel) -> io::Result<()> {
    writeln!(out, "\\t2tmap-jointlm order={}\\", model.order)?;
    for k in 1..=model.order {
        let mut lines: Vec<(Vec<String>, String)> = Vec::new();
        let mut seen: std::collections::HashSet<&[u32]> = Default::default();
        let render = |g: &[u32]| -> Vec<String> { g.iter().map(|&id| model.symbols.render(id)).collect() };
        for (gram, lp) in model.entries(k) {
            seen.insert(gram);
            let mut line = fmt_value(lp);
            if let Some(b) = model.backoff_log10(gram) {
                line = format!("{line}\t{}\t{}", render(gram).join(" "), fmt_value(b));
            } else {
                line = format!("{line}\t{}", render(gram).join(" "));
            }
            lines.push((render(gram), line));
        }
        for (ctx, b) in model.backoff_entries() {
            if ctx.len() == k && !seen.contains(ctx) {
                let line = format!(
                    "{}\t{}\t{}",
                    fmt_value(PLACEHOLDER_LOG_PROB),
                    render(ctx).join(" "),
                    fmt_value(b)
                );
                lines.push((render(ctx), line));
            }
        }
        lines.sort();
        writeln!(out)?;
        writeln!(out, "\\{k}-grams:")?;
        for (_, line) in lines {
            writeln!(out, "{line}")?;
        }
    }
    writeln!(out)?;
    writeln!(out, "\\end\\")?;
    Ok(())
}

pub fn read_model<R: BufRead>(reader: R, origin: &str) -> Result<JointNGramModel, NGramError> {
    let err = |line: usize, message: String| NGramError::Parse {
        origin: origin.to_string(),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| NGramError::Io(origin.to_string(), e))?,
        None => return Err(err(1, "empty model file".into())),
    };
    let order: usize = header
        .strip_prefix("\\t2tmap-jointlm order=")
        .and_then(|r| r.strip_suffix('\\'))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| err(1, format!("bad header `{header}`")))?;
    if order == 0 || order > MAX_ORDER {
        return Err(NGramError::Order(order));
    }
    let mut symbols = SymbolTable::new();
    let mut probs: Vec<HashMap<NGramKey, f64>> = vec![HashMap::new(); order];
    let mut backoffs: HashMap<NGramKey, f64> = HashMap::new();
    let mut level = 0usize;
    let mut ended = false;
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.map_err(|e| NGramError::Io(origin.to_string(), e))?;
        if line.is_empty() {
            continue;
        }
        if ended {
            return Err(err(line_no, "content after \\end\\".into()));
        }
        if line == "\\end\\" {
            ended = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix('\\') {
            let k: usize = rest
                .strip_suffix("-grams:")
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| err(line_no, format!("unknown section `{line}`")))?;
            if k != level + 1 || k > order {
                return Err(err(line_no, format!("section {k} out of order")));
            }
            level = k;
            continue;
        }
        if level == 0 {
            return Err(err(line_no, "entry before the first section".into()));
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 && cols.len() != 3 {
            return Err(err(line_no, format!("expected 2 or 3 columns, found {}", cols.len())));
        }
        let value = |s: &str| -> Result<f64, NGramError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v <= 0.0)
                .ok_or_else(|| err(line_no, format!("bad log value `{s}`")))
        };
        let lp = value(cols[0])?;
        let gram = cols[1]
            .split(' ')
            .map(|s| symbols.intern_rendered(s))
            .collect::<Result<NGramKey, _>>()
            .map_err(|e| err(line_no, e.to_string()))?;
        if gram.len() != level {
            return Err(err(line_no, format!("{}-gram in section {level}", gram.len())));
        }
        if cols.len() == 3 {
            backoffs.insert(gram.clone(), value(cols[2])?);
        }
        if *gram.last().unwrap() != BOS {
            probs[level - 1].insert(gram, lp);
        }
    }
    if !ended {
        return Err(NGramError::Format(format!("{origin}: missing \\end\\")));
    }
    if level != order {
        return Err(NGramError::Format(format!(
            "{origin}: expected {order} sections, found {level}"
        )));
    }
    Ok(JointNGramModel {
        order,
        symbols,
        probs,
        backoffs,
    })
}

pub fn load_model(path: &Path) -> Result<JointNGramModel, NGramError> {
    let origin = path.display().to_string();
    let file = File::open(path).map_err(|e| NGramError::Io(origin.clone(), e))?;
    read_model(BufReader::new(file), &origin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{AlignedUtterance, PairSymbol};
    use crate::ngram::{count_ngrams, estimate_discounts, estimate_modified_kneser_ney};

    fn fixture_model(order: usize) -> JointNGramModel {
        let corpus: Vec<AlignedUtterance> = [
            vec!["bonjour}buongiorno", "a}a"],
            vec!["a}a", "bueno|no|te}buonanotte"],
            vec!["she}sì", "a}a", "a}a"],
            vec!["x\\|y}<eps>", "<eps>}z"],
        ]
        .iter()
        .map(|s| AlignedUtterance {
            id: "u".into(),
            symbols: s.iter().map(|x| PairSymbol::parse(x).unwrap()).collect(),
            weight: 1.0,
        })
        .collect();
        let counts = count_ngrams(&corpus, order);
        estimate_modified_kneser_ney(&counts, &estimate_discounts(&counts)).unwrap()
    }

    #[test]
    fn write_read_write_is_byte_identical() {
        for order in [1, 2, 3, 5] {
            let model = fixture_model(order);
            let mut first = Vec::new();
            write_model(&mut first, &model).unwrap();
            let back = read_model(first.as_slice(), "mem").unwrap();
            let mut second = Vec::new();
            write_model(&mut second, &back).unwrap();
            assert_eq!(String::from_utf8(first).unwrap(), String::from_utf8(second).unwrap());
            // probabilities survive bitwise
            for k in 1..=order {
                for (gram, lp) in model.entries(k) {
                    let rendered: Vec<String> = gram.iter().map(|&id| model.symbols().render(id)).collect();
                    let ids: Vec<u32> = rendered
                        .iter()
                        .map(|s| back.symbols().id_of_rendered(s).unwrap())
                        .collect();
                    let (ctx, w) = ids.split_at(ids.len() - 1);
                    assert_eq!(back.explicit_log10(ctx, w[0]).unwrap().to_bits(), lp.to_bits());
                }
            }
        }
    }

    #[test]
    fn header_and_sections_are_checked() {
        let model = fixture_model(2);
        let mut buf = Vec::new();
        write_model(&mut buf, &model).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("\\t2tmap-jointlm order=2\\\n"));
        assert!(text.trim_end().ends_with("\\end\\"));
        assert!(read_model(text.replace("order=2", "order=x").as_bytes(), "m").is_err());
        assert!(read_model(text.replace("\\end\\", "").as_bytes(), "m").is_err());
        assert!(read_model(text.replace("\\2-grams:", "\\3-grams:").as_bytes(), "m").is_err());
    }
}
