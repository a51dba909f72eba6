use std::cmp::Ordering;
use std::fmt;

use crate::corpus::{Token, EPSILON};

use super::AlignError;

/// A joint token pairing a hypothesis word span with a reference word span.
///
/// Ordered lexicographically by source, then target.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairSymbol {
    pub source: Vec<Token>,
    pub target: Vec<Token>,
}

impl PairSymbol {
    pub fn new(source: Vec<Token>, target: Vec<Token>) -> Result<Self, AlignError> {
        if source.is_empty() && target.is_empty() {
            return Err(AlignError::EmptySymbol);
        }
        Ok(PairSymbol { source, target })
    }

    /// Convenience constructor from whitespace-separated words; panics on bad input.
    pub fn parse_words(source: &str, target: &str) -> Self {
        let side = |s: &str| -> Vec<Token> {
            s.split_whitespace()
                .map(|w| Token::new(w).expect("valid token"))
                .collect()
        };
        PairSymbol::new(side(source), side(target)).expect("non-empty symbol")
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target
    }

    /// Parses the `src1|src2}tgt1|tgt2` rendering.
    pub fn parse(text: &str) -> Result<Self, AlignError> {
        let bad = |why: &str| AlignError::BadSymbol(text.to_string(), why.to_string());
        let mut sides: Vec<Vec<String>> = vec![vec![String::new()]];
        let mut chars = text.chars();
        while let Some(c) = chars.next() {
            match c {
                '\\' => {
                    let next = chars.next().ok_or_else(|| bad("dangling escape"))?;
                    sides.last_mut().unwrap().last_mut().unwrap().push(next);
                }
                '|' => sides.last_mut().unwrap().push(String::new()),
                '}' => {
                    if sides.len() == 2 {
                        return Err(bad("more than one side separator"));
                    }
                    sides.push(vec![String::new()]);
                }
                _ => sides.last_mut().unwrap().last_mut().unwrap().push(c),
            }
        }
        if sides.len() != 2 {
            return Err(bad("missing side separator"));
        }
        let mut parsed = Vec::with_capacity(2);
        for side in sides {
            if side.len() == 1 && side[0] == EPSILON {
                parsed.push(Vec::new());
                continue;
            }
            let tokens = side
                .into_iter()
                .map(|w| Token::new(w).map_err(|e| bad(&e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            parsed.push(tokens);
        }
        let target = parsed.pop().unwrap();
        let source = parsed.pop().unwrap();
        PairSymbol::new(source, target)
    }
}

fn write_side(f: &mut fmt::Formatter<'_>, side: &[Token]) -> fmt::Result {
    if side.is_empty() {
        return f.write_str(EPSILON);
    }
    for (i, t) in side.iter().enumerate() {
        if i > 0 {
            f.write_str("|")?;
        }
        for c in t.as_str().chars() {
            if matches!(c, '|' | '}' | '\\') {
                write!(f, "\\")?;
            }
            write!(f, "{c}")?;
        }
    }
    Ok(())
}

impl fmt::Display for PairSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_side(f, &self.source)?;
        f.write_str("}")?;
        write_side(f, &self.target)
    }
}

impl fmt::Debug for PairSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PairSymbol({self})")
    }
}

/// Compares two symbols given as hypothesis/reference spans without
/// materializing them.
pub(crate) fn cmp_spans(a: (&[Token], &[Token]), b: (&[Token], &[Token])) -> Ordering {
    a.0.cmp(b.0).then_with(|| a.1.cmp(b.1))
}
