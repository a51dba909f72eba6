use std::collections::{BTreeSet, HashMap};
use std::f64::consts::LN_10;

use crate::ngram::{JointNGramModel, BOS, EOS};

use super::{Arc, DecodeConfig, LabelTable, MappingTransducer, TransducerError, EPS_LABEL, UNK_LABEL};

/// Compiles `model` into a transducer with one state per stored context.
///
/// Each explicit probability p(symbol | context) becomes a chain of
/// `max(|source|, |target|, 1)` arcs that reads the source words and writes
/// the target words, padded with epsilons; the whole `-ln p` sits on the
/// first arc. Contexts back off to their shortened context through an
/// epsilon arc, and the final cost of a context is `-ln p(</s> | context)`.
/// With passthrough enabled the empty-context state carries a `<unk>` self
/// loop that copies any input word.
pub fn build_transducer(
    model: &JointNGramModel,
    cfg: &DecodeConfig,
) -> Result<MappingTransducer, TransducerError> {
    cfg.validate()?;
    let symbols = model.symbols();

    let mut inputs = BTreeSet::new();
    let mut outputs = BTreeSet::new();
    for sym in model.vocabulary() {
        inputs.extend(sym.source.iter().map(|t| t.as_str().to_string()));
        outputs.extend(sym.target.iter().map(|t| t.as_str().to_string()));
    }
    let mut input_labels = LabelTable::new();
    inputs.iter().for_each(|w| {
        input_labels.intern(w);
    });
    let mut output_labels = LabelTable::new();
    outputs.iter().for_each(|w| {
        output_labels.intern(w);
    });

    let contexts = model.contexts();
    let state_of: HashMap<&[u32], u32> = contexts
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_slice(), i as u32))
        .collect();
    let mut states: Vec<Vec<Arc>> = vec![Vec::new(); contexts.len()];
    let mut finals: Vec<f64> = vec![f64::INFINITY; contexts.len()];

    let longest_stored_suffix = |history: &[u32]| -> u32 {
        let max = model.order() - 1;
        let mut h = &history[history.len().saturating_sub(max)..];
        loop {
            if let Some(&s) = state_of.get(h) {
                return s;
            }
            h = &h[1..];
        }
    };

    let mut entries: Vec<(&[u32], f64)> = (1..=model.order()).flat_map(|k| model.entries(k)).collect();
    entries.sort_by(|a, b| a.0.cmp(b.0));
    for (gram, lp) in entries {
        if lp > 0.0 {
            return Err(TransducerError::PositiveLogProb(lp));
        }
        let (ctx, w) = gram.split_at(gram.len() - 1);
        let w = w[0];
        if w == EOS {
            continue;
        }
        let from = state_of[ctx];
        let to = longest_stored_suffix(gram);
        let sym = symbols.symbol(w).expect("pair symbol");
        let cost = -lp * LN_10;
        let len = sym.source.len().max(sym.target.len()).max(1);
        let mut current = from;
        for i in 0..len {
            let ilabel = sym
                .source
                .get(i)
                .map_or(EPS_LABEL, |t| input_labels.get(t.as_str()).unwrap());
            let olabel = sym
                .target
                .get(i)
                .map_or(EPS_LABEL, |t| output_labels.get(t.as_str()).unwrap());
            let next = if i + 1 == len {
                to
            } else {
                states.push(Vec::new());
                finals.push(f64::INFINITY);
                (states.len() - 1) as u32
            };
            states[current as usize].push(Arc {
                ilabel,
                olabel,
                cost: if i == 0 { cost } else { 0.0 },
                next,
            });
            current = next;
        }
    }

    for (i, ctx) in contexts.iter().enumerate() {
        if !ctx.is_empty() {
            if let Some(b) = model.backoff_log10(ctx) {
                let cost = -b * LN_10;
                if cost.is_finite() {
                    states[i].push(Arc {
                        ilabel: EPS_LABEL,
                        olabel: EPS_LABEL,
                        cost,
                        next: state_of[&ctx[1..]],
                    });
                }
            }
        }
        if let Some(lp) = model.log10_prob(ctx, EOS) {
            finals[i] = -lp * LN_10;
        }
    }

    let root = state_of[&[][..]];
    if let Some(penalty) = cfg.passthrough_penalty {
        states[root as usize].push(Arc {
            ilabel: UNK_LABEL,
            olabel: UNK_LABEL,
            cost: penalty,
            next: root,
        });
    }
    let start = longest_stored_suffix(&vec![BOS; model.order() - 1]);
    let fst = MappingTransducer::from_parts(model.order(), input_labels, output_labels, states, finals, start);
    Ok(trim(fst))
}

/// Drops states that are unreachable from the start or cannot reach a final
/// state, renumbering the survivors in their original order.
pub(crate) fn trim(fst: MappingTransducer) -> MappingTransducer {
    let n = fst.states.len();
    let mut reach = vec![false; n];
    let mut stack = vec![fst.start];
    reach[fst.start as usize] = true;
    while let Some(s) = stack.pop() {
        for a in &fst.states[s as usize] {
            if !reach[a.next as usize] {
                reach[a.next as usize] = true;
                stack.push(a.next);
            }
        }
    }
    let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (s, arcs) in fst.states.iter().enumerate() {
        for a in arcs {
            reverse[a.next as usize].push(s as u32);
        }
    }
    let mut coreach = vec![false; n];
    let mut stack: Vec<u32> = (0..n as u32).filter(|&s| fst.finals[s as usize].is_finite()).collect();
    for &s in &stack {
        coreach[s as usize] = true;
    }
    while let Some(s) = stack.pop() {
        for &p in &reverse[s as usize] {
            if !coreach[p as usize] {
                coreach[p as usize] = true;
                stack.push(p);
            }
        }
    }
    let keep: Vec<bool> = (0..n).map(|s| reach[s] && coreach[s]).collect();
    if !keep[fst.start as usize] {
        // nothing accepts; keep a lone non-final start state
        return MappingTransducer {
            states: vec![Vec::new()],
            finals: vec![f64::INFINITY],
            start: 0,
            ..fst
        };
    }
    let mut remap = vec![u32::MAX; n];
    let mut next_id = 0;
    for s in 0..n {
        if keep[s] {
            remap[s] = next_id;
            next_id += 1;
        }
    }
    let mut states = Vec::with_capacity(next_id as usize);
    let mut finals = Vec::with_capacity(next_id as usize);
    for (s, arcs) in fst.states.into_iter().enumerate() {
        if !keep[s] {
            continue;
        }
        states.push(
            arcs.into_iter()
                .filter(|a| keep[a.next as usize])
                .map(|a| Arc {
                    next: remap[a.next as usize],
                    ..a
                })
                .collect(),
        );
        finals.push(fst.finals[s]);
    }
    MappingTransducer {
        states,
        finals,
        start: remap[fst.start as usize],
        ..fst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{AlignedUtterance, PairSymbol};
    use crate::ngram::{count_ngrams, estimate_discounts, estimate_modified_kneser_ney};

    fn model(corpus: &[&[&str]], order: usize) -> JointNGramModel {
        let aligned: Vec<_> = corpus
            .iter()
            .map(|s| AlignedUtterance {
                id: "u".into(),
                symbols: s.iter().map(|x| PairSymbol::parse(x).unwrap()).collect(),
                weight: 1.0,
            })
            .collect();
        let counts = count_ngrams(&aligned, order);
        estimate_modified_kneser_ney(&counts, &estimate_discounts(&counts)).unwrap()
    }

    fn no_passthrough() -> DecodeConfig {
        DecodeConfig {
            passthrough_penalty: None,
            ..DecodeConfig::default()
        }
    }

    #[test]
    fn unigram_single_path_machine() {
        let m = model(&[&["stop}stop"]], 1);
        let fst = build_transducer(&m, &no_passthrough()).unwrap();
        assert_eq!(fst.num_states(), 1);
        let arcs = fst.arcs(fst.start());
        assert_eq!(arcs.len(), 1);
        let a = arcs[0];
        assert_eq!(fst.input_labels().label(a.ilabel), "stop");
        assert_eq!(fst.output_labels().label(a.olabel), "stop");
        let p_stop = m.prob_rendered(&[], "stop}stop").unwrap();
        let p_end = m.prob_rendered(&[], "</s>").unwrap();
        assert!((a.cost + fst.final_cost(a.next).unwrap() - (-p_stop.ln() - p_end.ln())).abs() < 1e-12);
    }

    #[test]
    fn multiword_symbol_becomes_padded_chain() {
        let m = model(&[&["bueno|no|te}buonanotte"]], 1);
        let fst = build_transducer(&m, &no_passthrough()).unwrap();
        let first = fst.arcs(fst.start())[0];
        let second = fst.arcs(first.next)[0];
        let third = fst.arcs(second.next)[0];
        let label = |a: Arc| {
            (
                fst.input_labels().label(a.ilabel).to_string(),
                fst.output_labels().label(a.olabel).to_string(),
            )
        };
        assert_eq!(label(first), ("bueno".into(), "buonanotte".into()));
        assert_eq!(label(second), ("no".into(), "<eps>".into()));
        assert_eq!(label(third), ("te".into(), "<eps>".into()));
        assert!(first.cost > 0.0);
        assert_eq!(second.cost, 0.0);
        assert_eq!(third.cost, 0.0);
        assert_eq!(third.next, fst.start());
    }

    #[test]
    fn passthrough_loop_sits_on_the_empty_context() {
        let m = model(&[&["a}a", "b}b"], &["b}b"]], 3);
        let fst = build_transducer(&m, &DecodeConfig::default()).unwrap();
        let loops: Vec<_> = (0..fst.num_states() as u32)
            .flat_map(|s| fst.arcs(s).iter().map(move |a| (s, *a)))
            .filter(|(_, a)| a.ilabel == UNK_LABEL)
            .collect();
        assert_eq!(loops.len(), 1);
        let (s, a) = loops[0];
        assert_eq!(a.next, s);
        assert_eq!(a.olabel, UNK_LABEL);
        assert_eq!(a.cost, 8.0);
    }

    #[test]
    fn every_state_is_reachable_and_coreachable() {
        let m = model(
            &[&["a}a", "b}x", "c|d}<eps>"], &["<eps>}z", "a}a"], &["b}x", "b}x", "a}a"]],
            4,
        );
        let fst = build_transducer(&m, &no_passthrough()).unwrap();
        let before = fst.num_states();
        let again = trim(fst.clone());
        assert_eq!(again.num_states(), before);
        assert_eq!(again, fst);
        // backoff arcs carry strictly positive cost
        for s in 0..fst.num_states() as u32 {
            for a in fst.arcs(s) {
                assert!(a.cost >= 0.0);
                if a.ilabel == EPS_LABEL && a.olabel == EPS_LABEL {
                    assert!(a.cost > 0.0);
                }
            }
        }
    }

    #[test]
    fn fixture_state_and_arc_counts() {
        let m = model(
            &[
                &["bonjour}buongiorno", "a}a"],
                &["a}a", "bueno|no|te}buonanotte"],
                &["she}sì", "a}a", "a}a"],
            ],
            2,
        );
        let fst = build_transducer(&m, &DecodeConfig::default()).unwrap();
        // contexts (), <s>, a, bonjour, bueno|no|te and she, plus two chain
        // states for each of the two bueno|no|te entries
        assert_eq!(fst.num_states(), 6 + 2 * 2);
        // unigrams 4 symbols + 2 chain arcs, bigrams 7 + 2 chain arcs,
        // 5 backoffs and the passthrough loop
        assert_eq!(fst.num_arcs(), 6 + 9 + 5 + 1);
    }
}
