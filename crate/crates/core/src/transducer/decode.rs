use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use rayon::prelude::*;

use crate::corpus::{Token, Utterance};

use super::{Arc, DecodeConfig, MappingTransducer, TransducerError, EPS_LABEL, UNK_LABEL};

/// One decoded output string and its best path cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub tokens: Vec<Token>,
    pub cost: f64,
}

/// A decoded output together with the arcs of its best path. Passthrough arcs
/// carry the cost that was charged during decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPath {
    pub tokens: Vec<Token>,
    pub cost: f64,
    pub arcs: Vec<Arc>,
    pub final_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub id: String,
    pub candidates: Vec<Candidate>,
    /// Set when decoding failed and the input was copied through unchanged.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApplyOutcome {
    pub results: Vec<DecodeResult>,
    pub failures: usize,
}

struct Edge {
    to: u32,
    out: u32,
    arc: Arc,
}

/// The part of transducer x input-string composition reachable from the start.
struct Composed {
    edges: Vec<Vec<Edge>>,
    finals: Vec<f64>,
    /// Output words copied through passthrough that the output table lacks.
    extra_words: Vec<String>,
    /// Largest input position any reachable node has consumed up to.
    matched: usize,
}

fn compose(fst: &MappingTransducer, input: &[Token], cfg: &DecodeConfig) -> Composed {
    let n = input.len();
    let labels: Vec<Option<u32>> = input.iter().map(|t| fst.input_label_of(t)).collect();
    let out_len = fst.output_labels().len() as u32;
    let mut extra_words: Vec<String> = Vec::new();
    let copies: Vec<u32> = input
        .iter()
        .map(|t| match fst.output_labels().get(t.as_str()) {
            Some(id) => id,
            None => match extra_words.iter().position(|w| w == t.as_str()) {
                Some(i) => out_len + i as u32,
                None => {
                    extra_words.push(t.as_str().to_string());
                    out_len + extra_words.len() as u32 - 1
                }
            },
        })
        .collect();

    let mut index: HashMap<(u32, u32), u32> = HashMap::new();
    let mut nodes: Vec<(u32, u32)> = Vec::new();
    let mut edges: Vec<Vec<Edge>> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert((fst.start(), 0), 0);
    nodes.push((fst.start(), 0));
    edges.push(Vec::new());
    queue.push_back(0u32);
    let mut matched = 0;

    while let Some(id) = queue.pop_front() {
        let (state, pos) = nodes[id as usize];
        matched = matched.max(pos as usize);
        let mut out_edges = Vec::new();
        let mut targets: Vec<(Arc, u32, u32)> = Vec::new();
        for a in fst.arcs_with_input(state, EPS_LABEL) {
            targets.push((*a, pos, a.olabel));
        }
        if (pos as usize) < n {
            if let Some(penalty) = cfg.passthrough_penalty {
                for a in fst.arcs_with_input(state, UNK_LABEL) {
                    let arc = Arc { cost: penalty, ..*a };
                    targets.push((arc, pos + 1, copies[pos as usize]));
                }
            }
            if let Some(l) = labels[pos as usize] {
                for a in fst.arcs_with_input(state, l) {
                    targets.push((*a, pos + 1, a.olabel));
                }
            }
        }
        for (arc, next_pos, out) in targets {
            let key = (arc.next, next_pos);
            let to = match index.get(&key) {
                Some(&to) => to,
                None => {
                    let to = nodes.len() as u32;
                    index.insert(key, to);
                    nodes.push(key);
                    edges.push(Vec::new());
                    queue.push_back(to);
                    to
                }
            };
            out_edges.push(Edge { to, out, arc });
        }
        edges[id as usize] = out_edges;
    }

    let finals = nodes
        .iter()
        .map(|&(s, pos)| {
            if pos as usize == n {
                fst.final_cost(s).unwrap_or(f64::INFINITY)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Composed {
        edges,
        finals,
        extra_words,
        matched,
    }
}

#[derive(PartialEq)]
struct MinItem<T> {
    key: f64,
    seq: u64,
    value: T,
}

impl<T: PartialEq> Eq for MinItem<T> {}

impl<T: PartialEq> PartialOrd for MinItem<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialEq> Ord for MinItem<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Exact cost-to-go from every composed node to acceptance.
fn distances_to_goal(c: &Composed) -> Vec<f64> {
    let n = c.edges.len();
    let mut reverse: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for (from, es) in c.edges.iter().enumerate() {
        for e in es {
            reverse[e.to as usize].push((from as u32, e.arc.cost));
        }
    }
    let mut dist = c.finals.clone();
    let mut heap = BinaryHeap::new();
    for (i, &d) in dist.iter().enumerate() {
        if d.is_finite() {
            heap.push(MinItem {
                key: d,
                seq: i as u64,
                value: i as u32,
            });
        }
    }
    let mut done = vec![false; n];
    while let Some(MinItem { key, value, .. }) = heap.pop() {
        if done[value as usize] {
            continue;
        }
        done[value as usize] = true;
        for &(p, cost) in &reverse[value as usize] {
            let d = key + cost;
            if d < dist[p as usize] {
                dist[p as usize] = d;
                heap.push(MinItem {
                    key: d,
                    seq: p as u64,
                    value: p,
                });
            }
        }
    }
    dist
}

/// Prefix tree over output label sequences; node 0 is the empty string.
struct OutputTrie {
    nodes: Vec<(u32, u32)>,
    children: HashMap<(u32, u32), u32>,
}

impl OutputTrie {
    fn new() -> Self {
        OutputTrie {
            nodes: vec![(u32::MAX, EPS_LABEL)],
            children: HashMap::new(),
        }
    }

    fn child(&mut self, parent: u32, label: u32) -> u32 {
        if label == EPS_LABEL {
            return parent;
        }
        if let Some(&id) = self.children.get(&(parent, label)) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push((parent, label));
        self.children.insert((parent, label), id);
        id
    }

    fn labels(&self, mut id: u32) -> Vec<u32> {
        let mut out = Vec::new();
        while id != 0 {
            let (parent, label) = self.nodes[id as usize];
            out.push(label);
            id = parent;
        }
        out.reverse();
        out
    }
}

#[derive(Clone, Copy)]
struct Hist {
    node: u32,
    trie: u32,
    parent: u32,
    edge: u32,
}

#[derive(PartialEq)]
struct Entry {
    g: f64,
    hist: u32,
    goal: bool,
}

/// Distinct output strings of the `cfg.nbest` cheapest accepting paths, each
/// with its best path, sorted by cost, then length, then lexicographically.
pub fn nbest_paths(
    fst: &MappingTransducer,
    input: &[Token],
    cfg: &DecodeConfig,
) -> Result<Vec<DecodedPath>, TransducerError> {
    cfg.validate()?;
    let composed = compose(fst, input, cfg);
    let dist = distances_to_goal(&composed);
    if !dist[0].is_finite() {
        return Err(TransducerError::NoPath {
            matched: composed.matched,
            len: input.len(),
        });
    }
    let limit = cfg.beam.map_or(f64::INFINITY, |b| dist[0] + b);

    let mut trie = OutputTrie::new();
    let mut hists = vec![Hist {
        node: 0,
        trie: 0,
        parent: u32::MAX,
        edge: u32::MAX,
    }];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(MinItem {
        key: dist[0],
        seq,
        value: Entry {
            g: 0.0,
            hist: 0,
            goal: false,
        },
    });
    let mut closed: HashSet<(u32, u32)> = HashSet::new();
    let mut emitted: HashSet<u32> = HashSet::new();
    let mut found: Vec<(f64, u32)> = Vec::new();
    let mut bound = f64::INFINITY;

    while let Some(MinItem { key: f, value, .. }) = heap.pop() {
        if f > bound + tie_tolerance(bound) {
            break;
        }
        let Hist { node, trie: t, .. } = hists[value.hist as usize];
        if value.goal {
            if emitted.insert(t) {
                found.push((value.g, value.hist));
                if found.len() == cfg.nbest {
                    // keep collecting exact ties at the boundary
                    bound = value.g;
                }
            }
            continue;
        }
        if !closed.insert((node, t)) {
            continue;
        }
        let fin = composed.finals[node as usize];
        if fin.is_finite() {
            seq += 1;
            heap.push(MinItem {
                key: value.g + fin,
                seq,
                value: Entry {
                    g: value.g + fin,
                    hist: value.hist,
                    goal: true,
                },
            });
        }
        for (ei, e) in composed.edges[node as usize].iter().enumerate() {
            let h = dist[e.to as usize];
            if !h.is_finite() {
                continue;
            }
            let g = value.g + e.arc.cost;
            if g + h > limit {
                continue;
            }
            let t2 = trie.child(t, e.out);
            if closed.contains(&(e.to, t2)) {
                continue;
            }
            hists.push(Hist {
                node: e.to,
                trie: t2,
                parent: value.hist,
                edge: ei as u32,
            });
            seq += 1;
            heap.push(MinItem {
                key: g + h,
                seq,
                value: Entry {
                    g,
                    hist: hists.len() as u32 - 1,
                    goal: false,
                },
            });
        }
    }

    let out_len = fst.output_labels().len() as u32;
    let word = |id: u32| -> Token {
        let s = if id < out_len {
            fst.output_labels().label(id)
        } else {
            &composed.extra_words[(id - out_len) as usize]
        };
        Token::new(s).expect("output labels are valid tokens")
    };
    let mut paths: Vec<DecodedPath> = found
        .into_iter()
        .map(|(cost, h)| {
            let end = &hists[h as usize];
            let tokens = trie.labels(end.trie).into_iter().map(word).collect();
            let mut arcs = Vec::new();
            let mut cur = h;
            while hists[cur as usize].parent != u32::MAX {
                let hist = &hists[cur as usize];
                let parent = &hists[hist.parent as usize];
                arcs.push(composed.edges[parent.node as usize][hist.edge as usize].arc);
                cur = hist.parent;
            }
            arcs.reverse();
            DecodedPath {
                tokens,
                cost,
                arcs,
                final_cost: composed.finals[end.node as usize],
            }
        })
        .collect();
    rank_paths(&mut paths);
    paths.truncate(cfg.nbest);
    Ok(paths)
}

/// Relative width within which two costs count as tied. The same arc costs
/// summed in a different order can differ in the last bits, and that noise
/// must not decide the ranking.
pub const COST_TIE_TOLERANCE: f64 = 1e-9;

fn tie_tolerance(cost: f64) -> f64 {
    COST_TIE_TOLERANCE * cost.abs().max(1.0)
}

/// Sorts by cost, then breaks ties by length and then by words. A tie run
/// starts at its cheapest member and takes every path within tolerance of it.
fn rank_paths(paths: &mut [DecodedPath]) {
    paths.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    let mut start = 0;
    while start < paths.len() {
        let limit = paths[start].cost + tie_tolerance(paths[start].cost);
        let end = start + paths[start..].iter().take_while(|p| p.cost <= limit).count();
        paths[start..end].sort_by(|a, b| {
            a.tokens
                .len()
                .cmp(&b.tokens.len())
                .then_with(|| a.tokens.cmp(&b.tokens))
                .then(a.cost.total_cmp(&b.cost))
        });
        start = end;
    }
}

/// The `cfg.output_top_k` best distinct outputs for `input`.
pub fn nbest_decode(
    fst: &MappingTransducer,
    input: &[Token],
    cfg: &DecodeConfig,
) -> Result<Vec<Candidate>, TransducerError> {
    let mut paths = nbest_paths(fst, input, cfg)?;
    paths.truncate(cfg.output_top_k);
    Ok(paths
        .into_iter()
        .map(|p| Candidate {
            tokens: p.tokens,
            cost: p.cost,
        })
        .collect())
}

/// Decodes every utterance in parallel, keeping input order. An utterance
/// without an accepting path is copied through with infinite cost.
pub fn apply_corpus(
    fst: &MappingTransducer,
    utterances: &[Utterance],
    cfg: &DecodeConfig,
) -> Result<ApplyOutcome, TransducerError> {
    cfg.validate()?;
    let results: Vec<DecodeResult> = utterances
        .par_iter()
        .map(|u| match nbest_decode(fst, &u.tokens, cfg) {
            Ok(candidates) => DecodeResult {
                id: u.id.clone(),
                candidates,
                fallback: false,
            },
            Err(e) => {
                log::warn!("{}: {e}; copying input through", u.id);
                DecodeResult {
                    id: u.id.clone(),
                    candidates: vec![Candidate {
                        tokens: u.tokens.clone(),
                        cost: f64::INFINITY,
                    }],
                    fallback: true,
                }
            }
        })
        .collect();
    let failures = results.iter().filter(|r| r.fallback).count();
    Ok(ApplyOutcome { results, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{AlignedUtterance, PairSymbol};
    use crate::ngram::{count_ngrams, estimate_discounts, estimate_modified_kneser_ney};
    use crate::transducer::{build_transducer, LabelTable};

    fn toks(s: &str) -> Vec<Token> {
        s.split_whitespace().map(|w| Token::new(w).unwrap()).collect()
    }

    #[test]
    fn rounding_noise_does_not_break_ties() {
        let mut isyms = LabelTable::new();
        let mut osyms = LabelTable::new();
        let x = isyms.intern("x");
        let (a, z) = (osyms.intern("a"), osyms.intern("z"));
        let arc = |ilabel, olabel, cost, next| Arc {
            ilabel,
            olabel,
            cost,
            next,
        };
        // z costs 0.3 directly, a costs 0.1 + 0.2, which rounds one ulp higher
        let states = vec![
            vec![arc(x, z, 0.3, 2), arc(x, a, 0.1, 1)],
            vec![arc(EPS_LABEL, EPS_LABEL, 0.2, 2)],
            vec![],
        ];
        let fst = MappingTransducer::from_parts(1, isyms, osyms, states, vec![f64::INFINITY, f64::INFINITY, 0.0], 0);
        let cfg = DecodeConfig {
            passthrough_penalty: None,
            ..DecodeConfig::default()
        };
        let paths = nbest_paths(&fst, &toks("x"), &cfg).unwrap();
        assert!(paths[0].cost > paths[1].cost);
        assert_eq!(paths[0].tokens, toks("a"));
        assert_eq!(paths[1].tokens, toks("z"));
        // a one-best search still reports the tie winner
        let one = nbest_paths(&fst, &toks("x"), &DecodeConfig { nbest: 1, ..cfg }).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].tokens, toks("a"));
    }

    fn fixture(order: usize, cfg: &DecodeConfig) -> MappingTransducer {
        let corpus: Vec<AlignedUtterance> = [
            vec!["bonjour}buongiorno", "amico}amico"],
            vec!["bueno|no|te}buonanotte", "amico}amico"],
            vec!["she}sì", "grazie}grazie"],
            vec!["bonjour}buongiorno"],
            vec!["she}sì"],
            vec!["grazie}grazie", "mille}mille"],
        ]
        .iter()
        .map(|s| AlignedUtterance {
            id: "u".into(),
            symbols: s.iter().map(|x| PairSymbol::parse(x).unwrap()).collect(),
            weight: 1.0,
        })
        .collect();
        let counts = count_ngrams(&corpus, order);
        let model = estimate_modified_kneser_ney(&counts, &estimate_discounts(&counts)).unwrap();
        build_transducer(&model, cfg).unwrap()
    }

    fn cfg(nbest: usize, top: usize) -> DecodeConfig {
        DecodeConfig {
            nbest,
            output_top_k: top,
            ..DecodeConfig::default()
        }
    }

    #[test]
    fn learned_mappings_are_applied() {
        let c = cfg(10, 1);
        let fst = fixture(3, &c);
        let best = &nbest_decode(&fst, &toks("bueno no te amico"), &c).unwrap()[0];
        assert_eq!(best.tokens, toks("buonanotte amico"));
        let best = &nbest_decode(&fst, &toks("she grazie"), &c).unwrap()[0];
        assert_eq!(best.tokens, toks("sì grazie"));
    }

    #[test]
    fn passthrough_copies_unknown_words() {
        let c = cfg(5, 1);
        let fst = fixture(2, &c);
        let best = &nbest_decode(&fst, &toks("ciao bonjour"), &c).unwrap()[0];
        assert_eq!(best.tokens, toks("ciao buongiorno"));
        // a known word appearing only inside a longer source chunk
        let best = &nbest_decode(&fst, &toks("te"), &c).unwrap()[0];
        assert_eq!(best.tokens, toks("te"));
    }

    #[test]
    fn without_passthrough_unknown_words_fail() {
        let c = DecodeConfig {
            passthrough_penalty: None,
            ..cfg(5, 1)
        };
        let fst = fixture(2, &c);
        match nbest_decode(&fst, &toks("bonjour ciao amico"), &c) {
            Err(TransducerError::NoPath { matched, len }) => {
                assert_eq!(matched, 1);
                assert_eq!(len, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn path_costs_recompute_from_arcs() {
        let c = cfg(20, 20);
        let fst = fixture(3, &c);
        let paths = nbest_paths(&fst, &toks("bonjour amico grazie"), &c).unwrap();
        assert!(paths.len() > 1);
        for p in &paths {
            let sum: f64 = p.arcs.iter().map(|a| a.cost).sum::<f64>() + p.final_cost;
            assert!((sum - p.cost).abs() < 1e-9);
        }
        for w in paths.windows(2) {
            assert!(w[0].cost <= w[1].cost);
            assert_ne!(w[0].tokens, w[1].tokens);
        }
    }

    #[test]
    fn beam_only_removes_candidates() {
        let wide = cfg(50, 50);
        let fst = fixture(3, &wide);
        let input = toks("she bonjour amico");
        let all = nbest_decode(&fst, &input, &wide).unwrap();
        let narrow = DecodeConfig {
            beam: Some(5.0),
            ..wide.clone()
        };
        let pruned = nbest_decode(&fst, &input, &narrow).unwrap();
        assert!(!pruned.is_empty() && pruned.len() <= all.len());
        assert_eq!(pruned[0], all[0]);
        for c in &pruned {
            assert!(c.cost <= all[0].cost + 5.0 + 1e-9);
            assert!(all.contains(c));
        }
    }

    #[test]
    fn apply_corpus_keeps_order_and_flags_failures() {
        let c = DecodeConfig {
            passthrough_penalty: None,
            ..cfg(5, 1)
        };
        let fst = fixture(2, &c);
        let utts = vec![
            Utterance {
                id: "a".into(),
                tokens: toks("she"),
            },
            Utterance {
                id: "b".into(),
                tokens: toks("zzz"),
            },
        ];
        let out = apply_corpus(&fst, &utts, &c).unwrap();
        assert_eq!(out.failures, 1);
        assert_eq!(out.results[0].id, "a");
        assert_eq!(out.results[0].candidates[0].tokens, toks("sì"));
        assert!(out.results[1].fallback);
        assert_eq!(out.results[1].candidates[0].tokens, toks("zzz"));
        assert!(out.results[1].candidates[0].cost.is_infinite());
    }

    #[test]
    fn empty_input_decodes_to_empty_output() {
        let c = cfg(3, 1);
        let fst = fixture(2, &c);
        let best = &nbest_decode(&fst, &[], &c).unwrap()[0];
        assert!(best.tokens.is_empty());
    }
}
