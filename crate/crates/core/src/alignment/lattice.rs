use crate::corpus::UtterancePair;

use super::{AlignError, AlignmentConfig, PairSymbol};

/// An edge `(i, j) -> (i + a, j + b)` consuming `a` hypothesis words and `b`
/// reference words.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeEdge {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub symbol: PairSymbol,
}

/// Monotone alignment lattice of one pair. Node `(i, j)` stands for the
/// hypothesis prefix of length `i` and the reference prefix of length `j`;
/// edges are listed in topological order of their source node.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub hyp_len: usize,
    pub ref_len: usize,
    pub edges: Vec<LatticeEdge>,
}

impl Lattice {
    pub fn node_index(&self, node: (usize, usize)) -> usize {
        node.0 * (self.ref_len + 1) + node.1
    }

    pub fn num_nodes(&self) -> usize {
        (self.hyp_len + 1) * (self.ref_len + 1)
    }

    /// Every start-to-final path, as edge index sequences. Exponential; for tests
    /// and diagnostics on small lattices.
    pub fn enumerate_paths(&self) -> Vec<Vec<usize>> {
        let mut out_edges = vec![Vec::new(); self.num_nodes()];
        for (k, e) in self.edges.iter().enumerate() {
            out_edges[self.node_index(e.from)].push(k);
        }
        let final_node = self.node_index((self.hyp_len, self.ref_len));
        let mut paths = Vec::new();
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((node, path)) = stack.pop() {
            if node == final_node {
                paths.push(path);
                continue;
            }
            for &k in out_edges[node].iter().rev() {
                let mut next = path.clone();
                next.push(k);
                stack.push((self.node_index(self.edges[k].to), next));
            }
        }
        paths
    }
}

/// Calls `f(i, j, a, b)` for every edge of the `n x m` lattice, ordered by
/// source node index `i * (m + 1) + j`.
pub(crate) fn for_each_span(
    n: usize,
    m: usize,
    cfg: &AlignmentConfig,
    mut f: impl FnMut(usize, usize, usize, usize),
) {
    for i in 0..=n {
        for j in 0..=m {
            for a in 0..=cfg.max_x.min(n - i) {
                for b in 0..=cfg.max_y.min(m - j) {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    if a == 0 && !cfg.allow_target_insertion {
                        continue;
                    }
                    if b == 0 && !cfg.allow_source_deletion {
                        continue;
                    }
                    f(i, j, a, b);
                }
            }
        }
    }
}

pub(crate) fn within_guard(n: usize, m: usize, cfg: &AlignmentConfig) -> bool {
    (n > 0 || m > 0) && n <= 10 * cfg.max_x * m
}

/// Whether the final node can be reached; `n`/`m` are sequence lengths.
pub(crate) fn is_alignable(n: usize, m: usize, cfg: &AlignmentConfig) -> bool {
    if !within_guard(n, m, cfg) {
        return false;
    }
    let width = m + 1;
    let mut reach = vec![false; (n + 1) * width];
    reach[0] = true;
    for_each_span(n, m, cfg, |i, j, a, b| {
        if reach[i * width + j] {
            reach[(i + a) * width + j + b] = true;
        }
    });
    reach[n * width + m]
}

pub fn build_lattice(pair: &UtterancePair, cfg: &AlignmentConfig) -> Result<Lattice, AlignError> {
    cfg.validate()?;
    let (n, m) = (pair.hypothesis.len(), pair.reference.len());
    if !is_alignable(n, m, cfg) {
        return Err(AlignError::Unalignable(pair.id.clone()));
    }
    let mut edges = Vec::new();
    for_each_span(n, m, cfg, |i, j, a, b| {
        edges.push(LatticeEdge {
            from: (i, j),
            to: (i + a, j + b),
            symbol: PairSymbol {
                source: pair.hypothesis[i..i + a].to_vec(),
                target: pair.reference[j..j + b].to_vec(),
            },
        });
    });
    Ok(Lattice {
        hyp_len: n,
        ref_len: m,
        edges,
    })
}

#[inline]
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Edge with node indices and a symbol slot, for the EM inner loop.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CompactEdge {
    pub from: u32,
    pub to: u32,
    pub sym: u32,
}

/// Forward and backward log scores over a topologically ordered edge list.
/// Returns `(alpha, beta)`; `alpha[last]` is the log partition.
pub(crate) fn forward_backward(
    num_nodes: usize,
    edges: &[CompactEdge],
    logp: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut alpha = vec![f64::NEG_INFINITY; num_nodes];
    let mut beta = vec![f64::NEG_INFINITY; num_nodes];
    alpha[0] = 0.0;
    for e in edges {
        let from = alpha[e.from as usize];
        if from == f64::NEG_INFINITY {
            continue;
        }
        let to = &mut alpha[e.to as usize];
        *to = log_add(*to, from + logp[e.sym as usize]);
    }
    beta[num_nodes - 1] = 0.0;
    for e in edges.iter().rev() {
        let to = beta[e.to as usize];
        if to == f64::NEG_INFINITY {
            continue;
        }
        let from = &mut beta[e.from as usize];
        *from = log_add(*from, to + logp[e.sym as usize]);
    }
    (alpha, beta)
}

/// Posterior probability of every lattice edge, plus the log partition, with
/// symbol probabilities supplied by `prob` (zero excludes the edge).
pub fn edge_posteriors(lattice: &Lattice, prob: impl Fn(&PairSymbol) -> f64) -> (Vec<f64>, f64) {
    let logp: Vec<f64> = lattice.edges.iter().map(|e| prob(&e.symbol).ln()).collect();
    let compact: Vec<CompactEdge> = lattice
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| CompactEdge {
            from: lattice.node_index(e.from) as u32,
            to: lattice.node_index(e.to) as u32,
            sym: k as u32,
        })
        .collect();
    let (alpha, beta) = forward_backward(lattice.num_nodes(), &compact, &logp);
    let log_z = alpha[lattice.num_nodes() - 1];
    let post = compact
        .iter()
        .map(|e| (alpha[e.from as usize] + logp[e.sym as usize] + beta[e.to as usize] - log_z).exp())
        .collect();
    (post, log_z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::normalize_text;

    fn pair(h: &str, r: &str) -> UtterancePair {
        UtterancePair::new("p", normalize_text(h).unwrap(), normalize_text(r).unwrap())
    }

    fn cfg(max_x: usize, max_y: usize) -> AlignmentConfig {
        AlignmentConfig {
            max_x,
            max_y,
            ..AlignmentConfig::default()
        }
    }

    #[test]
    fn identity_one_by_one() {
        let c = AlignmentConfig {
            allow_source_deletion: false,
            allow_target_insertion: false,
            ..cfg(1, 1)
        };
        let lat = build_lattice(&pair("stop", "stop"), &c).unwrap();
        assert_eq!(lat.edges.len(), 1);
        assert_eq!(lat.enumerate_paths().len(), 1);
        assert_eq!(lat.edges[0].symbol, PairSymbol::parse_words("stop", "stop"));

        // with insertions/deletions the 1x1 lattice also has the two-edge detours
        let lat = build_lattice(&pair("stop", "stop"), &cfg(1, 1)).unwrap();
        assert_eq!(lat.enumerate_paths().len(), 3);
    }

    #[test]
    fn three_to_one_chunk_edge() {
        let lat = build_lattice(&pair("bueno no te", "buonanotte"), &cfg(3, 3)).unwrap();
        let whole = PairSymbol::parse_words("bueno no te", "buonanotte");
        assert!(lat
            .edges
            .iter()
            .any(|e| e.from == (0, 0) && e.to == (3, 1) && e.symbol == whole));
    }

    #[test]
    fn empty_hypothesis_needs_insertions() {
        let c = AlignmentConfig {
            allow_target_insertion: false,
            ..cfg(3, 3)
        };
        assert!(matches!(
            build_lattice(&pair("", "sì"), &c),
            Err(AlignError::Unalignable(_))
        ));
        assert!(build_lattice(&pair("", "sì"), &cfg(3, 3)).is_ok());
    }

    #[test]
    fn length_guard() {
        let long = vec!["a"; 31].join(" ");
        assert!(build_lattice(&pair(&long, "b"), &cfg(3, 3)).is_err());
        let ok = vec!["a"; 30].join(" ");
        assert!(build_lattice(&pair(&ok, "b"), &cfg(3, 3)).is_ok());
    }

    #[test]
    fn edges_stay_in_bounds_and_topological() {
        let lat = build_lattice(&pair("a b c d", "x y"), &cfg(2, 3)).unwrap();
        let mut last = 0;
        for e in &lat.edges {
            let (fi, fj) = e.from;
            let (ti, tj) = e.to;
            assert!(ti <= 4 && tj <= 2);
            assert!(ti - fi <= 2 && tj - fj <= 3);
            assert!(lat.node_index(e.from) >= last);
            assert!(lat.node_index(e.to) > lat.node_index(e.from));
            last = lat.node_index(e.from);
        }
    }

    #[test]
    fn posteriors_conserve_flow_at_every_node() {
        let lat = build_lattice(&pair("cause of sci-fi", "cosa sai fare"), &cfg(3, 3)).unwrap();
        // arbitrary deterministic positive weights
        let (post, log_z) = edge_posteriors(&lat, |s| {
            1.0 / (1.0 + s.source.len() as f64 + 2.0 * s.target.len() as f64)
        });
        assert!(log_z.is_finite());
        let mut node_in = vec![0.0; lat.num_nodes()];
        let mut node_out = vec![0.0; lat.num_nodes()];
        for (e, p) in lat.edges.iter().zip(&post) {
            node_out[lat.node_index(e.from)] += p;
            node_in[lat.node_index(e.to)] += p;
        }
        node_in[0] = 1.0;
        let last = lat.num_nodes() - 1;
        node_out[last] = 1.0;
        for v in 0..lat.num_nodes() {
            // occupancy flows in and out equally; outgoing edge posteriors sum to
            // one once divided by node occupancy
            assert!((node_in[v] - node_out[v]).abs() < 1e-9, "node {v}");
            if node_in[v] > 1e-12 && v != last {
                let conditional: f64 = lat
                    .edges
                    .iter()
                    .zip(&post)
                    .filter(|(e, _)| lat.node_index(e.from) == v)
                    .map(|(_, p)| p / node_in[v])
                    .sum();
                assert!((conditional - 1.0).abs() < 1e-9);
            }
        }
        let path_total: f64 = lat
            .enumerate_paths()
            .iter()
            .map(|p| {
                p.iter()
                    .map(|&k| {
                        let s = &lat.edges[k].symbol;
                        1.0 / (1.0 + s.source.len() as f64 + 2.0 * s.target.len() as f64)
                    })
                    .product::<f64>()
            })
            .sum();
        assert!((path_total.ln() - log_z).abs() < 1e-9);
    }
}
