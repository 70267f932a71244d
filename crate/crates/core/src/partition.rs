//! Weighted modularity and seeded Louvain optimization.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{BcGraph, NodeIndex};
use crate::scalar::Scalar;

/// Stop aggregating once a level improves modularity by less than this.
pub const LEVEL_GAIN_TOLERANCE: f64 = 1e-9;

/// Community assignment of every node of one graph.
///
/// Community ids are dense (`0..k`) and numbered by each community's
/// smallest node id.
#[derive(Debug, Clone)]
pub struct Partition<T> {
    nodes: Arc<NodeIndex>,
    graph_digest: String,
    assignment: Vec<usize>,
    community_count: usize,
    modularity: T,
    seed: Option<u64>,
}

impl<T: Scalar> Partition<T> {
    /// Wraps an arbitrary labelling of `graph`'s nodes (indexed as in the
    /// graph). Labels need not be dense; they are renumbered canonically.
    pub fn from_assignment(graph: &BcGraph<T>, labels: Vec<usize>, seed: Option<u64>) -> Result<Self> {
        let modularity = modularity(graph, &labels)?;
        let (assignment, community_count) = canonical(&labels);
        Ok(Partition {
            nodes: graph.nodes().clone(),
            graph_digest: graph.digest().to_string(),
            assignment,
            community_count,
            modularity,
            seed,
        })
    }

    /// Partition from a publication-id keyed map; every node must be present.
    pub fn from_map(graph: &BcGraph<T>, labels: &HashMap<String, usize>) -> Result<Self> {
        Self::from_assignment(graph, assignment_from_map(graph, labels)?, None)
    }

    /// Community of each node, in graph node order.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_of(&self, id: &str) -> Option<usize> {
        self.nodes.index_of(id).map(|i| self.assignment[i])
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn modularity(&self) -> T {
        self.modularity
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn graph_digest(&self) -> &str {
        &self.graph_digest
    }

    pub fn nodes(&self) -> &Arc<NodeIndex> {
        &self.nodes
    }

    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.community_count];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Publication ids of each community, sorted.
    pub fn clusters(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.community_count];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(self.nodes.ids()[node].clone());
        }
        out
    }

    /// Same clustering, i.e. identical assignment on the same graph.
    pub fn same_clustering(&self, other: &Self) -> bool {
        self.graph_digest == other.graph_digest && self.assignment == other.assignment
    }
}

/// Relabels communities densely, in order of first appearance by node index.
fn canonical(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

pub fn assignment_from_map<T: Scalar>(graph: &BcGraph<T>, labels: &HashMap<String, usize>) -> Result<Vec<usize>> {
    graph
        .ids()
        .iter()
        .map(|id| {
            labels
                .get(id)
                .copied()
                .ok_or_else(|| Error::validation(format!("node `{id}` has no community")))
        })
        .collect()
}

/// Weighted modularity of `assignment` (indexed by graph node), evaluated as
/// `sum_c [in_c / 2W - (tot_c / 2W)^2]` where `in_c` counts each internal edge
/// in both directions and `W` is the total edge weight.
pub fn modularity<T: Scalar>(graph: &BcGraph<T>, assignment: &[usize]) -> Result<T> {
    if assignment.len() != graph.node_count() {
        return Err(Error::validation(format!(
            "assignment covers {} nodes, graph has {}",
            assignment.len(),
            graph.node_count()
        )));
    }
    if graph.is_empty() {
        return Err(Error::EmptyGraph("modularity undefined".into()));
    }
    let (dense, k) = canonical(assignment);
    let mut internal = vec![T::zero(); k];
    let mut total = vec![T::zero(); k];
    for (node, &c) in dense.iter().enumerate() {
        total[c] = total[c] + graph.strength(node);
    }
    for &(i, j, w) in graph.edges() {
        if dense[i] == dense[j] {
            internal[dense[i]] = internal[dense[i]] + w + w;
        }
    }
    Ok(community_sum(&internal, &total, graph.total_weight()))
}

/// `sum_c [in_c/2W - (tot_c/2W)^2]` from per-community aggregates.
pub(crate) fn community_sum<T: Scalar>(internal: &[T], total: &[T], total_weight: T) -> T {
    let two_w = total_weight + total_weight;
    internal
        .iter()
        .zip(total)
        .map(|(&inn, &tot)| {
            let t = tot / two_w;
            inn / two_w - t * t
        })
        .sum()
}

/// Working graph of one Louvain level; `self_loop[c]` holds the internal
/// weight of an aggregated node counted over ordered pairs.
struct Level<T> {
    adj: Vec<Vec<(usize, T)>>,
    self_loop: Vec<T>,
    strength: Vec<T>,
}

impl<T: Scalar> Level<T> {
    fn from_graph(graph: &BcGraph<T>) -> Self {
        let n = graph.node_count();
        Level {
            adj: (0..n).map(|i| graph.neighbors(i).collect()).collect(),
            self_loop: vec![T::zero(); n],
            strength: graph.strengths().to_vec(),
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Collapses each community (dense ids `0..k`) into one node.
    fn aggregate(&self, comm: &[usize], k: usize) -> Self {
        let mut strength = vec![T::zero(); k];
        let mut self_loop = vec![T::zero(); k];
        let mut rows: Vec<HashMap<usize, T>> = vec![HashMap::new(); k];
        for u in 0..self.len() {
            let cu = comm[u];
            strength[cu] = strength[cu] + self.strength[u];
            self_loop[cu] = self_loop[cu] + self.self_loop[u];
            for &(v, w) in &self.adj[u] {
                let cv = comm[v];
                if cu == cv {
                    self_loop[cu] = self_loop[cu] + w;
                } else {
                    let e = rows[cu].entry(cv).or_insert_with(T::zero);
                    *e = *e + w;
                }
            }
        }
        let adj = rows
            .into_iter()
            .map(|row| {
                let mut r: Vec<(usize, T)> = row.into_iter().collect();
                r.sort_unstable_by_key(|e| e.0);
                r
            })
            .collect();
        Level { adj, self_loop, strength }
    }

    /// Modularity of the level's trivial partition (each node alone).
    fn singleton_quality(&self, two_m: T) -> T {
        self.self_loop
            .iter()
            .zip(&self.strength)
            .map(|(&s, &k)| {
                let t = k / two_m;
                s / two_m - t * t
            })
            .sum()
    }
}

/// Single-node move phase. Visits nodes in `order` repeatedly until a full
/// sweep makes no move; a node moves only when the best gain exceeds staying
/// put by more than a rounding floor. Ties keep the current community and
/// otherwise go to the lowest community id. Returns whether any node moved.
fn move_phase<T: Scalar>(level: &Level<T>, comm: &mut [usize], order: &[usize], two_m: T) -> bool {
    let n = level.len();
    let mut tot = vec![T::zero(); n];
    let mut size = vec![0usize; n];
    for u in 0..n {
        tot[comm[u]] = tot[comm[u]] + level.strength[u];
        size[comm[u]] += 1;
    }
    let mut free: Vec<usize> = (0..n).filter(|&c| size[c] == 0).rev().collect();
    let mut link = vec![T::zero(); n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let floor = T::epsilon() * T::lit(1024.0);

    let mut any = false;
    loop {
        let mut moved = false;
        for &u in order {
            let old = comm[u];
            let k = level.strength[u];
            for &(v, w) in &level.adj[u] {
                let c = comm[v];
                if !seen[c] {
                    seen[c] = true;
                    touched.push(c);
                }
                link[c] = link[c] + w;
            }
            tot[old] = tot[old] - k;
            size[old] -= 1;

            let tol = floor * (k + T::one());
            let gain = |c: usize, link: &[T], tot: &[T]| link[c] - tot[c] * k / two_m;
            let mut best = old;
            let mut best_gain = gain(old, &link, &tot);
            touched.sort_unstable();
            for &c in &touched {
                if c == old {
                    continue;
                }
                let g = gain(c, &link, &tot);
                if g > best_gain + tol {
                    best = c;
                    best_gain = g;
                }
            }
            // moving into an empty community has zero gain
            if size[old] > 0 && T::zero() > best_gain + tol {
                if let Some(&c) = free.last() {
                    best = c;
                }
            }

            if best != old {
                if free.last() == Some(&best) {
                    free.pop();
                }
                if size[old] == 0 {
                    free.push(old);
                }
                comm[u] = best;
                moved = true;
            }
            tot[best] = tot[best] + k;
            size[best] += 1;
            for &c in &touched {
                link[c] = T::zero();
                seen[c] = false;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
        any = true;
    }
    any
}

/// Result of a traced Louvain run: the partition plus the modularity after
/// every move or aggregation phase, in execution order.
pub struct LouvainTrace<T> {
    pub partition: Partition<T>,
    pub phase_modularity: Vec<T>,
}

/// Louvain optimization of `graph`, deterministic for a fixed seed.
pub fn louvain<T: Scalar>(graph: &BcGraph<T>, seed: u64) -> Result<Partition<T>> {
    louvain_traced(graph, seed).map(|t| t.partition)
}

pub fn louvain_traced<T: Scalar>(graph: &BcGraph<T>, seed: u64) -> Result<LouvainTrace<T>> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph("cannot partition a graph without edges".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Level::from_graph(graph);
    let n = base.len();
    let two_m = graph.total_weight() + graph.total_weight();
    let level_tol = T::lit(LEVEL_GAIN_TOLERANCE);

    let mut fine: Vec<usize> = (0..n).collect();
    let mut trace = vec![base.singleton_quality(two_m)];
    let mut order: Vec<usize> = (0..n).collect();
    loop {
        order.shuffle(&mut rng);
        if !move_phase(&base, &mut fine, &order, two_m) {
            // no single-node move improves the finest level any more
            break;
        }
        let (dense, k) = canonical(&fine);
        fine = dense;
        let mut level = base.aggregate(&fine, k);
        let mut q = level.singleton_quality(two_m);
        trace.push(q);
        loop {
            let mut comm: Vec<usize> = (0..level.len()).collect();
            let mut order: Vec<usize> = (0..level.len()).collect();
            order.shuffle(&mut rng);
            if !move_phase(&level, &mut comm, &order, two_m) {
                break;
            }
            let (dense, k) = canonical(&comm);
            for c in fine.iter_mut() {
                *c = dense[*c];
            }
            level = level.aggregate(&dense, k);
            let next = level.singleton_quality(two_m);
            trace.push(next);
            let gain = next - q;
            q = next;
            if gain < level_tol {
                break;
            }
        }
    }
    let partition = Partition::from_assignment(graph, fine, Some(seed))?;
    Ok(LouvainTrace {
        partition,
        phase_modularity: trace,
    })
}

/// `n_runs` independent Louvain runs; run `i` uses seed `base_seed + i`.
#[derive(Debug, Clone)]
pub struct Ensemble<T> {
    pub partitions: Vec<Partition<T>>,
    pub base_seed: u64,
}

impl<T: Scalar> Ensemble<T> {
    pub fn run(graph: &BcGraph<T>, n_runs: usize, base_seed: u64) -> Result<Self> {
        if n_runs == 0 {
            return Err(Error::validation("an ensemble needs at least one run"));
        }
        let partitions = (0..n_runs as u64)
            .into_par_iter()
            .map(|i| louvain(graph, base_seed.wrapping_add(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble { partitions, base_seed })
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    /// Index of the run with the highest modularity; the earliest run wins
    /// ties.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.partitions.iter().enumerate().skip(1) {
            if p.modularity() > self.partitions[best].modularity() {
                best = i;
            }
        }
        best
    }

    pub fn best_modularity(&self) -> &Partition<T> {
        &self.partitions[self.best_index()]
    }

    /// Largest minus smallest modularity across runs.
    pub fn modularity_spread(&self) -> T {
        let qs = self.partitions.iter().map(|p| p.modularity());
        let max = qs.clone().fold(T::neg_infinity(), T::max);
        let min = qs.fold(T::infinity(), T::min);
        max - min
    }
}
