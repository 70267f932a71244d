//! Weighted undirected bibliographic-coupling graph.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::corpus::Publication;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Node ids of a graph in their canonical (lexicographic) order.
#[derive(Debug, Default)]
pub struct NodeIndex {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl NodeIndex {
    fn new(ids: Vec<String>) -> Self {
        let lookup = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        NodeIndex { ids, lookup }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Immutable weighted graph over publications.
///
/// Nodes are indexed `0..n` in lexicographic id order, so the layout does not
/// depend on the order publications were supplied in. Every node has at least
/// one incident edge; candidates without one are listed in [`excluded`].
///
/// [`excluded`]: BcGraph::excluded
#[derive(Debug, Clone)]
pub struct BcGraph<T> {
    nodes: Arc<NodeIndex>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<T>,
    edges: Vec<(usize, usize, T)>,
    strength: Vec<T>,
    total_weight: T,
    excluded: Vec<String>,
    digest: String,
}

impl<T: Scalar> BcGraph<T> {
    /// Coupling graph with Kessler weights `R_ij / sqrt(R_i R_j)`, keeping only
    /// pairs that share at least `min_shared_refs` references.
    ///
    /// Publication ids are expected to be unique.
    pub fn coupling(pubs: &[&Publication], min_shared_refs: usize) -> Self {
        let mut sorted: Vec<&Publication> = pubs.to_vec();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        debug_assert!(sorted.windows(2).all(|w| w[0].id != w[1].id));
        let min_shared = min_shared_refs.max(1) as u32;

        let mut ref_ids: HashMap<&str, usize> = HashMap::new();
        let mut buckets: Vec<Vec<usize>> = Vec::new();
        let pub_refs: Vec<Vec<usize>> = sorted
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.refs
                    .iter()
                    .map(|r| {
                        let next = buckets.len();
                        let k = *ref_ids.entry(r.as_str()).or_insert(next);
                        if k == next {
                            buckets.push(Vec::new());
                        }
                        buckets[k].push(i);
                        k
                    })
                    .collect()
            })
            .collect();

        let n = sorted.len();
        let counts: Vec<Vec<(usize, u32)>> = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![0u32; n], Vec::new()),
                |(scratch, touched), i| {
                    for &r in &pub_refs[i] {
                        // buckets hold publication indices in increasing order
                        let bucket = &buckets[r];
                        let from = bucket.partition_point(|&j| j <= i);
                        for &j in &bucket[from..] {
                            if scratch[j] == 0 {
                                touched.push(j);
                            }
                            scratch[j] += 1;
                        }
                    }
                    touched.sort_unstable();
                    let row = touched
                        .iter()
                        .filter(|&&j| scratch[j] >= min_shared)
                        .map(|&j| (j, scratch[j]))
                        .collect();
                    for &j in touched.iter() {
                        scratch[j] = 0;
                    }
                    touched.clear();
                    row
                },
            )
            .collect();

        let mut edges = Vec::new();
        for (i, row) in counts.into_iter().enumerate() {
            let ri = T::from_count(pub_refs[i].len());
            for (j, shared) in row {
                let rj = T::from_count(pub_refs[j].len());
                let w = T::from_count(shared as usize) / (ri * rj).sqrt();
                edges.push((i, j, w));
            }
        }
        let ids = sorted.iter().map(|p| p.id.clone()).collect();
        Self::assemble(ids, edges)
    }

    /// Coupling graph over the union of two disjoint publication sets, with
    /// intra- and inter-period edges.
    pub fn cross_period(
        period_a: &[&Publication],
        period_b: &[&Publication],
        min_shared_refs: usize,
    ) -> Result<Self> {
        let in_a: std::collections::HashSet<&str> = period_a.iter().map(|p| p.id.as_str()).collect();
        if let Some(p) = period_b.iter().find(|p| in_a.contains(p.id.as_str())) {
            return Err(Error::validation(format!(
                "publication `{}` appears in both periods",
                p.id
            )));
        }
        let all: Vec<&Publication> = period_a.iter().chain(period_b).copied().collect();
        Ok(Self::coupling(&all, min_shared_refs))
    }

    /// Graph from explicit weighted edges. Weights must be finite and positive;
    /// self-loops and repeated pairs are rejected. The node set is the set of
    /// edge endpoints.
    pub fn from_edges<I, S>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, T)>,
        S: Into<String>,
    {
        let raw: Vec<(String, String, T)> = edges
            .into_iter()
            .map(|(a, b, w)| (a.into(), b.into(), w))
            .collect();
        let mut ids: Vec<String> = raw.iter().flat_map(|(a, b, _)| [a.clone(), b.clone()]).collect();
        ids.sort();
        ids.dedup();
        let index = NodeIndex::new(ids);
        let mut edges = Vec::with_capacity(raw.len());
        for (a, b, w) in raw {
            if a == b {
                return Err(Error::validation(format!("self-loop on `{a}`")));
            }
            if !(w.is_finite() && w > T::zero()) {
                return Err(Error::validation(format!("edge {a}-{b} has non-positive weight {w}")));
            }
            let (i, j) = (index.lookup[&a], index.lookup[&b]);
            edges.push((i.min(j), i.max(j), w));
        }
        edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        if let Some(w) = edges.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::validation(format!(
                "repeated edge {}-{}",
                index.ids[w[0].0], index.ids[w[0].1]
            )));
        }
        Ok(Self::assemble(index.ids, edges))
    }

    /// Builds the adjacency from canonical `(i < j)` edges over sorted `ids`,
    /// dropping nodes without incident edges.
    fn assemble(ids: Vec<String>, mut edges: Vec<(usize, usize, T)>) -> Self {
        let mut degree = vec![0usize; ids.len()];
        for &(i, j, _) in &edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut remap = vec![usize::MAX; ids.len()];
        let mut kept = Vec::new();
        let mut excluded = Vec::new();
        for (old, id) in ids.into_iter().enumerate() {
            if degree[old] > 0 {
                remap[old] = kept.len();
                kept.push(id);
            } else {
                excluded.push(id);
            }
        }
        for e in edges.iter_mut() {
            e.0 = remap[e.0];
            e.1 = remap[e.1];
        }
        edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));

        let n = kept.len();
        let mut deg = vec![0usize; n];
        for &(i, j, _) in &edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &deg {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0; offsets[n]];
        let mut weights = vec![T::zero(); offsets[n]];
        let mut strength = vec![T::zero(); n];
        for &(i, j, w) in &edges {
            targets[fill[i]] = j;
            weights[fill[i]] = w;
            fill[i] += 1;
            targets[fill[j]] = i;
            weights[fill[j]] = w;
            fill[j] += 1;
            strength[i] = strength[i] + w;
            strength[j] = strength[j] + w;
        }
        // rows come out sorted by neighbour: edges are sorted by (i, j) and
        // every row receives its lower neighbours before its higher ones
        let total_weight = edges.iter().map(|e| e.2).sum();

        let mut hasher = Sha256::new();
        for id in &kept {
            hasher.update(id.as_bytes());
            hasher.update([0u8]);
        }
        for &(i, j, w) in &edges {
            hasher.update((i as u64).to_le_bytes());
            hasher.update((j as u64).to_le_bytes());
            hasher.update(w.as_f64().to_bits().to_le_bytes());
        }
        let digest = hex::encode(hasher.finalize());

        BcGraph {
            nodes: Arc::new(NodeIndex::new(kept)),
            offsets,
            targets,
            weights,
            edges,
            strength,
            total_weight,
            excluded,
            digest,
        }
    }

    /// Same topology with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::from_edges(
            self.edges
                .iter()
                .map(|&(i, j, w)| (self.id(i).to_string(), self.id(j).to_string(), w * factor)),
        )
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn nodes(&self) -> &Arc<NodeIndex> {
        &self.nodes
    }

    pub fn ids(&self) -> &[String] {
        self.nodes.ids()
    }

    pub fn id(&self, node: usize) -> &str {
        &self.nodes.ids[node]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.index_of(id)
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.offsets[node]..self.offsets[node + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Each undirected edge once, as `(i, j, weight)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize, T)] {
        &self.edges
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<T> {
        let range = self.offsets[a]..self.offsets[a + 1];
        self.targets[range.clone()]
            .binary_search(&b)
            .ok()
            .map(|k| self.weights[range.start + k])
    }

    pub fn strength(&self, node: usize) -> T {
        self.strength[node]
    }

    pub fn strengths(&self) -> &[T] {
        &self.strength
    }

    /// Sum of edge weights, each undirected edge counted once.
    pub fn total_weight(&self) -> T {
        self.total_weight
    }

    /// Candidate publications dropped for lack of any qualifying edge.
    pub fn excluded(&self) -> &[String] {
        &self.excluded
    }

    /// SHA-256 over node ids and edges; identifies the graph a partition
    /// belongs to.
    pub fn digest(&self) -> &str {
        &self.digest
    }
}
