//! Cluster matching across successive windows and stream assembly.
//!
//! Two clusters `a` (earlier window) and `b` (later window) are scored by the
//! modularity gain of merging them in the coupling graph of both windows:
//!
//! ```text
//! dQ(a, b) = W_ab - W_a * W_b / (2 W)
//! ```
//!
//! where `W_ab` is the summed weight of edges between the clusters, `W_a` the
//! summed strength of a cluster's nodes and `W` the total weight of the
//! two-window graph. Only pairs whose size-normalized link weight exceeds a
//! threshold are candidates. Each cluster's best match on the other side is
//! its successor (forward) or predecessor (backward); mutual best matches are
//! *paired*, and streams are maximal chains of paired clusters.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TimeWindow};
use crate::error::{Error, Result};
use crate::graph::BcGraph;
use crate::partition::{community_sum, Partition};
use crate::scalar::{cmp, Scalar};

/// Default minimum normalized link weight for a candidate pair.
pub const DEFAULT_THETA: f64 = 1e-6;

/// Aggregated link weights between the clusters of two windows, measured on
/// their joint coupling graph.
#[derive(Debug, Clone)]
pub struct InterClusterLinks<T> {
    a_count: usize,
    b_count: usize,
    raw: Vec<T>,
    size_a: Vec<usize>,
    size_b: Vec<usize>,
    strength_a: Vec<T>,
    strength_b: Vec<T>,
    internal_a: Vec<T>,
    internal_b: Vec<T>,
    total: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    A(usize),
    B(usize),
}

/// Position of every node of a two-window graph inside the node orders of
/// the two window partitions. Shared by all partitions of the same windows.
#[derive(Debug, Clone)]
pub struct CrossIndex {
    side: Vec<Side>,
    a_nodes: usize,
    b_nodes: usize,
}

impl CrossIndex {
    pub fn new<T: Scalar>(part_a: &Partition<T>, part_b: &Partition<T>, cross: &BcGraph<T>) -> Result<Self> {
        let side = cross
            .ids()
            .iter()
            .map(|id| match (part_a.nodes().index_of(id), part_b.nodes().index_of(id)) {
                (Some(i), None) => Ok(Side::A(i)),
                (None, Some(j)) => Ok(Side::B(j)),
                (Some(_), Some(_)) => Err(Error::validation(format!("node `{id}` is in both partitions"))),
                (None, None) => Err(Error::validation(format!("node `{id}` is in neither partition"))),
            })
            .collect::<Result<_>>()?;
        Ok(CrossIndex {
            side,
            a_nodes: part_a.node_count(),
            b_nodes: part_b.node_count(),
        })
    }

    fn check<T: Scalar>(&self, part_a: &Partition<T>, part_b: &Partition<T>) -> Result<()> {
        if part_a.node_count() != self.a_nodes || part_b.node_count() != self.b_nodes {
            return Err(Error::validation("partition does not match the cross-period index"));
        }
        Ok(())
    }
}

impl<T: Scalar> InterClusterLinks<T> {
    pub fn new(part_a: &Partition<T>, part_b: &Partition<T>, cross: &BcGraph<T>) -> Result<Self> {
        let index = CrossIndex::new(part_a, part_b, cross)?;
        Self::with_index(&index, part_a, part_b, cross)
    }

    pub fn with_index(
        index: &CrossIndex,
        part_a: &Partition<T>,
        part_b: &Partition<T>,
        cross: &BcGraph<T>,
    ) -> Result<Self> {
        index.check(part_a, part_b)?;
        let (a_count, b_count) = (part_a.community_count(), part_b.community_count());
        let mut links = InterClusterLinks {
            a_count,
            b_count,
            raw: vec![T::zero(); a_count * b_count],
            size_a: part_a.community_sizes(),
            size_b: part_b.community_sizes(),
            strength_a: vec![T::zero(); a_count],
            strength_b: vec![T::zero(); b_count],
            internal_a: vec![T::zero(); a_count],
            internal_b: vec![T::zero(); b_count],
            total: cross.total_weight(),
        };
        let cluster = |node: usize| match index.side[node] {
            Side::A(i) => Side::A(part_a.assignment()[i]),
            Side::B(j) => Side::B(part_b.assignment()[j]),
        };
        for node in 0..cross.node_count() {
            match cluster(node) {
                Side::A(a) => links.strength_a[a] = links.strength_a[a] + cross.strength(node),
                Side::B(b) => links.strength_b[b] = links.strength_b[b] + cross.strength(node),
            }
        }
        for &(i, j, w) in cross.edges() {
            match (cluster(i), cluster(j)) {
                (Side::A(a), Side::B(b)) | (Side::B(b), Side::A(a)) => {
                    let k = a * b_count + b;
                    links.raw[k] = links.raw[k] + w;
                }
                (Side::A(x), Side::A(y)) if x == y => links.internal_a[x] = links.internal_a[x] + w + w,
                (Side::B(x), Side::B(y)) if x == y => links.internal_b[x] = links.internal_b[x] + w + w,
                _ => {}
            }
        }
        Ok(links)
    }

    pub fn a_count(&self) -> usize {
        self.a_count
    }

    pub fn b_count(&self) -> usize {
        self.b_count
    }

    /// Summed weight of edges between cluster `a` and cluster `b`.
    pub fn omega_raw(&self, a: usize, b: usize) -> T {
        self.raw[a * self.b_count + b]
    }

    /// `omega_raw / (|a| |b|)`.
    pub fn omega_norm(&self, a: usize, b: usize) -> T {
        self.omega_raw(a, b) / T::from_count(self.size_a[a] * self.size_b[b])
    }

    pub fn strength_a(&self, a: usize) -> T {
        self.strength_a[a]
    }

    pub fn strength_b(&self, b: usize) -> T {
        self.strength_b[b]
    }

    pub fn size_a(&self, a: usize) -> usize {
        self.size_a[a]
    }

    pub fn size_b(&self, b: usize) -> usize {
        self.size_b[b]
    }

    /// Total edge weight of the two-window graph.
    pub fn total(&self) -> T {
        self.total
    }

    pub fn delta_q(&self, a: usize, b: usize) -> T {
        delta_q(self.omega_raw(a, b), self.strength_a[a], self.strength_b[b], self.total)
    }

    /// Modularity of the two-window graph under the union of both partitions.
    pub fn union_modularity(&self) -> T {
        community_sum(&self.internal_a, &self.strength_a, self.total)
            + community_sum(&self.internal_b, &self.strength_b, self.total)
    }

    /// Modularity of the two-window graph once every paired cluster couple
    /// of `matching` is merged into one community.
    pub fn merged_modularity(&self, matching: &MatchResult<T>) -> T {
        let gain: T = matching.pairs.iter().map(|&(a, b)| self.delta_q(a, b)).sum();
        self.union_modularity() + gain / self.total
    }
}

/// `W_ab - W_a W_b / 2W`.
pub fn delta_q<T: Scalar>(omega_ab: T, strength_a: T, strength_b: T, total: T) -> T {
    omega_ab - strength_a * strength_b / (total + total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestMatch<T> {
    pub cluster: usize,
    pub delta_q: T,
    pub omega: T,
}

/// Matching between the clusters of two successive windows.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult<T> {
    pub a_count: usize,
    pub b_count: usize,
    /// Best match in the later window, per earlier cluster.
    pub successor: Vec<Option<BestMatch<T>>>,
    /// Best match in the earlier window, per later cluster.
    pub predecessor: Vec<Option<BestMatch<T>>>,
    /// Mutual best matches `(a, b)`.
    pub pairs: Vec<(usize, usize)>,
    /// `(a, b)`: `a` is `b`'s predecessor but `b` is not `a`'s successor.
    pub splits: Vec<(usize, usize)>,
    /// `(a, b)`: `b` is `a`'s successor but `a` is not `b`'s predecessor.
    pub merges: Vec<(usize, usize)>,
}

impl<T: Scalar> MatchResult<T> {
    /// Applies the candidate threshold and best-match rules to precomputed
    /// links. Ties in `dQ` go to the larger normalized weight, then to the
    /// smaller cluster id. Best matches with `dQ <= 0` are kept.
    pub fn from_links(links: &InterClusterLinks<T>, theta: T) -> Self {
        let better = |cand: &BestMatch<T>, cur: &Option<BestMatch<T>>| match cur {
            None => true,
            Some(c) => match cmp(cand.delta_q, c.delta_q) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => cand.omega > c.omega,
            },
        };
        let mut successor: Vec<Option<BestMatch<T>>> = vec![None; links.a_count];
        let mut predecessor: Vec<Option<BestMatch<T>>> = vec![None; links.b_count];
        for a in 0..links.a_count {
            for b in 0..links.b_count {
                let omega = links.omega_norm(a, b);
                if omega <= theta {
                    continue;
                }
                let dq = links.delta_q(a, b);
                let fwd = BestMatch { cluster: b, delta_q: dq, omega };
                if better(&fwd, &successor[a]) {
                    successor[a] = Some(fwd);
                }
                let back = BestMatch { cluster: a, delta_q: dq, omega };
                if better(&back, &predecessor[b]) {
                    predecessor[b] = Some(back);
                }
            }
        }
        let mut pairs = Vec::new();
        let mut merges = Vec::new();
        for (a, s) in successor.iter().enumerate() {
            if let Some(s) = s {
                if predecessor[s.cluster].map(|p| p.cluster) == Some(a) {
                    pairs.push((a, s.cluster));
                } else {
                    merges.push((a, s.cluster));
                }
            }
        }
        let mut splits = Vec::new();
        for (b, p) in predecessor.iter().enumerate() {
            if let Some(p) = p {
                if successor[p.cluster].map(|s| s.cluster) != Some(b) {
                    splits.push((p.cluster, b));
                }
            }
        }
        splits.sort_unstable();
        MatchResult {
            a_count: links.a_count,
            b_count: links.b_count,
            successor,
            predecessor,
            pairs,
            splits,
            merges,
        }
    }

    /// Matching with no clusters on one or both sides.
    pub fn empty(a_count: usize, b_count: usize) -> Self {
        MatchResult {
            a_count,
            b_count,
            successor: vec![None; a_count],
            predecessor: vec![None; b_count],
            pairs: Vec::new(),
            splits: Vec::new(),
            merges: Vec::new(),
        }
    }

    pub fn paired_successor(&self, a: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == a).map(|p| p.1)
    }
}

/// Matches the clusters of two windows on their joint coupling graph.
pub fn match_periods<T: Scalar>(
    part_a: &Partition<T>,
    part_b: &Partition<T>,
    cross: &BcGraph<T>,
    theta: T,
) -> Result<MatchResult<T>> {
    let links = InterClusterLinks::new(part_a, part_b, cross)?;
    Ok(MatchResult::from_links(&links, theta))
}

/// Publication ids of each cluster of one window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowClusters {
    pub window: usize,
    pub clusters: Vec<Vec<String>>,
}

impl WindowClusters {
    pub fn from_partition<T: Scalar>(window: usize, partition: &Partition<T>) -> Self {
        WindowClusters {
            window,
            clusters: partition.clusters(),
        }
    }

    pub fn empty(window: usize) -> Self {
        WindowClusters {
            window,
            clusters: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Split,
    Merge,
}

/// A split or merge observed at the boundary between windows `boundary`
/// and `boundary + 1`, carried by the non-paired best-match link.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamEvent<T> {
    pub boundary: usize,
    pub kind: EventKind,
    pub from_stream: usize,
    pub to_stream: usize,
    pub from_cluster: usize,
    pub to_cluster: usize,
    pub delta_q: T,
    pub omega: T,
}

/// One window's cluster inside a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamCluster<T> {
    pub window: usize,
    pub cluster: usize,
    pub publications: Vec<String>,
    pub label: Option<String>,
    /// Pairing link from the previous cluster of the stream, if any.
    pub link: Option<BestMatch<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stream<T> {
    pub id: usize,
    pub clusters: Vec<StreamCluster<T>>,
}

impl<T> Stream<T> {
    pub fn size(&self) -> usize {
        self.clusters.iter().map(|c| c.publications.len()).sum()
    }

    pub fn first_window(&self) -> usize {
        self.clusters[0].window
    }

    pub fn last_window(&self) -> usize {
        self.clusters[self.clusters.len() - 1].window
    }
}

/// Historical streams with a publication membership function and the
/// dynamical events between them.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSet<T> {
    pub streams: Vec<Stream<T>>,
    pub membership: BTreeMap<String, usize>,
    pub events: Vec<StreamEvent<T>>,
    /// Time windows the cluster `window` indices refer to, when known.
    pub windows: Vec<TimeWindow>,
}

impl<T: Scalar> StreamSet<T> {
    /// Chains paired clusters into streams. `matches[k]` links
    /// `windows[k]` and `windows[k + 1]`.
    pub fn build(matches: &[MatchResult<T>], windows: &[WindowClusters]) -> Result<Self> {
        if windows.is_empty() {
            if !matches.is_empty() {
                return Err(Error::validation("matchings given without windows"));
            }
            return Ok(StreamSet {
                streams: Vec::new(),
                membership: BTreeMap::new(),
                events: Vec::new(),
                windows: Vec::new(),
            });
        }
        if matches.len() + 1 != windows.len() {
            return Err(Error::validation(format!(
                "{} windows need {} matchings, got {}",
                windows.len(),
                windows.len() - 1,
                matches.len()
            )));
        }
        for (k, pair) in windows.windows(2).enumerate() {
            if pair[1].window != pair[0].window + 1 {
                return Err(Error::validation("windows must be consecutive"));
            }
            let m = &matches[k];
            if m.a_count != pair[0].clusters.len() || m.b_count != pair[1].clusters.len() {
                return Err(Error::validation(format!(
                    "matching {k} is {}x{}, windows have {} and {} clusters",
                    m.a_count,
                    m.b_count,
                    pair[0].clusters.len(),
                    pair[1].clusters.len()
                )));
            }
        }

        let mut streams: Vec<Stream<T>> = Vec::new();
        let mut stream_of: Vec<Vec<usize>> = Vec::with_capacity(windows.len());
        for (k, wc) in windows.iter().enumerate() {
            let mut here = Vec::with_capacity(wc.clusters.len());
            let paired_pred: HashMap<usize, usize> = if k == 0 {
                HashMap::new()
            } else {
                matches[k - 1].pairs.iter().map(|&(a, b)| (b, a)).collect()
            };
            for (c, pubs) in wc.clusters.iter().enumerate() {
                let cluster = StreamCluster {
                    window: wc.window,
                    cluster: c,
                    publications: pubs.clone(),
                    label: None,
                    link: None,
                };
                let sid = match paired_pred.get(&c) {
                    Some(&a) => {
                        let sid = stream_of[k - 1][a];
                        let link = matches[k - 1].predecessor[c];
                        streams[sid].clusters.push(StreamCluster { link, ..cluster });
                        sid
                    }
                    None => {
                        let sid = streams.len();
                        streams.push(Stream {
                            id: sid,
                            clusters: vec![cluster],
                        });
                        sid
                    }
                };
                here.push(sid);
            }
            stream_of.push(here);
        }

        let mut membership = BTreeMap::new();
        for s in &streams {
            for c in &s.clusters {
                for p in &c.publications {
                    if membership.insert(p.clone(), s.id).is_some() {
                        return Err(Error::validation(format!("publication `{p}` appears in two clusters")));
                    }
                }
            }
        }

        let mut events = Vec::new();
        for (k, m) in matches.iter().enumerate() {
            let boundary = windows[k].window;
            for &(a, b) in &m.splits {
                let link = m.predecessor[b].expect("split target has a predecessor");
                events.push(StreamEvent {
                    boundary,
                    kind: EventKind::Split,
                    from_stream: stream_of[k][a],
                    to_stream: stream_of[k + 1][b],
                    from_cluster: a,
                    to_cluster: b,
                    delta_q: link.delta_q,
                    omega: link.omega,
                });
            }
            for &(a, b) in &m.merges {
                let link = m.successor[a].expect("merge source has a successor");
                events.push(StreamEvent {
                    boundary,
                    kind: EventKind::Merge,
                    from_stream: stream_of[k][a],
                    to_stream: stream_of[k + 1][b],
                    from_cluster: a,
                    to_cluster: b,
                    delta_q: link.delta_q,
                    omega: link.omega,
                });
            }
        }

        Ok(StreamSet {
            streams,
            membership,
            events,
            windows: Vec::new(),
        })
    }

    /// Sets each stream cluster's label to the most frequent publication
    /// label in it (lexicographically smallest on ties), falling back to the
    /// stream id when no publication carries a label.
    pub fn label(&mut self, corpus: &Corpus) {
        for s in &mut self.streams {
            for c in &mut s.clusters {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for p in &c.publications {
                    if let Some(label) = corpus.get(p).and_then(|p| p.label.as_deref()) {
                        *counts.entry(label).or_default() += 1;
                    }
                }
                // BTreeMap iterates in lexicographic order; keep the first maximum
                let mut best: Option<(&str, usize)> = None;
                for (label, n) in counts {
                    if best.is_none_or(|(_, m)| n > m) {
                        best = Some((label, n));
                    }
                }
                c.label = Some(best.map_or_else(|| s.id.to_string(), |(l, _)| l.to_string()));
            }
        }
    }

    pub fn stream_count(&self) -> usize {
        self.streams.len()
    }
}
