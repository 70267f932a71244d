//! Comparison of two stream partitions of a publication set.
//!
//! Entropies and mutual information use natural logarithms. The bipartite
//! stream graph has one node per stream of each side and, for every pair of
//! streams sharing publications, a directed edge each way weighted by the
//! shared fraction of the source stream.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Slack absorbing rounding when cumulative shares are compared to a
/// coverage threshold.
const COVERAGE_SLACK: f64 = 1e-9;

/// Total assignment of a set of publications to named streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamPartition {
    /// Publication ids, sorted.
    ids: Vec<String>,
    /// Stream index of each publication.
    labels: Vec<usize>,
    /// Stream names, sorted; indices into this are the stream indices.
    streams: Vec<String>,
}

impl StreamPartition {
    /// Builds a partition from `(publication, stream)` pairs. A publication
    /// listed twice must name the same stream both times.
    pub fn new<I, P, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, S)>,
        P: Into<String>,
        S: Into<String>,
    {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (p, s) in pairs {
            let (p, s) = (p.into(), s.into());
            if let Some(prev) = map.get(&p) {
                if *prev != s {
                    return Err(Error::validation(format!(
                        "publication `{p}` assigned to streams `{prev}` and `{s}`"
                    )));
                }
            }
            map.insert(p, s);
        }
        if map.is_empty() {
            return Err(Error::validation("a stream partition needs at least one publication"));
        }
        let mut streams: Vec<String> = map.values().cloned().collect();
        streams.sort();
        streams.dedup();
        let index: HashMap<&str, usize> = streams.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let labels = map.values().map(|s| index[s.as_str()]).collect();
        let ids = map.into_keys().collect();
        Ok(StreamPartition { ids, labels, streams })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn stream_names(&self) -> &[String] {
        &self.streams
    }

    pub fn stream_count(&self) -> usize {
        self.streams.len()
    }

    pub fn stream_of(&self, id: &str) -> Option<&str> {
        self.ids
            .binary_search_by(|x| x.as_str().cmp(id))
            .ok()
            .map(|i| self.streams[self.labels[i]].as_str())
    }

    pub fn stream_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.streams.len()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Stream index of every publication, aligned with [`ids`](Self::ids).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Publication ids grouped by stream index.
    pub fn members(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.streams.len()];
        for (id, &l) in self.ids.iter().zip(&self.labels) {
            out[l].push(id.as_str());
        }
        out
    }

    fn restricted(&self, keep: impl Fn(&str) -> bool) -> Option<Self> {
        let pairs: Vec<(String, String)> = self
            .ids
            .iter()
            .zip(&self.labels)
            .filter(|(id, _)| keep(id))
            .map(|(id, &l)| (id.clone(), self.streams[l].clone()))
            .collect();
        Self::new(pairs).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RestrictionReport {
    pub shared: usize,
    pub removed_x: usize,
    pub removed_y: usize,
    pub dropped_streams_x: usize,
    pub dropped_streams_y: usize,
}

/// Restricts both partitions to the publications they have in common.
pub fn restrict_to_shared(
    x: &StreamPartition,
    y: &StreamPartition,
) -> Result<(StreamPartition, StreamPartition, RestrictionReport)> {
    let in_y = |id: &str| y.ids.binary_search_by(|p| p.as_str().cmp(id)).is_ok();
    let in_x = |id: &str| x.ids.binary_search_by(|p| p.as_str().cmp(id)).is_ok();
    let (Some(rx), Some(ry)) = (x.restricted(in_y), y.restricted(in_x)) else {
        return Err(Error::validation("stream partitions share no publication"));
    };
    let report = RestrictionReport {
        shared: rx.len(),
        removed_x: x.len() - rx.len(),
        removed_y: y.len() - ry.len(),
        dropped_streams_x: x.stream_count() - rx.stream_count(),
        dropped_streams_y: y.stream_count() - ry.stream_count(),
    };
    Ok((rx, ry, report))
}

fn ensure_same_universe(x: &StreamPartition, y: &StreamPartition) -> Result<()> {
    if x.ids != y.ids {
        return Err(Error::validation(
            "partitions cover different publications; restrict them to the shared set first",
        ));
    }
    Ok(())
}

/// `-sum p ln p` over the given counts with `p = n / total`.
fn entropy_of_counts<T: Scalar>(counts: impl Iterator<Item = usize>, total: usize) -> T {
    let total = T::from_count(total);
    -counts
        .filter(|&n| n > 0)
        .map(|n| {
            let p = T::from_count(n) / total;
            p * p.ln()
        })
        .sum::<T>()
}

/// Shannon entropy (nats) of the stream-size distribution.
pub fn entropy<T: Scalar>(p: &StreamPartition) -> T {
    entropy_of_counts(p.stream_sizes().into_iter(), p.len())
}

/// Sparse contingency counts `(x stream, y stream) -> shared publications`.
fn contingency(x: &StreamPartition, y: &StreamPartition) -> BTreeMap<(usize, usize), usize> {
    let mut table = BTreeMap::new();
    for (&a, &b) in x.labels.iter().zip(&y.labels) {
        *table.entry((a, b)).or_insert(0) += 1;
    }
    table
}

/// `H(X | Y)`: expected entropy of the X stream within each Y stream.
fn conditional_entropy<T: Scalar>(x: &StreamPartition, y: &StreamPartition) -> T {
    let n = T::from_count(x.len());
    let y_sizes = y.stream_sizes();
    let mut per_y: Vec<Vec<usize>> = vec![Vec::new(); y.stream_count()];
    for ((_, b), count) in contingency(x, y) {
        per_y[b].push(count);
    }
    per_y
        .into_iter()
        .zip(y_sizes)
        .filter(|(_, size)| *size > 0)
        .map(|(counts, size)| T::from_count(size) / n * entropy_of_counts::<T>(counts.into_iter(), size))
        .sum()
}

/// Mutual information `H(X) - H(X | Y)` in nats, clamped at zero.
pub fn mutual_information<T: Scalar>(x: &StreamPartition, y: &StreamPartition) -> Result<T> {
    ensure_same_universe(x, y)?;
    let mi = entropy::<T>(x) - conditional_entropy::<T>(x, y);
    Ok(mi.max(T::zero()))
}

/// MI normalized by the entropy of `x`: 1 when `x` can be read off `y`.
pub fn nmi_x<T: Scalar>(x: &StreamPartition, y: &StreamPartition) -> Result<T> {
    let hx = entropy::<T>(x);
    if hx <= T::zero() {
        return Err(Error::UndefinedMeasure("reference partition has zero entropy".into()));
    }
    Ok(mutual_information::<T>(x, y)? / hx)
}

/// MI normalized by `sqrt(H(X) H(Y))`.
pub fn nmi<T: Scalar>(x: &StreamPartition, y: &StreamPartition) -> Result<T> {
    let (hx, hy) = (entropy::<T>(x), entropy::<T>(y));
    if hx <= T::zero() || hy <= T::zero() {
        return Err(Error::UndefinedMeasure("a partition with a single stream has zero entropy".into()));
    }
    Ok(mutual_information::<T>(x, y)? / (hx * hy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    XToY,
    YToX,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamNode {
    pub name: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BipartiteEdge<T> {
    pub x: usize,
    pub y: usize,
    pub shared: usize,
    /// `shared / |x stream|`
    pub weight_xy: T,
    /// `shared / |y stream|`
    pub weight_yx: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BipartiteStreamGraph<T> {
    pub x_nodes: Vec<StreamNode>,
    pub y_nodes: Vec<StreamNode>,
    pub edges: Vec<BipartiteEdge<T>>,
}

impl<T: Scalar> BipartiteStreamGraph<T> {
    pub fn new(x: &StreamPartition, y: &StreamPartition) -> Result<Self> {
        ensure_same_universe(x, y)?;
        let nodes = |p: &StreamPartition| {
            p.streams
                .iter()
                .zip(p.stream_sizes())
                .map(|(name, size)| StreamNode { name: name.clone(), size })
                .collect::<Vec<_>>()
        };
        let (x_nodes, y_nodes) = (nodes(x), nodes(y));
        let edges = contingency(x, y)
            .into_iter()
            .map(|((a, b), shared)| BipartiteEdge {
                x: a,
                y: b,
                shared,
                weight_xy: T::from_count(shared) / T::from_count(x_nodes[a].size),
                weight_yx: T::from_count(shared) / T::from_count(y_nodes[b].size),
            })
            .collect();
        Ok(BipartiteStreamGraph { x_nodes, y_nodes, edges })
    }

    /// Outgoing `(target, weight, shared)` per source node, targets ascending.
    fn outgoing(&self, direction: Direction) -> Vec<Vec<(usize, T, usize)>> {
        let sources = match direction {
            Direction::XToY => self.x_nodes.len(),
            Direction::YToX => self.y_nodes.len(),
        };
        let mut out = vec![Vec::new(); sources];
        for e in &self.edges {
            match direction {
                Direction::XToY => out[e.x].push((e.y, e.weight_xy, e.shared)),
                Direction::YToX => out[e.y].push((e.x, e.weight_yx, e.shared)),
            }
        }
        for row in &mut out {
            row.sort_by_key(|e| e.0);
        }
        out
    }

    fn source_sizes(&self, direction: Direction) -> Vec<usize> {
        let nodes = match direction {
            Direction::XToY => &self.x_nodes,
            Direction::YToX => &self.y_nodes,
        };
        nodes.iter().map(|n| n.size).collect()
    }

    /// Mean and population standard deviation, over source nodes, of the
    /// largest outgoing weight.
    pub fn first_edge(&self, direction: Direction) -> Result<(T, T)> {
        let firsts: Vec<T> = self
            .outgoing(direction)
            .into_iter()
            .map(|row| {
                assert!(!row.is_empty(), "stream without outgoing edge on a shared universe");
                row.iter().map(|e| e.1).fold(T::zero(), T::max)
            })
            .collect();
        mean_std(&firsts)
    }

    /// Mean and population standard deviation, over source nodes, of the
    /// number of target streams needed (largest share first, ties to the
    /// smaller target) to cover at least `threshold` of the source stream.
    pub fn sum_to_threshold(&self, direction: Direction, threshold: T) -> Result<(T, T)> {
        let slack = T::lit(COVERAGE_SLACK);
        let counts: Vec<T> = self
            .outgoing(direction)
            .into_iter()
            .zip(self.source_sizes(direction))
            .map(|(mut row, size)| {
                row.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
                let need = threshold * T::from_count(size) - slack;
                let mut covered = 0usize;
                for (k, &(_, _, shared)) in row.iter().enumerate() {
                    covered += shared;
                    if T::from_count(covered) >= need {
                        return T::from_count(k + 1);
                    }
                }
                panic!("outgoing weights of a stream sum below the coverage threshold");
            })
            .collect();
        mean_std(&counts)
    }

    pub fn sum80(&self, direction: Direction) -> Result<(T, T)> {
        self.sum_to_threshold(direction, T::lit(0.8))
    }
}

fn mean_std<T: Scalar>(values: &[T]) -> Result<(T, T)> {
    if values.is_empty() {
        return Err(Error::validation("bipartite graph has no source nodes"));
    }
    let n = T::from_count(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    Ok((mean, var.sqrt()))
}

/// Mean and spread of a flow measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl<T: Scalar> From<(T, T)> for MeanStd {
    fn from((mean, std): (T, T)) -> Self {
        MeanStd {
            mean: mean.as_f64(),
            std: std.as_f64(),
        }
    }
}

/// Tables-2/3 style summary of two partitions on their shared publications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub restriction: RestrictionReport,
    pub streams_x: usize,
    pub streams_y: usize,
    pub entropy_x: f64,
    pub entropy_y: f64,
    pub mutual_information: f64,
    /// MI / H(X); `None` when X has a single stream.
    pub nmi_x: Option<f64>,
    /// MI / H(Y); `None` when Y has a single stream.
    pub nmi_y: Option<f64>,
    pub nmi: Option<f64>,
    pub first_edge_xy: MeanStd,
    pub first_edge_yx: MeanStd,
    pub sum80_xy: MeanStd,
    pub sum80_yx: MeanStd,
}

/// Computes every comparison measure after restricting to shared publications.
pub fn compare<T: Scalar>(
    x: &StreamPartition,
    y: &StreamPartition,
) -> Result<(ComparisonReport, BipartiteStreamGraph<T>)> {
    let (x, y, restriction) = restrict_to_shared(x, y)?;
    let defined = |r: Result<T>| match r {
        Ok(v) => Ok(Some(v.as_f64())),
        Err(Error::UndefinedMeasure(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let graph = BipartiteStreamGraph::<T>::new(&x, &y)?;
    let report = ComparisonReport {
        restriction,
        streams_x: x.stream_count(),
        streams_y: y.stream_count(),
        entropy_x: entropy::<T>(&x).as_f64(),
        entropy_y: entropy::<T>(&y).as_f64(),
        mutual_information: mutual_information::<T>(&x, &y)?.as_f64(),
        nmi_x: defined(nmi_x::<T>(&x, &y))?,
        nmi_y: defined(nmi_x::<T>(&y, &x))?,
        nmi: defined(nmi::<T>(&x, &y))?,
        first_edge_xy: graph.first_edge(Direction::XToY)?.into(),
        first_edge_yx: graph.first_edge(Direction::YToX)?.into(),
        sum80_xy: graph.sum80(Direction::XToY)?.into(),
        sum80_yx: graph.sum80(Direction::YToX)?.into(),
    };
    Ok((report, graph))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(pairs: &[(&str, &str)]) -> StreamPartition {
        StreamPartition::new(pairs.iter().copied()).unwrap()
    }

    fn halves() -> (StreamPartition, StreamPartition) {
        (
            part(&[("a", "1"), ("b", "1"), ("c", "2"), ("d", "2")]),
            part(&[("a", "1"), ("c", "1"), ("b", "2"), ("d", "2")]),
        )
    }

    #[test]
    fn conflicting_assignment_rejected() {
        assert!(StreamPartition::new([("a", "1"), ("a", "2")]).is_err());
        assert!(StreamPartition::new([("a", "1"), ("a", "1")]).is_ok());
        assert!(StreamPartition::new(Vec::<(String, String)>::new()).is_err());
    }

    #[test]
    fn restriction() {
        let x = part(&[("a", "1"), ("b", "1"), ("c", "2"), ("d", "3"), ("e", "3")]);
        let (rx, ry, rep) = restrict_to_shared(&x, &x).unwrap();
        assert_eq!((rx.clone(), ry), (x.clone(), x.clone()));
        assert_eq!(rep.removed_x, 0);

        let y = part(&[("a", "p"), ("b", "q")]);
        let (rx, ry, rep) = restrict_to_shared(&x, &y).unwrap();
        assert_eq!(rx.len(), 2);
        assert_eq!(ry, y);
        assert_eq!((rep.removed_x, rep.removed_y, rep.dropped_streams_x), (3, 0, 2));

        let z = part(&[("zz", "1")]);
        assert!(restrict_to_shared(&x, &z).is_err());
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(entropy::<f64>(&part(&[("a", "1"), ("b", "1")])), 0.0);
        let k5 = StreamPartition::new((0..10).map(|i| (format!("p{i}"), format!("s{}", i % 5)))).unwrap();
        assert!((entropy::<f64>(&k5) - 5f64.ln()).abs() < 1e-12);
        let h = entropy::<f64>(&part(&[("a", "1"), ("b", "1"), ("c", "2"), ("d", "3")]));
        assert!((h - 1.0397207708399179).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_cases() {
        let (x, y) = halves();
        assert_eq!(mutual_information::<f64>(&x, &y).unwrap(), 0.0);
        assert_eq!(mutual_information::<f64>(&x, &x).unwrap(), entropy::<f64>(&x));
        let one = part(&[("a", "s"), ("b", "s"), ("c", "s"), ("d", "s")]);
        assert_eq!(mutual_information::<f64>(&x, &one).unwrap(), 0.0);
        let other = part(&[("a", "1"), ("b", "1"), ("c", "2"), ("e", "2")]);
        assert!(mutual_information::<f64>(&x, &other).is_err());
    }

    #[test]
    fn nmi_cases() {
        let (x, y) = halves();
        let singletons = part(&[("a", "1"), ("b", "2"), ("c", "3"), ("d", "4")]);
        assert_eq!(nmi_x::<f64>(&x, &singletons).unwrap(), 1.0);
        assert_eq!(nmi_x::<f64>(&x, &y).unwrap(), 0.0);
        assert_eq!(nmi::<f64>(&x, &x).unwrap(), 1.0);
        assert_eq!(nmi::<f64>(&x, &y).unwrap(), 0.0);
        let sym = nmi::<f64>(&x, &singletons).unwrap();
        assert!(sym < 1.0);
        assert!((sym - nmi::<f64>(&singletons, &x).unwrap()).abs() < 1e-15);
        let one = part(&[("a", "s"), ("b", "s"), ("c", "s"), ("d", "s")]);
        assert!(matches!(nmi_x::<f64>(&one, &x), Err(Error::UndefinedMeasure(_))));
        assert!(matches!(nmi::<f64>(&x, &one), Err(Error::UndefinedMeasure(_))));
    }

    #[test]
    fn bipartite_weights() {
        let x = StreamPartition::new((0..10).map(|i| (format!("p{i}"), "X"))).unwrap();
        let y = StreamPartition::new((0..10).map(|i| (format!("p{i}"), if i < 6 { "Y1" } else { "Y2" }))).unwrap();
        let g = BipartiteStreamGraph::<f64>::new(&x, &y).unwrap();
        let w: Vec<f64> = g.edges.iter().map(|e| e.weight_xy).collect();
        assert_eq!(w, vec![0.6, 0.4]);
        assert_eq!(g.first_edge(Direction::XToY).unwrap(), (0.6, 0.0));
        assert_eq!(g.sum80(Direction::XToY).unwrap(), (2.0, 0.0));

        let y = StreamPartition::new((0..10).map(|i| (format!("p{i}"), if i < 8 { "Y1" } else { "Y2" }))).unwrap();
        let g = BipartiteStreamGraph::<f64>::new(&x, &y).unwrap();
        assert_eq!(g.sum80(Direction::XToY).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn identical_partitions_flow() {
        let (x, _) = halves();
        let g = BipartiteStreamGraph::<f64>::new(&x, &x).unwrap();
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges.iter().all(|e| e.weight_xy == 1.0 && e.weight_yx == 1.0));
        assert_eq!(g.first_edge(Direction::XToY).unwrap(), (1.0, 0.0));
        assert_eq!(g.sum80(Direction::YToX).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn disjoint_streams_have_no_edge() {
        let x = part(&[("a", "1"), ("b", "2")]);
        let y = part(&[("a", "p"), ("b", "q")]);
        let g = BipartiteStreamGraph::<f64>::new(&x, &y).unwrap();
        assert!(!g.edges.iter().any(|e| e.x == 0 && e.y == 1));
    }

    #[test]
    fn population_std_of_first_edges() {
        // X1 = 10 pubs with 9 in Y1; X2 = 10 pubs with 7 in Y3
        let mut pairs = Vec::new();
        for i in 0..10 {
            pairs.push((format!("a{i}"), "X1".to_string(), if i < 9 { "Y1" } else { "Y2" }));
            pairs.push((format!("b{i}"), "X2".to_string(), if i < 7 { "Y3" } else { "Y2" }));
        }
        let x = StreamPartition::new(pairs.iter().map(|(p, s, _)| (p.clone(), s.clone()))).unwrap();
        let y = StreamPartition::new(pairs.iter().map(|(p, _, t)| (p.clone(), t.to_string()))).unwrap();
        let g = BipartiteStreamGraph::<f64>::new(&x, &y).unwrap();
        let (m, s) = g.first_edge(Direction::XToY).unwrap();
        assert!((m - 0.8).abs() < 1e-15);
        assert!((s - 0.1).abs() < 1e-15);
    }

    #[test]
    fn report_for_identical_partitions() {
        let (x, _) = halves();
        let (r, _) = compare::<f64>(&x, &x).unwrap();
        assert_eq!(r.nmi, Some(1.0));
        assert_eq!(r.first_edge_xy, MeanStd { mean: 1.0, std: 0.0 });
        assert_eq!(r.sum80_yx, MeanStd { mean: 1.0, std: 0.0 });
        let one = part(&[("a", "s"), ("b", "s"), ("c", "s"), ("d", "s")]);
        let (r, _) = compare::<f64>(&x, &one).unwrap();
        assert_eq!((r.nmi_x, r.nmi_y, r.nmi), (Some(0.0), None, None));
    }
}
