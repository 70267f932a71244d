//! File formats written and read by the command-line tool.
//!
//! All structured outputs are pretty-printed JSON with a `format` tag.
//! Key order is fixed by the struct definitions and maps are ordered, so
//! identical inputs give byte-identical files.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::algorithms::Algorithm;
use crate::compare::StreamPartition;
use crate::corpus::{Corpus, TimeWindow};
use crate::error::{Error, Result};
use crate::matching::{EventKind, StreamSet};
use crate::partition::Partition;
use crate::scalar::Scalar;

pub const STREAMS_FORMAT: &str = "bcstreams.streams/1";
pub const PARTITION_FORMAT: &str = "bcstreams.partition/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkExport {
    pub delta_q: f64,
    pub omega: f64,
    /// The best match was kept although merging does not raise modularity.
    pub non_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterExport {
    pub window: usize,
    pub cluster: usize,
    pub label: Option<String>,
    pub size: usize,
    pub publications: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkExport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamExport {
    pub id: usize,
    pub size: usize,
    pub first_window: usize,
    pub last_window: usize,
    pub yearly_counts: BTreeMap<i32, usize>,
    pub clusters: Vec<ClusterExport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventExport {
    pub boundary: usize,
    #[serde(rename = "type")]
    pub kind: EventKind,
    pub from_stream: usize,
    pub to_stream: usize,
    pub delta_q: f64,
    pub omega: f64,
    pub non_positive: bool,
}

/// Stream file: streams with their per-window clusters, and events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamsFile {
    pub format: String,
    #[serde(default)]
    pub algorithm: Option<Algorithm>,
    pub windows: Vec<TimeWindow>,
    pub publications: usize,
    pub stream_count: usize,
    /// Streams smaller than this were left out of `streams` (display only).
    #[serde(default)]
    pub min_stream_size: Option<usize>,
    pub streams: Vec<StreamExport>,
    pub events: Vec<EventExport>,
}

impl StreamsFile {
    pub fn new<T: Scalar>(
        set: &StreamSet<T>,
        corpus: &Corpus,
        algorithm: Option<Algorithm>,
        min_stream_size: Option<usize>,
    ) -> Self {
        let streams = set
            .streams
            .iter()
            .filter(|s| min_stream_size.is_none_or(|m| s.size() >= m))
            .map(|s| {
                let mut yearly_counts = BTreeMap::new();
                for c in &s.clusters {
                    for p in &c.publications {
                        if let Some(p) = corpus.get(p) {
                            *yearly_counts.entry(p.year).or_insert(0) += 1;
                        }
                    }
                }
                StreamExport {
                    id: s.id,
                    size: s.size(),
                    first_window: s.first_window(),
                    last_window: s.last_window(),
                    yearly_counts,
                    clusters: s
                        .clusters
                        .iter()
                        .map(|c| ClusterExport {
                            window: c.window,
                            cluster: c.cluster,
                            label: c.label.clone(),
                            size: c.publications.len(),
                            publications: c.publications.clone(),
                            link: c.link.map(|l| LinkExport {
                                delta_q: l.delta_q.as_f64(),
                                omega: l.omega.as_f64(),
                                non_positive: l.delta_q <= T::zero(),
                            }),
                        })
                        .collect(),
                }
            })
            .collect();
        let events = set
            .events
            .iter()
            .map(|e| EventExport {
                boundary: e.boundary,
                kind: e.kind,
                from_stream: e.from_stream,
                to_stream: e.to_stream,
                delta_q: e.delta_q.as_f64(),
                omega: e.omega.as_f64(),
                non_positive: e.delta_q <= T::zero(),
            })
            .collect();
        StreamsFile {
            format: STREAMS_FORMAT.to_string(),
            algorithm,
            windows: set.windows.clone(),
            publications: set.membership.len(),
            stream_count: set.streams.len(),
            min_stream_size,
            streams,
            events,
        }
    }

    pub fn is_filtered(&self) -> bool {
        self.streams.len() != self.stream_count
    }

    /// Publication to stream-id membership of the exported streams.
    pub fn stream_partition(&self) -> Result<StreamPartition> {
        StreamPartition::new(self.streams.iter().flat_map(|s| {
            s.clusters
                .iter()
                .flat_map(move |c| c.publications.iter().map(move |p| (p.clone(), s.id.to_string())))
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub format: String,
    pub scope: String,
    pub graph_digest: String,
    pub seed: Option<u64>,
    pub modularity: f64,
    pub communities: usize,
    /// `(publication id, community id)` in graph node order.
    pub assignment: Vec<(String, usize)>,
}

impl PartitionFile {
    pub fn new<T: Scalar>(scope: impl Into<String>, partition: &Partition<T>) -> Self {
        PartitionFile {
            format: PARTITION_FORMAT.to_string(),
            scope: scope.into(),
            graph_digest: partition.graph_digest().to_string(),
            seed: partition.seed(),
            modularity: partition.modularity().as_f64(),
            communities: partition.community_count(),
            assignment: partition
                .nodes()
                .ids()
                .iter()
                .cloned()
                .zip(partition.assignment().iter().copied())
                .collect(),
        }
    }
}

pub fn write_json<W: Write, S: Serialize>(mut w: W, value: &S) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Reads a reference partition: one `publication<TAB>stream` pair per line
/// (any whitespace separates the two columns); blank and `#` lines skipped.
pub fn read_reference_partition<R: BufRead>(reader: R) -> Result<StreamPartition> {
    let mut pairs = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        match (cols.next(), cols.next(), cols.next()) {
            (Some(p), Some(s), None) => pairs.push((p.to_string(), s.to_string())),
            _ => {
                return Err(Error::Parse {
                    line: n + 1,
                    message: "expected `publication<TAB>stream`".into(),
                })
            }
        }
    }
    StreamPartition::new(pairs)
}

/// Writes a partition in the reference format read by
/// [`read_reference_partition`].
pub fn write_reference_partition<W: Write>(mut w: W, p: &StreamPartition) -> Result<()> {
    for id in p.ids() {
        writeln!(w, "{}\t{}", id, p.stream_of(id).expect("id of this partition"))?;
    }
    Ok(())
}
