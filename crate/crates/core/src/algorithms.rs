//! Stream construction algorithms.
//!
//! * **GA** partitions the coupling graph of the whole corpus once; every
//!   global community becomes a stream and no events occur.
//! * **GPA** projects the GA communities onto each window (keeping only
//!   publications coupled to another one of the same window) and matches the
//!   projected communities across windows.
//! * **BMLA** keeps, in every window, the highest-modularity run of a Louvain
//!   ensemble and matches these partitions across windows.
//! * **BCLC** picks, among the ensemble runs, the partitions whose matched
//!   and merged two-window modularity is highest: every run combination for
//!   the first two windows, then one window at a time.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Publication, TimeWindow};
use crate::error::{Error, Result};
use crate::graph::BcGraph;
use crate::matching::{CrossIndex, InterClusterLinks, MatchResult, StreamCluster, Stream, StreamSet, WindowClusters};
use crate::partition::{Ensemble, Partition};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ga,
    Gpa,
    Bmla,
    Bclc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Ga, Algorithm::Gpa, Algorithm::Bmla, Algorithm::Bclc];
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ga" => Ok(Algorithm::Ga),
            "gpa" => Ok(Algorithm::Gpa),
            "bmla" => Ok(Algorithm::Bmla),
            "bclc" => Ok(Algorithm::Bclc),
            other => Err(Error::validation(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ga => "ga",
            Algorithm::Gpa => "gpa",
            Algorithm::Bmla => "bmla",
            Algorithm::Bclc => "bclc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub algorithm: Algorithm,
    /// Window length in years.
    pub delta_t: u32,
    /// Louvain runs per ensemble.
    pub n_runs: usize,
    pub base_seed: u64,
    /// Minimum normalized link weight for matching candidates.
    pub theta: f64,
    pub min_shared_refs: usize,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            algorithm: Algorithm::Bclc,
            delta_t: 5,
            n_runs: 100,
            base_seed: 0,
            theta: crate::matching::DEFAULT_THETA,
            min_shared_refs: 2,
        }
    }
}

impl AlgorithmConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        AlgorithmConfig {
            algorithm,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::validation("number of runs must be at least 1"));
        }
        if self.delta_t == 0 {
            return Err(Error::validation("window length must be at least 1 year"));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::validation("theta must be a positive number"));
        }
        if self.min_shared_refs == 0 {
            return Err(Error::validation("min_shared_refs must be at least 1"));
        }
        Ok(())
    }

    /// Base seed of the ensemble of window `k`; runs of different windows
    /// never share a seed.
    pub fn window_seed(&self, k: usize) -> u64 {
        self.base_seed.wrapping_add((k as u64).wrapping_mul(self.n_runs as u64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalReport {
    pub nodes: usize,
    pub edges: usize,
    pub excluded: usize,
    pub modularity: f64,
    pub communities: usize,
    pub chosen_run: usize,
    pub chosen_seed: Option<u64>,
    pub modularity_spread: f64,
}

/// Articles of a window present in the global graph, split by whether they
/// are coupled to another article of the same window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionLoss {
    pub population: usize,
    pub kept: usize,
    pub dropped: usize,
    pub loss_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowReport {
    pub window: TimeWindow,
    pub publications: usize,
    pub nodes: usize,
    pub edges: usize,
    pub excluded: usize,
    pub communities: usize,
    /// Modularity of the partition used for this window.
    pub modularity: Option<f64>,
    pub chosen_run: Option<usize>,
    pub chosen_seed: Option<u64>,
    /// Highest modularity among the window's ensemble runs.
    pub best_run_modularity: Option<f64>,
    pub modularity_spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionLoss>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryReport {
    /// Index of the earlier window.
    pub boundary: usize,
    /// Modularity of the two-window graph once paired clusters are merged.
    pub combined_modularity: f64,
    /// Same quantity for the two best-modularity runs (BCLC only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_runs_combined_modularity: Option<f64>,
    pub pairs: usize,
    pub splits: usize,
    pub merges: usize,
    /// Paired links whose modularity gain is not positive.
    pub non_positive_pairs: usize,
}

/// Paired projected communities stemming from different global communities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CrossStreamPair {
    pub boundary: usize,
    pub from_community: usize,
    pub to_community: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: AlgorithmConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global: Option<GlobalReport>,
    pub windows: Vec<WindowReport>,
    pub boundaries: Vec<BoundaryReport>,
    /// Matching evaluations spent on choosing partitions (BCLC).
    pub matching_evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_projection_loss: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cross_stream_pairs: Vec<CrossStreamPair>,
    pub warnings: Vec<String>,
    pub wall_time_ms: u64,
}

impl RunReport {
    fn new(config: &AlgorithmConfig) -> Self {
        RunReport {
            config: config.clone(),
            global: None,
            windows: Vec::new(),
            boundaries: Vec::new(),
            matching_evaluations: 0,
            mean_projection_loss: None,
            cross_stream_pairs: Vec::new(),
            warnings: Vec::new(),
            wall_time_ms: 0,
        }
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

#[derive(Debug, Clone)]
pub struct StreamRun<T> {
    pub streams: StreamSet<T>,
    pub report: RunReport,
    /// Whole-corpus partition (GA and GPA).
    pub global_partition: Option<Partition<T>>,
    /// Partition used for each window; `None` for windows without a graph.
    /// Empty for GA.
    pub window_partitions: Vec<Option<Partition<T>>>,
}

/// Runs the configured algorithm.
pub fn run<T: Scalar>(corpus: &Corpus, config: &AlgorithmConfig) -> Result<StreamRun<T>> {
    match config.algorithm {
        Algorithm::Ga => run_ga(corpus, config),
        Algorithm::Gpa => run_gpa(corpus, config),
        Algorithm::Bmla => run_bmla(corpus, config),
        Algorithm::Bclc => run_bclc(corpus, config),
    }
}

struct Global<T> {
    graph: BcGraph<T>,
    partition: Partition<T>,
    report: GlobalReport,
}

fn global_partition<T: Scalar>(corpus: &Corpus, config: &AlgorithmConfig) -> Result<Global<T>> {
    let all: Vec<&Publication> = corpus.publications().iter().collect();
    let graph = BcGraph::<T>::coupling(&all, config.min_shared_refs);
    if graph.is_empty() {
        return Err(Error::EmptyGraph(format!(
            "no pair of publications shares {} references",
            config.min_shared_refs
        )));
    }
    let ensemble = Ensemble::run(&graph, config.n_runs, config.base_seed)?;
    let chosen_run = ensemble.best_index();
    let partition = ensemble.partitions[chosen_run].clone();
    let report = GlobalReport {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        excluded: graph.excluded().len(),
        modularity: partition.modularity().as_f64(),
        communities: partition.community_count(),
        chosen_run,
        chosen_seed: partition.seed(),
        modularity_spread: ensemble.modularity_spread().as_f64(),
    };
    Ok(Global {
        graph,
        partition,
        report,
    })
}

/// Global algorithm: one stream per community of the whole-corpus graph,
/// spanning every window from its first to its last publication.
pub fn run_ga<T: Scalar>(corpus: &Corpus, config: &AlgorithmConfig) -> Result<StreamRun<T>> {
    config.validate()?;
    let started = Instant::now();
    let mut report = RunReport::new(config);
    let global = global_partition::<T>(corpus, config)?;
    let windows = corpus.slice_windows(config.delta_t)?;
    let window_of = |year: i32| windows.iter().position(|(w, _)| w.contains(year)).expect("year inside period");

    let clusters = global.partition.clusters();
    let mut streams = Vec::with_capacity(clusters.len());
    let mut membership = std::collections::BTreeMap::new();
    for (c, members) in clusters.into_iter().enumerate() {
        let mut per_window: Vec<Vec<String>> = vec![Vec::new(); windows.len()];
        for id in members {
            let year = corpus.get(&id).expect("graph node comes from corpus").year;
            membership.insert(id.clone(), c);
            per_window[window_of(year)].push(id);
        }
        let first = per_window.iter().position(|m| !m.is_empty()).expect("community is not empty");
        let last = per_window.iter().rposition(|m| !m.is_empty()).unwrap();
        let clusters = per_window
            .into_iter()
            .enumerate()
            .take(last + 1)
            .skip(first)
            .map(|(k, publications)| StreamCluster {
                window: k,
                cluster: c,
                publications,
                label: None,
                link: None,
            })
            .collect();
        streams.push(Stream { id: c, clusters });
    }
    for (w, pubs) in &windows {
        let count = pubs.iter().filter(|p| membership.contains_key(&p.id)).count();
        report.windows.push(WindowReport {
            window: *w,
            publications: pubs.len(),
            nodes: count,
            edges: 0,
            excluded: pubs.len() - count,
            communities: streams.iter().filter(|s| s.clusters.iter().any(|c| c.window == w.index && !c.publications.is_empty())).count(),
            modularity: None,
            chosen_run: None,
            chosen_seed: None,
            best_run_modularity: None,
            modularity_spread: None,
            projection: None,
        });
    }
    report.global = Some(global.report);
    let global_partition = Some(global.partition);
    let mut streams = StreamSet {
        streams,
        membership,
        events: Vec::new(),
        windows: windows.iter().map(|(w, _)| *w).collect(),
    };
    streams.label(corpus);
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(StreamRun {
        streams,
        report,
        global_partition,
        window_partitions: Vec::new(),
    })
}

/// A window's coupling graph together with the publications behind its nodes.
struct WindowGraph<'c, T> {
    window: TimeWindow,
    population: usize,
    graph: BcGraph<T>,
    nodes: Vec<&'c Publication>,
}

impl<'c, T: Scalar> WindowGraph<'c, T> {
    fn new(corpus: &'c Corpus, window: TimeWindow, pubs: &[&'c Publication], min_shared_refs: usize) -> Self {
        let graph = BcGraph::<T>::coupling(pubs, min_shared_refs);
        let nodes = graph
            .ids()
            .iter()
            .map(|id| corpus.get(id).expect("graph node comes from corpus"))
            .collect();
        WindowGraph {
            window,
            population: pubs.len(),
            graph,
            nodes,
        }
    }

    fn report(&self) -> WindowReport {
        WindowReport {
            window: self.window,
            publications: self.population,
            nodes: self.graph.node_count(),
            edges: self.graph.edge_count(),
            excluded: self.graph.excluded().len(),
            communities: 0,
            modularity: None,
            chosen_run: None,
            chosen_seed: None,
            best_run_modularity: None,
            modularity_spread: None,
            projection: None,
        }
    }
}

fn window_graphs<'c, T: Scalar>(
    corpus: &'c Corpus,
    config: &AlgorithmConfig,
    keep: impl Fn(&Publication) -> bool,
) -> Result<Vec<WindowGraph<'c, T>>> {
    let windows = corpus.slice_windows(config.delta_t)?;
    Ok(windows
        .into_iter()
        .map(|(w, pubs)| {
            let pubs: Vec<&Publication> = pubs.into_iter().filter(|p| keep(p)).collect();
            WindowGraph::new(corpus, w, &pubs, config.min_shared_refs)
        })
        .collect())
}

/// Coupling graphs of every pair of adjacent, non-empty windows.
fn cross_graphs<T: Scalar>(windows: &[WindowGraph<'_, T>], min_shared_refs: usize) -> Result<Vec<Option<BcGraph<T>>>> {
    windows
        .windows(2)
        .map(|pair| {
            if pair[0].graph.is_empty() || pair[1].graph.is_empty() {
                Ok(None)
            } else {
                BcGraph::cross_period(&pair[0].nodes, &pair[1].nodes, min_shared_refs).map(Some)
            }
        })
        .collect()
}

fn ensembles<T: Scalar>(windows: &[WindowGraph<'_, T>], config: &AlgorithmConfig) -> Result<Vec<Option<Ensemble<T>>>> {
    windows
        .iter()
        .enumerate()
        .map(|(k, w)| {
            if w.graph.is_empty() {
                Ok(None)
            } else {
                Ensemble::run(&w.graph, config.n_runs, config.window_seed(k)).map(Some)
            }
        })
        .collect()
}

/// Matches the chosen partitions across every boundary and assembles the
/// streams.
fn chain<T: Scalar>(
    windows: &[WindowGraph<'_, T>],
    chosen: &[Option<Partition<T>>],
    crosses: &[Option<BcGraph<T>>],
    config: &AlgorithmConfig,
    report: &mut RunReport,
) -> Result<(StreamSet<T>, Vec<MatchResult<T>>)> {
    let theta = T::lit(config.theta);
    let mut matches = Vec::with_capacity(crosses.len());
    for (k, cross) in crosses.iter().enumerate() {
        let (a, b) = (&chosen[k], &chosen[k + 1]);
        let count = |p: &Option<Partition<T>>| p.as_ref().map_or(0, |p| p.community_count());
        let m = match (a, b, cross) {
            (Some(a), Some(b), Some(cross)) => {
                let links = InterClusterLinks::new(a, b, cross)?;
                let m = MatchResult::from_links(&links, theta);
                let existing = report.boundaries.iter().position(|r| r.boundary == k);
                let entry = BoundaryReport {
                    boundary: k,
                    combined_modularity: links.merged_modularity(&m).as_f64(),
                    best_runs_combined_modularity: existing.and_then(|i| report.boundaries[i].best_runs_combined_modularity),
                    pairs: m.pairs.len(),
                    splits: m.splits.len(),
                    merges: m.merges.len(),
                    non_positive_pairs: m
                        .pairs
                        .iter()
                        .filter(|&&(a, b)| links.delta_q(a, b) <= T::zero())
                        .count(),
                };
                match existing {
                    Some(i) => report.boundaries[i] = entry,
                    None => report.boundaries.push(entry),
                }
                m
            }
            _ => MatchResult::empty(count(a), count(b)),
        };
        matches.push(m);
    }
    let clusters: Vec<WindowClusters> = chosen
        .iter()
        .enumerate()
        .map(|(k, p)| match p {
            Some(p) => WindowClusters::from_partition(k, p),
            None => WindowClusters::empty(k),
        })
        .collect();
    let mut streams = StreamSet::build(&matches, &clusters)?;
    streams.windows = windows.iter().map(|w| w.window).collect();
    Ok((streams, matches))
}

fn fill_window_reports<T: Scalar>(
    windows: &[WindowGraph<'_, T>],
    chosen: &[Option<Partition<T>>],
    chosen_run: &[Option<usize>],
    ensembles: Option<&[Option<Ensemble<T>>]>,
    report: &mut RunReport,
) {
    for (k, w) in windows.iter().enumerate() {
        let mut r = w.report();
        if let Some(p) = &chosen[k] {
            r.communities = p.community_count();
            r.modularity = Some(p.modularity().as_f64());
            r.chosen_seed = p.seed();
        }
        r.chosen_run = chosen_run[k];
        if let Some(Some(e)) = ensembles.map(|e| &e[k]) {
            r.best_run_modularity = Some(e.best_modularity().modularity().as_f64());
            r.modularity_spread = Some(e.modularity_spread().as_f64());
        }
        report.windows.push(r);
    }
}

fn finish<T: Scalar>(
    mut streams: StreamSet<T>,
    corpus: &Corpus,
    mut report: RunReport,
    started: Instant,
    global_partition: Option<Partition<T>>,
    window_partitions: Vec<Option<Partition<T>>>,
) -> StreamRun<T> {
    streams.label(corpus);
    report.boundaries.sort_by_key(|b| b.boundary);
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    StreamRun {
        streams,
        report,
        global_partition,
        window_partitions,
    }
}

fn require_some_graph<T: Scalar>(windows: &[WindowGraph<'_, T>], config: &AlgorithmConfig) -> Result<()> {
    if windows.iter().all(|w| w.graph.is_empty()) {
        return Err(Error::EmptyGraph(format!(
            "no window has a pair of publications sharing {} references",
            config.min_shared_refs
        )));
    }
    Ok(())
}

/// Global projected algorithm.
pub fn run_gpa<T: Scalar>(corpus: &Corpus, config: &AlgorithmConfig) -> Result<StreamRun<T>> {
    config.validate()?;
    let started = Instant::now();
    let mut report = RunReport::new(config);
    let global = global_partition::<T>(corpus, config)?;
    let in_global = |p: &Publication| global.graph.index_of(&p.id).is_some();
    let windows = window_graphs::<T>(corpus, config, in_global)?;

    let mut chosen = Vec::with_capacity(windows.len());
    let mut losses = Vec::new();
    for w in &windows {
        let projected = if w.graph.is_empty() {
            None
        } else {
            let labels = w
                .graph
                .ids()
                .iter()
                .map(|id| global.partition.community_of(id).expect("window node is in the global graph"))
                .collect();
            Some(Partition::from_assignment(&w.graph, labels, None)?)
        };
        chosen.push(projected);
        let kept = w.graph.node_count();
        let loss = ProjectionLoss {
            population: w.population,
            kept,
            dropped: w.population - kept,
            loss_fraction: if w.population == 0 {
                0.0
            } else {
                (w.population - kept) as f64 / w.population as f64
            },
        };
        losses.push(loss);
    }
    let crosses = cross_graphs(&windows, config.min_shared_refs)?;
    let (streams, matches) = chain(&windows, &chosen, &crosses, config, &mut report)?;

    // paired projected communities whose global communities differ
    for (k, m) in matches.iter().enumerate() {
        let (Some(a), Some(b)) = (&chosen[k], &chosen[k + 1]) else { continue };
        let origin = |p: &Partition<T>, c: usize| {
            let node = p.assignment().iter().position(|&x| x == c).expect("community is not empty");
            global.partition.community_of(&p.nodes().ids()[node]).unwrap()
        };
        for &(ca, cb) in &m.pairs {
            let (ga, gb) = (origin(a, ca), origin(b, cb));
            if ga != gb {
                report.cross_stream_pairs.push(CrossStreamPair {
                    boundary: k,
                    from_community: ga,
                    to_community: gb,
                });
            }
        }
    }

    let none = vec![None; windows.len()];
    fill_window_reports(&windows, &chosen, &none, None, &mut report);
    for (r, loss) in report.windows.iter_mut().zip(&losses) {
        r.projection = Some(*loss);
    }
    let total_pop: usize = losses.iter().map(|l| l.population).sum();
    let total_drop: usize = losses.iter().map(|l| l.dropped).sum();
    if total_pop > 0 {
        report.mean_projection_loss = Some(total_drop as f64 / total_pop as f64);
    }
    report.global = Some(global.report);
    Ok(finish(streams, corpus, report, started, Some(global.partition), chosen))
}

/// Best-modularity local algorithm.
pub fn run_bmla<T: Scalar>(corpus: &Corpus, config: &AlgorithmConfig) -> Result<StreamRun<T>> {
    config.validate()?;
    let started = Instant::now();
    let mut report = RunReport::new(config);
    let windows = window_graphs::<T>(corpus, config, |_| true)?;
    require_some_graph(&windows, config)?;
    let ensembles = ensembles(&windows, config)?;
    let chosen_run: Vec<Option<usize>> = ensembles.iter().map(|e| e.as_ref().map(Ensemble::best_index)).collect();
    let chosen: Vec<Option<Partition<T>>> = ensembles
        .iter()
        .zip(&chosen_run)
        .map(|(e, i)| e.as_ref().map(|e| e.partitions[i.unwrap()].clone()))
        .collect();
    let crosses = cross_graphs(&windows, config.min_shared_refs)?;
    let (streams, _) = chain(&windows, &chosen, &crosses, config, &mut report)?;
    fill_window_reports(&windows, &chosen, &chosen_run, Some(&ensembles), &mut report);
    Ok(finish(streams, corpus, report, started, None, chosen))
}

/// Merged two-window modularity of every `(run of A, run of B)` candidate.
fn score_candidates<T: Scalar>(
    cross: &BcGraph<T>,
    index: &CrossIndex,
    candidates: &[(&Partition<T>, &Partition<T>)],
    theta: T,
) -> Result<Vec<T>> {
    candidates
        .par_iter()
        .map(|(a, b)| {
            let links = InterClusterLinks::with_index(index, a, b, cross)?;
            let m = MatchResult::from_links(&links, theta);
            Ok(links.merged_modularity(&m))
        })
        .collect()
}

/// First candidate with the highest score.
fn argmax<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Best-combination local communities.
pub fn run_bclc<T: Scalar>(corpus: &Corpus, config: &AlgorithmConfig) -> Result<StreamRun<T>> {
    config.validate()?;
    let started = Instant::now();
    let mut report = RunReport::new(config);
    let windows = window_graphs::<T>(corpus, config, |_| true)?;
    require_some_graph(&windows, config)?;
    let ensembles = ensembles(&windows, config)?;
    let crosses = cross_graphs(&windows, config.min_shared_refs)?;
    let theta = T::lit(config.theta);
    let n = config.n_runs;

    if windows.len() == 1 {
        report.warn("corpus spans a single window: streams are that window's communities".into());
    }

    let mut chosen_run: Vec<Option<usize>> = vec![None; windows.len()];
    let mut evaluations = 0usize;
    for k in 0..windows.len() {
        let Some(ens_b) = &ensembles[k] else { continue };
        let linked = k > 0 && crosses[k - 1].is_some();
        if !linked {
            // first window of a run of non-empty windows
            let next = (k + 1 < windows.len()).then(|| (&ensembles[k + 1], &crosses[k])).and_then(|(e, c)| e.as_ref().zip(c.as_ref()));
            let Some((ens_next, cross)) = next else {
                chosen_run[k] = Some(ens_b.best_index());
                continue;
            };
            let index = CrossIndex::new(&ens_b.partitions[0], &ens_next.partitions[0], cross)?;
            let candidates: Vec<_> = ens_b
                .partitions
                .iter()
                .flat_map(|a| ens_next.partitions.iter().map(move |b| (a, b)))
                .collect();
            let scores = score_candidates(cross, &index, &candidates, theta)?;
            evaluations += scores.len();
            let best = argmax(&scores);
            chosen_run[k] = Some(best / n);
            chosen_run[k + 1] = Some(best % n);
            let best_runs = ens_b.best_index() * n + ens_next.best_index();
            report.boundaries.push(boundary_stub(k, scores[best_runs]));
        } else if chosen_run[k].is_none() {
            let a = chosen_run[k - 1].expect("previous window resolved");
            let ens_a = ensembles[k - 1].as_ref().unwrap();
            let cross = crosses[k - 1].as_ref().unwrap();
            let fixed = &ens_a.partitions[a];
            let index = CrossIndex::new(fixed, &ens_b.partitions[0], cross)?;
            let candidates: Vec<_> = ens_b.partitions.iter().map(|b| (fixed, b)).collect();
            let scores = score_candidates(cross, &index, &candidates, theta)?;
            evaluations += scores.len();
            chosen_run[k] = Some(argmax(&scores));
            let best_pair = (&ens_a.partitions[ens_a.best_index()], ens_b.best_modularity());
            let best_index = CrossIndex::new(best_pair.0, best_pair.1, cross)?;
            let best_score = score_candidates(cross, &best_index, &[best_pair], theta)?[0];
            report.boundaries.push(boundary_stub(k - 1, best_score));
        }
    }
    report.matching_evaluations = evaluations;

    let chosen: Vec<Option<Partition<T>>> = ensembles
        .iter()
        .zip(&chosen_run)
        .map(|(e, i)| e.as_ref().map(|e| e.partitions[i.expect("every non-empty window is resolved")].clone()))
        .collect();
    let (streams, _) = chain(&windows, &chosen, &crosses, config, &mut report)?;
    fill_window_reports(&windows, &chosen, &chosen_run, Some(&ensembles), &mut report);
    Ok(finish(streams, corpus, report, started, None, chosen))
}

fn boundary_stub<T: Scalar>(boundary: usize, best_runs: T) -> BoundaryReport {
    BoundaryReport {
        boundary,
        combined_modularity: f64::NAN,
        best_runs_combined_modularity: Some(best_runs.as_f64()),
        pairs: 0,
        splits: 0,
        merges: 0,
        non_positive_pairs: 0,
    }
}
