//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Oracles here are written independently of the library code.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use bcstreams::algorithms::{self, Algorithm, AlgorithmConfig, StreamRun};
use bcstreams::compare::{entropy, mutual_information, nmi, nmi_x, Direction};
use bcstreams::matching::{match_periods, InterClusterLinks, MatchResult};
use bcstreams::partition::{louvain, modularity, Partition};
use bcstreams::synth::{self, PlantedScenario};
use bcstreams::{BcGraph, StreamPartition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- oracles

/// Literal ordered-pair double sum of the modularity definition.
fn literal_modularity(g: &BcGraph<f64>, labels: &[usize]) -> f64 {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j, w) in g.edges() {
        a[i][j] = w;
        a[j][i] = w;
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// All set partitions of `n` elements as restricted growth strings.
fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            grow(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        grow(&mut vec![0], 0, n, &mut out);
    }
    out
}

fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> BcGraph<f64> {
    loop {
        let n = rng.random_range(2..=max_nodes);
        let p = rng.random_range(0.2..0.9);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((format!("n{i}"), format!("n{j}"), 1.0 - rng.random::<f64>()));
                }
            }
        }
        if !edges.is_empty() {
            return BcGraph::from_edges(edges).unwrap();
        }
    }
}

fn random_weight(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Two periods with chained intra-period edges (so every node belongs to its
/// period graph), random extra edges and random cross edges.
struct TwoPeriod {
    a: BcGraph<f64>,
    b: BcGraph<f64>,
    cross: BcGraph<f64>,
    edges_a: Vec<(String, String, f64)>,
    edges_b: Vec<(String, String, f64)>,
    edges_x: Vec<(String, String, f64)>,
}

impl TwoPeriod {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let na = rng.random_range(2..=6);
        let nb = rng.random_range(2..=6);
        let intra = |prefix: &str, n: usize, rng: &mut ChaCha8Rng| {
            let mut e = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if j == i + 1 || rng.random::<f64>() < 0.3 {
                        e.push((format!("{prefix}{i}"), format!("{prefix}{j}"), random_weight(rng)));
                    }
                }
            }
            e
        };
        let edges_a = intra("a", na, rng);
        let edges_b = intra("b", nb, rng);
        let mut edges_x = Vec::new();
        for i in 0..na {
            for j in 0..nb {
                if rng.random::<f64>() < 0.4 {
                    edges_x.push((format!("a{i}"), format!("b{j}"), random_weight(rng)));
                }
            }
        }
        Self::build(edges_a, edges_b, edges_x, 1.0)
    }

    fn build(
        edges_a: Vec<(String, String, f64)>,
        edges_b: Vec<(String, String, f64)>,
        edges_x: Vec<(String, String, f64)>,
        scale: f64,
    ) -> Self {
        let scaled = |e: &[(String, String, f64)]| e.iter().map(|(x, y, w)| (x.clone(), y.clone(), w * scale)).collect::<Vec<_>>();
        let a = BcGraph::from_edges(scaled(&edges_a)).unwrap();
        let b = BcGraph::from_edges(scaled(&edges_b)).unwrap();
        let all: Vec<_> = edges_a.iter().chain(&edges_b).chain(&edges_x).cloned().collect();
        let cross = BcGraph::from_edges(scaled(&all)).unwrap();
        TwoPeriod {
            a,
            b,
            cross,
            edges_a,
            edges_b,
            edges_x,
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        Self::build(self.edges_a.clone(), self.edges_b.clone(), self.edges_x.clone(), factor)
    }
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

fn random_stream_partition(rng: &mut ChaCha8Rng, n: usize, k: usize) -> StreamPartition {
    StreamPartition::new((0..n).map(|i| (format!("p{i}"), format!("s{}", rng.random_range(0..k))))).unwrap()
}

/// Stream name -> member set, rebuilt from raw membership.
fn stream_sets(p: &StreamPartition) -> BTreeMap<String, HashSet<String>> {
    let mut m: BTreeMap<String, HashSet<String>> = BTreeMap::new();
    for id in p.ids() {
        m.entry(p.stream_of(id).unwrap().to_string()).or_default().insert(id.clone());
    }
    m
}

fn naive_mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Naive 1stE and Sum80 from membership sets.
fn naive_flow(x: &StreamPartition, y: &StreamPartition) -> ((f64, f64), (f64, f64)) {
    let sx = stream_sets(x);
    let sy = stream_sets(y);
    let mut firsts = Vec::new();
    let mut counts = Vec::new();
    for members in sx.values() {
        let mut shares: Vec<(usize, usize)> = sy
            .values()
            .enumerate()
            .map(|(t, other)| (t, members.intersection(other).count()))
            .filter(|&(_, c)| c > 0)
            .collect();
        let weights: Vec<f64> = shares.iter().map(|&(_, c)| c as f64 / members.len() as f64).collect();
        firsts.push(weights.iter().cloned().fold(0.0, f64::max));
        shares.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut covered = 0.0;
        let mut k = 0;
        for (_, c) in shares {
            covered += c as f64 / members.len() as f64;
            k += 1;
            if covered >= 0.8 - 1e-9 {
                break;
            }
        }
        counts.push(k as f64);
    }
    (naive_mean_std(&firsts), naive_mean_std(&counts))
}

/// MI from an explicit contingency table filled by scanning every
/// (publication, X stream, Y stream) combination.
fn brute_force_mi(x: &StreamPartition, y: &StreamPartition) -> f64 {
    let sx = stream_sets(x);
    let sy = stream_sets(y);
    let n = x.len() as f64;
    let mut mi = 0.0;
    for a in sx.values() {
        for b in sy.values() {
            let nij = x.ids().iter().filter(|id| a.contains(*id) && b.contains(*id)).count() as f64;
            if nij > 0.0 {
                mi += nij / n * (n * nij / (a.len() as f64 * b.len() as f64)).ln();
            }
        }
    }
    mi
}

fn fixtures() -> Vec<(String, PlantedScenario)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/scenarios");
    let mut out: Vec<(String, PlantedScenario)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .map(|p| {
            let s = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), s)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn run(corpus: &bcstreams::Corpus, algorithm: Algorithm, n_runs: usize) -> StreamRun<f64> {
    let config = AlgorithmConfig {
        n_runs,
        ..AlgorithmConfig::new(algorithm)
    };
    algorithms::run::<f64>(corpus, &config).unwrap()
}

// ---------------------------------------------------------------- criteria

fn c1_modularity_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let g = random_graph(&mut rng, 12);
        for k in [1, 2, 3, g.node_count()] {
            let labels = random_labels(&mut rng, g.node_count(), k);
            let q = modularity(&g, &labels).map_err(|e| e.to_string())?;
            let diff = (q - literal_modularity(&g, &labels)).abs();
            worst = worst.max(diff);
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("200 graphs x 4 partitions, max deviation {worst:.1e}"))
}

fn c2_louvain_optimality() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut attained = 0;
    for trial in 0..100u64 {
        let g = random_graph(&mut rng, 8);
        let best = all_partitions(g.node_count())
            .iter()
            .map(|p| literal_modularity(&g, p))
            .fold(f64::NEG_INFINITY, f64::max);
        let q = louvain(&g, trial).map_err(|e| e.to_string())?.modularity();
        ensure(q <= best + 1e-12, || format!("trial {trial}: Q {q} exceeds exhaustive {best}"))?;
        if q >= best - 1e-12 {
            attained += 1;
        }
    }
    ensure(attained >= 90, || format!("optimum attained in {attained}/100"))?;
    let tri = BcGraph::<f64>::from_edges(
        [("a", "b"), ("b", "c"), ("a", "c"), ("d", "e"), ("e", "f"), ("d", "f")]
            .into_iter()
            .map(|(x, y)| (x, y, 1.0)),
    )
    .unwrap();
    let q = louvain(&tri, 0).unwrap().modularity();
    ensure(q == 0.5, || format!("two triangles Q = {q}"))?;
    Ok(format!("optimum attained in {attained}/100, two triangles Q = {q}"))
}

fn c3_delta_q_consistency() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let theta = 1e-6;
    let (mut checked, mut worst): (usize, f64) = (0, 0.0);
    for _ in 0..100 {
        let tp = TwoPeriod::random(&mut rng);
        let la = random_labels(&mut rng, tp.a.node_count(), 3);
        let lb = random_labels(&mut rng, tp.b.node_count(), 3);
        let pa = Partition::from_assignment(&tp.a, la.clone(), None).unwrap();
        let pb = Partition::from_assignment(&tp.b, lb.clone(), None).unwrap();
        let links = InterClusterLinks::new(&pa, &pb, &tp.cross).map_err(|e| e.to_string())?;
        let ka = pa.community_count();
        let union: Vec<usize> = tp
            .cross
            .ids()
            .iter()
            .map(|id| pa.community_of(id).unwrap_or_else(|| ka + pb.community_of(id).unwrap()))
            .collect();
        let base = literal_modularity(&tp.cross, &union);
        for a in 0..ka {
            for b in 0..pb.community_count() {
                if links.omega_norm(a, b) <= theta {
                    continue;
                }
                let merged: Vec<usize> = union.iter().map(|&c| if c == ka + b { a } else { c }).collect();
                let change = literal_modularity(&tp.cross, &merged) - base;
                let predicted = links.delta_q(a, b) / links.total();
                worst = worst.max((change - predicted).abs());
                checked += 1;
            }
        }
        let m = match_periods(&pa, &pb, &tp.cross, theta).unwrap();
        for factor in [0.25, 3.0, 7.3] {
            let s = tp.scaled(factor);
            let spa = Partition::from_assignment(&s.a, la.clone(), None).unwrap();
            let spb = Partition::from_assignment(&s.b, lb.clone(), None).unwrap();
            let sm = match_periods(&spa, &spb, &s.cross, theta).unwrap();
            let targets = |r: &MatchResult<f64>| {
                (
                    r.successor.iter().map(|s| s.map(|m| m.cluster)).collect::<Vec<_>>(),
                    r.predecessor.iter().map(|s| s.map(|m| m.cluster)).collect::<Vec<_>>(),
                )
            };
            ensure(targets(&m) == targets(&sm), || format!("matching changed under scaling by {factor}"))?;
        }
    }
    ensure(checked > 0, || "no candidate pair checked".into())?;
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("{checked} merges, max deviation {worst:.1e}; maps scale-invariant"))
}

fn fixture_partitions(
    cross_edges: &[(&str, &str, f64)],
    a: &[(&str, usize)],
    b: &[(&str, usize)],
) -> (Partition<f64>, Partition<f64>, BcGraph<f64>) {
    let in_a: HashSet<&str> = a.iter().map(|x| x.0).collect();
    let in_b: HashSet<&str> = b.iter().map(|x| x.0).collect();
    let pick = |set: &HashSet<&str>| {
        BcGraph::<f64>::from_edges(
            cross_edges
                .iter()
                .filter(|(x, y, _)| set.contains(x) && set.contains(y))
                .copied(),
        )
        .unwrap()
    };
    let (ga, gb) = (pick(&in_a), pick(&in_b));
    let cross = BcGraph::from_edges(cross_edges.iter().copied()).unwrap();
    let map = |m: &[(&str, usize)]| m.iter().map(|(k, v)| (k.to_string(), *v)).collect::<HashMap<_, _>>();
    let pa = Partition::from_map(&ga, &map(a)).unwrap();
    let pb = Partition::from_map(&gb, &map(b)).unwrap();
    (pa, pb, cross)
}

fn c4_matching_semantics() -> Result<String, String> {
    // 8 nodes: a1 = {p1,p2}, a2 = {p3,p4}; b1 = {q1,q2}, b2 = {q3,q4}
    let edges = [
        ("p1", "p2", 1.0),
        ("p3", "p4", 1.0),
        ("q1", "q2", 1.0),
        ("q3", "q4", 1.0),
        ("p1", "q1", 0.8),
        ("p2", "q2", 0.6),
        ("p3", "q3", 0.9),
        ("p4", "q4", 0.5),
        ("p2", "q3", 0.1),
    ];
    let a = [("p1", 0), ("p2", 0), ("p3", 1), ("p4", 1)];
    let b = [("q1", 0), ("q2", 0), ("q3", 1), ("q4", 1)];
    let (pa, pb, cross) = fixture_partitions(&edges, &a, &b);
    let m = match_periods(&pa, &pb, &cross, 1e-6).unwrap();
    ensure(m.pairs == vec![(0, 0), (1, 1)] && m.splits.is_empty() && m.merges.is_empty(), || {
        format!("pairs {:?} splits {:?} merges {:?}", m.pairs, m.splits, m.merges)
    })?;

    // one earlier cluster, two later clusters, stronger ties to b1
    let edges = [
        ("p1", "p2", 1.0),
        ("p2", "p3", 1.0),
        ("p3", "p4", 1.0),
        ("q1", "q2", 1.0),
        ("q3", "q4", 1.0),
        ("p1", "q1", 0.9),
        ("p2", "q2", 0.9),
        ("p3", "q3", 0.3),
        ("p4", "q4", 0.3),
    ];
    let a = [("p1", 0), ("p2", 0), ("p3", 0), ("p4", 0)];
    let (pa, pb, cross) = fixture_partitions(&edges, &a, &b);
    let m = match_periods(&pa, &pb, &cross, 1e-6).unwrap();
    ensure(m.pairs == vec![(0, 0)] && m.splits == vec![(0, 1)] && m.merges.is_empty(), || {
        format!("split fixture: pairs {:?} splits {:?} merges {:?}", m.pairs, m.splits, m.merges)
    })?;

    // only cross link has normalized weight equal to the threshold
    let edges = [("p1", "p2", 1.0), ("q1", "q2", 1.0), ("p1", "q1", 4e-6)];
    let a = [("p1", 0), ("p2", 0)];
    let b = [("q1", 0), ("q2", 0)];
    let (pa, pb, cross) = fixture_partitions(&edges, &a, &b);
    let m = match_periods(&pa, &pb, &cross, 1e-6).unwrap();
    ensure(
        m.successor.iter().chain(&m.predecessor).all(Option::is_none) && m.pairs.is_empty(),
        || "link at the threshold produced a match".into(),
    )?;
    Ok("pair, split and threshold fixtures match exactly".into())
}

fn c5_mi_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=200);
        let k = rng.random_range(1..=12);
        let x = random_stream_partition(&mut rng, n, k);
        let k = rng.random_range(1..=12);
        let y = random_stream_partition(&mut rng, n, k);
        let mi = mutual_information::<f64>(&x, &y).unwrap();
        worst = worst.max((mi - brute_force_mi(&x, &y)).abs());
    }
    ensure(worst <= 1e-12, || format!("MI deviation {worst:e}"))?;

    let p = random_stream_partition(&mut rng, 150, 7);
    let self_nmi = nmi::<f64>(&p, &p).unwrap();
    ensure(self_nmi == 1.0, || format!("NMI(P,P) = {self_nmi}"))?;

    let coarse = StreamPartition::new((0..120).map(|i| (format!("p{i}"), format!("c{}", i % 4)))).unwrap();
    let fine = StreamPartition::new((0..120).map(|i| (format!("p{i}"), format!("f{}", i % 12)))).unwrap();
    let nx = nmi_x::<f64>(&coarse, &fine).unwrap();
    ensure(nx == 1.0, || format!("refinement NMI_X = {nx}"))?;

    let halves = StreamPartition::new((0..100).map(|i| (format!("p{i}"), format!("h{}", i / 50)))).unwrap();
    let parity = StreamPartition::new((0..100).map(|i| (format!("p{i}"), format!("e{}", i % 2)))).unwrap();
    let mi = mutual_information::<f64>(&halves, &parity).unwrap();
    ensure(mi.abs() <= 1e-12, || format!("independent MI = {mi}"))?;

    for k in [1usize, 2, 5, 13] {
        let p = StreamPartition::new((0..k * 7).map(|i| (format!("p{i}"), format!("s{}", i % k)))).unwrap();
        let h = entropy::<f64>(&p);
        ensure((h - (k as f64).ln()).abs() <= 1e-12, || format!("entropy of {k} equal streams = {h}"))?;
    }
    Ok(format!("100 pairs, max MI deviation {worst:.1e}; identity, refinement, independence, ln k exact"))
}

fn c6_flow_measures() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for t in 0..50 {
        let n = rng.random_range(1..=150);
        let k = rng.random_range(1..=10);
        let x = random_stream_partition(&mut rng, n, k);
        let k = rng.random_range(1..=10);
        let y = random_stream_partition(&mut rng, n, k);
        let g = bcstreams::BipartiteGraph::new(&x, &y).unwrap();
        let mut out_xy = vec![0.0; g.x_nodes.len()];
        let mut out_yx = vec![0.0; g.y_nodes.len()];
        for e in &g.edges {
            out_xy[e.x] += e.weight_xy;
            out_yx[e.y] += e.weight_yx;
        }
        ensure(out_xy.iter().chain(&out_yx).all(|s| (s - 1.0).abs() <= 1e-12), || {
            format!("pair {t}: outgoing weights do not sum to 1")
        })?;
        for (dir, a, b) in [(Direction::XToY, &x, &y), (Direction::YToX, &y, &x)] {
            let (first, sum80) = naive_flow(a, b);
            let got = (g.first_edge(dir).unwrap(), g.sum80(dir).unwrap());
            ensure(got == (first, sum80), || format!("pair {t} {dir:?}: {got:?} vs naive {:?}", (first, sum80)))?;
        }
    }
    let x = StreamPartition::new((0..10).map(|i| (format!("p{i}"), "x".to_string()))).unwrap();
    let y = StreamPartition::new((0..10).map(|i| (format!("p{i}"), if i < 8 { "a" } else { "b" }.to_string()))).unwrap();
    let g = bcstreams::BipartiteGraph::new(&x, &y).unwrap();
    let s = g.sum80(Direction::XToY).unwrap();
    ensure(s == (1.0, 0.0), || format!("{{0.8, 0.2}} gives Sum80 {s:?}"))?;
    Ok("50 random pairs match naive set rebuilds exactly; {0.8, 0.2} -> 1".into())
}

fn c7_planted_recovery() -> Result<String, String> {
    let (corpus, truth) = synth::fixtures::split_merge().generate().unwrap();
    let r = synth::score_recovery(&run(&corpus, Algorithm::Bclc, 20).streams, &truth).unwrap();
    ensure(r.nmi == 1.0 && r.event_recall == 1.0, || {
        format!("zero noise: NMI {} recall {}", r.nmi, r.event_recall)
    })?;
    let (mut nmis, mut recalls) = (Vec::new(), Vec::new());
    for seed in 1..=10 {
        let (corpus, truth) = synth::fixtures::split_merge_noisy(seed).generate().unwrap();
        let r = synth::score_recovery(&run(&corpus, Algorithm::Bclc, 20).streams, &truth).unwrap();
        nmis.push(r.nmi);
        recalls.push(r.event_recall);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let (nmi, recall) = (mean(&nmis), mean(&recalls));
    ensure(nmi >= 0.85 && recall >= 0.8, || {
        format!("noise 0.1: mean NMI {nmi:.4} (min {:.4}), mean recall {recall:.3}", min(&nmis))
    })?;
    Ok(format!(
        "{} pubs: zero noise NMI 1, recall 1; noise 0.1 over 10 seeds: mean NMI {nmi:.4} (min {:.4}), mean recall {recall:.3} (min {:.3})",
        corpus.len(),
        min(&nmis),
        min(&recalls)
    ))
}

fn c8_bclc_dominance() -> Result<String, String> {
    let mut boundaries = 0;
    for (name, scenario) in fixtures() {
        let (corpus, _) = scenario.generate().unwrap();
        let bmla = run(&corpus, Algorithm::Bmla, 100);
        let bclc = run(&corpus, Algorithm::Bclc, 100);
        ensure(bmla.report.boundaries.len() == bclc.report.boundaries.len(), || format!("{name}: boundary count"))?;
        for (m, c) in bmla.report.boundaries.iter().zip(&bclc.report.boundaries) {
            ensure(c.combined_modularity >= m.combined_modularity, || {
                format!(
                    "{name} boundary {}: BCLC {} < BMLA {}",
                    c.boundary, c.combined_modularity, m.combined_modularity
                )
            })?;
            boundaries += 1;
        }
    }
    Ok(format!("{boundaries} boundaries over all fixtures, BCLC >= BMLA everywhere"))
}

fn c9_ga_contract() -> Result<String, String> {
    let mut windows = 0;
    for (name, scenario) in fixtures() {
        let (corpus, _) = scenario.generate().unwrap();
        let ga = run(&corpus, Algorithm::Ga, 100);
        ensure(ga.streams.events.is_empty(), || format!("{name}: GA has {} events", ga.streams.events.len()))?;
        let gpa = run(&corpus, Algorithm::Gpa, 100);
        let slices = corpus.slice_windows(5).unwrap();
        for (w, (_, pubs)) in gpa.report.windows.iter().zip(&slices) {
            let loss = w.projection.ok_or_else(|| format!("{name}: window without loss accounting"))?;
            let in_global = pubs.iter().filter(|p| ga.streams.membership.contains_key(&p.id)).count();
            ensure(loss.kept + loss.dropped == loss.population && loss.population == in_global, || {
                format!("{name} window {}: {loss:?} vs {in_global} publications in the global graph", w.window.index)
            })?;
            windows += 1;
        }
    }
    Ok(format!("no GA events; GPA kept + dropped = population in {windows} windows"))
}

fn bcstreams(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_bcstreams"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("bcstreams {args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn c10_determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |parts: &[&str]| -> PathBuf { parts.iter().fold(dir.path().to_path_buf(), |acc, x| acc.join(x)) };
    let s = |p: &PathBuf| p.to_string_lossy().into_owned();
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/scenarios");
    let mut checked = 0;
    for (name, _) in fixtures() {
        let scenario = scenarios.join(format!("{name}.json"));
        let syn = p(&[&name, "corpus"]);
        bcstreams(&["synth", &s(&scenario), "--out", &s(&syn)])?;
        for alg in Algorithm::ALL {
            let alg = alg.to_string();
            let first = p(&[&name, &alg, "first"]);
            let again = p(&[&name, &alg, "again"]);
            bcstreams(&[
                "detect",
                &s(&syn.join("corpus.jsonl")),
                "--algorithm",
                &alg,
                "--runs",
                "20",
                "--seed",
                "42",
                "--out",
                &s(&first),
            ])?;
            bcstreams(&["rerun", &s(&first.join("manifest.json")), "--out", &s(&again)])?;
            let a = std::fs::read(first.join("streams.json")).map_err(|e| e.to_string())?;
            let b = std::fs::read(again.join("streams.json")).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{name}/{alg}: stream exports differ"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} fixture/algorithm reruns byte-identical"))
}

fn main() {
    let criteria: [(&str, Check, Duration); 10] = [
        ("modularity oracle", c1_modularity_oracle, Duration::from_secs(5)),
        ("louvain optimality", c2_louvain_optimality, Duration::from_secs(30)),
        ("delta-Q consistency", c3_delta_q_consistency, Duration::from_secs(10)),
        ("matching semantics", c4_matching_semantics, Duration::from_secs(1)),
        ("MI/NMI oracle", c5_mi_oracle, Duration::from_secs(5)),
        ("bipartite flow measures", c6_flow_measures, Duration::MAX),
        ("planted recovery", c7_planted_recovery, Duration::from_secs(120)),
        ("BCLC dominance", c8_bclc_dominance, Duration::MAX),
        ("GA/GPA contract", c9_ga_contract, Duration::MAX),
        ("rerun determinism", c10_determinism, Duration::MAX),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(e.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let elapsed = started.elapsed();
        let result = match result {
            Ok(_) if elapsed > *limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            r => r,
        };
        let (status, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} [{status}] {name}: {detail} ({elapsed:.2?})", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
