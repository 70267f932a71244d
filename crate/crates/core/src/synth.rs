//! Planted temporal corpora with known streams and events.
//!
//! Every planted stream owns a pool of reference ids and its publications
//! cite references drawn from that pool, so publications of one stream are
//! coupled and publications of different streams are not (unless `noise`
//! makes them borrow from foreign pools). Between windows a fraction
//! `pool_drift` of every pool is replaced by fresh references. A split hands
//! half of the parent's pool to the child; a merge adds the absorbed
//! stream's pool to the survivor's.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::{index, IndexedRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compare::{entropy, mutual_information, restrict_to_shared, StreamPartition};
use crate::corpus::{Corpus, Publication};
use crate::error::{Error, Result};
use crate::matching::{EventKind, StreamSet};
use crate::scalar::Scalar;

fn default_delta_t() -> u32 {
    5
}

fn default_start_year() -> i32 {
    2000
}

/// Publications per window: one number for every window of the lifespan or
/// one entry per window of the lifespan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowCounts {
    Fixed(usize),
    PerWindow(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedStream {
    pub name: String,
    pub first_window: usize,
    pub last_window: usize,
    pub pubs_per_window: WindowCounts,
    /// Initial pool size; streams born from a split or merge take their
    /// pool from their parents instead.
    pub pool_size: usize,
}

impl PlantedStream {
    fn count_at(&self, window: usize) -> usize {
        match &self.pubs_per_window {
            WindowCounts::Fixed(n) => *n,
            WindowCounts::PerWindow(v) => v[window - self.first_window],
        }
    }

    fn alive(&self, window: usize) -> bool {
        (self.first_window..=self.last_window).contains(&window)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantedEventKind {
    Split,
    Merge,
    Birth,
    Death,
}

/// An event at the boundary between windows `boundary` and `boundary + 1`.
///
/// Participants: `split` = `[parent, child]` (the parent continues),
/// `merge` = `[absorbed, survivor]` (the survivor continues), `birth` and
/// `death` = `[stream]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedEvent {
    pub boundary: usize,
    pub kind: PlantedEventKind,
    pub participants: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedScenario {
    pub windows: usize,
    #[serde(default = "default_delta_t")]
    pub delta_t: u32,
    #[serde(default = "default_start_year")]
    pub start_year: i32,
    pub refs_per_pub: usize,
    pub streams: Vec<PlantedStream>,
    #[serde(default)]
    pub events: Vec<PlantedEvent>,
    /// Probability that a reference is borrowed from another live stream.
    #[serde(default)]
    pub noise: f64,
    /// Fraction of each pool replaced between successive windows.
    #[serde(default)]
    pub pool_drift: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Publication id to planted stream name.
    pub membership: BTreeMap<String, String>,
    pub events: Vec<PlantedEvent>,
}

impl GroundTruth {
    pub fn stream_partition(&self) -> Result<StreamPartition> {
        StreamPartition::new(self.membership.iter().map(|(p, s)| (p.clone(), s.clone())))
    }
}

impl PlantedScenario {
    fn stream(&self, name: &str) -> Result<usize> {
        self.streams
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::validation(format!("event names unknown stream `{name}`")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.windows == 0 {
            return Err(Error::validation("scenario needs at least one window"));
        }
        if self.delta_t == 0 {
            return Err(Error::validation("delta_t must be at least 1"));
        }
        if self.refs_per_pub == 0 {
            return Err(Error::validation("refs_per_pub must be at least 1"));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return Err(Error::validation("noise must lie in [0, 0.5)"));
        }
        if !(0.0..=1.0).contains(&self.pool_drift) {
            return Err(Error::validation("pool_drift must lie in [0, 1]"));
        }
        let mut names = HashSet::new();
        for s in &self.streams {
            if !names.insert(s.name.as_str()) {
                return Err(Error::validation(format!("duplicate stream name `{}`", s.name)));
            }
            if s.first_window > s.last_window || s.last_window >= self.windows {
                return Err(Error::validation(format!("stream `{}` has an invalid lifespan", s.name)));
            }
            if let WindowCounts::PerWindow(v) = &s.pubs_per_window {
                if v.len() != s.last_window - s.first_window + 1 {
                    return Err(Error::validation(format!(
                        "stream `{}` needs one publication count per window of its lifespan",
                        s.name
                    )));
                }
            }
        }
        let mut inherited = HashSet::new();
        for e in &self.events {
            if e.boundary + 1 >= self.windows {
                return Err(Error::validation(format!("event boundary {} out of range", e.boundary)));
            }
            let arity = match e.kind {
                PlantedEventKind::Split | PlantedEventKind::Merge => 2,
                PlantedEventKind::Birth | PlantedEventKind::Death => 1,
            };
            if e.participants.len() != arity {
                return Err(Error::validation(format!("{:?} event needs {arity} participants", e.kind)));
            }
            let ids = e.participants.iter().map(|p| self.stream(p)).collect::<Result<Vec<_>>>()?;
            let s = |i: usize| &self.streams[ids[i]];
            let (b, next) = (e.boundary, e.boundary + 1);
            let ok = match e.kind {
                PlantedEventKind::Split => s(0).alive(b) && s(0).alive(next) && s(1).first_window == next,
                PlantedEventKind::Merge => s(0).last_window == b && s(1).alive(b) && s(1).alive(next),
                PlantedEventKind::Birth => s(0).first_window == next,
                PlantedEventKind::Death => s(0).last_window == b,
            };
            if !ok {
                return Err(Error::validation(format!(
                    "participants of the {:?} event at boundary {b} are not alive around it",
                    e.kind
                )));
            }
            if e.kind == PlantedEventKind::Split && !inherited.insert(ids[1]) {
                return Err(Error::validation(format!("stream `{}` is born twice", s(1).name)));
            }
        }
        Ok(())
    }

    /// Generates the corpus and its ground truth; a pure function of the
    /// scenario.
    pub fn generate(&self) -> Result<(Corpus, GroundTruth)> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut next_ref = 0usize;
        let mut fresh = |n: usize| -> Vec<String> {
            let out = (next_ref..next_ref + n).map(|r| format!("r{r}")).collect();
            next_ref += n;
            out
        };

        let mut pools: HashMap<usize, Vec<String>> = HashMap::new();
        let mut pubs = Vec::new();
        let mut membership = BTreeMap::new();
        for k in 0..self.windows {
            if k > 0 {
                self.transition(k - 1, &mut pools, &mut rng, &mut fresh);
            }
            for (i, s) in self.streams.iter().enumerate() {
                if s.first_window == k && !pools.contains_key(&i) {
                    pools.insert(i, fresh(s.pool_size));
                }
            }
            let alive: Vec<usize> = (0..self.streams.len()).filter(|&i| self.streams[i].alive(k)).collect();
            for &i in &alive {
                let s = &self.streams[i];
                let pool = &pools[&i];
                if pool.len() < self.refs_per_pub {
                    return Err(Error::validation(format!(
                        "stream `{}` has {} pool references in window {k}, fewer than refs_per_pub = {}",
                        s.name,
                        pool.len(),
                        self.refs_per_pub
                    )));
                }
                let foreign: Vec<&Vec<String>> = alive.iter().filter(|&&j| j != i).map(|j| &pools[j]).collect();
                for n in 0..s.count_at(k) {
                    let mut refs: Vec<String> = index::sample(&mut rng, pool.len(), self.refs_per_pub)
                        .into_iter()
                        .map(|r| pool[r].clone())
                        .collect();
                    if !foreign.is_empty() {
                        for r in refs.iter_mut() {
                            if rng.random::<f64>() < self.noise {
                                let other = foreign.choose(&mut rng).unwrap();
                                *r = other.choose(&mut rng).unwrap().clone();
                            }
                        }
                    }
                    let start = self.start_year + (k as u32 * self.delta_t) as i32;
                    let year = start + rng.random_range(0..self.delta_t) as i32;
                    let id = format!("{}-w{k}-{n:03}", s.name);
                    membership.insert(id.clone(), s.name.clone());
                    pubs.push(Publication::new(id, year, refs).with_label(s.name.clone()));
                }
            }
        }

        let mut events = self.events.clone();
        let named: HashSet<(PlantedEventKind, &str)> = self
            .events
            .iter()
            .flat_map(|e| e.participants.iter().map(move |p| (e.kind, p.as_str())))
            .collect();
        let split_children: HashSet<&str> = self
            .events
            .iter()
            .filter(|e| e.kind == PlantedEventKind::Split)
            .map(|e| e.participants[1].as_str())
            .collect();
        let absorbed: HashSet<&str> = self
            .events
            .iter()
            .filter(|e| e.kind == PlantedEventKind::Merge)
            .map(|e| e.participants[0].as_str())
            .collect();
        for s in &self.streams {
            let n = s.name.as_str();
            if s.first_window > 0 && !split_children.contains(n) && !named.contains(&(PlantedEventKind::Birth, n)) {
                events.push(PlantedEvent {
                    boundary: s.first_window - 1,
                    kind: PlantedEventKind::Birth,
                    participants: vec![s.name.clone()],
                });
            }
            if s.last_window + 1 < self.windows && !absorbed.contains(n) && !named.contains(&(PlantedEventKind::Death, n)) {
                events.push(PlantedEvent {
                    boundary: s.last_window,
                    kind: PlantedEventKind::Death,
                    participants: vec![s.name.clone()],
                });
            }
        }
        events.sort_by(|a, b| (a.boundary, a.kind, &a.participants).cmp(&(b.boundary, b.kind, &b.participants)));

        Ok((Corpus::new(pubs)?, GroundTruth { membership, events }))
    }

    /// Updates pools from window `boundary` to `boundary + 1`.
    fn transition(
        &self,
        boundary: usize,
        pools: &mut HashMap<usize, Vec<String>>,
        rng: &mut ChaCha8Rng,
        fresh: &mut impl FnMut(usize) -> Vec<String>,
    ) {
        for e in self.events.iter().filter(|e| e.boundary == boundary) {
            let ids: Vec<usize> = e.participants.iter().map(|p| self.stream(p).unwrap()).collect();
            match e.kind {
                PlantedEventKind::Split => {
                    let parent = pools.get_mut(&ids[0]).expect("parent alive");
                    parent.shuffle_in_place(rng);
                    let half = parent.split_off(parent.len() / 2);
                    pools.insert(ids[1], half);
                }
                PlantedEventKind::Merge => {
                    let absorbed = pools.remove(&ids[0]).expect("absorbed stream alive");
                    pools.get_mut(&ids[1]).expect("survivor alive").extend(absorbed);
                }
                PlantedEventKind::Birth | PlantedEventKind::Death => {}
            }
        }
        let mut keys: Vec<usize> = pools.keys().copied().collect();
        keys.sort_unstable();
        for i in keys {
            if !self.streams[i].alive(boundary + 1) {
                pools.remove(&i);
                continue;
            }
            let pool = pools.get_mut(&i).unwrap();
            let replace = (self.pool_drift * pool.len() as f64).round() as usize;
            if replace > 0 {
                let slots = index::sample(rng, pool.len(), replace.min(pool.len()));
                let new = fresh(slots.len());
                for (slot, r) in slots.into_iter().zip(new) {
                    pool[slot] = r;
                }
            }
        }
    }
}

trait ShuffleInPlace {
    fn shuffle_in_place(&mut self, rng: &mut ChaCha8Rng);
}

impl<T> ShuffleInPlace for Vec<T> {
    fn shuffle_in_place(&mut self, rng: &mut ChaCha8Rng) {
        use rand::seq::SliceRandom;
        self.shuffle(rng);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub shared_publications: usize,
    pub detected_streams: usize,
    pub planted_streams: usize,
    /// Symmetric NMI on the shared publications. Defined as 1 when both
    /// sides have a single stream and 0 when exactly one side does.
    pub nmi: f64,
    pub planted_events: usize,
    pub recovered_events: usize,
    /// Fraction of planted splits and merges with a detected event of the
    /// same kind within one window of the planted boundary; 1 when nothing
    /// was planted.
    pub event_recall: f64,
}

/// Scores detected streams against the planted truth.
pub fn score_recovery<T: Scalar>(detected: &StreamSet<T>, truth: &GroundTruth) -> Result<RecoveryReport> {
    let found = StreamPartition::new(detected.membership.iter().map(|(p, s)| (p.clone(), s.to_string())))?;
    let planted = truth.stream_partition()?;
    let (x, y, restriction) = restrict_to_shared(&found, &planted)?;
    let (hx, hy) = (entropy::<f64>(&x), entropy::<f64>(&y));
    let nmi = match (hx > 0.0, hy > 0.0) {
        (true, true) => mutual_information::<f64>(&x, &y)? / (hx * hy).sqrt(),
        (false, false) => 1.0,
        _ => 0.0,
    };

    let wanted: Vec<(usize, EventKind)> = truth
        .events
        .iter()
        .filter_map(|e| match e.kind {
            PlantedEventKind::Split => Some((e.boundary, EventKind::Split)),
            PlantedEventKind::Merge => Some((e.boundary, EventKind::Merge)),
            _ => None,
        })
        .collect();
    let recovered = wanted
        .iter()
        .filter(|(b, kind)| {
            detected
                .events
                .iter()
                .any(|e| e.kind == *kind && e.boundary.abs_diff(*b) <= 1)
        })
        .count();
    Ok(RecoveryReport {
        shared_publications: restriction.shared,
        detected_streams: x.stream_count(),
        planted_streams: y.stream_count(),
        nmi,
        planted_events: wanted.len(),
        recovered_events: recovered,
        event_recall: if wanted.is_empty() {
            1.0
        } else {
            recovered as f64 / wanted.len() as f64
        },
    })
}

/// Scenarios shipped with the tool (also under `fixtures/scenarios/`).
pub mod fixtures {
    use super::*;

    fn stream(name: &str, first: usize, last: usize, pubs: usize, pool: usize) -> PlantedStream {
        PlantedStream {
            name: name.into(),
            first_window: first,
            last_window: last,
            pubs_per_window: WindowCounts::Fixed(pubs),
            pool_size: pool,
        }
    }

    fn event(boundary: usize, kind: PlantedEventKind, participants: &[&str]) -> PlantedEvent {
        PlantedEvent {
            boundary,
            kind,
            participants: participants.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Four long-lived, well separated streams without events.
    pub fn parallel_streams() -> PlantedScenario {
        PlantedScenario {
            windows: 5,
            delta_t: 5,
            start_year: 1990,
            refs_per_pub: 15,
            streams: vec![
                stream("optics", 0, 4, 30, 40),
                stream("plasma", 0, 4, 25, 40),
                stream("soft-matter", 0, 4, 20, 40),
                stream("biophysics", 1, 4, 20, 40),
            ],
            events: vec![],
            noise: 0.0,
            pool_drift: 0.2,
            seed: 11,
        }
    }

    /// Three streams over four windows: `gamma` splits off `alpha` after the
    /// first window and `beta` merges into `alpha` after the third.
    pub fn split_merge() -> PlantedScenario {
        PlantedScenario {
            windows: 4,
            delta_t: 5,
            start_year: 1990,
            refs_per_pub: 15,
            streams: vec![
                PlantedStream {
                    name: "alpha".into(),
                    first_window: 0,
                    last_window: 3,
                    pubs_per_window: WindowCounts::PerWindow(vec![50, 20, 20, 40]),
                    pool_size: 60,
                },
                stream("beta", 0, 2, 15, 20),
                stream("gamma", 1, 3, 70, 0),
            ],
            events: vec![
                event(0, PlantedEventKind::Split, &["alpha", "gamma"]),
                event(2, PlantedEventKind::Merge, &["beta", "alpha"]),
            ],
            noise: 0.0,
            pool_drift: 0.2,
            seed: 7,
        }
    }

    /// Split-merge scenario with foreign-pool noise.
    pub fn split_merge_noisy(seed: u64) -> PlantedScenario {
        PlantedScenario {
            noise: 0.1,
            seed,
            ..split_merge()
        }
    }

    /// Two regular streams, one stream with a single publication per window
    /// (coupled only across windows) and one stream silent in its middle
    /// window.
    pub fn long_term() -> PlantedScenario {
        PlantedScenario {
            windows: 3,
            delta_t: 5,
            start_year: 2000,
            refs_per_pub: 12,
            streams: vec![
                stream("main", 0, 2, 30, 30),
                stream("side", 0, 2, 25, 30),
                stream("lonely", 0, 2, 1, 16),
                PlantedStream {
                    name: "intermittent".into(),
                    first_window: 0,
                    last_window: 2,
                    pubs_per_window: WindowCounts::PerWindow(vec![20, 0, 20]),
                    pool_size: 24,
                },
            ],
            events: vec![],
            noise: 0.0,
            pool_drift: 0.0,
            seed: 3,
        }
    }

    pub fn all() -> Vec<(&'static str, PlantedScenario)> {
        vec![
            ("parallel-streams", parallel_streams()),
            ("split-merge", split_merge()),
            ("split-merge-noisy", split_merge_noisy(1)),
            ("long-term", long_term()),
        ]
    }
}
