//! Temporal community detection on bibliographic-coupling networks.
//!
//! Publications are sliced into fixed-length time windows, each window is
//! turned into a weighted coupling graph, communities are found by Louvain
//! modularity optimization and clusters of successive windows are chained
//! into historical *streams* by a modularity-gain matching rule. Four stream
//! builders are provided ([`algorithms`]) together with partition comparison
//! measures ([`compare`]) and a planted-scenario generator ([`synth`]).
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the command-line
//! tool uses.

pub mod algorithms;
pub mod compare;
pub mod corpus;
pub mod error;
pub mod export;
pub mod graph;
pub mod matching;
pub mod partition;
pub mod scalar;
pub mod synth;

pub use algorithms::{Algorithm, AlgorithmConfig, RunReport, StreamRun};
pub use compare::{BipartiteStreamGraph, Direction, StreamPartition};
pub use corpus::{Corpus, CorpusFormat, Publication, TimeWindow};
pub use error::{Error, Result};
pub use graph::BcGraph;
pub use matching::{InterClusterLinks, MatchResult, StreamSet, WindowClusters};
pub use partition::{Ensemble, Partition};
pub use scalar::Scalar;

/// Default scalar used by the command-line tool and the aliases below.
pub type Real = f64;

pub type Graph = BcGraph<Real>;
pub type Graph32 = BcGraph<f32>;
pub type Communities = Partition<Real>;
pub type Communities32 = Partition<f32>;
pub type RunEnsemble = Ensemble<Real>;
pub type Links = InterClusterLinks<Real>;
pub type Matching = MatchResult<Real>;
pub type Streams = StreamSet<Real>;
pub type BipartiteGraph = BipartiteStreamGraph<Real>;
