//! Coevolution of opinion polarization and network segregation under
//! bounded-confidence influence and discordance-driven unfollowing.
//!
//! Modules map onto the pieces of the toolkit:
//!
//! * [`graph`]: directed follower graph, rewiring, SCC / WCC / k-core,
//!   triad census, in-degree CCDF.
//! * [`sim`]: the generative model ([`SimState`]).
//! * [`metrics`]: entropy, peaks, segregation, diversity, steady state.
//! * [`empirical`]: data loaders, hashtag distances, synthetic retweet
//!   networks and the validation pipeline.
//! * [`harness`]: seeded, parallel experiment drivers.
//! * [`presets`]: named parameter blocks for each experiment.

pub mod empirical;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod params;
pub mod presets;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
pub use graph::{DirectedGraph, NodeId, Partition, Subgraph, TriadCensus};
pub use metrics::MetricsSnapshot;
pub use params::{Params, ParamsOverrides, Strategy};
pub use sim::{Event, Message, RunOutcome, Screen, ScreenEntry, SimState};
