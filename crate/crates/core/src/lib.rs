//! Temporal directed social networks whose nodes pick connection preferences
//! with reinforcement learning while an epidemic spreads over their contacts.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: nodes, preference genomes, directed edge states and the network.
//! * [`kernel`]: interaction scores, thresholds, intensities and bonds.
//! * [`epidemic`]: seeding, per-tick infection and recovery, contact risks.
//! * [`policy`]: observations, action decoding, rewards, policy files.
//! * [`td3`]: dense networks with exact backpropagation and the TD3 learner.
//! * [`engine`]: the tick loop that ties everything into an episode.
//! * [`harness`]: scenario runners, sweeps, CSV output, verification and plots.

pub mod config;
pub mod engine;
pub mod epidemic;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod model;
pub mod policy;
pub mod rng;
pub mod td3;

pub use config::{EpidemicConfig, SimConfig, Td3Config};
pub use engine::{EpisodeTrace, Simulation, TickRecord};
pub use epidemic::EpidemicState;
pub use error::{Error, Result};
pub use model::{EdgeState, Health, NodeState, PreferenceGenome, Style, TemporalNetwork};
pub use policy::{ActionVector, Observation};
pub use td3::DenseNet;
