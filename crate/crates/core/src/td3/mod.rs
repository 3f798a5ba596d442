//! TD3 on small dense networks, written against `ndarray`.

pub mod agent;
pub mod net;
pub mod replay;
pub mod train;

pub use agent::{select_action, Td3Agent, UpdateOutcome};
pub use net::{Activation, DenseNet};
pub use replay::{ReplayBuffer, Transition};
pub use train::{train, CurveRow, TrainOutcome};
