//! Actor wrappers, the topic bus with pluggable transport, the canonical
//! wire codec and the persistent gateway registry.

pub mod actors;
pub mod broker;
pub mod bus;
pub mod clock;
pub mod deployment;
pub mod registry;
pub mod runner;
pub mod topics;
pub mod wire;

pub use actors::{GatewayActor, Handled, SensorActor, UserActor, VerifyRecord};
pub use broker::{serve_broker, BrokerHandle, TcpTransport};
pub use bus::{Envelope, InProcessBus, Subscription, Transport, TransportError};
pub use clock::{Clock, SystemClock, VirtualClock};
pub use deployment::{
    build_world, simulate_honest_batch, DeployedUser, Deployment, SessionWorld, WorldConfig,
};
pub use registry::{load_card, save_card, RegistryStore, StoreError};
pub use runner::{
    dispatch_envelope, run_session, Delivery, RunOptions, SessionOutcome, SessionResult,
};
pub use topics::{derive_session_id, topic_matches, Direction, TopicScheme};
pub use wire::{decode_wire, encode_wire, WireError};
