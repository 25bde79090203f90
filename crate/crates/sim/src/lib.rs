//! Detector stand-in for tests and demos: seeded synthetic identities and
//! probes, fixture generation, and a replay client that drives a hub over
//! its normal submit endpoint.

pub mod fixture;
pub mod ident;
pub mod replay;

pub use fixture::{generate, parse_events, Fixture, FixtureMeta, FixtureParams};
pub use ident::{gen_identity, gen_probe, SyntheticIdentity};
pub use replay::{ReplayClient, ReplayOptions, ReplayReport};
