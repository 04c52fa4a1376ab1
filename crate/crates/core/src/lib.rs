//! Lab implementation of 5G AKA with privacy mitigations, a channel adversary
//! and a scenario runner.

pub mod adversary;
pub mod crypto;
pub mod network;
pub mod protocol;
pub mod runner;
pub mod transcript;
pub mod variants;
