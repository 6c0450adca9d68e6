//! Virtual payment channel networks: the channel state machine, a placement
//! model that decides which virtual channels to open for a given demand, an
//! exact solver for that model, a brute-force cross-check and a replay engine
//! that executes solutions against the state machine.

pub mod builder;
pub mod ingest;
pub mod milp;
pub mod network;
pub mod oracle;
pub mod replay;
pub mod solution;
