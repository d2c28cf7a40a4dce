pub mod chaincode;
pub mod config;
pub mod domain;
pub mod harness;
pub mod keys;
pub mod ledger;
pub mod metrics;
pub mod multiplexer;
pub mod registry;
pub mod stats;
pub mod terminal;
pub mod time;
