//! Hierarchical research-memory engine.
//!
//! Author agents combine episodic, semantic and persona memory; domain
//! agents navigate concept graphs; the orchestrator decomposes queries across
//! registered agents and reviews their outputs; `service` exposes all of it
//! over HTTP. Benchmark builders, runners and scorers live in [`bench`].

pub mod author;
pub mod bench;
pub mod config;
pub mod corpus;
pub mod domain;
pub mod episodic;
pub mod error;
pub mod orchestrator;
pub mod persist;
pub mod persona;
pub mod providers;
pub mod semantic;
pub mod service;

pub use config::Config;
pub use error::{Error, Result};
