//! Skill learning and retrieval for LLM planners.
//!
//! Flat plans produced by a planner are grouped into event logs, turned into
//! process trees by inductive discovery and stored as skills. A new query is
//! matched against stored skills by embedding similarity, by alignment-based
//! conformance of a one-shot plan ("thought"), or by both in two stages.

pub mod cli;
pub mod conformance;
pub mod discovery;
pub mod evaluation;
pub mod gateway;
pub mod ingestion;
pub mod model;
pub mod petri;
pub mod retrieval;
pub mod scheduler;
pub mod service;
pub mod synth;
