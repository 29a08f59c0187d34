//! Conversational news search over an entity knowledge graph.
//!
//! The pipeline mirrors a voice assistant's fulfillment path:
//! utterance → [`nlu`] intent → [`dialogue`] state machine → [`query`]
//! templates over the [`graph`] → [`response`] text + SSML. Articles reach
//! the graph through [`ingest`], which links named entities with
//! [`linking`]. [`service`] wires everything behind an HTTP API and a CLI.

pub mod dialogue;
pub mod graph;
pub mod ingest;
pub mod linking;
pub mod nlu;
pub mod query;
pub mod response;
pub mod service;
pub mod text;

pub use graph::{EdgeType, GraphError, GraphStore, NodeId, NodeLabel, SharedGraph};
