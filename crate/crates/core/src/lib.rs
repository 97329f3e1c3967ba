//! Converts per-sensor smartphone tables (AWARE-style exports) into
//! chronological English narrative lines, and packages those narratives
//! into LLM prompts with parsers for the structured replies.
//!
//! The pipeline runs in stages:
//!
//! 1. [`ingest`] loads each sensor table into [`ingest::SensorEvent`]s and
//!    merges them into one chronological stream.
//! 2. [`geo`] clusters location fixes, finds the home cluster and labels places.
//! 3. [`sessions`] reduces battery and keyboard streams to sparse events.
//! 4. [`narrate`] renders everything into `<datetime> | <sensor> | <description>` lines.
//! 5. [`prompts`] and [`llm`] build the daily and weekly prompts and parse replies.
//!
//! [`pipeline`] wires stages 1-4 together.

pub mod geo;
pub mod ingest;
pub mod llm;
pub mod narrate;
pub mod par;
pub mod pipeline;
pub mod prompts;
pub mod sessions;
pub mod synth;

pub use ingest::{SensorEvent, SensorKind, Timestamp};
pub use narrate::{NarrativeDocument, NarrativeLine, PrivacyConfig};
pub use par::Execution;
