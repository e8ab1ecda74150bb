//! Transcript analytics for deliberative assemblies.
//!
//! This crate ingests diarized assembly transcripts, rosters, recommendation
//! statements, and vote ledgers, then runs two LLM-backed pipelines over them:
//!
//! 1. **Suggestion tracing** — extract explicit, voiced suggestions from every
//!    speaker turn ([`suggest`]), embed them alongside the final
//!    recommendations, project the joint space to 2-D with an exact t-SNE
//!    implementation, and rank the suggestions most distant from any
//!    recommendation ([`space`]).
//! 2. **Stance profiling** — classify every turn for stance evidence on a
//!    given statement, assemble chronological per-delegate profiles, and
//!    analyze supermajority voting dynamics across rounds ([`stance`]).
//!
//! All LLM traffic goes through a provider-agnostic [`gateway`] with prompt
//! templating, structured-output validation, bounded retries, response
//! caching, and a deterministic offline mock backend, so every pipeline is
//! fully runnable (and testable) without network access. The [`eval`] module
//! reproduces the prompt-iteration evaluation workflow: scoring runs against
//! gold labels, comparing prompt versions, and invoking a cross-family judge.
//!
//! See the `examples/` directory for one runnable example per capability; the
//! thin `assembly-lens` binary wires the same pipeline stages behind
//! subcommands with file-based handoff.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod gateway;
pub mod pipeline;
pub mod space;
pub mod stance;
pub mod suggest;
pub mod util;

pub use error::Error;
