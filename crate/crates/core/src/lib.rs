//! Best-of-N sampling harness with diversified decoding modes, plus a
//! synthetic-instance Monte Carlo simulator for the theory behind it.
//!
//! The library is organized around the lifecycle of a Best-of-N experiment:
//!
//! - [`task`], [`input`], [`mode`], [`record`] — shared domain types: tasks,
//!   combined prompt/question inputs, perturbations, decoding modes, and the
//!   line-delimited transcript record format.
//! - [`perturb`] — perturbation pools (role / instruction / jabberwocky),
//!   thinker-driven idea collection, query rephrasing and back-translation.
//! - [`backends`] — solver/thinker/embedding abstraction with a deterministic
//!   mock, a chat-completions HTTP client, a content-addressed response cache,
//!   and budget accounting.
//! - [`engine`] — Best-of-N orchestration: i.i.d. mode draws, dispatch,
//!   transcript persistence, exact resume, and the verification pass.
//! - [`verify`] — verifier families: exact match, hidden-test execution,
//!   ORM top-k selection, generated unit tests, majority vote.
//! - [`metrics`] — EM@k / Pass@k scaling curves and pairwise solution
//!   similarity metrics (tf-idf, embedding, Levenshtein, token overlap).
//! - [`theorysim`] — the desk-scale simulator: suite generation, dispersion
//!   and fidelity measurement, failure curves, the diversity comparison bound,
//!   majority-vote asymptotics, and the ORM top-k margin bound.

pub mod backends;
pub mod engine;
pub mod input;
pub mod metrics;
pub mod mode;
pub mod perturb;
pub mod record;
pub mod seed;
pub mod task;
pub mod theorysim;
pub mod verify;

pub use input::{make_input, CombinedInput, Perturbation, PerturbationKind, PerturbationSource, Placement};
pub use mode::{draw_mode, DecodingMode, DiversityPolicy, MaterializedPolicy};
pub use record::AttemptRecord;
pub use task::{Task, TaskKind};
