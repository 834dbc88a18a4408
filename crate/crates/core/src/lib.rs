//! Verification and compositional synthesis of masked Boolean
//! circuits under the threshold probing model.
//!
//! The crate is organized around a small number of layers:
//!
//! - [`circuit`]: the gate-level IR with input encoders (secret
//!   splitting) and output decoders (share folding), plus evaluation
//!   and dependency analysis.
//! - [`netlist`]: the textual circuit format.
//! - [`verify`]: the exact probing-security checker, counting joint
//!   observation distributions over the full random space.
//! - [`table`]: a truth-table formalism with restriction, reduction,
//!   join and a recursive safety predicate; an independent oracle for
//!   the verifier at small scale.
//! - [`compose`]: security-preserving circuit composition (parallel,
//!   sequential, output-sharing) and the classic gate-by-gate masking
//!   transform used as a fallback gadget source.
//! - [`synth`]: constraint-based synthesis of masked circuit trees
//!   from a random-free specification.
//! - [`pipeline`]: decomposition, per-piece synthesis with adaptive
//!   bounds, recombination, and the bench harness.

pub mod circuit;
pub mod compose;
pub mod eval;
pub mod fixtures;
pub mod netlist;
pub mod pipeline;
pub mod synth;
pub mod table;
pub mod verify;

pub use circuit::{Assignment, Circuit, CircuitBuilder, Gate, Op, Role, WireId};
pub use eval::{io_equivalent, IoVerdict, DEFAULT_COST_CAP};
pub use verify::{dist, verify, verify_budgeted, DistTable, Verdict, VerifyOptions};
