//! Minimal-norm and minimal-time L∞ controls for finite-dimensional linear
//! time-invariant systems y' = Ay + Bu.
//!
//! The two central quantities are N(T, y0), the smallest sup-norm of a
//! control steering y0 to the origin exactly at time T, and T(M, y0), the
//! smallest horizon achievable under the bound ‖u‖_∞ ≤ M. They are inverse
//! to each other along the strictly decreasing map T ↦ N(T, y0), optimal
//! controls are bang-bang wherever the dual kernel is nonvanishing, and the
//! parameter space splits into cells with uniform answers to "does an
//! optimal control exist, and is it bang-bang?". This crate computes all of
//! it: [`norm`] maximizes the dual ratio and synthesizes the control,
//! [`time`] inverts the norm map by bisection, [`classify`] decides the
//! decomposition cell, [`oracle`] brackets values by independent brute
//! force, and [`models`] builds the standard example families.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! * `scalar_norms` — closed-form scalar instances end to end.
//! * `double_integrator` — bang-bang structure and oracle brackets.
//! * `minimal_time` — bound sweeps and the inversion identity.
//! * `classification` — boundary data and cell predictions.
//! * `heat_model` — truncated heat equation with pointwise control.
//! * `sweeps_csv` — the CSV exports behind the two sweep commands.
//!
//! The `lticontrol` binary exposes the same functionality as subcommands
//! (`norm`, `time`, `sweep-norm`, `sweep-time`, `classify`, `validate`,
//! `cost`).

pub mod classify;
pub mod cli;
pub mod error;
pub mod fmt;
pub mod matrix;
pub mod models;
pub mod norm;
pub mod oracle;
pub mod system;
pub mod time;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use system::{ControlSignal, LtiSystem, TimeGrid};
