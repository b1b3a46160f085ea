//! File formats, experiment drivers and the `krylov-grad` command line on
//! top of [`krylov_grad_core`].
//!
//! - [`edgelist`] and [`mtx`] read graphs and symmetric matrices.
//! - [`record`] writes and reads result rows as CSV or JSON lines.
//! - [`experiments`] holds the subcommand bodies; [`cli`] the flag parsing.
//!
//! `KRYLOV_GRAD_THREADS` caps the worker count of parallel probe loops.

pub mod cli;
pub mod edgelist;
pub mod error;
pub mod experiments;
pub mod mtx;
pub mod parallel;
pub mod record;
pub mod source;

pub use error::{Error, Result};
pub use krylov_grad_core as core;
