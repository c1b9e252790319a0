//! Kernelized temporal-graph attention engine.
//!
//! Building blocks for continuous-time link prediction where attention over
//! a node's recent interactions is modulated by a temporal kernel:
//!
//! - [`numeric`]: dense tensors with tape-based reverse-mode differentiation
//!   and a finite-difference gradient oracle
//! - [`graph`]: timestamped event streams, chronological splits, temporal
//!   neighbor lookup, inter-arrival statistics
//! - [`encoding`]: fixed and learnable sinusoidal time encodings
//! - [`kernel`]: Laplacian / RBF / learned-MLP modulation kernels
//! - [`attention`]: standard and kernel-modulated temporal attention, patch
//!   query/key time scaling, heatmap export
//! - [`analysis`]: numerical checks of the moment-suppression and
//!   variance-reduction properties of kernel modulation
//! - [`harness`]: synthetic recency benchmark, training loop, ranking
//!   metrics, width and modulation sweeps

#![allow(clippy::needless_range_loop)] // index loops mirror the math in the numeric kernels

pub mod analysis;
pub mod attention;
pub mod encoding;
pub mod graph;
pub mod harness;
pub mod kernel;
pub mod numeric;
pub mod rng;
