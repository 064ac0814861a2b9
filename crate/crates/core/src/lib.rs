//! Heavy-tail diagnostics for stochastic training of a single ReLU gate.
//!
//! The crate trains `x ↦ max(0, ⟨w, x⟩)` with mini-batch SGD or with the
//! label-gated variant ([`gate::Variant::Alg1`]), collects the centered
//! tail averages of many independently seeded runs, and measures their
//! stability index α with the block-sum Hill estimator in [`hill`].
//!
//! Symmetric α-stable sampling and a two-sample Kolmogorov–Smirnov
//! statistic ([`stable`], [`ks`]) serve as ground truth for the estimator.
//!
//! The crate is `no_std` and only needs `alloc`. Enable the `std` feature to
//! get `std::error::Error` on [`Error`].

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod ensemble;
mod error;
pub use error::{RunFailure, RunFailureCause};
pub mod gate;
pub mod hill;
pub mod ks;
mod math;
pub mod stable;
mod vector;

pub use error::{Error, Result, SampleKind};
pub use vector::WeightVector;
