//! Tools for analyzing greedy packet routing on Bernoulli rings.
//!
//! The crate has three legs:
//!
//! * **Simulation** ([`ring`]): a discrete-time model of unidirectional
//!   Bernoulli rings under the greedy hot-potato family of protocols
//!   (GHP, FIFO, EPF, SIS, CTO, FTG, LIS), with a seeded, replicable
//!   Monte Carlo harness.
//! * **Exact analysis** ([`taylor`], [`formulas`], [`series`],
//!   [`lyapunov`]): an integer-arithmetic engine that computes the
//!   Taylor expansion of stationary probabilities around zero arrival
//!   rate, closed-form evaluators for the `L = 2` stationary
//!   distribution and classical queueing formulas, rationality and
//!   absolute-monotonicity diagnostics for the resulting series, and a
//!   potential-function toolkit for drift experiments.
//! * **Circuit switching** ([`butterfly`]): constructive node-disjoint
//!   subset routing on concatenated pairs of layer-permuted
//!   butterflies, with an exhaustive verifier.
//!
//! Everything is deterministic given a seed; see [`rng`] for the
//! counter-based stream layout.

pub mod butterfly;
pub mod error;
pub mod formulas;
pub mod lyapunov;
pub mod ring;
pub mod rng;
pub mod series;
pub mod stats;
pub mod taylor;

pub use error::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

// The book chapters double as doc-tests so the snippets in the guide
// can never drift out of sync with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/ring-model.md")]
    mod ring_model {}
    #[doc = include_str!("../../../book/src/exact-taylor.md")]
    mod exact_taylor {}
    #[doc = include_str!("../../../book/src/closed-forms.md")]
    mod closed_forms {}
    #[doc = include_str!("../../../book/src/series-diagnostics.md")]
    mod series_diagnostics {}
    #[doc = include_str!("../../../book/src/lyapunov.md")]
    mod lyapunov_chapter {}
    #[doc = include_str!("../../../book/src/butterflies.md")]
    mod butterflies {}
}
