//! Exact and analytic machinery for 3-player XOR games under parallel
//! repetition: game values, abelian embeddings, distribution surgeries,
//! Efron-Stein style decompositions and Chebyshev noise mixing.
//!
//! Everything algebraic is exact (`BigInt` / `BigRational`); the analytic
//! operators work in `f64`/`Complex64` with a single global comparison
//! tolerance. The crate is `no_std` (with `alloc`); IO and file formats
//! live in the companion CLI crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod abelian;
pub mod additive;
pub mod analytic;
pub mod budget;
pub mod cheby;
pub mod embed;
pub mod game;
pub mod rng;
pub mod selftest;
pub mod transform;

/// Global comparison tolerance for the floating-point (analytic) layer.
pub const TOL: f64 = 1e-9;
