//! Numerical construction and certification of dominated splittings for
//! torus endomorphisms that display critical points (non-invertible
//! derivative somewhere).
//!
//! The crate works at "desk scale": everything is finite — orbit segments
//! instead of full orbits, sampled cones instead of continuous cone fields,
//! fitted geometric rates instead of limits. The building blocks are:
//!
//! * [`linalg`] — small dense matrices (dimension ≤ 4), a one-sided Jacobi
//!   SVD with *ascending* singular values, and log-factored products of
//!   long matrix chains whose singular-value ratios span hundreds of
//!   orders of magnitude.
//! * [`subspace`] — subspaces of ℝᵈ, minimal angles, the Grassmannian
//!   distance `cos ∠(V⊥, W)`, and geometric-rate fits for subspace
//!   sequences.
//! * [`cone`] — axially symmetric cones (center subspace + half angle),
//!   duality, and sampled invariance checks for cone fields along chains.
//! * [`torus`] — the catalog of endomorphisms of 𝕋ᵈ (linear integer maps,
//!   fold maps with a critical line, 3-D products), orbit segments,
//!   Newton preimage searches and critical-locus scans.
//! * [`cocycle`] — finite-time singular subspaces E_n, exponential-gap
//!   reports, the forward limit E, and the backward cone-limit F.
//! * [`splitting`] — return times to the critical locus, the candidate
//!   splitting E = ker(Df^{m_f+τ⁺}) / F = Im(Df^{|τ⁻|}), and the
//!   invariance / angle / domination certificate checks.
//! * [`perturb`] — plane rotations under a Franks-style budget, greedy
//!   rotation mixing of two trajectories, and kernel-dimension raising.
//! * [`critical`] — near-critical singular splittings V ⊕ W, cone
//!   sandwich checks and the uniform constants they certify.
//!
//! All randomized sampling is driven by explicit `u64` seeds through a
//! counter-based ChaCha stream, so every result is reproducible bit for
//! bit. The crate is `no_std`-compatible (with `alloc`); enable the
//! `libm` feature when building without `std`.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("building without `std` requires the `libm` feature for float math");

pub mod cocycle;
pub mod cone;
pub mod critical;
pub mod linalg;
pub(crate) mod math;
pub mod perturb;
pub mod sampling;
pub mod splitting;
pub mod subspace;
pub mod torus;

pub use linalg::{ChainSvd, Matrix, SvdResult};
pub use subspace::Subspace;
