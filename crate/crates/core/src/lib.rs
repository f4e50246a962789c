//! Fitted P1 finite elements for
//!
//! ```text
//! -div(A(x) grad u) = Q dH^1|Γ  in Ω,    u = 0 on ∂Ω,
//! ```
//!
//! where the right-hand side is a density `Q` carried by a closed curve
//! `Γ = ∂Ω'` strictly inside a planar domain `Ω`.
//!
//! The crate is `no_std` (it only needs `alloc`). It contains:
//!
//! * [`geometry`]: domains, interface curves, signed distance, curve
//!   quadrature and sampled geometric constants (chord-arc, normal Hölder
//!   seminorm, measure growth, smooth outer approximations).
//! * [`fields`]: coefficient matrices `A(x)` and densities `Q`.
//! * [`mesh`]: interface-fitted triangulations and red refinement.
//! * [`fem`]: assembly, Dirichlet constraints and the Jacobi-preconditioned
//!   conjugate gradient solve.
//! * [`analysis`]: gradient traces and jumps across `Γ`, ball averages,
//!   Taylor fits with a kink term, gradient norms, blow-up and integrability
//!   studies, and the distributional identity for `|d_Γ|`.
//! * [`potentials`]: closed-form reference solutions (disk Green's function,
//!   concentric radial solution, segment kernel integrals, the singular
//!   `x |x|^(μ-1)` solution for the anisotropic counterexample).
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod fem;
pub mod fields;
pub mod geometry;
pub mod linalg;
mod math;
pub mod mesh;
pub mod potentials;
pub mod quadrature;
pub mod vec2;

pub use error::{Error, Result};
pub use vec2::{Mat2, Point, Vec2};
