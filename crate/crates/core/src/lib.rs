//! Numerical laboratory for generalized Chen–Tian energy functionals on
//! Fano manifolds with a fiber U(1) symmetry.
//!
//! The crate is organized bottom-up:
//!
//! - [`spectral`]: Chebyshev collocation, Clenshaw–Curtis quadrature.
//! - [`geometry`]: backends, radial potentials, density ratios, Ricci and
//!   holomorphy potentials, reduced wedge integrals.
//! - [`functionals`]: `Ĩ`, `J̃`, `I`, `F̃`, `Ẽ₀`, `G̃_k`, `Ẽ_k`, the constants
//!   `C_{ω,X,k}` and the curvature cones.
//! - [`algebra`]: exact checks of the polynomial identities behind the
//!   lower bound for `Ẽ_k`.
//! - [`solver`]: damped Newton continuation for the complex Monge–Ampère
//!   family.
//! - [`invariants`]: the holomorphic invariant `𝓕_X(Y)`, automorphism flows
//!   and the soliton field.

pub mod algebra;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod invariants;
pub mod sampling;
pub mod solver;
pub mod spectral;

pub use error::{LabError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
