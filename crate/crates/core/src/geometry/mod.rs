//! Symmetry-reduced Kähler calculus.
//!
//! Every metric in play is invariant under a fiber U(1) action, so it is
//! determined by a convex potential `F(s)` of `s = log|w|²`. We parametrize
//! by the moment coordinate `τ = F'(s)` of the reference metric, in which
//! `ω^n = n (2π)^n τ^{n−1} dτ` (after integrating out the angles and the
//! base) and `d/ds = Θ(τ) d/dτ` with `Θ = F''`.

mod background;
mod profile;
mod radial;
mod state;

pub use background::{Background, BackgroundSpec, EndpointData, HoloField};
pub use profile::{BackendId, MomentumProfile};
pub use radial::RadialFunction;
pub use state::{MetricState, Weight};
