//! Decentralized constrained optimization over directed graphs.
//!
//! The crate implements a double-averaging projected gradient method (DAGP)
//! in which every node `v` of a strongly connected digraph holds a smooth
//! convex objective `f_v` and a closed convex set `S_v`, and the network
//! jointly minimizes `Σ_v f_v(x)` over `∩_v S_v` using only neighbor
//! communication. Alongside the method itself the crate provides:
//!
//! * [`graph`]: directed communication graphs, Laplacians and strong
//!   connectivity checks.
//! * [`mixing`]: the zero row-sum / zero column-sum gossip pair and kernel
//!   diagnostics.
//! * [`problems`]: objectives, projectable sets, Dykstra projection and
//!   instance generators.
//! * [`algorithms`]: DAGP plus DDPS, ADD-OPT, Push-Pull and projected DGD
//!   baselines behind one synchronous-round [`algorithms::Stepper`] trait.
//! * [`metrics`]: per-iteration trace records, running averages and decay
//!   rate fits.
//! * [`reference`]: a centralized projected gradient oracle and KKT residuals.
//! * [`certificates`]: the analysis matrices of the convergence proof and a
//!   numerical scan of its eigenvalue condition.
//! * [`harness`]: experiment configuration, orchestration, CSV traces and SVG
//!   plots; driven by the `dagp` binary.
//!
//! The guide in `book/` walks through each piece; its code listings are
//! compiled and run as doc-tests of this crate.

pub mod algorithms;
pub mod certificates;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod mixing;
pub mod problems;
pub mod reference;

pub use algorithms::{DagpHyperParams, DagpState, Stepper};
pub use graph::DirectedGraph;
pub use mixing::GossipPair;
pub use problems::ProblemInstance;

// The guide's listings run as doc-tests. One module per chapter keeps failure
// locations readable.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/dagp.md")]
    mod dagp {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
