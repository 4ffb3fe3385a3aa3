//! Maximum Balanced Biclique via SDP relaxation and Gaussian threshold rounding.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: bipartite graphs, bicliques, generators and the text format.
//! - [`exact`]: exhaustive branch-and-bound solver used as ground truth.
//! - [`gaussian`]: normal density/tail and the univariate and bivariate tail bounds.
//! - [`sdp`]: the two relaxations, a feasibility checker, an alternating-projection
//!   feasibility solver and Gram-matrix factorisation.
//! - [`extraction`]: density cleaning followed by greedy `K_{r,r}` construction.
//! - [`rounding`]: heavy sets, shifting, Gaussian thresholding and analysis diagnostics.
//! - [`pipeline`]: k-search, end-to-end approximation, a greedy baseline and the
//!   experiment harness.

pub mod error;
pub mod exact;
pub mod extraction;
pub mod gaussian;
pub mod graph;
pub mod pipeline;
pub mod rng;
pub mod rounding;
pub mod sdp;

pub use error::{Error, Result};
pub use graph::{Biclique, BipartiteGraph};
