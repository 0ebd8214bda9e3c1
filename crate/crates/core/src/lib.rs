//! Overlapping community detection in multi-layer directed networks.
//!
//! A multi-layer directed network is a stack of `L` binary adjacency matrices
//! over one node set. Each node has a *sending* membership (how its outgoing
//! edges are distributed over `K` row communities) and a *receiving*
//! membership (the same for incoming edges over `K` column communities).
//! Memberships may be mixed: a node can belong partly to several communities.
//!
//! The main detector, [`cspdsos`](pipeline::cspdsos), works in four stages:
//!
//! 1. [`aggregation`]: form the debiased sums of squares
//!    `sum_l (A_l A_l' - D_l^out)` and `sum_l (A_l' A_l - D_l^in)`.
//! 2. [`spectral`]: take the `K` leading eigenvectors of each.
//! 3. [`vertex_hunting`]: find the `K` rows that span the simplex containing
//!    all eigenvector rows.
//! 4. [`pipeline`]: express every row in vertex coordinates, clip and
//!    normalise to get membership estimates.
//!
//! [`model`] generates planted instances, [`metrics`] scores estimates
//! against them, and [`io`] covers edge-list ingestion, preprocessing and
//! the benchmark harness. The guide under `book/` walks through each stage.
//!
//! ```
//! use mmscbm::{cspdsos, metrics::hamming_error, model::{sample_network, synth_instance, SparsityParam}};
//!
//! let inst = synth_instance(120, 3, 30, 30, 8, SparsityParam::new(0.5)?, 1)?;
//! let network = sample_network(&inst.omega, 2)?;
//! let result = cspdsos(&network, 3)?;
//! let err = hamming_error(&result.pi_r_hat, &inst.truth.pi_r, &result.pi_c_hat, &inst.truth.pi_c)?;
//! assert!(err < 0.3);
//! # Ok::<(), mmscbm::Error>(())
//! ```

pub mod aggregation;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod spectral;
pub mod vertex_hunting;

pub use error::{Error, Result, Side};
pub use model::{AdjacencyStack, ExpectationStack, GroundTruth, Membership, MixingSequence, SparsityParam};
pub use pipeline::{baseline_detect, cspdsos, detect, ideal_cspdsos, DetectionResult, Method};

// Code blocks in the guide compile and run as doctests of this crate.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/aggregation.md")]
    mod aggregation {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/vertex_hunting.md")]
    mod vertex_hunting {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/real_data.md")]
    mod real_data {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
