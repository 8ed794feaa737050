//! Simply generated random plane trees with superexponential branching weights.
//!
//! The crate computes the composition partition function `Z(N, n)` in log
//! domain, samples exactly from the size-conditioned measure `nu_N` on plane
//! trees with a degree-1 root, and provides the tree statistics, left-ball
//! metric, variational asymptotics and brute-force oracle needed to check the
//! condensation and fluctuation limit laws at finite `N`.
//!
//! Module map:
//!
//! - [`weights`]: branching-weight families and the log-domain scalar [`LogNonNeg`].
//! - [`partition`]: the `Z(N, n)` table, forest partition functions and the
//!   conditional laws of the root child degree.
//! - [`trees`]: the plane-tree model, degree profiles, balls and the metric.
//! - [`sampler`]: exact sampling via composition draws and the cycle lemma.
//! - [`asymptotics`]: closed-form predictions and the maximiser of `f`.
//! - [`oracle`]: exhaustive enumeration for small `N`.
//! - [`harness`]: experiment specifications, statistics and reports.
//! - [`io`]: the binary table container and tree text format.

pub mod asymptotics;
pub mod error;
pub mod harness;
pub mod io;
pub mod oracle;
pub mod partition;
pub mod sampler;
pub mod trees;
pub mod weights;

pub use error::{Result, SgError};
pub use partition::{BuildOptions, ZTable};
pub use sampler::RandomSource;
pub use trees::{DegreeProfile, PlaneTree};
pub use weights::{LogNonNeg, WeightFamily, WeightSequence};
