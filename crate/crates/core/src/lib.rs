//! Decide whether an experimental distribution is recoverable from
//! selection-biased experimental data over a causal graph, synthesize the
//! recovery formula when one exists, and execute it on discrete counts or
//! continuous samples.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`graph`] — parse and validate selection-augmented causal DAGs.
//! 2. [`twin`] — build the twin network (factual + counterfactual copies
//!    sharing exogenous parents, with the intervention target mutilated).
//! 3. [`dsep`] — answer d-separation queries, fast engine plus an
//!    exhaustive path-enumeration oracle.
//! 4. [`recover`] — decision procedures: the no-external-data check, the
//!    admissible-set search, and the recursive conditional-recovery routine.
//! 5. [`estimate`] — execute a recovery plan on data: exact weighted sums
//!    for discrete counts, binned kernel-density mixtures for continuous
//!    outcomes, and the closed-form linear-Gaussian ground truth.
//! 6. [`metrics`] — L1 / L2 / Jensen-Shannon / Wasserstein error metrics on
//!    gridded densities.
//! 7. [`sim`] — seeded synthetic-trial generators and the sample-size sweep
//!    harness.

pub mod dsep;
pub mod estimate;
pub mod fixtures;
pub mod graph;
pub mod metrics;
pub mod recover;
pub mod sim;
pub mod twin;
mod util;

pub use dsep::{d_separated, d_separated_oracle, DsepQuery};
pub use graph::{ancestors, parse_graph, CausalGraph, NodeKind, NodeSet};
pub use recover::{check_natural, decide, find_admissible_sets, DataRegime, RecoverabilityVerdict};
pub use twin::{build_twin, TwinNetwork};

pub use util::sha256_hex;
