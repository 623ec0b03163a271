//! Low-adaptivity maximization of non-monotone submodular functions under a cardinality
//! constraint, with exact metering of oracle queries and adaptive rounds.
//!
//! Every algorithm talks to the objective through an [`Oracle`], which counts one adaptive
//! round per [`Oracle::evaluate_batch`] call. Queries inside a batch are independent of each
//! other and are fanned out over the rayon pool when the `parallel` feature is on.
//!
//! ```
//! use submax::{adaptive_nonmonotone_max, seeded_rng, NonmonotoneParams, Oracle};
//! use submax::objectives::{generate_synthetic, InstanceKind, SyntheticSpec};
//!
//! let f = generate_synthetic(InstanceKind::Revenue, &SyntheticSpec::new(40).with_p(0.1), 1).unwrap();
//! let params = NonmonotoneParams::new(5, 0.25, 0.1).with_sample_override(Some(50));
//! let mut oracle = Oracle::new(&f);
//! let out = adaptive_nonmonotone_max(&mut oracle, &params, &mut seeded_rng(7)).unwrap();
//! assert!(out.solution.len() <= 5);
//! println!("{} rounds, {} queries", out.ledger.rounds(), out.ledger.total_queries());
//! ```

pub mod acceptance;
pub mod baselines;
pub mod error;
pub mod nonmonotone;
pub mod objectives;
pub mod oracle;
pub mod threshold;
pub mod unconstrained;

pub use baselines::{greedy, random_lazy_greedy, random_prefix, Solution};
pub use error::{Error, Result};
pub use nonmonotone::{adaptive_nonmonotone_max, NonmonotoneOutcome, NonmonotoneParams, ThresholdTrial};
pub use oracle::{
    seeded_rng, stream_rng, ElementId, Execution, Objective, Oracle, QueryLedger, RoundRecord,
    SeededRng, Subset,
};
pub use threshold::{threshold_sampling, BreakReason, SamplingOutcome, ThresholdParams};
pub use unconstrained::{unconstrained_max, UnconstrainedOutcome, UnconstrainedParams};
