//! Verification toolkit for weighted norm inequalities of strong fractional
//! integral operators on product spaces with power weights.
//!
//! The crate has two halves that check each other:
//!
//! * an exact half ([`param`]) that decides boundedness from the explicit
//!   rational constraint system (exponent balance, weight integrability,
//!   subbalance, sign-case constraints from the subsets `U`/`V`), and
//! * a numerical half ([`quad`], [`characteristic`], [`operator`],
//!   [`witness`]) that recomputes the same verdict from the analysis side:
//!   Muckenhoupt-characteristic supremum searches over rectangle lattices,
//!   eccentricity-decay fits of the bumped characteristic, discretized
//!   operator norm ratios, and explicit blow-up witness families for every
//!   violated constraint.
//!
//! The [`cli`] module wires both halves into the `steinweiss` binary; the
//! `examples/` directory has one runnable walkthrough per capability.

pub mod characteristic;
pub mod cli;
pub mod operator;
pub mod param;
pub mod quad;
pub mod rational;
pub mod util;
pub mod witness;

pub use param::{CaseTag, ConstraintId, Instance, InstanceSpec, ProductSpace, Status, Verdict};
pub use quad::{QuadConfig, Quadrature, Rectangle};
