//! Numerical laboratory for a two-firm algorithmic-pricing market.
//!
//! Two myopic firms set prices each period from parameterized models of
//! their opponent — a constant-price specification and a linear
//! reaction-function specification — updating parameters by recursive
//! least squares and mixing the recommendations with an endogenous model
//! weight. The crate provides:
//!
//! * [`market`] — static demand, profit, best-response, and equilibrium
//!   algebra, including the self-confirming equilibrium constructors;
//! * [`learning`] — the per-period recursive algorithm, full-trajectory
//!   simulation, episode detection, and the forced-specification payoff
//!   experiment;
//! * [`dynamics`] — the deterministic mean-dynamics ODEs, their equilibria
//!   and eigenstructure, the reduced slope dynamics with self-reinforcing
//!   thresholds, and the stability diagnostics along the collusion ray;
//! * [`ldp`] — large-deviation rate functions: closed forms for the
//!   constant-price specification, Hamiltonian shooting for the
//!   reaction-function specification, and escape-time experiments;
//! * [`rng`] — the counter-based random number convention that makes every
//!   run bit-reproducible from `(seed, stream, index)`;
//! * [`optim`] — the simplex minimizer used by the rate-function search.

pub mod dynamics;
pub mod learning;
pub mod ldp;
pub mod market;
pub mod optim;
pub mod rng;

pub use market::{BeliefVector, MarketParams};
