//! Biased linear bandits: the model, the optimal-design solvers it needs
//! (G-, c- and Δ-optimal), the Fair Phased Elimination algorithm with its
//! recovery phase, hard-instance generators, comparison baselines, and a
//! seeded Monte Carlo harness for regret curves.

pub mod baselines;
pub mod design;
pub mod fpe;
pub mod geometry;
pub mod harness;
pub mod instances;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod rng;
