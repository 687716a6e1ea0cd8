//! Spectral simulation and finite-mode control synthesis for semilinear
//! parabolic equations on the torus.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod planner;
pub mod saturation;
pub mod solver;
pub mod spectral;
