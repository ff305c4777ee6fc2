//! Numerical and combinatorial toolkit for real-linear Cauchy-Riemann
//! operators on flat tori, their unbranched covers, and the pointwise
//! matrix algebra of antilinear perturbations.

pub mod antilinear_algebra;
pub mod cli;
pub mod cr_operator;
pub mod index_calculus;
pub mod lattice_covers;
pub mod linalg;
pub mod random;
pub mod spectral_probe;
pub mod weitzenboeck;
