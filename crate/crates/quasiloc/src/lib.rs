//! Numerical laboratory for quasi-local dynamics on finite spin lattices.
//!
//! The crate builds finite truncations of `Z^1` and `Z^2`, decay (F-)functions
//! with certified tail enclosures, a dense tensor-product operator algebra with
//! conditional expectations, time-ordered propagators for time-dependent
//! interactions, and the machinery to transform interactions through a
//! dynamics and to factorize the resulting automorphism across a sandwich of
//! cones. Every inequality that is asserted ships with the enclosure it was
//! checked against, so reports can be replayed and audited.

pub mod algebra;
pub mod dynamics;
pub mod factorize;
pub mod ffunc;
pub mod interaction;
pub mod lattice;
pub mod summability;
pub mod transform;

pub use num_complex::Complex64 as C64;
