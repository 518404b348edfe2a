//! Numerical toolkit for blow-up of the one-dimensional semilinear wave equation
//!
//! ```text
//! u_tt = u_xx + |u|^{p-1} u      (Signed)
//! u_tt = u_xx + |u|^p            (Unsigned)
//! ```
//!
//! The crate is `no_std` with `alloc`. It covers the stationary soliton family of the
//! self-similar equation and its weighted norms ([`profiles`]), evolution in
//! self-similar variables ([`selfsimilar`]), multi-soliton modulation
//! ([`modulation`]), the Toda system for the soliton centers ([`toda`]), a direct
//! solver with blow-up curve reconstruction ([`physical`]) and a table of soliton
//! interaction integrals ([`quadrature`]).

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod grid;
pub mod linalg;
pub mod modulation;
pub mod ode;
pub mod params;
pub mod physical;
pub mod profiles;
pub mod quadrature;
pub mod selfsimilar;
pub mod toda;

pub use error::{Error, Result};
pub use grid::{Field, Pair, Representation, WState, XiGrid};
pub use params::{Params, Variant};
