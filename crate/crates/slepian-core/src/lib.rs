//! Spatially concentrated, bandlimited Slepian bases on the sphere.
//!
//! This crate constructs Slepian functions for scalar, vector, and rank-2
//! tensor fields over polar-cap regions. The construction runs through
//! spin-weighted spherical harmonics: for each spin weight `N` and order `j`
//! the concentration problem reduces to a small eigenproblem whose matrix
//! commutes with a symmetric tridiagonal operator, so the eigenvectors are
//! obtained from the tridiagonal matrix instead of the ill-conditioned kernel.
//! Vector and tensor bases are assembled from the spin-weighted ones by
//! multiplying with unit vectors/tensors of the local tangent frame.
//!
//! Module layout:
//! * [`numerics`] — quadrature, symmetric eigensolvers, log-factorial tables
//! * [`special_functions`] — Legendre functions and Wigner 3j symbols
//! * [`spin_harmonics`] — spin-weighted spherical harmonics and their identities
//! * [`cap_concentration`] — per-(spin, order) concentration blocks and bases
//! * [`field_assembly`] — vector/tensor basis assembly and grid evaluation

pub mod cap_concentration;
pub mod field_assembly;
pub mod numerics;
pub mod special_functions;
pub mod spin_harmonics;

mod exact;

use thiserror::Error;

/// Errors produced by basis construction and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("{0}")]
    InvalidInput(String),
    /// The iterative eigensolver hit its iteration cap.
    #[error("eigensolver did not converge for {context} (row {row})")]
    NoConvergence { context: String, row: usize },
    /// A concentration eigenvalue fell outside the clamp window around [0, 1].
    #[error("concentration eigenvalue {lambda:e} outside [0,1] for block (spin {spin}, order {order})")]
    EigenvalueRange { spin: i32, order: i32, lambda: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
