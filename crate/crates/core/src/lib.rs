//! Segregated limit profiles of fractional competition systems.
//!
//! The crate discretizes the restricted fractional Laplacian on an interval
//! ([`fraclap`]), evaluates the weighted harmonic extension of grid traces to
//! the half-plane ([`extension`]), computes segregated minimizers of the
//! penalized partition functional by continuation in the competition rate
//! ([`segregation`]), and measures frequency-type quantities, Pohozaev
//! residuals and Morrey quotients on the results ([`almgren`], [`analysis`]).
//! [`run`] and [`report`] persist runs and their analyses to directories.
//!
//! Grid, form and optimizer types are generic over [`Real`]; the aliases below
//! fix them to `f64`, which every diagnostic uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod almgren;
pub mod analysis;
pub mod error;
pub mod extension;
pub mod fraclap;
pub mod grid;
pub mod io;
pub mod params;
pub mod quadrature;
pub mod report;
pub mod run;
pub mod scalar;
pub mod segregation;

pub use error::{Error, Result};
pub use extension::{ExtensionEvaluator, FieldSample};
pub use fraclap::{assemble_form, smallest_eigenpair, EigenResult, StiffnessForm};
pub use grid::Grid1D;
pub use params::FracParams;
pub use scalar::Real;
pub use segregation::{DensityVector, PenaltySpec};

pub type Params = FracParams<f64>;
pub type Grid = Grid1D<f64>;
pub type Form = StiffnessForm<f64>;
pub type Eigenpair = EigenResult<f64>;
pub type Densities = DensityVector<f64>;
pub type Penalty = PenaltySpec<f64>;
