//! Implicit (non-response) modeling of storm intensity against buoy
//! conditions.
//!
//! The pipeline: parse best-track and buoy files ([`ingest`]), join them at a
//! day lag, expand the quadratic terms ([`terms`]), extract principal-component
//! factors ([`factor`]), fit the all-ones response with no intercept
//! ([`implicit`]), invert the fit for storm wind, scan lags ([`lagscan`]),
//! average buoy conditions per wind bin ([`bins`]) and classify two-variable
//! level sets as conics ([`conics`]).
//!
//! Numeric types are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix double precision, which is what the CLI uses.

pub mod bins;
pub mod classify;
pub mod conics;
pub mod error;
pub mod factor;
pub mod implicit;
pub mod ingest;
pub mod lagscan;
pub mod linalg;
pub mod presets;
pub mod reference;
pub mod scalar;
pub mod terms;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type SymmetricMatrix64 = linalg::SymmetricMatrix<f64>;
pub type EigenResult64 = linalg::EigenResult<f64>;
pub type DesignMatrix64 = terms::DesignMatrix<f64>;
pub type DesignMatrix32 = terms::DesignMatrix<f32>;
pub type FactorModel64 = factor::FactorModel<f64>;
pub type ImplicitModel64 = implicit::ImplicitModel<f64>;
pub type ImplicitModel32 = implicit::ImplicitModel<f32>;
pub type QuadraticBounds64 = implicit::QuadraticBounds<f64>;
pub type LagScanResult64 = lagscan::LagScanResult<f64>;
pub type Conic64 = conics::Conic<f64>;
pub type ConicSlice64 = conics::ConicSlice<f64>;
pub type Grid64 = conics::Grid<f64>;
