//! Depth of an object from a single image.
//!
//! A camera mounted horizontally at a fixed height sees the ground plane as a
//! monotone mapping from image row to distance. Photographing markers at known
//! distances and fitting a polynomial from *pixel depth* (rows between the
//! object's foot and the bottom edge) to *real depth* gives a per-camera model
//! that answers distance queries from one image.
//!
//! Modules:
//!
//! - [`caldata`] calibration observations and their CSV format
//! - [`pixels`] pixel depth and foot-row extraction from graymaps
//! - [`polyfit`] least-squares polynomial fitting, fit statistics, intervals
//! - [`depthmodel`] persisted camera profiles, depth and velocity queries
//! - [`optics`] analytic ground-plane and thin-lens camera models
//! - [`cli`] the `polydepth` command-line surface
//!
//! The numeric core (`polyfit`, `optics`) is generic over [`Scalar`]; the
//! aliases below fix it to `f64` or `f32`.

pub mod caldata;
pub mod cli;
pub mod datasets;
pub mod depthmodel;
mod error;
pub mod optics;
pub mod pixels;
pub mod polyfit;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use caldata::{CalibrationObservation, CalibrationSet, Finding, Severity};
pub use depthmodel::{CameraProfile, DegreePolicy, DepthEstimate};

pub type PolynomialModel64 = polyfit::PolynomialModel<f64>;
pub type PolynomialModel32 = polyfit::PolynomialModel<f32>;
pub type PolynomialFit64 = polyfit::PolynomialFit<f64>;
pub type PolynomialFit32 = polyfit::PolynomialFit<f32>;
pub type FitStats64 = polyfit::FitStats<f64>;
pub type FitStats32 = polyfit::FitStats<f32>;
pub type CoefficientInterval64 = polyfit::CoefficientInterval<f64>;
pub type GroundPlaneCamera64 = optics::GroundPlaneCamera<f64>;
pub type GroundPlaneCamera32 = optics::GroundPlaneCamera<f32>;
pub type DefocusCamera64 = optics::DefocusCamera<f64>;
pub type DefocusCamera32 = optics::DefocusCamera<f32>;
