//! Barycenter-method machinery on hyperbolic n-space.

pub mod barycenter;
pub mod coarse;
pub mod error;
pub mod forms;
pub mod growth;
pub mod hyperboloid;
pub mod io;
pub mod measure;
pub mod natural_map;
pub mod real;
pub mod sampling;

pub use error::{Error, Result};
pub use real::Real;

pub type Point = hyperboloid::HPoint<f64>;
pub type Tangent = hyperboloid::TangentVector<f64>;
pub type Ideal = hyperboloid::BoundaryPoint<f64>;
pub type Isom = hyperboloid::Isometry<f64>;
pub type Measure = measure::BoundaryMeasure<f64>;
pub type Density = measure::DensityFamily<f64>;
