//! Analytical melt-pool thermal model for laser-based metal additive
//! manufacturing.
//!
//! The model evaluates the transient temperature field of a moving
//! semi-ellipsoidal (Goldak-type) heat source in a semi-infinite body by
//! time-quadrature of the superposed instantaneous point-source solution,
//! with temperature-dependent thermophysical properties and latent-heat
//! phase change folded in through a modified heat capacity. Melt-pool
//! length, width, and depth are extracted as the maximal extents of the
//! melting-temperature isotherm, and multi-track scan patterns are handled
//! by superposition with configurable hatch and time spacing.

pub mod dataset;
pub mod error;
pub mod heat_source;
pub mod material;
pub mod meltpool;
pub mod optim;
pub mod quadrature;
pub mod thermal_field;
pub mod units;

pub use error::CoreError;
pub use heat_source::{DimensionlessGroups, HeatSourceGeometry, ProcessParameters};
pub use material::{Material, PropertyTable};
pub use meltpool::{ContourGrid, MeltPoolDimensions, Plane, SearchBox};
pub use quadrature::QuadratureSpec;
pub use thermal_field::{PropertyState, ScanPattern, ThermalSample, TrackSegment};
