//! Numerical machinery for measuring local flatness of sets, quasisymmetric
//! distortion of maps, ε-compatible affine families, and Whitney extension of
//! almost affine maps, together with verifiers that evaluate the associated
//! quantitative inequalities on finite samples.

pub mod error;
pub mod families;
pub mod flatness;
pub mod generate;
pub mod geometry;
pub mod quasisymmetry;
pub mod whitney;

pub use error::{FlatextError, Result};
pub use geometry::{AffineMap, Plane, Point, SampledSet};
