pub mod error;
pub mod hyperbolic;
pub mod surface_group;
pub mod representation;
pub mod simplex;
pub mod geometry_probe;
pub mod optimizer;
pub mod experiments;
