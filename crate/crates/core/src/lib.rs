pub mod builtins;
pub mod cassini;
pub mod error;
pub mod field;
pub mod hess_region;
pub mod sampling;
pub mod critical;
pub mod contour;
pub mod truncation;
pub mod curvature;
pub mod gradient_map;
pub mod svg;
pub mod report;
