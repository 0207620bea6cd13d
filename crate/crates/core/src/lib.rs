pub mod model;
pub mod seeds;
pub mod annotation;
pub mod features;
pub mod tracking;
