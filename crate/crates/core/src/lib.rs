pub mod bench;
pub mod datagen;
pub mod features;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod train;
