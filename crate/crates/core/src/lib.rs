pub mod error;
pub mod experiment;
pub mod graph;
pub mod partition;
pub mod rng;
pub mod sampling;
pub mod sdp;
pub mod similarity;
pub mod vio;
