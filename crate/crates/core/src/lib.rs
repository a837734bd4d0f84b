pub mod dataset;
pub mod downstream;
pub mod frl;
pub mod linalg;
pub mod lrd;
pub mod seed;
pub mod orchestrator;
pub mod cli;
