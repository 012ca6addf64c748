pub mod bench;
pub mod dataset;
pub mod expert;
pub mod intention;
pub mod localization;
pub mod neuralnet;
pub mod planner;
pub mod world;
