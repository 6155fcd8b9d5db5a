pub mod aiger;
pub mod ltl;
pub mod check;
pub mod corrupt;
pub mod rng;
pub mod metrics;
pub mod encoding;
pub mod model;
pub mod pipeline;
pub mod cli;
