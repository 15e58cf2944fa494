pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod prox;
pub mod solvers;
pub mod separator;
pub mod coord_descent;
pub mod structure;
pub mod benchmark;
