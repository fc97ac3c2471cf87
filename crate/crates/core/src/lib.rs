pub mod couplings;
pub mod distances;
pub mod entropy;
pub mod error;
pub mod exact_densities;
pub mod experiments;
pub mod number_theory;
pub mod samplers;
pub mod stats;
