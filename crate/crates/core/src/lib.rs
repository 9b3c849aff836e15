pub mod assembly;
pub mod circuit;
pub mod error;
pub mod fixtures;
pub mod gates;
pub mod matrix;
pub mod optimizer;
pub mod search;
pub mod topology;
pub mod verification;
