pub mod netgen;
pub mod reference;
