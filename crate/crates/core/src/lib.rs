pub mod cli;
pub mod error;
pub mod exceptional;
pub mod fermions;
pub mod lattice;
pub mod linalg;
pub mod metric;
pub mod poly;
pub mod spectra;
