pub mod acceptance;
pub mod algebra;
pub mod cli;
pub mod error;
pub mod hopf;
pub mod interferometer;
pub mod linalg;
pub mod random;
pub mod states;
pub mod transport;
