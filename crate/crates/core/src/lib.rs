pub mod analysis;
pub mod charges;
pub mod circuit;
pub mod cli;
pub mod measure;
pub mod mitigate;
pub mod noise;
pub mod pauli;
pub mod sim;
pub mod spectral;
pub mod tomo;
