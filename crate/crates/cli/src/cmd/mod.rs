pub mod couette;
pub mod diag;
pub mod stokes2;
pub mod toeplitz;
pub mod verify;
