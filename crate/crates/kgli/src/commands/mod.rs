pub mod analyze;
pub mod minimize;
pub mod sample;
pub mod solve;
pub mod verify;
