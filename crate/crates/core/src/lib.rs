pub mod circuit;
pub mod dem;
pub mod error;
pub mod ghost;
pub mod harness;
pub mod matching;
pub mod patience;
pub mod tableau;
pub mod verify;
pub mod window;
