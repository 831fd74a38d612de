#![no_std]
extern crate alloc;

pub mod environment;
pub mod fixture;
pub mod llm;
pub mod mcts;
pub mod optimizer;
pub mod simulated;
pub mod synthesis;
pub mod types;
