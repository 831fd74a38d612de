//! Files, HTTP backend and command pipeline around `synworld-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod http;
pub mod io;

pub use synworld_core as core;
