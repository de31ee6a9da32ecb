pub mod arfit;
pub mod error;
pub mod eval;
pub mod io;
pub mod isa;
pub mod pipeline;
pub mod seeding;
pub mod synth;
pub mod tsmodel;

pub use error::{Error, Result};
