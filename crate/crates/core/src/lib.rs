//! Faceted taxonomy construction from perceptual encounter data.

pub mod canonical;
pub mod engine;
pub mod error;
pub mod idea;
pub mod model;
pub mod notational;
pub mod percept;
pub mod store;
pub mod verbal;
pub mod violation;

pub use engine::Store;
pub use error::{ForgeError, Result};
