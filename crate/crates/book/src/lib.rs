//! The guide under `book/`, compiled so that `cargo test` runs its samples.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/maps.md")]
pub mod maps {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
