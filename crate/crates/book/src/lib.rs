//! The chapters of the guide in `book/src`, one module each, so that
//! `cargo test --doc` runs every snippet against the current library.
//! `mdbook test` cannot link external crates, which is why this crate exists.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/background.md")]
pub mod background {}
#[doc = include_str!("../../../book/src/spectral.md")]
pub mod spectral {}
#[doc = include_str!("../../../book/src/modes.md")]
pub mod modes {}
#[doc = include_str!("../../../book/src/fuchsian.md")]
pub mod fuchsian {}
#[doc = include_str!("../../../book/src/direct.md")]
pub mod direct {}
#[doc = include_str!("../../../book/src/initial.md")]
pub mod initial {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
