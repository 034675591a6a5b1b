//! Spectral solver and verification harness for the Moore-Gibson-Thompson
//! equation and the wave equation with memory it embeds into.
//!
//! The crate is `no_std` with `alloc`. Enable `std` for `std::error::Error`
//! integration, `parallel` for a rayon-backed mode loop and `serde` for
//! report serialization.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod spectral;
pub mod maccamy;
pub mod modal;
pub mod oracle;
pub mod quadrature;
pub mod volterra;

pub use error::{Error, Result};
