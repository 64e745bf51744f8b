#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
extern crate alloc;

pub mod average_hamiltonian;
pub mod cost_functions;
pub mod error;
pub mod evaluator;
pub mod fft;
pub mod lie_basis;
pub mod linalg;
pub mod modulation;
pub mod optimizer;
pub mod reference;
pub mod waveform;

pub use error::{Error, Result};
