#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod duhamel;
pub mod error;
pub mod fd;
pub mod functional;
pub mod harness;
pub mod io;
pub mod lattice;
pub mod numerics;
pub mod scaling;

pub use error::{Error, Result};
