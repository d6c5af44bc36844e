#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod config;
pub mod design;
pub mod dynamics;
pub mod econ;
pub mod emulator;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod nash;
pub mod scalar;
pub mod seeds;
pub mod types;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Surface = emulator::GpSurface<f64>;
pub type Surface32 = emulator::GpSurface<f32>;
pub type MaternKernel = emulator::Kernel<f64>;
pub type MaternKernel32 = emulator::Kernel<f32>;
pub type StateSpace = ensemble::statespace::DiagonalStateSpace<f64>;
pub type StateSpace32 = ensemble::statespace::DiagonalStateSpace<f32>;
pub type Design = design::DesignBatch<f64>;
pub type Design32 = design::DesignBatch<f32>;
