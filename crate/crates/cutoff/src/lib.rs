//! Gallager-type exponent functions for discrete memoryless channels and
//! finite-SNR bounds on the cut-off rate of non-coherent Ricean fading
//! channels, with and without partial receiver side information.
//!
//! The special functions, quadrature and discrete-channel code are generic
//! over [`Real`] (`f32` or `f64`); the fading-channel bounds run in `f64`.
//! Aliases for the common `f64` instantiations live at the crate root.

pub mod dmc;
pub mod quadrature;
pub mod ricean;
pub mod scalar;
pub mod sideinfo;
pub mod specfun;

pub use scalar::Real;

pub type Dmc = dmc::Dmc<f64>;
pub type ProbVec = dmc::ProbVec<f64>;
pub type CostSpec = dmc::CostSpec<f64>;
pub type ConditionalLaw = dmc::ConditionalLaw<f64>;
pub type E0Result = dmc::E0Result<f64>;
pub type QuadSpec = quadrature::QuadSpec<f64>;
pub type QuadResult = quadrature::QuadResult<f64>;
pub type SpecFunConfig = specfun::SpecFunConfig<f64>;
