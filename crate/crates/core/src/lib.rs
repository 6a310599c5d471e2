//! Model-based iterative reconstruction for spectral-domain OCT.
//!
//! The measurement model couples ISAM resampling of the object spectrum, dispersion,
//! and spectral sub-sampling into one linear operator ([`IsamOperator`]). Images are
//! recovered by FISTA with isotropic TV or dual-tree complex wavelet sparsity.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the aliases below
//! name the common concrete instantiations.

pub mod error;
pub mod evaluation;
pub mod grid;
pub mod image;
pub mod io;
pub mod mask;
pub mod model;
pub mod nufft;
pub mod preprocess;
pub mod regularize;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use grid::AcquisitionGrid;
pub use image::{ComplexImage, Mask, Spectrogram};
pub use mask::{make_mask, MaskScheme};
pub use model::{IsamOperator, MeasurementOperator, ModelConfig};
pub use nufft::{NufftOptions, NufftPlan};
pub use regularize::{RegKind, RegSpec};
pub use scalar::Real;
pub use solver::{fista, proximal_gradient, SolveReport, SolverConfig};

pub type Grid64 = AcquisitionGrid<f64>;
pub type Grid32 = AcquisitionGrid<f32>;
pub type ComplexImage64 = ComplexImage<f64>;
pub type ComplexImage32 = ComplexImage<f32>;
pub type Spectrogram64 = Spectrogram<f64>;
pub type Spectrogram32 = Spectrogram<f32>;
pub type ModelConfig64 = ModelConfig<f64>;
pub type ModelConfig32 = ModelConfig<f32>;
pub type IsamOperator64 = IsamOperator<f64>;
pub type IsamOperator32 = IsamOperator<f32>;
pub type NufftPlan64 = NufftPlan<f64>;
pub type NufftPlan32 = NufftPlan<f32>;
