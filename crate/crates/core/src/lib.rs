//! Plug-and-play ADMM restoration of Poisson-corrupted images.
//!
//! The crate couples any Gaussian denoiser to Poisson denoising and
//! deblurring problems by alternating three steps: a likelihood-driven
//! primal update (closed form when the degradation is the identity,
//! quasi-Newton otherwise), a black-box denoising step, and a dual update.
//! An Anscombe-transform pipeline is provided as the classic baseline.
//!
//! Module map:
//! - [`imaging`]: the [`Image`] raster, file I/O, peak scaling, Poisson
//!   sampling, PSNR and photon-count binning.
//! - [`operators`]: blur kernels and the circular [`LinearOperator`].
//! - [`anscombe`]: forward/inverse variance-stabilizing transforms.
//! - [`likelihood`]: Poisson negative log-likelihood with a C² log surrogate.
//! - [`denoisers`]: the [`Denoiser`] contract and built-in implementations.
//! - [`optim`]: limited-memory BFGS.
//! - [`solver`]: the ADMM loop, multi-prior variant and binning wrapper.

pub mod anscombe;
pub mod denoisers;
pub mod error;
pub mod imaging;
pub mod likelihood;
pub mod operators;
pub mod optim;
pub mod solver;
pub mod synthetic;

pub use denoisers::Denoiser;
pub use error::{Error, Result};
pub use imaging::Image;
pub use operators::{Kernel, LinearOperator};
pub use solver::{RunReport, SolverParams};
