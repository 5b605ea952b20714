//! Morphological sharpening flows on pixel grids.
//!
//! The crate implements stabilised inverse flowline evolution (SIFE), a
//! backward parabolic flow discretised entirely with morphological
//! dilations and erosions, together with two reference flows: stabilised
//! inverse linear diffusion (SILD) and the classic shock filter. All
//! stencils run on mirrored boundaries and respect hard stability limits,
//! which gives the schemes a discrete maximum-minimum principle and, in
//! 1-D, monotonicity preservation.
//!
//! Modules:
//! * [`grid`]: signal and image containers with mirrored boundary handling
//! * [`morphology`]: Rouy-Tourin dilation/erosion and morphological derivatives
//! * [`flows`]: SIFE, SILD and shock-filter steps plus the iteration driver
//! * [`harness`]: seeded property checks (max-min, monotonicity, equivalence)
//! * [`io`]: PGM images and CSV reports

pub mod error;
pub mod flows;
pub mod grid;
pub mod harness;
pub mod io;
pub mod morphology;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Floating-point grey value: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssignOps
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Double-precision signal, the default working type.
pub type Signal64 = grid::Signal1D<f64>;
/// Double-precision image, the default working type.
pub type Image64 = grid::Image2D<f64>;
/// Single-precision signal.
pub type Signal32 = grid::Signal1D<f32>;
/// Single-precision image.
pub type Image32 = grid::Image2D<f32>;

/// Converts an `f64` constant into the working scalar type.
pub(crate) fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}
