//! Error type for grid construction, stability checks and flow parameters.

use thiserror::Error;

/// Errors raised by container constructors, morphological operators and flows.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} must hold at least one value")]
    Empty { what: &'static str },

    #[error("{what} values must all be finite")]
    NonFinite { what: &'static str },

    #[error("grid spacing must be positive and finite, got {h}")]
    BadSpacing { h: f64 },

    #[error("{width}x{height} image needs {} values, got {len}", width * height)]
    ShapeMismatch {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("halo width {halo} is unsupported, must be 1 or 2")]
    UnsupportedHalo { halo: usize },

    #[error("halo width {halo} exceeds the axis extent {extent}")]
    HaloExceedsExtent { halo: usize, extent: usize },

    #[error("time step must be positive, got {tau}")]
    NonPositiveStep { tau: f64 },

    #[error("time step {tau} exceeds the {scheme} stability limit {limit}")]
    StabilityLimit {
        scheme: &'static str,
        tau: f64,
        limit: f64,
    },

    #[error("structuring radius must be positive and finite, got {r}")]
    BadRadius { r: f64 },

    #[error("structuring radius needs at least one Rouy-Tourin step")]
    ZeroRtSteps,

    #[error("{name} is not defined for 1-D signals")]
    Unsupported1d { name: &'static str },

    #[error("size mismatch: {a_width}x{a_height} vs {b_width}x{b_height}")]
    SizeMismatch {
        a_width: usize,
        a_height: usize,
        b_width: usize,
        b_height: usize,
    },

    #[error("peak value must be positive and finite, got {peak}")]
    BadPeak { peak: f64 },

    #[error("blur width must be nonnegative and finite, got {sigma}")]
    BadSigma { sigma: f64 },
}
