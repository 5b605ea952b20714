//! Signal and image containers with mirrored boundary handling.
//!
//! All stencil sweeps in this crate read their neighbourhoods through a
//! mirrored boundary layer: the value at index -1 equals the value at 0,
//! the value at -2 equals the value at 1, and symmetrically at the far end
//! of each axis. The mirror is rebuilt from the current iterate before
//! every sweep, so boundary pixels never see stale values.

use num_traits::Float;

use crate::error::Error;
use crate::{Result, Scalar};

/// Boundary handling for stencil sweeps. The only supported mode mirrors
/// the signal into the halo: `u[-1] = u[0]`, `u[-2] = u[1]`, and the same
/// reflection at the far end of every axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryPolicy {
    /// Number of mirrored cells per side, 1 or 2.
    pub halo: usize,
}

impl Default for BoundaryPolicy {
    /// Halo of two cells: wide enough for every stencil in this crate.
    fn default() -> Self {
        BoundaryPolicy { halo: 2 }
    }
}

/// Reflects `i` into `0..n` with the edge value repeated: -1 maps to 0,
/// -2 maps to 1, `n` maps to `n - 1`. Folds as often as needed, so offsets
/// larger than `n` (wide blur kernels on small images) stay well defined.
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let period = 2 * n as isize;
    let m = ((i % period) + period) % period;
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Mirrors a slice into a buffer enlarged by `halo` cells per side.
pub(crate) fn extended_1d<T: Scalar>(values: &[T], halo: usize) -> Vec<T> {
    let n = values.len();
    let mut out = Vec::with_capacity(n + 2 * halo);
    for i in -(halo as isize)..(n + halo) as isize {
        out.push(values[reflect_index(i, n)]);
    }
    out
}

/// Mirrors a row-major `width x height` grid into a buffer enlarged by
/// `halo` cells on every side.
pub(crate) fn extended_2d<T: Scalar>(
    values: &[T],
    width: usize,
    height: usize,
    halo: usize,
) -> Vec<T> {
    debug_assert_eq!(values.len(), width * height);
    let ew = width + 2 * halo;
    let eh = height + 2 * halo;
    let mut out = Vec::with_capacity(ew * eh);
    for y in -(halo as isize)..(height + halo) as isize {
        let sy = reflect_index(y, height);
        let row = &values[sy * width..(sy + 1) * width];
        for x in -(halo as isize)..(width + halo) as isize {
            out.push(row[reflect_index(x, width)]);
        }
    }
    debug_assert_eq!(out.len(), ew * eh);
    out
}

/// Runs `f(row_index, output_row)` over the rows of a row-major buffer,
/// in parallel once the image is large enough to make that worthwhile.
/// Rows are disjoint, so the result is identical to the sequential sweep
/// regardless of thread count.
pub(crate) fn for_each_row<T, F>(out: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    use rayon::prelude::*;
    if out.len() >= 1 << 15 {
        out.par_chunks_mut(width)
            .enumerate()
            .for_each(|(y, row)| f(y, row));
    } else {
        for (y, row) in out.chunks_mut(width).enumerate() {
            f(y, row);
        }
    }
}

fn check_values<T: Scalar>(what: &'static str, values: &[T], h: T) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Empty { what });
    }
    if !(h.is_finite() && h > T::zero()) {
        return Err(Error::BadSpacing {
            h: h.to_f64().unwrap_or(f64::NAN),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what });
    }
    Ok(())
}

fn check_halo(halo: usize, extent: usize) -> Result<()> {
    if halo == 0 || halo > 2 {
        return Err(Error::UnsupportedHalo { halo });
    }
    if halo > extent {
        return Err(Error::HaloExceedsExtent { halo, extent });
    }
    Ok(())
}

/// Shared view of a sampled grid: flat value storage plus the pixel spacing.
pub trait Grid: Sized + Clone {
    type Value: Scalar;

    /// Flat storage, row-major for images.
    fn values(&self) -> &[Self::Value];

    /// Rebuilds the container around new values of the same shape.
    fn with_values(&self, values: Vec<Self::Value>) -> Self;

    /// Pixel spacing `h`.
    fn spacing(&self) -> Self::Value;

    /// Minimum and maximum value.
    fn range(&self) -> (Self::Value, Self::Value) {
        let mut min = Self::Value::infinity();
        let mut max = Self::Value::neg_infinity();
        for &v in self.values() {
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }
}

/// 1-D signal sampled on a uniform grid with spacing `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D<T> {
    values: Vec<T>,
    h: T,
}

impl<T: Scalar> Signal1D<T> {
    /// Validates that `values` is nonempty and finite and `h > 0`.
    pub fn new(values: Vec<T>, h: T) -> Result<Self> {
        check_values("signal", &values, h)?;
        Ok(Signal1D { values, h })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// Returns the signal enlarged by `halo` mirrored cells per side.
    /// `halo` must be 1 or 2 and must not exceed the signal length.
    pub fn extend_mirrored(&self, halo: usize) -> Result<Self> {
        check_halo(halo, self.len())?;
        Ok(Signal1D {
            values: extended_1d(&self.values, halo),
            h: self.h,
        })
    }
}

impl<T: Scalar> Grid for Signal1D<T> {
    type Value = T;

    fn values(&self) -> &[T] {
        &self.values
    }

    fn with_values(&self, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Signal1D { values, h: self.h }
    }

    fn spacing(&self) -> T {
        self.h
    }
}

/// 2-D image sampled on a uniform grid, row-major storage, equal spacing
/// `h` along both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
    h: T,
}

impl<T: Scalar> Image2D<T> {
    /// Validates shape (`width * height == values.len()`, both nonzero),
    /// finiteness and `h > 0`.
    pub fn new(width: usize, height: usize, values: Vec<T>, h: T) -> Result<Self> {
        if width == 0 || height == 0 || width * height != values.len() {
            return Err(Error::ShapeMismatch {
                width,
                height,
                len: values.len(),
            });
        }
        check_values("image", &values, h)?;
        Ok(Image2D {
            width,
            height,
            values,
            h,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        h: T,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Image2D::new(width, height, values, h)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// Value at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    /// One row of pixels.
    pub fn row(&self, y: usize) -> &[T] {
        &self.values[y * self.width..(y + 1) * self.width]
    }

    /// Returns the image enlarged by `halo` mirrored cells on every side.
    /// `halo` must be 1 or 2 and must not exceed either axis extent.
    pub fn extend_mirrored(&self, halo: usize) -> Result<Self> {
        check_halo(halo, self.width)?;
        check_halo(halo, self.height)?;
        Ok(Image2D {
            width: self.width + 2 * halo,
            height: self.height + 2 * halo,
            values: extended_2d(&self.values, self.width, self.height, halo),
            h: self.h,
        })
    }
}

impl<T: Scalar> Grid for Image2D<T> {
    type Value = T;

    fn values(&self) -> &[T] {
        &self.values
    }

    fn with_values(&self, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Image2D {
            width: self.width,
            height: self.height,
            values,
            h: self.h,
        }
    }

    fn spacing(&self) -> T {
        self.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Image64, Signal64};

    #[test]
    fn mirror_rule_duplicates_the_edge() {
        // u[-1] = u[0], u[-2] = u[1], symmetric at the far end.
        let s = Signal64::new(vec![1.0, 2.0, 3.0], 1.0).unwrap();
        let e = s.extend_mirrored(2).unwrap();
        assert_eq!(e.values(), &[2.0, 1.0, 1.0, 2.0, 3.0, 3.0, 2.0]);
    }

    #[test]
    fn single_sample_halo_one() {
        let s = Signal64::new(vec![5.0], 1.0).unwrap();
        let e = s.extend_mirrored(1).unwrap();
        assert_eq!(e.values(), &[5.0, 5.0, 5.0]);
    }

    #[test]
    fn constant_extends_to_constant() {
        let img = Image64::new(3, 2, vec![7.0; 6], 1.0).unwrap();
        let e = img.extend_mirrored(2).unwrap();
        assert_eq!(e.width(), 7);
        assert_eq!(e.height(), 6);
        assert!(e.values().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn interior_of_extension_is_the_input() {
        let img = Image64::from_fn(4, 3, 1.0, |x, y| (3 * y + x) as f64).unwrap();
        for halo in [1usize, 2] {
            let e = img.extend_mirrored(halo).unwrap();
            for y in 0..img.height() {
                for x in 0..img.width() {
                    assert_eq!(e.get(x + halo, y + halo), img.get(x, y));
                }
            }
            // Mirroring introduces no new values.
            assert_eq!(e.range(), img.range());
        }
    }

    #[test]
    fn halo_validation() {
        let s = Signal64::new(vec![1.0, 2.0, 3.0], 1.0).unwrap();
        assert!(matches!(
            s.extend_mirrored(0),
            Err(Error::UnsupportedHalo { halo: 0 })
        ));
        assert!(matches!(
            s.extend_mirrored(3),
            Err(Error::UnsupportedHalo { halo: 3 })
        ));
        let tiny = Signal64::new(vec![1.0], 1.0).unwrap();
        assert!(matches!(
            tiny.extend_mirrored(2),
            Err(Error::HaloExceedsExtent { halo: 2, extent: 1 })
        ));
        let thin = Image64::new(1, 5, vec![0.0; 5], 1.0).unwrap();
        assert!(matches!(
            thin.extend_mirrored(2),
            Err(Error::HaloExceedsExtent { halo: 2, extent: 1 })
        ));
    }

    #[test]
    fn constructor_validation() {
        assert!(matches!(
            Signal64::new(vec![], 1.0),
            Err(Error::Empty { .. })
        ));
        assert!(matches!(
            Signal64::new(vec![1.0], 0.0),
            Err(Error::BadSpacing { .. })
        ));
        assert!(matches!(
            Signal64::new(vec![f64::NAN], 1.0),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            Image64::new(2, 2, vec![0.0; 3], 1.0),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            Image64::new(0, 2, vec![], 1.0),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn range_of_single_value_collapses() {
        let s = Signal64::new(vec![4.5], 2.0).unwrap();
        assert_eq!(s.range(), (4.5, 4.5));
        let s = Signal64::new(vec![3.0, -1.0, 2.0], 1.0).unwrap();
        assert_eq!(s.range(), (-1.0, 3.0));
    }

    #[test]
    fn reflect_index_folds_far_offsets() {
        // Period-2n folding keeps huge offsets defined (wide blur kernels).
        assert_eq!(reflect_index(-1, 3), 0);
        assert_eq!(reflect_index(-2, 3), 1);
        assert_eq!(reflect_index(3, 3), 2);
        assert_eq!(reflect_index(4, 3), 1);
        assert_eq!(reflect_index(-7, 1), 0);
        assert_eq!(reflect_index(11, 2), 0);
    }

    #[test]
    fn works_in_single_precision() {
        let s = crate::Signal32::new(vec![1.0f32, 2.0, 3.0], 1.0).unwrap();
        let e = s.extend_mirrored(1).unwrap();
        assert_eq!(e.values(), &[1.0f32, 1.0, 2.0, 3.0, 3.0]);
    }
}
