//! Rouy-Tourin dilation and erosion and the morphological derivatives
//! built from them.
//!
//! One upwind step of size `tau` evolves `du/dt = |grad u|` (dilation) or
//! `du/dt = -|grad u|` (erosion); `k` steps of size `r / k` approximate
//! dilation or erosion with a disc of radius `r`. In 1-D a step is
//!
//! ```text
//! u'[i] = u[i] + tau * max(0, (u[i+1] - u[i]) / h, (u[i-1] - u[i]) / h)
//! ```
//!
//! and in 2-D the two axis terms combine as the Euclidean norm under the
//! square root. Steps are stable (no new extrema, output range inside the
//! input range) for `tau <= h` in 1-D and `tau <= h / sqrt(2)` in 2-D;
//! larger steps are rejected, never clamped.

use num_traits::Float;

use crate::error::Error;
use crate::grid::{extended_1d, extended_2d, for_each_row, reflect_index, Grid, Image2D, Signal1D};
use crate::{cast, Result, Scalar};

/// Disc radius `r` realised as `rt_steps` Rouy-Tourin steps of size
/// `r / rt_steps` each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuringRadius<T> {
    r: T,
    rt_steps: usize,
}

impl<T: Scalar> StructuringRadius<T> {
    pub fn new(r: T, rt_steps: usize) -> Result<Self> {
        if !(r.is_finite() && r > T::zero()) {
            return Err(Error::BadRadius {
                r: r.to_f64().unwrap_or(f64::NAN),
            });
        }
        if rt_steps == 0 {
            return Err(Error::ZeroRtSteps);
        }
        Ok(StructuringRadius { r, rt_steps })
    }

    /// Smallest step count whose per-step size stays within `tau_limit`.
    pub fn with_limit(r: T, tau_limit: T) -> Result<Self> {
        if !(r.is_finite() && r > T::zero()) {
            return Err(Error::BadRadius {
                r: r.to_f64().unwrap_or(f64::NAN),
            });
        }
        let steps = (r / tau_limit)
            .ceil()
            .to_usize()
            .unwrap_or(usize::MAX)
            .max(1);
        StructuringRadius::new(r, steps)
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn rt_steps(&self) -> usize {
        self.rt_steps
    }

    /// Per-step size `r / rt_steps`.
    pub fn tau_rt(&self) -> T {
        self.r / cast::<T>(self.rt_steps as f64)
    }

    /// Radius `2r` walked with twice the steps, so the per-step size is
    /// unchanged.
    pub fn doubled(&self) -> Self {
        StructuringRadius {
            r: self.r + self.r,
            rt_steps: 2 * self.rt_steps,
        }
    }
}

/// Grids that support single Rouy-Tourin sweeps.
pub trait Morphology: Grid {
    /// One upwind dilation step of size `tau`, `0 < tau <=` [`Self::rt_tau_limit`].
    fn rt_dilate_step(&self, tau: Self::Value) -> Result<Self>;

    /// One upwind erosion step of size `tau`, the exact dual of dilation:
    /// `erode(u) == -dilate(-u)`.
    fn rt_erode_step(&self, tau: Self::Value) -> Result<Self>;

    /// Largest stable step size: `h` in 1-D, `h / sqrt(2)` in 2-D.
    fn rt_tau_limit(&self) -> Self::Value;
}

pub(crate) fn check_tau<T: Scalar>(tau: T, limit: T, scheme: &'static str) -> Result<()> {
    if !(tau.is_finite() && tau > T::zero()) {
        return Err(Error::NonPositiveStep {
            tau: tau.to_f64().unwrap_or(f64::NAN),
        });
    }
    if tau > limit {
        return Err(Error::StabilityLimit {
            scheme,
            tau: tau.to_f64().unwrap_or(f64::NAN),
            limit: limit.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

#[inline(always)]
pub(crate) fn upwind<T: Scalar>(a: T, b: T) -> T {
    // max(0, a, b)
    a.max(b).max(T::zero())
}

impl<T: Scalar> Morphology for Signal1D<T> {
    fn rt_dilate_step(&self, tau: T) -> Result<Self> {
        check_tau(tau, self.rt_tau_limit(), "1-D Rouy-Tourin (tau <= h)")?;
        let inv_h = self.spacing().recip();
        let e = extended_1d(self.values(), 1);
        let out = (0..self.len())
            .map(|i| {
                let c = e[i + 1];
                let g = upwind((e[i + 2] - c) * inv_h, (e[i] - c) * inv_h);
                c + tau * g
            })
            .collect();
        Ok(self.with_values(out))
    }

    fn rt_erode_step(&self, tau: T) -> Result<Self> {
        check_tau(tau, self.rt_tau_limit(), "1-D Rouy-Tourin (tau <= h)")?;
        let inv_h = self.spacing().recip();
        let e = extended_1d(self.values(), 1);
        let out = (0..self.len())
            .map(|i| {
                let c = e[i + 1];
                let g = upwind((c - e[i + 2]) * inv_h, (c - e[i]) * inv_h);
                c - tau * g
            })
            .collect();
        Ok(self.with_values(out))
    }

    fn rt_tau_limit(&self) -> T {
        self.spacing()
    }
}

impl<T: Scalar> Morphology for Image2D<T> {
    fn rt_dilate_step(&self, tau: T) -> Result<Self> {
        check_tau(
            tau,
            self.rt_tau_limit(),
            "2-D Rouy-Tourin (tau <= h / sqrt(2))",
        )?;
        let inv_h = self.spacing().recip();
        let (w, ew) = (self.width(), self.width() + 2);
        let e = extended_2d(self.values(), w, self.height(), 1);
        let mut out = self.values().to_vec();
        for_each_row(&mut out, w, |y, row| {
            let n = &e[y * ew..];
            let c0 = &e[(y + 1) * ew..];
            let s = &e[(y + 2) * ew..];
            for (x, o) in row.iter_mut().enumerate() {
                let c = c0[x + 1];
                let gx = upwind((c0[x + 2] - c) * inv_h, (c0[x] - c) * inv_h);
                let gy = upwind((s[x + 1] - c) * inv_h, (n[x + 1] - c) * inv_h);
                *o = c + tau * (gx * gx + gy * gy).sqrt();
            }
        });
        Ok(self.with_values(out))
    }

    fn rt_erode_step(&self, tau: T) -> Result<Self> {
        check_tau(
            tau,
            self.rt_tau_limit(),
            "2-D Rouy-Tourin (tau <= h / sqrt(2))",
        )?;
        let inv_h = self.spacing().recip();
        let (w, ew) = (self.width(), self.width() + 2);
        let e = extended_2d(self.values(), w, self.height(), 1);
        let mut out = self.values().to_vec();
        for_each_row(&mut out, w, |y, row| {
            let n = &e[y * ew..];
            let c0 = &e[(y + 1) * ew..];
            let s = &e[(y + 2) * ew..];
            for (x, o) in row.iter_mut().enumerate() {
                let c = c0[x + 1];
                let gx = upwind((c - c0[x + 2]) * inv_h, (c - c0[x]) * inv_h);
                let gy = upwind((c - s[x + 1]) * inv_h, (c - n[x + 1]) * inv_h);
                *o = c - tau * (gx * gx + gy * gy).sqrt();
            }
        });
        Ok(self.with_values(out))
    }

    fn rt_tau_limit(&self) -> T {
        self.spacing() / cast::<T>(2.0).sqrt()
    }
}

/// Dilation with disc radius `sr.r()`: `sr.rt_steps()` Rouy-Tourin steps,
/// each re-mirroring the current iterate.
pub fn dilate<G: Morphology>(u: &G, sr: &StructuringRadius<G::Value>) -> Result<G> {
    let tau = sr.tau_rt();
    let mut cur = u.rt_dilate_step(tau)?;
    for _ in 1..sr.rt_steps() {
        cur = cur.rt_dilate_step(tau)?;
    }
    Ok(cur)
}

/// Erosion with disc radius `sr.r()`, dual of [`dilate`].
pub fn erode<G: Morphology>(u: &G, sr: &StructuringRadius<G::Value>) -> Result<G> {
    let tau = sr.tau_rt();
    let mut cur = u.rt_erode_step(tau)?;
    for _ in 1..sr.rt_steps() {
        cur = cur.rt_erode_step(tau)?;
    }
    Ok(cur)
}

/// Internal morphological gradient `(u - erode(u)) / r`, a one-sided
/// approximation of `|grad u|`. Always nonnegative.
pub fn internal_gradient<G: Morphology>(u: &G, sr: &StructuringRadius<G::Value>) -> Result<G> {
    let e = erode(u, sr)?;
    let inv_r = sr.r().recip();
    let out = u
        .values()
        .iter()
        .zip(e.values())
        .map(|(&a, &b)| (a - b) * inv_r)
        .collect();
    Ok(u.with_values(out))
}

/// External morphological gradient `(dilate(u) - u) / r`. Always
/// nonnegative, and exactly zero at strict local maxima.
pub fn external_gradient<G: Morphology>(u: &G, sr: &StructuringRadius<G::Value>) -> Result<G> {
    let d = dilate(u, sr)?;
    let inv_r = sr.r().recip();
    let out = d
        .values()
        .iter()
        .zip(u.values())
        .map(|(&a, &b)| (a - b) * inv_r)
        .collect();
    Ok(u.with_values(out))
}

/// Second derivative along the flowline (the gradient direction):
/// the difference of external and internal gradient, divided by `r`.
pub fn second_flowline_derivative<G: Morphology>(
    u: &G,
    sr: &StructuringRadius<G::Value>,
) -> Result<G> {
    let plus = external_gradient(u, sr)?;
    let minus = internal_gradient(u, sr)?;
    let inv_r = sr.r().recip();
    let out = plus
        .values()
        .iter()
        .zip(minus.values())
        .map(|(&a, &b)| (a - b) * inv_r)
        .collect();
    Ok(u.with_values(out))
}

/// Flat dilation by the window `{-radius_px, ..., radius_px}`, mirrored
/// boundary. Set-theoretic reference for tests; the flows never call it.
pub fn flat_dilate_1d<T: Scalar>(u: &Signal1D<T>, radius_px: usize) -> Signal1D<T> {
    flat_1d(u, radius_px, true)
}

/// Flat erosion, dual of [`flat_dilate_1d`].
pub fn flat_erode_1d<T: Scalar>(u: &Signal1D<T>, radius_px: usize) -> Signal1D<T> {
    flat_1d(u, radius_px, false)
}

fn flat_1d<T: Scalar>(u: &Signal1D<T>, radius_px: usize, dilate: bool) -> Signal1D<T> {
    let n = u.len();
    let v = u.values();
    let r = radius_px as isize;
    let out = (0..n as isize)
        .map(|i| {
            let mut best = v[i as usize];
            for k in -r..=r {
                let s = v[reflect_index(i + k, n)];
                best = if dilate { best.max(s) } else { best.min(s) };
            }
            best
        })
        .collect();
    u.with_values(out)
}

/// Flat dilation by the discrete Euclidean disc
/// `{(a, b) : a^2 + b^2 <= radius_px^2}`, mirrored boundary.
/// Set-theoretic reference for tests; the flows never call it.
pub fn flat_dilate_2d<T: Scalar>(u: &Image2D<T>, radius_px: usize) -> Image2D<T> {
    flat_2d(u, radius_px, true)
}

/// Flat erosion, dual of [`flat_dilate_2d`].
pub fn flat_erode_2d<T: Scalar>(u: &Image2D<T>, radius_px: usize) -> Image2D<T> {
    flat_2d(u, radius_px, false)
}

fn flat_2d<T: Scalar>(u: &Image2D<T>, radius_px: usize, dilate: bool) -> Image2D<T> {
    let (w, h) = (u.width(), u.height());
    let v = u.values();
    let r = radius_px as isize;
    let rr = (radius_px * radius_px) as isize;
    let mut out = v.to_vec();
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut best = v[y as usize * w + x as usize];
            for b in -r..=r {
                for a in -r..=r {
                    if a * a + b * b > rr {
                        continue;
                    }
                    let s = v[reflect_index(y + b, h) * w + reflect_index(x + a, w)];
                    best = if dilate { best.max(s) } else { best.min(s) };
                }
            }
            out[y as usize * w + x as usize] = best;
        }
    }
    u.with_values(out)
}
