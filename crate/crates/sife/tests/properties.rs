//! Randomised structural properties of the morphological operators and
//! flows: duality, ordering, range bounds, covariances and freezing. These
//! complement the seeded batch checks in `sife::harness` with
//! shrinking-enabled search over signal shapes and parameters.

use proptest::prelude::*;

use sife::flows::{run_flow_2d, shock_step_2d, sife_step, sild_step_1d, FlowParams};
use sife::grid::Grid;
use sife::morphology::{dilate, erode, StructuringRadius};
use sife::{Image64, Signal64};

fn signal(values: Vec<f64>) -> Signal64 {
    Signal64::new(values, 1.0).unwrap()
}

fn grey_values(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..255.0f64, len)
}

fn grey_image() -> impl Strategy<Value = Image64> {
    (3usize..12, 3usize..12).prop_flat_map(|(w, h)| {
        prop::collection::vec(0.0..255.0f64, w * h)
            .prop_map(move |v| Image64::new(w, h, v, 1.0).unwrap())
    })
}

/// Largest deviation from the ideal when comparing two equal-length buffers.
fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    /// Erosion is the mirror image of dilation: `erode(u) == -dilate(-u)`,
    /// exactly in floating point.
    #[test]
    fn erosion_is_the_exact_dual_of_dilation(
        values in grey_values(3..40),
        steps in 1usize..4,
    ) {
        let u = signal(values.clone());
        let neg = signal(values.iter().map(|v| -v).collect());
        let sr = StructuringRadius::new(0.75, steps).unwrap();
        let e = erode(&u, &sr).unwrap();
        let d = dilate(&neg, &sr).unwrap();
        for (x, y) in e.values().iter().zip(d.values()) {
            prop_assert_eq!(*x, -*y);
        }
    }

    /// One Rouy–Tourin sweep moves no sample further than its immediate
    /// neighbours' values: erosion <= identity <= dilation, with both bounded
    /// by the local range.
    #[test]
    fn dilation_brackets_the_signal(values in grey_values(3..40)) {
        let u = signal(values);
        let sr = StructuringRadius::new(0.5, 1).unwrap();
        let d = dilate(&u, &sr).unwrap();
        let e = erode(&u, &sr).unwrap();
        let (lo, hi) = u.range();
        for i in 0..u.len() {
            prop_assert!(e.values()[i] <= u.values()[i]);
            prop_assert!(u.values()[i] <= d.values()[i]);
            prop_assert!(d.values()[i] <= hi && e.values()[i] >= lo);
        }
    }

    /// Morphological operators commute with grey-level shifts:
    /// `dilate(u + c) == dilate(u) + c`.
    #[test]
    fn dilation_commutes_with_grey_shifts(
        values in grey_values(3..32),
        shift in -100.0..100.0f64,
    ) {
        let u = signal(values.clone());
        let shifted = signal(values.iter().map(|v| v + shift).collect());
        let sr = StructuringRadius::new(0.5, 2).unwrap();
        let a = dilate(&shifted, &sr).unwrap();
        let b = dilate(&u, &sr).unwrap();
        let diff: Vec<f64> = b.values().iter().map(|v| v + shift).collect();
        // One addition per sample: allow a few ulps at grey-value scale.
        prop_assert!(max_abs_diff(a.values(), &diff) <= 1e-12);
    }

    /// The sharpening step commutes with affine grey maps `a*u + b`
    /// (morphological invariance under contrast change, a > 0).
    #[test]
    fn sife_step_commutes_with_affine_contrast_changes(
        values in grey_values(4..32),
        a in 0.1..4.0f64,
        b in -50.0..50.0f64,
    ) {
        let u = signal(values.clone());
        let mapped = signal(values.iter().map(|v| a * v + b).collect());
        let sr = StructuringRadius::new(0.5, 1).unwrap();
        let tau = 0.25;
        let stepped_mapped = sife_step(&mapped, tau, &sr).unwrap();
        let stepped = sife_step(&u, tau, &sr).unwrap();
        let mapped_stepped: Vec<f64> = stepped.values().iter().map(|v| a * v + b).collect();
        // Scale-dependent tolerance: values reach a*255 + b ~ 1e3.
        prop_assert!(max_abs_diff(stepped_mapped.values(), &mapped_stepped) <= 1e-9);
    }

    /// Strict interior extrema do not move, bit for bit, under either
    /// sharpening scheme.
    #[test]
    fn strict_extrema_freeze_under_both_schemes(
        mut values in grey_values(7..24),
        at in 2usize..5,
    ) {
        // Plant a strict maximum away from the boundary.
        let at = at.min(values.len() - 3);
        values[at] = 300.0;
        let u = signal(values);
        let sr = StructuringRadius::new(0.5, 1).unwrap();
        let sife_next = sife_step(&u, 0.25, &sr).unwrap();
        let sild_next = sild_step_1d(&u, 0.4).unwrap();
        prop_assert_eq!(sife_next.values()[at], 300.0);
        prop_assert_eq!(sild_next.values()[at], 300.0);
    }

    /// No SIFE iterate ever leaves the initial value range, regardless of
    /// the (stable) step size and radius drawn.
    #[test]
    fn sife_iterates_respect_the_initial_range(
        values in grey_values(4..40),
        r in 0.2..1.0f64,
        tau_frac in 0.05..1.0f64,
        iters in 1usize..12,
    ) {
        let u = signal(values);
        let sr = StructuringRadius::new(r, 1).unwrap();
        let tau = tau_frac * r * r;
        let (lo, hi) = u.range();
        let mut v = u;
        for _ in 0..iters {
            v = sife_step(&v, tau, &sr).unwrap();
            let (mn, mx) = v.range();
            prop_assert!(mn >= lo - 1e-12 && mx <= hi + 1e-12,
                "range [{mn}, {mx}] escaped [{lo}, {hi}]");
        }
    }

    /// Same range guarantee for the 2-D flow, via the report bookkeeping.
    #[test]
    fn sife_2d_report_shows_no_range_violation(img in grey_image()) {
        let sr = StructuringRadius::new(0.5, 1).unwrap();
        let params = FlowParams::sife(0.25, sr).with_iterations(8);
        let (_, report) = run_flow_2d(&img, &params).unwrap();
        prop_assert!(report.worst_violation() <= 1e-12);
    }

    /// The shock filter is built from single Rouy–Tourin updates, so one
    /// step stays within the local 4-neighbour range of each pixel.
    #[test]
    fn shock_step_respects_the_global_range(img in grey_image()) {
        let next = shock_step_2d(&img, 0.5).unwrap();
        let (lo, hi) = img.range();
        let (mn, mx) = next.range();
        prop_assert!(mn >= lo && mx <= hi);
    }

    /// Grid translation covariance: sharpening commutes with flipping the
    /// signal end for end (the stencil has no directional bias).
    #[test]
    fn sife_step_commutes_with_reflection(values in grey_values(4..32)) {
        let u = signal(values.clone());
        let flipped = signal(values.iter().rev().cloned().collect());
        let sr = StructuringRadius::new(0.5, 1).unwrap();
        let a = sife_step(&flipped, 0.25, &sr).unwrap();
        let b = sife_step(&u, 0.25, &sr).unwrap();
        let b_flipped: Vec<f64> = b.values().iter().rev().cloned().collect();
        prop_assert_eq!(max_abs_diff(a.values(), &b_flipped), 0.0);
    }

    /// Two-valued signals are exact fixed points of the sharpening flow.
    #[test]
    fn binary_signals_are_fixed_points(
        pattern in prop::collection::vec(any::<bool>(), 4..32),
        lo in 0.0..100.0f64,
        gap in 1.0..155.0f64,
    ) {
        let hi = lo + gap;
        let u = signal(pattern.iter().map(|&b| if b { hi } else { lo }).collect());
        let sr = StructuringRadius::new(0.5, 1).unwrap();
        let next = sife_step(&u, 0.25, &sr).unwrap();
        prop_assert_eq!(u.values(), next.values());
    }
}
