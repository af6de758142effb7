use proptest::prelude::*;

use evwave::event_io::PolarityMatrix;
use evwave::representation::{accumulate, decay_factor, quantize, to_gray, IntensitySurface, Representer};
use evwave::{DecayParams, Grid, SensorDims};

fn params() -> impl Strategy<Value = DecayParams> {
    (1e-8f64..1e-3, 0.1f64..4.0, 0.01f64..1.0, -5.0f64..0.0, 0.01f64..5.0).prop_map(|(k, b, c, lo, span)| DecayParams {
        k,
        b,
        c_thresh: c,
        s_min: lo,
        s_max: lo + span,
    })
}

fn pmat(dims: SensorDims, values: Vec<i32>) -> PolarityMatrix {
    PolarityMatrix { values: Grid::from_vec(dims.width, dims.height, values).unwrap() }
}

const DIMS: SensorDims = SensorDims { width: 5, height: 4 };

proptest! {
    #[test]
    fn surface_stays_bounded(
        p in params(),
        steps in prop::collection::vec((prop::collection::vec(-20i32..=20, 20), 0u64..3_000_000), 1..40),
    ) {
        let mut s = IntensitySurface::new(DIMS, &p, 0);
        for (values, dt) in steps {
            s = accumulate(&s, &pmat(DIMS, values), &p, dt).unwrap();
            prop_assert!(s.values.as_slice().iter().all(|&v| p.s_min <= v && v <= p.s_max));
        }
    }

    #[test]
    fn decay_is_non_increasing(p in params(), dt1 in 0u64..2_000_000, dt2 in 0u64..2_000_000, scale in 1.0f64..10.0) {
        let (lo, hi) = (dt1.min(dt2), dt1.max(dt2));
        let d = |p: &DecayParams, dt| decay_factor(p, dt);
        prop_assert!(d(&p, hi) <= d(&p, lo));
        let faster = DecayParams { k: p.k * scale, ..p };
        prop_assert!(d(&faster, dt1) <= d(&p, dt1));
        prop_assert!((0.0..=1.0).contains(&d(&p, dt1)));
        prop_assert_eq!(d(&p, 0), 1.0);
    }

    #[test]
    fn quantization_is_monotone_with_exact_endpoints(p in params(), a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(quantize(lo, &p) <= quantize(hi, &p));
        prop_assert_eq!(quantize(p.s_min, &p), 0);
        prop_assert_eq!(quantize(p.s_max, &p), 255);
    }

    #[test]
    fn quiet_windows_forget_geometrically(p in params(), start in prop::collection::vec(-1.0f64..1.0, 20), n in 1usize..30, dt in 1u64..50_000) {
        // Geometric forgetting needs zero inside the clip range.
        prop_assume!(p.s_max >= 0.0);
        let mut s = IntensitySurface::new(DIMS, &p, 0);
        s.values = Grid::from_vec(5, 4, start.iter().map(|v| v.clamp(p.s_min, p.s_max)).collect()).unwrap();
        let s0 = s.values.clone();
        let d = decay_factor(&p, dt);
        let quiet = pmat(DIMS, vec![0; 20]);
        for _ in 0..n {
            s = accumulate(&s, &quiet, &p, dt).unwrap();
        }
        let bound = d.powi(n as i32);
        for (a, b) in s.values.as_slice().iter().zip(s0.as_slice()) {
            prop_assert!(a.abs() <= b.abs() * bound * (1.0 + 1e-12) + 1e-300);
        }
    }
}

#[test]
fn single_step_by_hand() {
    let p = DecayParams::default();
    let s = IntensitySurface::new(DIMS, &p, 0);
    let mut v = vec![0; 20];
    v[0] = 1;
    v[1] = -2;
    v[2] = 10;
    let out = accumulate(&s, &pmat(DIMS, v), &p, 10_000).unwrap();
    // d = 1 - 1e-6 * 1e4 = 0.99
    assert!((*out.values.get(0, 0) - 0.2 * 0.99).abs() < 1e-15);
    assert!((*out.values.get(1, 0) + 0.4 * 0.99).abs() < 1e-15);
    assert_eq!(*out.values.get(2, 0), 1.0);
    assert_eq!(out.last_t, 10_000);
    let g = to_gray(&out, &p);
    // floor(255 * (0.198 + 1) / 2) = 152, floor(255 * 0.604 / 2) = 77
    assert_eq!(&g.pixels.as_slice()[..4], &[152, 77, 255, 127]);
}

#[test]
fn mismatched_dims_are_rejected() {
    let p = DecayParams::default();
    let s = IntensitySurface::new(DIMS, &p, 0);
    let other = pmat(SensorDims::new(4, 5), vec![0; 20]);
    assert!(accumulate(&s, &other, &p, 1).is_err());
}

#[test]
fn reset_every_restarts_from_initial_level() {
    let p = DecayParams::default();
    let mut rep = Representer::new(DIMS, p).unwrap().with_reset_every(Some(2));
    let ones = pmat(DIMS, vec![1; 20]);
    rep.step(&ones, 1000).unwrap();
    rep.step(&ones, 1000).unwrap();
    let two = *rep.surface().values.get(0, 0);
    rep.step(&ones, 1000).unwrap();
    let after_reset = *rep.surface().values.get(0, 0);
    assert!(two > after_reset);
    assert!((after_reset - 0.2 * decay_factor(&p, 1000)).abs() < 1e-15);
}

#[test]
fn invalid_params_are_rejected() {
    let bad = [
        DecayParams { s_min: 1.0, s_max: 1.0, ..Default::default() },
        DecayParams { k: -1.0, ..Default::default() },
        DecayParams { b: 0.0, ..Default::default() },
        DecayParams { c_thresh: f64::NAN, ..Default::default() },
    ];
    for p in bad {
        assert!(Representer::new(DIMS, p).is_err(), "{p:?}");
    }
}
