use std::ffi::{CStr, CString};
use std::ptr;

use evwave::event_io::write_binary;
use evwave::nn::{manifest::Manifest, repconv_forward_train, uniform_weights, ConvParams, RepConvParams, Tensor};
use evwave::{Event, Polarity, SensorDims};
use evwave_ffi::*;

fn last_error() -> String {
    let p = evw_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn null_pointers_are_reported() {
    let mut out = 0.0;
    let st = unsafe { evw_decay_factor(ptr::null(), 10, &mut out) };
    assert_eq!(st, EvwStatus::NullPointer);
    assert!(last_error().contains("params"));
    assert_eq!(unsafe { evw_events_len(ptr::null()) }, 0);
    unsafe {
        evw_events_free(ptr::null_mut());
        evw_representer_free(ptr::null_mut());
        evw_repconv_free(ptr::null_mut());
    }
}

#[test]
fn decay_factor_matches_core() {
    let p = evw_decay_params_default();
    let mut out = 0.0;
    assert_eq!(unsafe { evw_decay_factor(&p, 250_000, &mut out) }, EvwStatus::Ok);
    assert_eq!(out, 0.75);
    let bad = EvwDecayParams { s_min: 1.0, ..p };
    assert_eq!(unsafe { evw_decay_factor(&bad, 1, &mut out) }, EvwStatus::InvalidArgument);
}

#[test]
fn events_load_round_trip() {
    let dims = SensorDims::new(8, 4);
    let events =
        vec![Event::new(5, 1, 2, Polarity::On), Event::new(9, 7, 3, Polarity::Off), Event::new(9, 0, 0, Polarity::On)];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ev.bin");
    write_binary(std::fs::File::create(&path).unwrap(), dims, &events).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();

    let mut stream = ptr::null_mut();
    let st = unsafe { evw_events_load(cpath.as_ptr(), EvwFormat::Binary, 0, 0, false, &mut stream) };
    assert_eq!(st, EvwStatus::Ok);
    assert_eq!(unsafe { evw_events_len(stream) }, 3);
    let (mut w, mut h) = (0, 0);
    assert_eq!(unsafe { evw_events_dims(stream, &mut w, &mut h) }, EvwStatus::Ok);
    assert_eq!((w, h), (8, 4));

    let mut buf = [EvwEvent { t: 0, x: 0, y: 0, p: 0 }; 2];
    let mut n = 0;
    assert_eq!(unsafe { evw_events_copy(stream, 1, buf.as_mut_ptr(), 2, &mut n) }, EvwStatus::Ok);
    assert_eq!(n, 2);
    assert_eq!(buf[0], EvwEvent { t: 9, x: 7, y: 3, p: -1 });
    assert_eq!(buf[1], EvwEvent { t: 9, x: 0, y: 0, p: 1 });
    assert_eq!(unsafe { evw_events_copy(stream, 10, buf.as_mut_ptr(), 2, &mut n) }, EvwStatus::Ok);
    assert_eq!(n, 0);
    unsafe { evw_events_free(stream) };

    let missing = CString::new(dir.path().join("nope.bin").to_str().unwrap()).unwrap();
    let st = unsafe { evw_events_load(missing.as_ptr(), EvwFormat::Binary, 0, 0, false, &mut stream) };
    assert_eq!(st, EvwStatus::IoError);
    assert!(stream.is_null());

    std::fs::write(&path, "1,0,0,1\n2,0,0,7\n").unwrap();
    let st = unsafe { evw_events_load(cpath.as_ptr(), EvwFormat::Csv, 8, 4, false, &mut stream) };
    assert_eq!(st, EvwStatus::ParseError);
    std::fs::write(&path, "1,0,0,1\n").unwrap();
    let st = unsafe { evw_events_load(cpath.as_ptr(), EvwFormat::Csv, 0, 0, false, &mut stream) };
    assert_eq!(st, EvwStatus::InvalidArgument);
}

#[test]
fn representer_push_matches_core() {
    let params = evw_decay_params_default();
    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { evw_representer_new(3, 2, &params, &mut rep) }, EvwStatus::Ok);
    let evs = [EvwEvent { t: 1, x: 0, y: 0, p: 1 }, EvwEvent { t: 2, x: 2, y: 1, p: -1 }];
    let mut frame = [0u8; 6];
    let st = unsafe { evw_representer_push(rep, evs.as_ptr(), 2, 1000, frame.as_mut_ptr(), 6) };
    assert_eq!(st, EvwStatus::Ok);
    // S = clip(0.2 * 0.999) = 0.1998 -> floor(255 * 1.1998 / 2) = 152
    assert_eq!(frame, [152, 127, 127, 127, 127, 102]);

    let st = unsafe { evw_representer_push(rep, evs.as_ptr(), 2, 1000, frame.as_mut_ptr(), 5) };
    assert_eq!(st, EvwStatus::DimensionMismatch);
    let out_of_bounds = [EvwEvent { t: 1, x: 3, y: 0, p: 1 }];
    let st = unsafe { evw_representer_push(rep, out_of_bounds.as_ptr(), 1, 1000, ptr::null_mut(), 0) };
    assert_eq!(st, EvwStatus::ParseError);
    let bad_p = [EvwEvent { t: 1, x: 0, y: 0, p: 0 }];
    let st = unsafe { evw_representer_push(rep, bad_p.as_ptr(), 1, 1000, ptr::null_mut(), 0) };
    assert_eq!(st, EvwStatus::InvalidArgument);
    unsafe { evw_representer_free(rep) };
}

#[test]
fn wavelet_buffers() {
    let x: Vec<f64> = (0..24).map(|i| (i as f64 * 0.37).sin()).collect();
    let (mut ll, mut lh, mut hl, mut hh) = ([0.0; 6], [0.0; 6], [0.0; 6], [0.0; 6]);
    let st = unsafe { evw_dwt2d(x.as_ptr(), 6, 4, ll.as_mut_ptr(), lh.as_mut_ptr(), hl.as_mut_ptr(), hh.as_mut_ptr()) };
    assert_eq!(st, EvwStatus::Ok);
    let mut back = [0.0; 24];
    let st = unsafe { evw_idwt2d(ll.as_ptr(), lh.as_ptr(), hl.as_ptr(), hh.as_ptr(), 3, 2, back.as_mut_ptr()) };
    assert_eq!(st, EvwStatus::Ok);
    for (a, b) in x.iter().zip(&back) {
        assert!((a - b).abs() < 1e-12);
    }
    let mut pooled = [0.0; 6];
    assert_eq!(unsafe { evw_wavelet_pool(x.as_ptr(), 6, 4, pooled.as_mut_ptr()) }, EvwStatus::Ok);
    for (p, l) in pooled.iter().zip(&ll) {
        assert!((p - l).abs() < 1e-15);
    }
    // ll[0] = (x00 + x01 + x10 + x11) / 2
    assert!((ll[0] - (x[0] + x[1] + x[6] + x[7]) / 2.0).abs() < 1e-15);

    let st = unsafe { evw_wavelet_pool(x.as_ptr(), 5, 4, pooled.as_mut_ptr()) };
    assert_eq!(st, EvwStatus::DimensionMismatch, "{}", last_error());
}

#[test]
fn psnr_and_selection() {
    let a = [10u8, 20, 30, 40];
    let mut b = a;
    let mut out = 0.0;
    assert_eq!(unsafe { evw_psnr(a.as_ptr(), b.as_ptr(), 2, 2, &mut out) }, EvwStatus::Ok);
    assert_eq!(out, f64::INFINITY);
    b[0] = 12;
    assert_eq!(unsafe { evw_psnr(a.as_ptr(), b.as_ptr(), 2, 2, &mut out) }, EvwStatus::Ok);
    let expected = 10.0 * (255.0f64 * 255.0 / 1.0).log10();
    assert!((out - expected).abs() < 1e-12);

    let p = [0.3, 0.5, 1.0];
    let c = [0.0, 0.5, 0.5];
    let mut idx = [9usize; 3];
    assert_eq!(unsafe { evw_select_queries(p.as_ptr(), c.as_ptr(), 3, 3, idx.as_mut_ptr()) }, EvwStatus::Ok);
    assert_eq!(idx, [1, 0, 2]);
    let st = unsafe { evw_select_queries(p.as_ptr(), c.as_ptr(), 3, 4, idx.as_mut_ptr()) };
    assert_eq!(st, EvwStatus::InvalidArgument);
    let bad = [1.5, 0.5, 0.5];
    let st = unsafe { evw_select_queries(bad.as_ptr(), c.as_ptr(), 3, 1, idx.as_mut_ptr()) };
    assert_eq!(st, EvwStatus::InvalidArgument);
}

#[test]
fn repconv_from_manifest() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut b3 = ConvParams::zeros(4, 4, 3, 1).unwrap();
    b3.weight.data_mut().copy_from_slice(&uniform_weights(&mut rng, 144));
    b3.bias = uniform_weights(&mut rng, 4);
    let mut b1 = ConvParams::zeros(4, 4, 1, 1).unwrap();
    b1.weight.data_mut().copy_from_slice(&uniform_weights(&mut rng, 16));
    let rc = RepConvParams::new(b3, b1, Some(vec![1.0, 0.5, -0.25, 2.0])).unwrap();
    let mut m = Manifest::new();
    m.insert_repconv("block0", &rc).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weights.txt");
    std::fs::write(&path, m.to_text()).unwrap();

    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let prefix = CString::new("block0").unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { evw_repconv_load(cpath.as_ptr(), prefix.as_ptr(), &mut handle) }, EvwStatus::Ok);
    let (mut ci, mut co) = (0, 0);
    assert_eq!(unsafe { evw_repconv_channels(handle, &mut ci, &mut co) }, EvwStatus::Ok);
    assert_eq!((ci, co), (4, 4));

    let x = Tensor::from_fn([2, 4, 5, 6], |[b, c, y, x]| ((b * 7 + c * 5 + y * 3 + x) as f64 * 0.21).cos()).unwrap();
    let reference = repconv_forward_train(&x, &rc).unwrap();
    let mut train = vec![0.0; reference.data().len()];
    let mut deploy = train.clone();
    for (flag, buf) in [(false, &mut train), (true, &mut deploy)] {
        let st =
            unsafe { evw_repconv_forward(handle, flag, x.data().as_ptr(), 2, 4, 5, 6, buf.as_mut_ptr(), buf.len()) };
        assert_eq!(st, EvwStatus::Ok);
    }
    assert_eq!(train, reference.data());
    for (a, b) in deploy.iter().zip(reference.data()) {
        assert!((a - b).abs() <= 1e-12);
    }
    let st =
        unsafe { evw_repconv_forward(handle, true, x.data().as_ptr(), 2, 3, 5, 6, train.as_mut_ptr(), train.len()) };
    assert_eq!(st, EvwStatus::DimensionMismatch);
    unsafe { evw_repconv_free(handle) };

    let other = CString::new("block1").unwrap();
    let st = unsafe { evw_repconv_load(cpath.as_ptr(), other.as_ptr(), &mut handle) };
    assert_eq!(st, EvwStatus::InvalidArgument);
    assert!(last_error().contains("block1"));
}
