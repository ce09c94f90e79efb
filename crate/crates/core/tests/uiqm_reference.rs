//! UIQM against values frozen from the independent numpy/scipy implementation
//! in `oracles/uiqm_reference.py`.

mod common;

use seasynth::imagecore::color::{srgb_to_linear, BitDepth, SrgbImage};
use seasynth::metrics::{uiqm, uiqm_srgb, UiqmWeights};

const TOL: f64 = 1e-3;

fn assert_close(name: &str, got: f64, want: f64) {
    assert!((got - want).abs() <= TOL, "{name}: got {got}, reference {want}");
}

#[test]
fn checkerboard_matches_reference() {
    let u = uiqm_srgb(&common::checkerboard(), &UiqmWeights::default());
    assert_close("uicm", u.uicm, 24.613537598385);
    assert_close("uism", u.uism, 11.193267639600);
    assert_close("uiconm", u.uiconm, 0.211393432410);
    assert_close("uiqm", u.uiqm, 4.755268633142);
}

#[test]
fn lcg_texture_matches_reference() {
    let u = uiqm_srgb(&common::lcg_texture(), &UiqmWeights::default());
    assert_close("uicm", u.uicm, 17.027031954133);
    assert_close("uism", u.uism, 7.795552323734);
    assert_close("uiconm", u.uiconm, 0.155851537855);
    assert_close("uiqm", u.uiqm, 3.339404905599);
}

#[test]
fn linear_entry_point_reencodes_exactly() {
    let img = common::checkerboard();
    let a = uiqm_srgb(&img, &UiqmWeights::default());
    let b = uiqm(&srgb_to_linear(&img), &UiqmWeights::default());
    assert_eq!(a, b);
}

#[test]
fn constant_gray_is_zero() {
    let img = SrgbImage::new(16, 16, BitDepth::Eight, vec![128; 16 * 16 * 3]).unwrap();
    let u = uiqm_srgb(&img, &UiqmWeights::default());
    assert_eq!((u.uicm, u.uism, u.uiconm, u.uiqm), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn flips_do_not_change_uiqm() {
    for img in [common::checkerboard(), common::lcg_texture()] {
        let lin = srgb_to_linear(&img);
        let base = uiqm(&lin, &UiqmWeights::default()).uiqm;
        for flipped in [lin.flip_horizontal(), lin.flip_vertical()] {
            let f = uiqm(&flipped, &UiqmWeights::default()).uiqm;
            assert!((f - base).abs() < 1e-9, "{f} vs {base}");
        }
    }
}
