use lzagp::field::{default_cuts, delta_at, delta_field, level_lines, GridSpec, MaskReason};
use lzagp::AdiabaticParams;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

fn params(delta: f64, eta: f64) -> AdiabaticParams {
    AdiabaticParams::new(delta, eta).unwrap()
}

#[test]
fn default_grid_real_axis_and_timing() {
    let p = params(0.5, 1.0);
    let start = Instant::now();
    let f = delta_field(&p, &GridSpec::default(), &default_cuts(&p)).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    eprintln!("default grid: {elapsed:.2} s, {} masked", f.masked_count());
    assert_eq!(f.values.len(), 400 * 300);
    assert!(f.real_axis_max().unwrap() <= 1e-12);
    assert!(f.masked_count() > 0);
    assert!(f.mask.iter().all(|m| *m != Some(MaskReason::Unresolved)));
}

#[test]
fn refinement_agrees_on_shared_nodes() {
    let p = params(0.5, 0.5);
    let coarse = GridSpec {
        n_re: 41,
        n_im: 23,
        ..GridSpec::default()
    };
    let cuts = default_cuts(&p);
    let a = delta_field(&p, &coarse, &cuts).unwrap();
    let b = delta_field(&p, &coarse.refined(), &cuts).unwrap();
    assert!(a.max_refinement_difference(&b) <= 1e-8);
}

#[test]
fn small_eta_approaches_bare_field() {
    // away from the pole the AGP term is a small perturbation
    let (bare, dressed) = (params(0.5, 0.0), params(0.5, 1e-4));
    for z in [
        Complex64::new(0.4, 0.3),
        Complex64::new(-1.5, 1.2),
        Complex64::new(2.0, 2.0),
        Complex64::new(0.3, 0.7),
    ] {
        let d = (delta_at(&bare, z).unwrap() - delta_at(&dressed, z).unwrap()).abs();
        assert!(d < 1e-6, "{z}: {d}");
    }
}

#[test]
fn prongs_meet_at_the_crossing_point() {
    // without the AGP term Δ(i) = −π/2 and the level set of that value has
    // three prongs leaving i
    let p = params(0.5, 0.0);
    assert!((delta_at(&p, Complex64::new(0.0, 0.999_999)).unwrap() + FRAC_PI_2).abs() < 1e-8);
    let spec = GridSpec {
        re_range: (-1.0, 1.0),
        im_range: (0.0, 2.0),
        n_re: 101,
        n_im: 101,
    };
    let f = delta_field(&p, &spec, &default_cuts(&p)).unwrap();
    let sets = level_lines(&f, &[-FRAC_PI_2]);
    // the two lower prongs join at i into one line spanning the window
    let through_i = sets[0]
        .polylines
        .iter()
        .find(|l| l.iter().any(|[x, y]| x.hypot(y - 1.0) < 0.03))
        .expect("a level line through i");
    assert!(through_i.iter().any(|[x, _]| *x < -0.5));
    assert!(through_i.iter().any(|[x, _]| *x > 0.5));
    assert!(through_i.iter().all(|[_, y]| *y <= 1.0 + 1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conjugate_symmetry(re in -2.0f64..2.0, im in 0.05f64..0.8, eta in 0.0f64..1.0) {
        // below the lowest branch point the ray never meets a cut
        let p = params(0.5, eta);
        let z = Complex64::new(re, im);
        let (u, l) = (delta_at(&p, z).unwrap(), delta_at(&p, z.conj()).unwrap());
        prop_assert!((u + l).abs() < 1e-9);
    }
}

#[test]
fn doubling_path_sampling_changes_little() {
    let p = params(0.5, 1.0);
    let spec = GridSpec {
        n_re: 31,
        n_im: 17,
        ..GridSpec::default()
    };
    let cuts = default_cuts(&p);
    let a = delta_field(&p, &spec, &cuts).unwrap();
    let b = lzagp::field::delta_field_sampled(&p, &spec, &cuts, 128.0).unwrap();
    assert_eq!(a.mask, b.mask);
    let d = a.max_difference(&b);
    assert!(d <= 1e-8 && d > 0.0, "{d}");
}
