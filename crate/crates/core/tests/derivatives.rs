//! Analytic derivatives of `k` and `f` against Richardson-extrapolated
//! central differences of the next lower order.

use cwpotts::model::{f_deriv, k_deriv, negative_free_energy, x_of_s};
use cwpotts::ModelSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn richardson<F: Fn(f64) -> f64>(g: F, x: f64, step: f64) -> f64 {
    let d = |e: f64| (g(x + e) - g(x - e)) / (2.0 * e);
    (4.0 * d(step / 2.0) - d(step)) / 3.0
}

fn random_spec(rng: &mut ChaCha8Rng) -> ModelSpec {
    ModelSpec::new(rng.gen_range(2..=7), rng.gen_range(2..=6), rng.gen_range(0.05..2.0), rng.gen_range(0.0..1.0))
        .unwrap()
}

#[test]
fn f_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let spec = random_spec(&mut rng);
        let s = rng.gen_range(0.05..0.9);
        for order in 1..=5 {
            let fd = richardson(|x| f_deriv(&spec, x, order - 1).unwrap(), s, 1e-3);
            let exact = f_deriv(&spec, s, order).unwrap();
            let scale = exact.abs().max(f_deriv(&spec, s, order - 1).unwrap().abs()).max(1.0);
            assert!((fd - exact).abs() < 1e-6 * scale, "{spec:?} s={s} order {order}: {fd} vs {exact}");
        }
    }
}

#[test]
fn k_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let spec = random_spec(&mut rng);
        let x = rng.gen_range(0.1..0.95);
        for order in 1..=6 {
            let fd = richardson(|y| k_deriv(&spec, y, order - 1).unwrap(), x, 1e-3);
            let exact = k_deriv(&spec, x, order).unwrap();
            let scale = exact.abs().max(k_deriv(&spec, x, order - 1).unwrap().abs()).max(1.0);
            assert!((fd - exact).abs() < 1e-6 * scale, "{spec:?} x={x} order {order}: {fd} vs {exact}");
        }
    }
}

#[test]
fn f_is_h_on_the_ray() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..40 {
        let spec = random_spec(&mut rng);
        let s: f64 = rng.gen_range(0.0..0.99);
        let direct = negative_free_energy(&spec, &x_of_s(spec.q, s).unwrap()).unwrap();
        assert!((f_deriv(&spec, s, 0).unwrap() - direct).abs() < 1e-13 * direct.abs().max(1.0));
    }
}

#[test]
fn higher_derivatives_do_not_depend_on_h() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let spec = random_spec(&mut rng);
        let s = rng.gen_range(0.0..0.95);
        for order in 2..=6 {
            assert_eq!(f_deriv(&spec, s, order).unwrap(), f_deriv(&spec.with_h(0.0), s, order).unwrap());
        }
    }
}
