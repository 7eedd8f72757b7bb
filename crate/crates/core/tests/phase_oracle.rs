//! Phase-diagram quantities against brute-force grid searches and an
//! independent Newton solve for the special point.

use cwpotts::model::{f_deriv, negative_free_energy};
use cwpotts::phase::{classify_point, full_maximizer_set, PhaseStructure, PhaseTag, SpecialType, CLASS_TOL};
use cwpotts::{ModelSpec, ProbVector};

/// Max of `H` over the grid `{(i, j, M - i - j) / M}` and its argmax.
fn grid_max_q3(spec: &ModelSpec, m: usize) -> (f64, [f64; 3]) {
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    for i in 0..=m {
        for j in 0..=m - i {
            let v = [i as f64 / m as f64, j as f64 / m as f64, (m - i - j) as f64 / m as f64];
            let value = negative_free_energy(spec, &ProbVector::new(v.to_vec()).unwrap()).unwrap();
            if value > best.0 {
                best = (value, v);
            }
        }
    }
    best
}

/// Max of `f` over a uniform grid of `[0, 1)`, refined by a parabola.
fn ray_max(spec: &ModelSpec, cells: usize) -> f64 {
    let f = |s: f64| f_deriv(spec, s, 0).unwrap();
    let step = 1.0 / cells as f64;
    let (mut best, mut at) = (f(0.0), 0usize);
    for i in 1..cells {
        let v = f(i as f64 * step);
        if v > best {
            best = v;
            at = i;
        }
    }
    if at > 0 && at + 1 < cells {
        let (a, b, c) = (f((at - 1) as f64 * step), best, f((at + 1) as f64 * step));
        let curv = a - 2.0 * b + c;
        if curv < 0.0 {
            best -= (c - a) * (c - a) / (8.0 * curv);
        }
    }
    best
}

fn grid_beta_c(p: u32, q: u32) -> f64 {
    let gap = |beta: f64| {
        let spec = ModelSpec::new(p, q, beta, 0.0).unwrap();
        ray_max(&spec, 200_000) - f_deriv(&spec, 0.0, 0).unwrap()
    };
    let (mut lo, mut hi) = (0.01, 10.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 1e-13 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `f'' = f''' = 0` in `(beta, s)` by Newton from a starting guess.
fn newton_special(p: u32, q: u32, mut beta: f64, mut s: f64) -> (f64, f64, f64) {
    for _ in 0..100 {
        let spec = ModelSpec::new(p, q, beta, 0.0).unwrap();
        let g = [f_deriv(&spec, s, 2).unwrap(), f_deriv(&spec, s, 3).unwrap()];
        let db = 1e-7;
        let up = ModelSpec::new(p, q, beta + db, 0.0).unwrap();
        let jac = [
            [(f_deriv(&up, s, 2).unwrap() - g[0]) / db, f_deriv(&spec, s, 3).unwrap()],
            [(f_deriv(&up, s, 3).unwrap() - g[1]) / db, f_deriv(&spec, s, 4).unwrap()],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let d_beta = (g[0] * jac[1][1] - g[1] * jac[0][1]) / det;
        let d_s = (jac[0][0] * g[1] - jac[1][0] * g[0]) / det;
        beta -= d_beta;
        s -= d_s;
        if d_beta.abs() + d_s.abs() < 1e-15 {
            break;
        }
    }
    let spec = ModelSpec::new(p, q, beta, 0.0).unwrap();
    let h = -f_deriv(&spec, s, 1).unwrap() * q as f64 / (q as f64 - 1.0);
    (beta, h, s)
}

#[test]
fn beta_c_matches_grid_search() {
    for (p, q) in [(2, 3), (3, 2), (4, 3), (5, 2), (3, 4), (7, 5)] {
        let ps = PhaseStructure::compute(p, q).unwrap();
        let oracle = grid_beta_c(p, q);
        assert!((ps.beta_c - oracle).abs() < 1e-6, "({p},{q}): {} vs {oracle}", ps.beta_c);
    }
}

#[test]
fn two_state_quadratic_landmarks() {
    let ps = PhaseStructure::compute(2, 2).unwrap();
    assert!((ps.beta_c - 1.0).abs() < 1e-9);
    assert!((ps.special.beta_tilde - 1.0).abs() < 1e-9 && ps.special.h_tilde.abs() < 1e-9);
    for p in [3, 4] {
        let ps = PhaseStructure::compute(p, 2).unwrap();
        assert!((ps.special.beta_tilde - 2.0 / 3.0).abs() < 1e-9, "p={p}");
        assert!(ps.special.h_tilde.abs() < 1e-9);
    }
    assert_eq!(PhaseStructure::compute(4, 2).unwrap().special.kind, SpecialType::II);
}

#[test]
fn special_points_solve_the_flatness_equations() {
    for (p, q, guess) in [(4, 3, (0.78, 0.6)), (7, 5, (0.42, 0.8)), (3, 3, (0.9, 0.5))] {
        let ps = PhaseStructure::compute(p, q).unwrap();
        let (beta, h, s) = newton_special(p, q, guess.0, guess.1);
        assert!((ps.special.beta_tilde - beta).abs() < 1e-8, "({p},{q}) beta {} vs {beta}", ps.special.beta_tilde);
        assert!((ps.special.h_tilde - h).abs() < 1e-8, "({p},{q}) h {} vs {h}", ps.special.h_tilde);
        assert!((ps.special.s_pq - s).abs() < 1e-6, "({p},{q}) s {} vs {s}", ps.special.s_pq);
        let spec = ModelSpec::new(p, q, beta, h).unwrap();
        let class = classify_point(&spec, CLASS_TOL);
        assert!(class.tag.is_special(), "({p},{q}) classified {:?}", class.tag);
    }
}

#[test]
fn maximizers_agree_with_simplex_grid() {
    let points = [(2, 1.5, 0.2), (3, 1.0, 0.0), (4, 1.3, 0.1), (4, 0.5, 0.8), (2, 2.5, 0.0), (5, 2.0, 0.4)];
    let m = 600;
    for (p, beta, h) in points {
        let spec = ModelSpec::new(p, 3, beta, h).unwrap();
        let set = full_maximizer_set(&spec);
        let (grid_value, grid_arg) = grid_max_q3(&spec, m);
        let top = negative_free_energy(&spec, &set.vectors[0]).unwrap();
        for v in &set.vectors {
            let value = negative_free_energy(&spec, v).unwrap();
            assert!((value - top).abs() < 1e-12);
        }
        assert!(top >= grid_value - 1e-12, "{spec:?}: grid beats solver");
        assert!(top - grid_value < 1e-4, "{spec:?}: {top} vs grid {grid_value}");
        let nearest = set
            .vectors
            .iter()
            .map(|v| v.as_slice().iter().zip(&grid_arg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 5.0 / m as f64, "{spec:?}: grid argmax {grid_arg:?} far from {:?}", set.vectors);
    }
}

#[test]
fn zero_field_ordered_phase_is_weakly_critical() {
    let spec = ModelSpec::new(2, 3, 3.0, 0.0).unwrap();
    let class = classify_point(&spec, CLASS_TOL);
    assert_eq!(class.tag, PhaseTag::WeaklyCritical);
    assert_eq!(class.witness.s_values.len(), 1);
    assert_eq!(class.witness.vectors.len(), 3);
}

#[test]
fn curve_points_are_ties() {
    let ps = PhaseStructure::compute(4, 3).unwrap();
    for sample in ps.curve(25).unwrap() {
        let spec = ModelSpec::new(4, 3, sample.beta, sample.h).unwrap();
        let lo = f_deriv(&spec, sample.s_low, 0).unwrap();
        let hi = f_deriv(&spec, sample.s_high, 0).unwrap();
        assert!((lo - hi).abs() < 1e-10, "{sample:?}");
        assert!(f_deriv(&spec, sample.s_low, 1).unwrap().abs() < 1e-8);
        assert!(f_deriv(&spec, sample.s_high, 1).unwrap().abs() < 1e-8);
    }
}

#[test]
fn curve_7_5_endpoints() {
    let ps = PhaseStructure::compute(7, 5).unwrap();
    let curve = ps.curve(1000).unwrap();
    assert!((curve[0].beta - ps.beta_c).abs() < 1e-8);
    let (beta, _, _) = newton_special(7, 5, 0.42, 0.8);
    assert!((ps.special.beta_tilde - beta).abs() < 1e-8);
    let gap = (curve.last().unwrap().beta - beta).abs();
    assert!(gap < 1e-4, "terminal beta gap {gap:e}");
}
