//! Acceptance run: one PASS/FAIL line per criterion with the measured value,
//! its tolerance and the runtime against its budget. Exits nonzero when any
//! criterion fails.

use cwpotts::exact::{
    expect_u1, expect_up, log_partition, log_tail_prob, magnetization_law, tail_prob, FieldProfile,
};
use cwpotts::inference::{ci_h_from, mle_h_with};
use cwpotts::limits::{
    bhat_limit, gaussian_limit_regular, hhat_limit, ks_distance, mixture_weights, norm_p_limit,
    norm_p_limit_conditional, quartic_law, rank_of, sextic_law, ScalarLaw, VectorLaw,
};
use cwpotts::model::f_deriv;
use cwpotts::phase::{
    classify_point, compute_beta_c, compute_special_point, PhaseStructure, PhaseTag, PointClass, SnapTarget,
    SpecialType, CLASS_TOL,
};
use cwpotts::sampler::{dot, exact_sample, rescale};
use cwpotts::ModelSpec;
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

/// Measured value, the tolerance it is judged against, and the verdict.
struct Outcome {
    measured: f64,
    tolerance: String,
    pass: bool,
}

impl Outcome {
    fn at_most(measured: f64, tol: f64) -> Self {
        Outcome { measured, tolerance: format!("<= {tol:e}"), pass: measured <= tol }
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

const FIG1: (u32, u32, f64, f64) = (4, 3, 0.616, 0.67);

fn fig1_spec() -> ModelSpec {
    ModelSpec::new(FIG1.0, FIG1.1, FIG1.2, FIG1.3).unwrap()
}

fn landmarks() -> Outcome {
    let sp = compute_special_point(4, 2).unwrap();
    let mut err = (sp.beta_tilde - 2.0 / 3.0).abs().max(sp.h_tilde.abs());
    let mut ok = sp.kind == SpecialType::II;
    for p in 2..=4u32 {
        let expected = 2f64.powi(p as i32 - 1) / (p * (p - 1)) as f64;
        err = err.max((compute_beta_c(p, 2).unwrap() - expected).abs());
    }
    ok &= err <= 1e-8;
    Outcome { measured: err, tolerance: "<= 1e-8, type II".into(), pass: ok }
}

fn phase_7_5() -> Outcome {
    let ps = PhaseStructure::compute(7, 5).unwrap();
    let curve = ps.curve(1000).unwrap();
    let decreasing = curve.windows(2).all(|w| w[1].h > w[0].h && w[1].beta < w[0].beta);
    let start = (curve[0].beta - ps.beta_c).abs();
    let end = (curve.last().unwrap().beta - ps.special.beta_tilde).abs();
    let pass = ps.beta_c.is_finite()
        && ps.special.h_tilde > 0.0
        && ps.special.kind == SpecialType::I
        && curve.len() >= 100
        && decreasing
        && curve[0].h == 0.0
        && start <= 1e-6
        && end <= 1e-3;
    Outcome { measured: end, tolerance: format!("terminal gap <= 1e-3, start gap {start:.1e} <= 1e-6"), pass }
}

/// `log Z` by summing over every one of the `q^N` colorings.
fn brute_log_partition(spec: &ModelSpec, n: u32) -> f64 {
    let q = spec.q as usize;
    let total = q.pow(n);
    let nf = n as f64;
    let mut z = 0.0;
    for code in 0..total {
        let mut counts = vec![0u32; q];
        let mut c = code;
        for _ in 0..n {
            counts[c % q] += 1;
            c /= q;
        }
        let energy = spec.beta * nf * counts.iter().map(|&k| (k as f64 / nf).powi(spec.p as i32)).sum::<f64>()
            + spec.h * counts[0] as f64;
        z += energy.exp();
    }
    z.ln()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for q in [2u32, 3] {
        for n in 1..=8u32 {
            for _ in 0..5 {
                let p = rng.gen_range(2..=5);
                let spec = ModelSpec::new(p, q, rng.gen_range(0.0..2.0), rng.gen_range(0.0..1.0)).unwrap();
                let brute = brute_log_partition(&spec, n);
                let got = log_partition(&spec, n).unwrap();
                worst = worst.max((got - brute).abs() / brute.abs());
            }
        }
    }
    Outcome::at_most(worst, 1e-12)
}

fn monotone_likelihood() -> Outcome {
    let n = 200;
    let betas = [0.3, 0.7, 1.1, 1.5, 1.9];
    // at h = 0 the first coordinate has mean 1/q for every beta, so the grid starts above 0
    let hs = [0.2, 0.4, 0.6, 0.8, 1.0];
    let mut min_step = f64::INFINITY;
    for p in [2u32, 4] {
        let table: Vec<Vec<(f64, f64)>> = betas
            .iter()
            .map(|&b| {
                hs.iter()
                    .map(|&h| {
                        let spec = ModelSpec::new(p, 3, b, h).unwrap();
                        (expect_u1(&spec, n).unwrap(), expect_up(&spec, n).unwrap())
                    })
                    .collect()
            })
            .collect();
        for i in 0..5 {
            for j in 0..5 {
                if i + 1 < 5 {
                    min_step = min_step.min(table[i + 1][j].0 - table[i][j].0).min(table[i + 1][j].1 - table[i][j].1);
                }
                if j + 1 < 5 {
                    min_step = min_step.min(table[i][j + 1].0 - table[i][j].0).min(table[i][j + 1].1 - table[i][j].1);
                }
            }
        }
    }
    Outcome { measured: min_step, tolerance: "smallest grid increment > 0".into(), pass: min_step > 0.0 }
}

fn derivative_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let spec = ModelSpec::new(rng.gen_range(2..=7), rng.gen_range(2..=6), rng.gen_range(0.05..2.0), rng.gen_range(0.0..1.0))
            .unwrap();
        let s = rng.gen_range(0.05..0.9);
        for order in 1..=5 {
            let lower = |x: f64| f_deriv(&spec, x, order - 1).unwrap();
            let d = |e: f64| (lower(s + e) - lower(s - e)) / (2.0 * e);
            let fd = (4.0 * d(5e-4) - d(1e-3)) / 3.0;
            let exact = f_deriv(&spec, s, order).unwrap();
            worst = worst.max((fd - exact).abs() / exact.abs().max(1.0));
        }
    }
    Outcome::at_most(worst, 1e-6)
}

fn sigma_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut found, mut worst, mut ok) = (0, 0.0f64, true);
    while found < 20 {
        let spec = ModelSpec::new(rng.gen_range(2..=6), rng.gen_range(2..=5), rng.gen_range(0.05..2.5), rng.gen_range(0.05..1.5))
            .unwrap();
        let class = classify_point(&spec, CLASS_TOL);
        if class.tag != PhaseTag::Regular {
            continue;
        }
        found += 1;
        let VectorLaw::GaussianSimplex(g) = gaussian_limit_regular(&class, 0.0, 0.0).unwrap() else {
            return Outcome { measured: f64::NAN, tolerance: "Gaussian law".into(), pass: false };
        };
        let q = spec.q as usize;
        for r in 0..q {
            worst = worst.max((0..q).map(|c| g.cov[(r, c)]).sum::<f64>().abs());
        }
        let smallest = SymmetricEigen::new(g.cov.clone()).eigenvalues.min();
        ok &= smallest >= -1e-10 && rank_of(&g.cov) == q - 1;
    }
    Outcome { measured: worst, tolerance: "row sums <= 1e-12, PSD, rank q-1".into(), pass: ok && worst <= 1e-12 }
}

fn clt_projection() -> Outcome {
    let spec = fig1_spec();
    let n = 1000;
    let class = classify_point(&spec, CLASS_TOL);
    let xs = exact_sample(&magnetization_law(&spec, n).unwrap(), 20_000, 7);
    let v = [0.157, 0.396, 0.323];
    let proj: Vec<f64> = rescale(&xs, n, &class).unwrap().iter().map(|r| dot(&r.w, &v)).collect();
    let law = gaussian_limit_regular(&class, 0.0, 0.0).unwrap().projection(&v).unwrap();
    let mut out = Outcome::at_most(ks_distance(&proj, &law).unwrap(), 0.02);
    out.pass &= class.tag == PhaseTag::Regular;
    out
}

fn mixture_basins() -> Outcome {
    let ps = PhaseStructure::compute(4, 3).unwrap();
    let Some((beta, h, SnapTarget::CriticalCurve)) = ps.snap(0.965, 0.2, 1e-3).unwrap() else {
        return Outcome { measured: f64::NAN, tolerance: "snaps to the critical curve".into(), pass: false };
    };
    let spec = ModelSpec::new(4, 3, beta, h).unwrap();
    let class = classify_point(&spec, CLASS_TOL);
    let weights = mixture_weights(&class).unwrap();
    let law = magnetization_law(&spec, 800).unwrap();
    let mut mass = vec![0.0; weights.len()];
    for i in 0..law.len() {
        let x = law.magnetization(i);
        let dist = |k: usize| -> f64 {
            class.witness.vectors[k].as_slice().iter().zip(x.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum()
        };
        let nearest = (0..weights.len()).min_by(|&a, &b| dist(a).total_cmp(&dist(b))).unwrap();
        mass[nearest] += law.log_prob(i).exp();
    }
    let err = weights.iter().zip(&mass).map(|(w, m)| (w - m).abs()).fold(0.0, f64::max);
    let mut out = Outcome::at_most(err, 0.02);
    out.pass &= class.tag == PhaseTag::StronglyCritical;
    out
}

fn type2_scaling() -> Outcome {
    let spec = ModelSpec::new(4, 2, 2.0 / 3.0, 0.0).unwrap();
    let n = 4000;
    let xs = exact_sample(&magnetization_law(&spec, n).unwrap(), 20_000, 9);
    let scale = (n as f64).powf(1.0 / 6.0);
    let y: Vec<f64> = xs.iter().map(|x| scale * (x[1] - 0.5)).collect();
    let mut out = Outcome::at_most(ks_distance(&y, &sextic_law(0.0).unwrap()).unwrap(), 0.05);
    out.pass &= classify_point(&spec, CLASS_TOL).tag == PhaseTag::SpecialTypeII;
    out
}

fn special_class(p: u32, q: u32, beta: f64, h: f64, tol: f64) -> Option<PointClass> {
    let ps = PhaseStructure::compute(p, q).unwrap();
    match ps.snap(beta, h, tol).unwrap() {
        Some((b, hh, SnapTarget::SpecialPoint)) => Some(classify_point(&ModelSpec::new(p, q, b, hh).unwrap(), CLASS_TOL)),
        _ => None,
    }
}

fn type1_scaling() -> Outcome {
    let Some(class) = special_class(4, 3, 0.778, 0.485, 2e-3) else {
        return Outcome { measured: f64::NAN, tolerance: "snaps to the special point".into(), pass: false };
    };
    let spec = ModelSpec::new(4, 3, 0.778, 0.485).unwrap();
    let n = 1000;
    let xs = exact_sample(&magnetization_law(&spec, n).unwrap(), 20_000, 10);
    let t: Vec<f64> = rescale(&xs, n, &class).unwrap().iter().map(|r| r.t_n).collect();
    let mut out = Outcome::at_most(ks_distance(&t, &quartic_law(&class, 0.0, 0.0).unwrap()).unwrap(), 0.05);
    out.pass &= class.tag == PhaseTag::SpecialTypeI;
    out
}

fn estimator_coverage() -> Outcome {
    let spec = fig1_spec();
    let n = 1000;
    let class = classify_point(&spec, CLASS_TOL);
    let ScalarLaw::Normal { sd: theory, .. } = hhat_limit(&class).unwrap() else {
        return Outcome { measured: f64::NAN, tolerance: "normal limit".into(), pass: false };
    };
    let profile = FieldProfile::new(&spec, n).unwrap();
    let data = exact_sample(&magnetization_law(&spec, n).unwrap(), 500, 11);
    let mut scaled = Vec::with_capacity(data.len());
    let mut covered = 0usize;
    for x in &data {
        let est = mle_h_with(&profile, x[0]).unwrap();
        scaled.push((n as f64).sqrt() * (est.estimate - spec.h));
        if ci_h_from(&spec, est.estimate, x, n, 0.05).unwrap().contains(spec.h) {
            covered += 1;
        }
    }
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    let sd = (scaled.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / (scaled.len() - 1) as f64).sqrt();
    let rel = (sd / theory - 1.0).abs();
    let coverage = covered as f64 / data.len() as f64;
    Outcome {
        measured: rel,
        tolerance: format!("sd rel err <= 0.15, coverage {coverage:.3} in [0.92, 0.98]"),
        pass: rel <= 0.15 && (0.92..=0.98).contains(&coverage),
    }
}

fn tail_decay() -> Outcome {
    let spec = fig1_spec();
    let ns = [100u32, 200, 400];
    let probs: Vec<f64> = ns.iter().map(|&n| tail_prob(&spec, n, 0.1).unwrap()).collect();
    let logs: Vec<f64> = ns.iter().map(|&n| log_tail_prob(&spec, n, 0.1).unwrap()).collect();
    let first = (logs[1] - logs[0]) / 100.0;
    let second = (logs[2] - logs[1]) / 200.0;
    let ratio = first.max(second) / first.min(second);
    let pass = probs[1] < probs[0] && probs[2] < probs[1] && first < 0.0 && second < 0.0 && ratio <= 2.0;
    Outcome { measured: ratio, tolerance: format!("slope ratio <= 2, slopes {first:.4} {second:.4}"), pass }
}

fn law_sanity() -> Outcome {
    let mut laws: Vec<(String, ScalarLaw)> = Vec::new();
    let mut push = |name: &str, law: cwpotts::Result<ScalarLaw>| laws.push((name.to_string(), law.unwrap()));
    let fig1 = classify_point(&fig1_spec(), CLASS_TOL);
    push("hhat regular", hhat_limit(&fig1));
    push("bhat regular", bhat_limit(&fig1));
    push("norm regular", norm_p_limit(&fig1, 0.5));
    let uniform = classify_point(&ModelSpec::new(3, 3, 0.3, 0.0).unwrap(), CLASS_TOL);
    push("bhat uniform", bhat_limit(&uniform));
    push("norm uniform", norm_p_limit(&uniform, 0.0));
    let type1 = special_class(4, 3, 0.778, 0.485, 2e-3).expect("special point");
    push("G1", hhat_limit(&type1));
    push("L1", bhat_limit(&type1));
    push("quartic", quartic_law(&type1, 0.3, -0.2));
    push("norm type I", norm_p_limit(&type1, 0.0));
    let type2 = classify_point(&ModelSpec::new(4, 2, 2.0 / 3.0, 0.0).unwrap(), CLASS_TOL);
    push("G2", hhat_limit(&type2));
    push("bhat type II", bhat_limit(&type2));
    push("norm type II", norm_p_limit(&type2, 0.0));
    push("sextic", sextic_law(0.4));
    let small = classify_point(&ModelSpec::new(3, 2, 2.0 / 3.0, 0.0).unwrap(), CLASS_TOL);
    push("bhat small type I", bhat_limit(&small));
    push("norm small type I", norm_p_limit(&small, 0.0));
    let ps = PhaseStructure::compute(4, 3).unwrap();
    let curve = ps.phi(0.2).unwrap();
    let strong = classify_point(&ModelSpec::new(4, 3, curve.beta, 0.2).unwrap(), CLASS_TOL);
    push("hhat strongly critical", hhat_limit(&strong));
    push("bhat strongly critical", bhat_limit(&strong));
    push("norm strongly critical", norm_p_limit_conditional(&strong, 0, 0.0));
    let at_beta_c = classify_point(&ModelSpec::new(4, 3, ps.beta_c, 0.0).unwrap(), CLASS_TOL);
    push("hhat beta_c", hhat_limit(&at_beta_c));
    push("bhat beta_c", bhat_limit(&at_beta_c));
    let weak = classify_point(&ModelSpec::new(2, 3, 3.0, 0.0).unwrap(), CLASS_TOL);
    push("hhat weakly critical", hhat_limit(&weak));
    push("bhat weakly critical", bhat_limit(&weak));

    let mut worst_mass = 0.0f64;
    let mut worst_weight = 0.0f64;
    let mut monotone = true;
    for (name, law) in &laws {
        worst_mass = worst_mass.max((law.total_mass() - 1.0).abs());
        if let ScalarLaw::Mixture(m) = law {
            worst_weight = worst_weight.max((m.total_weight() - 1.0).abs());
        }
        if matches!(name.as_str(), "G1" | "G2" | "L1") {
            let (lo, hi) = law.range();
            let values: Vec<f64> = (0..200).map(|i| law.cdf(lo + (hi - lo) * i as f64 / 199.0)).collect();
            monotone &= values.windows(2).all(|w| w[1] >= w[0]);
        }
    }
    Outcome {
        measured: worst_mass,
        tolerance: format!("mass <= 1e-8, mixture weights {worst_weight:.1e} <= 1e-12, G1/G2/L1 monotone"),
        pass: worst_mass <= 1e-8 && worst_weight <= 1e-12 && monotone,
    }
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "landmark exactness", budget: Duration::from_secs(1), run: landmarks },
        Criterion { id: 2, name: "phase structure (7,5)", budget: Duration::from_secs(30), run: phase_7_5 },
        Criterion { id: 3, name: "oracle equivalence", budget: Duration::from_secs(10), run: oracle_equivalence },
        Criterion { id: 4, name: "monotone likelihood", budget: Duration::from_secs(20), run: monotone_likelihood },
        Criterion { id: 5, name: "derivative suite", budget: Duration::from_secs(1), run: derivative_suite },
        Criterion { id: 6, name: "sigma properties", budget: Duration::from_secs(1), run: sigma_properties },
        Criterion { id: 7, name: "CLT projection", budget: Duration::from_secs(120), run: clt_projection },
        Criterion { id: 8, name: "mixture weights", budget: Duration::from_secs(60), run: mixture_basins },
        Criterion { id: 9, name: "type II scaling", budget: Duration::from_secs(120), run: type2_scaling },
        Criterion { id: 10, name: "type I scaling", budget: Duration::from_secs(120), run: type1_scaling },
        Criterion { id: 11, name: "estimator coverage", budget: Duration::from_secs(600), run: estimator_coverage },
        Criterion { id: 12, name: "tail decay", budget: Duration::from_secs(60), run: tail_decay },
        Criterion { id: 13, name: "law sanity", budget: Duration::from_secs(60), run: law_sanity },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run));
        let elapsed = start.elapsed();
        let line = match result {
            Ok(out) => {
                let pass = out.pass && elapsed <= c.budget;
                if !pass {
                    failures += 1;
                }
                format!(
                    "{} AC{:<2} {:<22} measured={:.6e} tol {} time={:.2}s limit={}s",
                    if pass { "PASS" } else { "FAIL" },
                    c.id,
                    c.name,
                    out.measured,
                    out.tolerance,
                    elapsed.as_secs_f64(),
                    c.budget.as_secs()
                )
            }
            Err(_) => {
                failures += 1;
                format!("FAIL AC{:<2} {:<22} panicked time={:.2}s", c.id, c.name, elapsed.as_secs_f64())
            }
        };
        println!("{line}");
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
