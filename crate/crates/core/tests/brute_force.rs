//! Exact-law quantities against direct sums over all `q^N` configurations.

use cwpotts::exact::{expect_u1, log_partition, magnetization_law};
use cwpotts::ModelSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Weight of every configuration, keyed by its color counts.
fn configuration_weights(spec: &ModelSpec, n: u32) -> HashMap<Vec<u32>, f64> {
    let q = spec.q as usize;
    let mut out: HashMap<Vec<u32>, f64> = HashMap::new();
    let mut sites = vec![0usize; n as usize];
    loop {
        let mut counts = vec![0u32; q];
        for &c in &sites {
            counts[c] += 1;
        }
        let nf = n as f64;
        let energy: f64 = spec.beta * nf * counts.iter().map(|&c| (c as f64 / nf).powi(spec.p as i32)).sum::<f64>()
            + spec.h * counts[0] as f64;
        *out.entry(counts).or_default() += energy.exp();
        // base-q odometer
        let mut i = 0;
        loop {
            if i == sites.len() {
                return out;
            }
            sites[i] += 1;
            if sites[i] < q {
                break;
            }
            sites[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn small_systems_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for q in [2u32, 3] {
        for n in 1..=8u32 {
            for _ in 0..3 {
                let p = rng.gen_range(2..=5);
                let beta = rng.gen_range(0.0..2.5);
                let h = rng.gen_range(0.0..1.5);
                let spec = ModelSpec::new(p, q, beta, h).unwrap();
                let weights = configuration_weights(&spec, n);
                let z: f64 = weights.values().sum();
                let got = log_partition(&spec, n).unwrap();
                assert!((got - z.ln()).abs() <= 1e-12 * z.ln().abs().max(1.0), "{spec:?} N={n}");

                let u1: f64 = weights.iter().map(|(c, w)| c[0] as f64 / n as f64 * w).sum::<f64>() / z;
                assert!((expect_u1(&spec, n).unwrap() - u1).abs() < 1e-12, "{spec:?} N={n}");

                let law = magnetization_law(&spec, n).unwrap();
                assert_eq!(law.len(), weights.len());
                for i in 0..law.len() {
                    let target = weights[law.composition(i)] / z;
                    assert!((law.log_prob(i).exp() - target).abs() < 1e-12, "{spec:?} N={n}");
                }
            }
        }
    }
}
