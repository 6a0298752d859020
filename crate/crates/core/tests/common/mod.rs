#![allow(dead_code)]

use fwsvm::data::Dataset;
use fwsvm::loss::{LossFamily, LossSpec};
use fwsvm::model::SparseVector;
use fwsvm::solver::DualState;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random non-increasing weights with a positive head and zero tail.
pub fn random_rho(rng: &mut TestRng, m: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..m - 1).map(|_| rng.random_range(0.0..1.0)).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    if rng.random_bool(0.3) {
        // Repeated levels, including interior zeros.
        for x in &mut w {
            *x = (*x * 3.0).round() / 3.0;
        }
    }
    w[0] += 0.1;
    w.push(0.0);
    w
}

pub fn random_spec(rng: &mut TestRng, family: LossFamily, m: usize) -> LossSpec {
    match family {
        LossFamily::MaxHinge => LossSpec::max_hinge(m).unwrap(),
        LossFamily::UnweightedTopK => LossSpec::top_k(m, rng.random_range(1..=m)).unwrap(),
        LossFamily::UnweightedUsunier => LossSpec::usunier(m, rng.random_range(1..=m)).unwrap(),
        LossFamily::WeightedTopK => LossSpec::weighted_top_k(random_rho(rng, m)).unwrap(),
        LossFamily::WeightedUsunier => LossSpec::weighted_usunier(random_rho(rng, m)).unwrap(),
    }
}

pub fn random_scores(rng: &mut TestRng, m: usize, scale: f64) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Dense random dataset with every class present.
pub fn random_dataset(rng: &mut TestRng, n: usize, d: usize, m: usize) -> Dataset {
    let features = (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            SparseVector::from_dense(&v).unwrap()
        })
        .collect();
    let labels = (0..n).map(|i| if i < m { i } else { rng.random_range(0..m) }).collect();
    let names = (1..=m).map(|j| j.to_string()).collect();
    Dataset::new(features, labels, d, names).unwrap()
}

/// The dual vertex `u = -∂Φ(s; y)` as a row.
pub fn vertex_at(spec: &LossSpec, s: &[f64], y: usize) -> Vec<f64> {
    spec.subgradient(s, y).unwrap().into_iter().map(|g| -g).collect()
}

/// A random feasible dual state: each row is a random convex combination of
/// vertices taken at random scores.
pub fn random_state(rng: &mut TestRng, data: &Dataset, spec: &LossSpec, lambda: f64) -> DualState {
    let n = data.len();
    let m = spec.classes();
    let mut alpha = Array2::zeros((n, m));
    for i in 0..n {
        let y = data.labels()[i];
        let parts = rng.random_range(1..=3);
        let mut weights: Vec<f64> = (0..parts).map(|_| rng.random_range(0.0..1.0)).collect();
        // Sub-stochastic mixtures include the origin vertex.
        let total: f64 = weights.iter().sum::<f64>() + rng.random_range(0.0..0.5);
        for w in &mut weights {
            *w /= total;
        }
        for w in weights {
            let s = random_scores(rng, m, 2.0);
            for (a, u) in alpha.row_mut(i).iter_mut().zip(vertex_at(spec, &s, y)) {
                *a += w * u;
            }
        }
    }
    DualState::from_alpha(data, alpha, lambda).unwrap()
}
