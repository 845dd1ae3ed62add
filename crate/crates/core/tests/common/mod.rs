//! Independent oracles computed straight from definitions, by enumeration.
#![allow(dead_code)]

use kcsp::fourier::TableFunction;
use kcsp::numeric::{decode_index, rng_from_seed};
use rand::Rng;

pub fn random_table(n: usize, r: usize, seed: u64) -> TableFunction {
    let mut rng = rng_from_seed(seed);
    TableFunction::from_fn(n, r, |_| rng.gen_range(-1.0..1.0)).unwrap()
}

pub fn points(n: usize, r: usize) -> Vec<Vec<usize>> {
    let len = r.pow(n as u32);
    (0..len)
        .map(|idx| {
            let mut x = vec![0; n];
            decode_index(idx, r, &mut x);
            x
        })
        .collect()
}

/// `Pr[y | x]` when each coordinate is kept with probability `rho` and
/// otherwise redrawn uniformly.
pub fn transition(x: &[usize], y: &[usize], rho: f64, r: usize) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            if a == b {
                rho + (1.0 - rho) / r as f64
            } else {
                (1.0 - rho) / r as f64
            }
        })
        .product()
}

/// `E_{y ~ rho x}[f(y)]` by summing over every `y`.
pub fn noise_oracle(f: &TableFunction, rho: f64, x: &[usize]) -> f64 {
    points(f.n(), f.r())
        .iter()
        .enumerate()
        .map(|(idx, y)| transition(x, y, rho, f.r()) * f.values()[idx])
        .sum()
}

/// `E_x[Var_{x_i}[f(x)]]`.
pub fn influence_oracle(f: &TableFunction, i: usize) -> f64 {
    let (n, r) = (f.n(), f.r());
    let pts = points(n, r);
    let stride = r.pow((n - 1 - i) as u32);
    let mut total = 0.0;
    let mut count = 0;
    for (idx, x) in pts.iter().enumerate() {
        if x[i] != 0 {
            continue;
        }
        let vals: Vec<f64> = (0..r).map(|a| f.values()[idx + a * stride]).collect();
        let mean = vals.iter().sum::<f64>() / r as f64;
        total += vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / r as f64;
        count += 1;
    }
    total / count as f64
}

/// Acceptance of the dictator test for `f` (given as a table over `[R]^n`)
/// by summing over `z`, every query point and every shift.
pub fn dictator_test_oracle(table: &[usize], n: usize, r: usize, k: usize, rho: f64) -> f64 {
    let pts = points(n, r);
    let pz = 1.0 / pts.len() as f64;
    let mut total = 0.0;
    for z in &pts {
        // law of the shifted answer f_c(x) for one query
        let mut answer = vec![0.0; r];
        for x in &pts {
            let p = transition(z, x, rho, r);
            for c in 0..r {
                let shifted: Vec<usize> = x.iter().map(|&v| (v + c) % r).collect();
                let sidx = shifted.iter().fold(0, |acc, &v| acc * r + v);
                answer[(table[sidx] + r - c) % r] += p / r as f64;
            }
        }
        total += pz * answer.iter().map(|a| a.powi(k as i32)).sum::<f64>();
    }
    total
}
