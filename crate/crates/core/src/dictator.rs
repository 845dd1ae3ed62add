//! The k-query Dictator-vs.-Quasirandom test for `f: [R]^n -> [R]`.
//!
//! Pick `z` uniformly, independent `ρ`-correlated copies `x^{(1..k)}` of `z`
//! and independent uniform shifts `c_1..c_k`; accept iff all
//! `f_{c_j}(x^{(j)})` agree, where `f_c(x) = f(x + c·1) - c (mod R)`.
//! The acceptance probability equals `sum_i E_z[(T_ρ g^i(z))^k]` with
//! `g^i = E_c[1{f_c = i}]`, which is how [`run_test_exact`] computes it.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_budget, invalid, Result};
use crate::fourier::{noise_sample, transform, Basis, TableFunction};
use crate::numeric::{checked_pow, decode_index, derive_seed, encode_index, fsum, rng_from_seed, Estimate};
use crate::params::{default_degree, default_log_delta, default_rho, LogThreshold};

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_DICTATOR_BUDGET: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestParams {
    pub k: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub rho: f64,
    pub d: usize,
    /// `ln δ`.
    pub log_delta: LogThreshold,
    pub trials: u64,
    pub seed: u64,
    pub budget: u64,
}

impl TestParams {
    pub fn new(k: usize, r: usize) -> Result<Self> {
        if k < 2 || r < 2 {
            return invalid(format!("need k >= 2 and R >= 2, got k={k}, R={r}"));
        }
        Ok(Self {
            k,
            r,
            rho: default_rho(k, r),
            d: default_degree(k, r),
            log_delta: LogThreshold::from_ln(default_log_delta(k, r)),
            trials: DEFAULT_TRIALS,
            seed: 0,
            budget: DEFAULT_DICTATOR_BUDGET,
        })
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return invalid(format!("rho must lie in [0, 1], got {rho}"));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn with_trials(mut self, trials: u64, seed: u64) -> Self {
        self.trials = trials;
        self.seed = seed;
        self
    }
}

/// A function `[R]^n -> [R]` as a dense row-major table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RFunction {
    pub n: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub table: Vec<usize>,
}

impl RFunction {
    pub fn new(n: usize, r: usize, table: Vec<usize>) -> Result<Self> {
        let f = Self { n, r, table };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return invalid(format!("R must be at least 2, got {}", self.r));
        }
        if checked_pow(self.r, self.n) != Some(self.table.len()) {
            return invalid(format!(
                "table has {} entries, expected R^n = {}^{}",
                self.table.len(),
                self.r,
                self.n
            ));
        }
        if let Some(bad) = self.table.iter().find(|&&v| v >= self.r) {
            return invalid(format!("table: value {bad} outside 0..{}", self.r));
        }
        Ok(())
    }

    pub fn from_fn(n: usize, r: usize, mut f: impl FnMut(&[usize]) -> usize) -> Result<Self> {
        let len = checked_pow(r, n).ok_or_else(|| crate::Error::Validation("R^n overflows".into()))?;
        let mut x = vec![0usize; n];
        let table = (0..len)
            .map(|idx| {
                decode_index(idx, r, &mut x);
                f(&x)
            })
            .collect();
        Self::new(n, r, table)
    }

    /// `x ↦ x_j`.
    pub fn dictator(n: usize, r: usize, j: usize) -> Result<Self> {
        if j >= n {
            return invalid(format!("dictator coordinate {j} out of range 0..{n}"));
        }
        Self::from_fn(n, r, |x| x[j])
    }

    pub fn constant(n: usize, r: usize, c: usize) -> Result<Self> {
        Self::from_fn(n, r, |_| c)
    }

    /// Uniformly random table.
    pub fn random(n: usize, r: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        Self::from_fn(n, r, |_| rng.gen_range(0..r))
    }

    /// A random table accessed through folding: `t(x - x_0·1) + x_0`, which
    /// is balanced.
    pub fn folded_random(n: usize, r: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return invalid("folding needs n >= 1");
        }
        let raw = Self::random(n, r, seed)?;
        Self::from_fn(n, r, |x| {
            let shift = x[0];
            let rep = x.iter().fold(0, |acc, &xi| acc * r + (xi + r - shift) % r);
            (raw.table[rep] + shift) % r
        })
    }

    /// Most frequent coordinate value, smallest on ties.
    pub fn plurality(n: usize, r: usize) -> Result<Self> {
        Self::from_fn(n, r, |x| {
            let mut counts = vec![0usize; r];
            x.iter().for_each(|&v| counts[v] += 1);
            let max = counts.iter().copied().max().unwrap_or(0);
            counts.iter().position(|&c| c == max).unwrap_or(0)
        })
    }

    pub fn eval(&self, x: &[usize]) -> usize {
        self.table[encode_index(x, self.r)]
    }

    /// `Pr_x[f(x) = i] = 1/R` for every `i`.
    pub fn is_balanced(&self) -> bool {
        let mut counts = vec![0usize; self.r];
        self.table.iter().for_each(|&v| counts[v] += 1);
        counts.iter().all(|&c| c * self.r == self.table.len())
    }

    /// Indicator table of `f = i`.
    pub fn projection(&self, i: usize) -> TableFunction {
        TableFunction::new(
            self.n,
            self.r,
            self.table.iter().map(|&v| f64::from(u8::from(v == i))).collect(),
        )
        .expect("same shape as f")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// `f_c(x) = f(x + c·1) - c (mod R)`.
pub fn shift(f: &RFunction, c: usize) -> RFunction {
    let r = f.r;
    let c = c % r;
    let mut y = vec![0usize; f.n];
    let mut x = vec![0usize; f.n];
    let table = (0..f.table.len())
        .map(|idx| {
            decode_index(idx, r, &mut x);
            y.iter_mut().zip(&x).for_each(|(yi, &xi)| *yi = (xi + c) % r);
            (f.eval(&y) + r - c) % r
        })
        .collect();
    RFunction { table, ..f.clone() }
}

/// `g^i(x) = E_c[1{f_c(x) = i}]`.
pub fn averaged_projection(f: &RFunction, i: usize) -> TableFunction {
    averaged_projections(f).swap_remove(i)
}

/// `g^0, ..., g^{R-1}` in one pass over the shifts.
pub fn averaged_projections(f: &RFunction) -> Vec<TableFunction> {
    let r = f.r;
    let mut tables = vec![vec![0.0; f.table.len()]; r];
    let share = 1.0 / r as f64;
    for c in 0..r {
        for (idx, &v) in shift(f, c).table.iter().enumerate() {
            tables[v][idx] += share;
        }
    }
    tables
        .into_iter()
        .map(|t| TableFunction::new(f.n, r, t).expect("same shape as f"))
        .collect()
}

/// `sum_i E_z[(T_ρ g^i(z))^k]`, the exact acceptance probability.
pub fn run_test_exact(f: &RFunction, params: &TestParams) -> Result<f64> {
    check_params(f, params)?;
    check_budget("function table", f.r, f.n, params.budget)?;
    let moments = averaged_projections(f)
        .iter()
        .map(|g| g.noisy(params.rho).moment(params.k as u32))
        .collect::<Vec<f64>>();
    Ok(fsum(moments))
}

fn check_params(f: &RFunction, params: &TestParams) -> Result<()> {
    if f.r != params.r {
        return invalid(format!("function has R = {}, params have R = {}", f.r, params.r));
    }
    if !(0.0..=1.0).contains(&params.rho) {
        return invalid(format!("rho must lie in [0, 1], got {}", params.rho));
    }
    Ok(())
}

/// Simulates `params.trials` runs of the test; trial `t` uses
/// `derive_seed(params.seed, t)`.
pub fn run_test_mc(f: &RFunction, params: &TestParams) -> Result<Estimate> {
    check_params(f, params)?;
    if params.trials == 0 {
        return invalid("trials must be positive");
    }
    let (r, n, k) = (f.r, f.n, params.k);
    let accepted = (0..params.trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = rng_from_seed(derive_seed(params.seed, t));
            let z: Vec<usize> = (0..n).map(|_| rng.gen_range(0..r)).collect();
            let mut first = None;
            let mut accept = true;
            let mut y = vec![0usize; n];
            for _ in 0..k {
                let x = noise_sample(&z, params.rho, r, &mut rng);
                let c = rng.gen_range(0..r);
                y.iter_mut().zip(&x).for_each(|(yi, &xi)| *yi = (xi + c) % r);
                let value = (f.eval(&y) + r - c) % r;
                match first {
                    None => first = Some(value),
                    Some(v) if v != value => accept = false,
                    _ => {}
                }
            }
            accept
        })
        .count();
    Ok(Estimate::binomial(accepted as u64, params.trials))
}

/// Acceptance of a dictator:
/// `(ρ + (1-ρ)/R)^k + (R-1) ((1-ρ)/R)^k`.
pub fn dictator_closed_form(k: usize, r: usize, rho: f64) -> f64 {
    let off = (1.0 - rho) / r as f64;
    (rho + off).powi(k as i32) + (r as f64 - 1.0) * off.powi(k as i32)
}

/// Outcome of [`quasirandomness_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasirandomReport {
    pub is_quasirandom: bool,
    pub max_influence: f64,
    /// `(i, j)`: projection `f^i`, coordinate `j`.
    pub argmax: (usize, usize),
}

/// Degree-`d` influences of every projection `f^i`; quasirandom iff all are
/// at most `δ`.
pub fn quasirandomness_check(f: &RFunction, d: usize, log_delta: LogThreshold, budget: u64) -> Result<QuasirandomReport> {
    check_budget("function table", f.r, f.n, budget)?;
    let basis = Arc::new(Basis::new(f.r)?);
    let mut best = (0.0, (0, 0));
    let mut exceeded = false;
    for i in 0..f.r {
        let rep = transform(&f.projection(i), &basis)?;
        for (j, inf) in rep.degree_influences(d).into_iter().enumerate() {
            if inf > best.0 {
                best = (inf, (i, j));
            }
            exceeded |= log_delta.exceeded_by(inf);
        }
    }
    Ok(QuasirandomReport {
        is_quasirandom: !exceeded,
        max_influence: best.0,
        argmax: best.1,
    })
}
