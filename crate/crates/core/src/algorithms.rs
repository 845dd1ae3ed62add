//! Approximation algorithms for Max k-CSP_R.
//!
//! [`extend_algorithm`] turns any solver for arity `k'` into one for arity
//! `k > k'`: project every constraint onto all `k'`-subsets of its scope
//! (filling the dropped variables with every `τ ∈ [R]^{k-k'}`), solve the
//! projection with the base solver, then re-randomize each variable with
//! probability `α`. In expectation the result keeps at least a
//! `C(k,k') α^{k-k'} (1-α)^{k'}` fraction of the base value on the projected
//! instance.

use rand::Rng;

use crate::csp::{brute_force_optimum, Assignment, Constraint, CspInstance, DEFAULT_BRUTE_FORCE_BUDGET};
use crate::error::{invalid, Result};
use crate::numeric::{binomial, checked_pow, decode_index, derive_seed, fsum, rng_from_seed, Accumulator};

/// A solver for instances of a declared arity.
///
/// Implementations must be deterministic given the seed.
pub trait BaseAlgorithm {
    fn name(&self) -> &str;

    /// The arity `k'` this solver is meant for.
    fn arity(&self) -> usize;

    fn solve(&self, instance: &CspInstance, seed: u64) -> Result<Assignment>;
}

/// Uniformly random assignment.
#[derive(Debug, Clone, Copy)]
pub struct NaiveRandom {
    pub arity: usize,
}

impl BaseAlgorithm for NaiveRandom {
    fn name(&self) -> &str {
        "naive"
    }

    fn arity(&self) -> usize {
        self.arity
    }

    fn solve(&self, instance: &CspInstance, seed: u64) -> Result<Assignment> {
        Ok(naive_random(instance, seed))
    }
}

/// Exhaustive optimum; see [`brute_force_optimum`].
#[derive(Debug, Clone, Copy)]
pub struct BruteForce {
    pub arity: usize,
    pub budget: u64,
}

impl BruteForce {
    pub fn new(arity: usize) -> Self {
        Self {
            arity,
            budget: DEFAULT_BRUTE_FORCE_BUDGET,
        }
    }
}

impl BaseAlgorithm for BruteForce {
    fn name(&self) -> &str {
        "brute"
    }

    fn arity(&self) -> usize {
        self.arity
    }

    fn solve(&self, instance: &CspInstance, _seed: u64) -> Result<Assignment> {
        Ok(brute_force_optimum(instance, self.budget)?.0)
    }
}

/// `(k, k', α)` for the extension algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionParams {
    pub k: usize,
    pub k_prime: usize,
    pub alpha: f64,
}

impl ExtensionParams {
    /// Uses the default blend probability `α = (k - k') / k`.
    pub fn new(k: usize, k_prime: usize) -> Result<Self> {
        if k_prime == 0 || k_prime >= k {
            return invalid(format!("need k > k' >= 1, got k={k}, k'={k_prime}"));
        }
        Ok(Self {
            k,
            k_prime,
            alpha: (k - k_prime) as f64 / k as f64,
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return invalid(format!("alpha must lie in [0, 1], got {alpha}"));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// `C(k,k') α^{k-k'} (1-α)^{k'}`.
    pub fn guarantee_factor(&self) -> f64 {
        guarantee_factor(self.k, self.k_prime, self.alpha)
    }

    /// `l = min(k', k - k')`.
    pub fn l(&self) -> usize {
        self.k_prime.min(self.k - self.k_prime)
    }
}

/// `C(k,k') α^{k-k'} (1-α)^{k'}`.
pub fn guarantee_factor(k: usize, k_prime: usize, alpha: f64) -> f64 {
    binomial(k, k_prime) * alpha.powi((k - k_prime) as i32) * (1.0 - alpha).powi(k_prime as i32)
}

/// Lower bound `1 / 2^{2l}` on the default-α guarantee factor.
pub fn bernoulli_floor(l: usize) -> f64 {
    0.25f64.powi(l as i32)
}

/// Uniformly random assignment, deterministic given `seed`.
pub fn naive_random(instance: &CspInstance, seed: u64) -> Assignment {
    let mut rng = rng_from_seed(seed);
    Assignment((0..instance.n).map(|_| rng.gen_range(0..instance.r)).collect())
}

/// Position subsets of size `size` out of `0..len` in lexicographic order.
fn subsets(len: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, len: usize, size: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for p in start..len {
            if len - p < size - current.len() {
                break;
            }
            current.push(p);
            rec(p + 1, len, size, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, len, size, &mut Vec::with_capacity(size), &mut out);
    out
}

/// Projects an arity-`k` instance onto arity `k_prime`.
///
/// Each constraint `(W, S, P)` yields, for every `S' ⊆ S` with `|S'| = k'`
/// (lexicographic by scope position) and every `τ ∈ [R]^{S - S'}` (row-major),
/// the constraint `(W / (C(k,k') R^{k-k'}), S', P(· ∘ τ))`. Duplicates are
/// kept as separate constraints.
pub fn project_instance(instance: &CspInstance, k_prime: usize) -> Result<CspInstance> {
    let Some(k) = instance.uniform_arity() else {
        return invalid("project_instance: constraints have mixed arities");
    };
    if k_prime == 0 || k_prime >= k {
        return invalid(format!("project_instance: need k > k' >= 1, got k={k}, k'={k_prime}"));
    }
    let r = instance.r;
    let dropped = k - k_prime;
    let taus = checked_pow(r, dropped).expect("R^(k-k') fits: R^k already does");
    let rows = checked_pow(r, k_prime).expect("R^k' fits");
    let position_sets = subsets(k, k_prime);
    let scale = binomial(k, k_prime) * taus as f64;

    let mut out = Vec::with_capacity(instance.constraints.len() * position_sets.len() * taus);
    let mut full = vec![0usize; k];
    let mut kept_vals = vec![0usize; k_prime];
    let mut tau_vals = vec![0usize; dropped];
    for c in &instance.constraints {
        let weight = c.weight / scale;
        for kept in &position_sets {
            let others: Vec<usize> = (0..k).filter(|p| !kept.contains(p)).collect();
            let scope: Vec<usize> = kept.iter().map(|&p| c.scope[p]).collect();
            for tau in 0..taus {
                decode_index(tau, r, &mut tau_vals);
                for (&p, &t) in others.iter().zip(&tau_vals) {
                    full[p] = t;
                }
                let predicate = (0..rows)
                    .map(|row| {
                        decode_index(row, r, &mut kept_vals);
                        for (&p, &v) in kept.iter().zip(&kept_vals) {
                            full[p] = v;
                        }
                        c.predicate[full.iter().fold(0, |acc, &d| acc * r + d)]
                    })
                    .collect();
                out.push(Constraint {
                    weight,
                    scope: scope.clone(),
                    predicate,
                });
            }
        }
    }
    CspInstance::new(instance.n, r, out)
}

/// Keeps each variable of `base` with probability `1 - α`, otherwise draws it
/// uniformly from `[R]`.
pub fn blend_assignment(base: &Assignment, alpha: f64, r: usize, seed: u64) -> Assignment {
    let mut rng = rng_from_seed(seed);
    Assignment(
        base.0
            .iter()
            .map(|&v| if rng.gen::<f64>() < alpha { rng.gen_range(0..r) } else { v })
            .collect(),
    )
}

/// Exact `E[val(φ_B)]` when `φ_B` blends `base` with probability `α`.
pub fn expected_blend_value(instance: &CspInstance, base: &Assignment, alpha: f64) -> Result<f64> {
    instance.check_assignment(base)?;
    let r = instance.r;
    let mut total = Accumulator::new();
    for c in &instance.constraints {
        let mut row_vals = vec![0usize; c.arity()];
        let sat = fsum((0..c.predicate.len()).filter(|&row| c.predicate[row] == 1).map(|row| {
            decode_index(row, r, &mut row_vals);
            c.scope
                .iter()
                .zip(&row_vals)
                .map(|(&v, &x)| alpha / r as f64 + if base.0[v] == x { 1.0 - alpha } else { 0.0 })
                .product::<f64>()
        }));
        total.add(c.weight * sat);
    }
    Ok(total.value())
}

/// Everything produced by one run of the extension algorithm.
#[derive(Debug, Clone)]
pub struct ExtensionRun {
    pub projected: CspInstance,
    /// Output of the base solver on the projection.
    pub base_assignment: Assignment,
    /// The blended output.
    pub assignment: Assignment,
}

/// Seed handed to the base solver.
pub fn base_seed(seed: u64) -> u64 {
    derive_seed(seed, 0)
}

/// Seed used for the blend step.
pub fn blend_seed(seed: u64) -> u64 {
    derive_seed(seed, 1)
}

/// Runs projection, base solver and blend, keeping the intermediates.
pub fn extend_algorithm_run(
    instance: &CspInstance,
    base: &dyn BaseAlgorithm,
    params: &ExtensionParams,
    seed: u64,
) -> Result<ExtensionRun> {
    match instance.uniform_arity() {
        Some(k) if k == params.k => {}
        other => return invalid(format!("instance arity {other:?} does not match k = {}", params.k)),
    }
    if base.arity() != params.k_prime {
        return invalid(format!(
            "base algorithm '{}' has arity {}, expected k' = {}",
            base.name(),
            base.arity(),
            params.k_prime
        ));
    }
    let projected = project_instance(instance, params.k_prime)?;
    let base_assignment = base.solve(&projected, base_seed(seed))?;
    projected.check_assignment(&base_assignment)?;
    let assignment = blend_assignment(&base_assignment, params.alpha, instance.r, blend_seed(seed));
    Ok(ExtensionRun {
        projected,
        base_assignment,
        assignment,
    })
}

/// The extension algorithm `B` built from `base`.
pub fn extend_algorithm(
    instance: &CspInstance,
    base: &dyn BaseAlgorithm,
    params: &ExtensionParams,
    seed: u64,
) -> Result<Assignment> {
    Ok(extend_algorithm_run(instance, base, params, seed)?.assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::generate_random_instance;

    fn all_ones(n: usize, r: usize, k: usize) -> CspInstance {
        CspInstance::new(
            n,
            r,
            vec![Constraint {
                weight: 1.0,
                scope: (0..k).collect(),
                predicate: vec![1; r.pow(k as u32)],
            }],
        )
        .unwrap()
    }

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets(4, 1).len(), 4);
    }

    #[test]
    fn projection_counts_and_weights() {
        let inst = generate_random_instance(3, 2, 3, 1, 5).unwrap();
        let proj = project_instance(&inst, 2).unwrap();
        assert_eq!(proj.constraints.len(), 6);
        for c in &proj.constraints {
            assert!((c.weight - 1.0 / 6.0).abs() < 1e-15);
            assert_eq!(c.arity(), 2);
        }
    }

    #[test]
    fn projection_of_tautology() {
        let proj = project_instance(&all_ones(4, 3, 3), 1).unwrap();
        assert!(proj.constraints.iter().all(|c| c.predicate.iter().all(|&p| p == 1)));
        assert_eq!(proj.evaluate(&vec![2, 0, 1, 1].into()).unwrap(), 1.0);
    }

    #[test]
    fn projection_rejects_mixed_arity() {
        let inst = CspInstance::new(
            3,
            2,
            vec![
                Constraint {
                    weight: 0.5,
                    scope: vec![0],
                    predicate: vec![0, 1],
                },
                Constraint {
                    weight: 0.5,
                    scope: vec![1, 2],
                    predicate: vec![1, 0, 0, 1],
                },
            ],
        )
        .unwrap();
        assert!(project_instance(&inst, 1).unwrap_err().to_string().contains("mixed"));
    }

    #[test]
    fn guarantee_factor_k3_k2() {
        let p = ExtensionParams::new(3, 2).unwrap();
        assert!((p.alpha - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.guarantee_factor() - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(p.l(), 1);
        assert!(p.guarantee_factor() >= bernoulli_floor(p.l()));
    }

    #[test]
    fn blend_extremes() {
        let base: Assignment = vec![1, 2, 0, 1].into();
        assert_eq!(blend_assignment(&base, 0.0, 3, 11), base);
        assert_eq!(blend_assignment(&base, 0.4, 3, 11), blend_assignment(&base, 0.4, 3, 11));
    }

    #[test]
    fn extension_on_tautology_is_one() {
        let inst = all_ones(4, 2, 3);
        let params = ExtensionParams::new(3, 2).unwrap();
        let run = extend_algorithm_run(&inst, &BruteForce::new(2), &params, 3).unwrap();
        assert_eq!(inst.evaluate(&run.assignment).unwrap(), 1.0);
        assert!((expected_blend_value(&inst, &run.base_assignment, params.alpha).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extension_checks_arities() {
        let inst = all_ones(4, 2, 3);
        let params = ExtensionParams::new(3, 2).unwrap();
        assert!(extend_algorithm(&inst, &BruteForce::new(1), &params, 0).is_err());
        let params = ExtensionParams::new(4, 2).unwrap();
        assert!(extend_algorithm(&inst, &NaiveRandom { arity: 2 }, &params, 0).is_err());
        assert!(ExtensionParams::new(2, 2).is_err());
        assert!(ExtensionParams::new(3, 1).unwrap().with_alpha(1.5).is_err());
    }
}
