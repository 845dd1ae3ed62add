//! Weighted Max k-CSP_R instances: data model, evaluation, the exhaustive
//! oracle and JSON (de)serialization.
//!
//! Predicates are dense 0/1 tables indexed by the assignment to the scope in
//! row-major order: the first scope variable is the most significant base-`R`
//! digit.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_budget, invalid, Result};
use crate::numeric::{checked_pow, fsum, odometer_next, rng_from_seed, Accumulator};

/// Default number of assignments the exhaustive oracle may visit.
pub const DEFAULT_BRUTE_FORCE_BUDGET: u64 = 10_000_000;

/// Tolerance on the total constraint weight.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// One weighted constraint `(W, S, P)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub weight: f64,
    pub scope: Vec<usize>,
    pub predicate: Vec<u8>,
}

impl Constraint {
    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    /// Row of the predicate table selected by `assignment` restricted to the scope.
    pub fn row(&self, assignment: &[usize], r: usize) -> usize {
        self.scope.iter().fold(0, |acc, &v| acc * r + assignment[v])
    }

    pub fn is_satisfied(&self, assignment: &[usize], r: usize) -> bool {
        self.predicate[self.row(assignment, r)] == 1
    }

    /// Fraction of the `R^arity` rows that satisfy the predicate.
    pub fn satisfying_fraction(&self) -> f64 {
        let ones = self.predicate.iter().filter(|&&p| p == 1).count();
        ones as f64 / self.predicate.len() as f64
    }
}

/// A variable assignment with values in `0..R`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for Assignment {
    fn from(values: Vec<usize>) -> Self {
        Self(values)
    }
}

/// A weighted Max k-CSP_R instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspInstance {
    pub n: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub constraints: Vec<Constraint>,
}

impl CspInstance {
    /// Builds an instance and checks every invariant.
    pub fn new(n: usize, r: usize, constraints: Vec<Constraint>) -> Result<Self> {
        let instance = Self { n, r, constraints };
        instance.validate()?;
        Ok(instance)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return invalid(format!("R must be at least 2, got {}", self.r));
        }
        if self.constraints.is_empty() {
            return invalid("constraints: instance has no constraints");
        }
        for (ci, c) in self.constraints.iter().enumerate() {
            if !c.weight.is_finite() || c.weight <= 0.0 {
                return invalid(format!("constraints[{ci}].weight must be positive, got {}", c.weight));
            }
            if c.scope.is_empty() {
                return invalid(format!("constraints[{ci}].scope is empty"));
            }
            for (pos, &v) in c.scope.iter().enumerate() {
                if v >= self.n {
                    return invalid(format!("constraints[{ci}].scope: variable {v} out of range 0..{}", self.n));
                }
                if c.scope[..pos].contains(&v) {
                    return invalid(format!("constraints[{ci}].scope: duplicate variable {v}"));
                }
            }
            let rows = checked_pow(self.r, c.arity());
            if rows != Some(c.predicate.len()) {
                return invalid(format!(
                    "constraints[{ci}].predicate has {} entries, expected R^{} ",
                    c.predicate.len(),
                    c.arity()
                ));
            }
            if let Some(bad) = c.predicate.iter().find(|&&p| p > 1) {
                return invalid(format!("constraints[{ci}].predicate contains {bad}, expected 0 or 1"));
            }
        }
        let total = self.total_weight();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return invalid(format!("constraints: weights sum to {total}, expected 1"));
        }
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        fsum(self.constraints.iter().map(|c| c.weight))
    }

    /// The common arity of all constraints, if there is one.
    pub fn uniform_arity(&self) -> Option<usize> {
        let first = self.constraints.first()?.arity();
        self.constraints.iter().all(|c| c.arity() == first).then_some(first)
    }

    pub fn max_arity(&self) -> usize {
        self.constraints.iter().map(Constraint::arity).max().unwrap_or(0)
    }

    pub fn check_assignment(&self, a: &Assignment) -> Result<()> {
        if a.len() != self.n {
            return invalid(format!(
                "assignment has length {}, instance has {} variables",
                a.len(),
                self.n
            ));
        }
        if let Some((v, &x)) = a.0.iter().enumerate().find(|(_, &x)| x >= self.r) {
            return invalid(format!("assignment: variable {v} has value {x} outside 0..{}", self.r));
        }
        Ok(())
    }

    /// `sum_i W_i * P_i(a|S_i)`.
    pub fn evaluate(&self, a: &Assignment) -> Result<f64> {
        self.check_assignment(a)?;
        Ok(self.value_of(&a.0))
    }

    /// Evaluation without range checks; `values` must be valid.
    pub(crate) fn value_of(&self, values: &[usize]) -> f64 {
        let mut acc = Accumulator::new();
        for c in &self.constraints {
            if c.is_satisfied(values, self.r) {
                acc.add(c.weight);
            }
        }
        acc.value()
    }

    /// Exact expected value under a uniformly random assignment.
    pub fn expected_random_value(&self) -> f64 {
        fsum(self.constraints.iter().map(|c| c.weight * c.satisfying_fraction()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let instance: Self = serde_json::from_str(text)?;
        instance.validate()?;
        Ok(instance)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Exhaustive search for an optimal assignment.
///
/// Visits assignments in lexicographic order and keeps the first maximizer,
/// so ties resolve to the lexicographically smallest assignment.
pub fn brute_force_optimum(instance: &CspInstance, budget: u64) -> Result<(Assignment, f64)> {
    check_budget("instance", instance.r, instance.n, budget)?;
    let mut current = vec![0usize; instance.n];
    let mut best = current.clone();
    let mut best_value = instance.value_of(&current);
    while odometer_next(&mut current, instance.r) {
        let value = instance.value_of(&current);
        if value > best_value + 1e-12 {
            best_value = value;
            best.copy_from_slice(&current);
        }
    }
    Ok((Assignment(best), best_value))
}

/// Random instance with `m` constraints of arity `k`, uniform weights `1/m`,
/// scopes sampled without replacement and fair-coin predicate rows.
pub fn generate_random_instance(n: usize, r: usize, k: usize, m: usize, seed: u64) -> Result<CspInstance> {
    if k == 0 || k > n {
        return invalid(format!("need 1 <= k <= n, got k={k}, n={n}"));
    }
    if r < 2 {
        return invalid(format!("R must be at least 2, got {r}"));
    }
    if m == 0 {
        return invalid("m must be at least 1");
    }
    let rows = checked_pow(r, k).ok_or_else(|| crate::Error::Validation("R^k overflows".into()))?;
    let mut rng = rng_from_seed(seed);
    let weight = 1.0 / m as f64;
    let constraints = (0..m)
        .map(|_| {
            let scope = sample(&mut rng, n, k).into_vec();
            let predicate = (0..rows).map(|_| u8::from(rng.gen::<bool>())).collect();
            Constraint {
                weight,
                scope,
                predicate,
            }
        })
        .collect();
    CspInstance::new(n, r, constraints)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equality(r: usize) -> CspInstance {
        let predicate = (0..r * r).map(|i| u8::from(i / r == i % r)).collect();
        CspInstance::new(
            2,
            r,
            vec![Constraint {
                weight: 1.0,
                scope: vec![0, 1],
                predicate,
            }],
        )
        .unwrap()
    }

    #[test]
    fn evaluate_equality() {
        let inst = equality(2);
        assert_eq!(inst.evaluate(&vec![1, 1].into()).unwrap(), 1.0);
        assert_eq!(inst.evaluate(&vec![0, 1].into()).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_weighted_sum() {
        let inst = CspInstance::new(
            2,
            2,
            vec![
                Constraint {
                    weight: 0.3,
                    scope: vec![0],
                    predicate: vec![0, 1],
                },
                Constraint {
                    weight: 0.7,
                    scope: vec![1],
                    predicate: vec![0, 1],
                },
            ],
        )
        .unwrap();
        assert!((inst.evaluate(&vec![1, 0].into()).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_bad_assignment() {
        let inst = equality(2);
        let err = inst.evaluate(&vec![0, 2].into()).unwrap_err().to_string();
        assert!(err.contains("variable 1"), "{err}");
        assert!(inst.evaluate(&vec![0].into()).is_err());
    }

    #[test]
    fn brute_force_tie_breaks_lexicographically() {
        let (a, v) = brute_force_optimum(&equality(2), DEFAULT_BRUTE_FORCE_BUDGET).unwrap();
        assert_eq!(a.0, vec![0, 0]);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn brute_force_tautology() {
        let inst = CspInstance::new(
            3,
            3,
            vec![Constraint {
                weight: 1.0,
                scope: vec![2, 0],
                predicate: vec![1; 9],
            }],
        )
        .unwrap();
        assert_eq!(brute_force_optimum(&inst, 1000).unwrap().1, 1.0);
    }

    #[test]
    fn brute_force_budget() {
        let inst = generate_random_instance(12, 4, 2, 3, 0).unwrap();
        let err = brute_force_optimum(&inst, 1000).unwrap_err();
        assert!(err.to_string().contains("too large for exhaustive search"));
    }

    #[test]
    fn expected_random_value_examples() {
        assert_eq!(equality(2).expected_random_value(), 0.5);
        assert_eq!(equality(4).expected_random_value(), 0.25);
    }

    #[test]
    fn generator_is_deterministic_and_uniform_weight() {
        let a = generate_random_instance(4, 2, 2, 3, 7).unwrap();
        let b = generate_random_instance(4, 2, 2, 3, 7).unwrap();
        assert_eq!(a, b);
        for c in &a.constraints {
            assert_eq!(c.weight, 1.0 / 3.0);
        }
        assert!((a.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_names_the_field() {
        let mut inst = equality(2);
        inst.constraints[0].scope = vec![0, 0];
        assert!(inst.validate().unwrap_err().to_string().contains("duplicate"));
        let mut inst = equality(2);
        inst.constraints[0].predicate.pop();
        assert!(inst.validate().unwrap_err().to_string().contains("predicate"));
        let mut inst = equality(2);
        inst.constraints[0].weight = 0.5;
        assert!(inst.validate().unwrap_err().to_string().contains("weights sum"));
    }

    #[test]
    fn json_field_names() {
        let text = equality(2).to_json().unwrap();
        assert!(text.contains("\"R\": 2"));
        assert_eq!(CspInstance::from_json(&text).unwrap(), equality(2));
    }
}
