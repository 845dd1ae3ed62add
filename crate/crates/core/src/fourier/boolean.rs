//! Functions on the boolean cube `{±1}^m`, stored by their dense Walsh
//! coefficients `Ĝ(S)` with `S` encoded as a bitmask.
//!
//! A point `y` is encoded as a bitmask too: bit `b` set means `y_b = -1`.
//!
//! The boolean analog of `g: [R]^n -> R` uses one variable per pair
//! `(i, j)` with `i` a coordinate and `j` a non-constant basis index; the pair
//! maps to bit `i * (R - 1) + (j - 1)`. The constant slot never appears in a
//! character, so the analog lives on `m = n (R - 1)` variables.

use super::{FourierRep, Part};
use crate::error::{invalid, Error, Result};
use crate::numeric::{decode_index, fsum};

/// Largest cube handled densely.
pub const MAX_BOOLEAN_VARIABLES: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct BooleanRep {
    m: usize,
    coeffs: Vec<f64>,
}

/// In-place unnormalized Walsh-Hadamard transform.
fn walsh_hadamard(values: &mut [f64]) {
    let len = values.len();
    let mut h = 1;
    while h < len {
        for start in (0..len).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (values[i], values[i + h]);
                values[i] = a + b;
                values[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn check_size(m: usize) -> Result<()> {
    if m > MAX_BOOLEAN_VARIABLES {
        return Err(Error::Budget {
            what: "boolean cube",
            needed: 2f64.powi(m as i32),
            budget: 1 << MAX_BOOLEAN_VARIABLES,
        });
    }
    Ok(())
}

impl BooleanRep {
    pub fn from_coefficients(m: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_size(m)?;
        if coeffs.len() != 1 << m {
            return invalid(format!("{} boolean coefficients, expected 2^{m}", coeffs.len()));
        }
        Ok(Self { m, coeffs })
    }

    /// Expands a truth table indexed by point bitmask.
    pub fn from_values(m: usize, values: &[f64]) -> Result<Self> {
        check_size(m)?;
        if values.len() != 1 << m {
            return invalid(format!("{} boolean values, expected 2^{m}", values.len()));
        }
        let mut coeffs = values.to_vec();
        walsh_hadamard(&mut coeffs);
        let scale = (1u64 << m) as f64;
        coeffs.iter_mut().for_each(|c| *c /= scale);
        Ok(Self { m, coeffs })
    }

    pub(super) fn analog_of(rep: &FourierRep) -> Result<Self> {
        let (n, r) = (rep.n(), rep.r());
        let m = n * (r - 1);
        check_size(m)?;
        let mut coeffs = vec![0.0; 1 << m];
        let mut digits = vec![0usize; n];
        for (idx, &c) in rep.coefficients().iter().enumerate() {
            decode_index(idx, r, &mut digits);
            let mask = digits
                .iter()
                .enumerate()
                .filter(|(_, &j)| j != 0)
                .fold(0usize, |mask, (i, &j)| mask | 1 << (i * (r - 1) + j - 1));
            coeffs[mask] = c;
        }
        Ok(Self { m, coeffs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Truth table indexed by point bitmask.
    pub fn values(&self) -> Vec<f64> {
        let mut values = self.coeffs.clone();
        walsh_hadamard(&mut values);
        values
    }

    /// `G(y) = sum_S Ĝ(S) prod_{b in S} y_b` for `y` given as ±1 entries.
    pub fn eval(&self, y: &[i8]) -> Result<f64> {
        if y.len() != self.m {
            return invalid(format!("point has {} coordinates, cube has {}", y.len(), self.m));
        }
        let mut point = 0usize;
        for (b, &yb) in y.iter().enumerate() {
            match yb {
                1 => {}
                -1 => point |= 1 << b,
                other => return invalid(format!("coordinate {b} is {other}, expected ±1")),
            }
        }
        Ok(self.eval_mask(point))
    }

    /// Evaluation at a point given as a bitmask.
    pub fn eval_mask(&self, point: usize) -> f64 {
        fsum(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(s, &c)| if (s & point).count_ones().is_multiple_of(2) { c } else { -c }),
        )
    }

    pub fn apply_noise(&self, rho: f64) -> Self {
        Self {
            m: self.m,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(s, &c)| c * rho.powi(s.count_ones() as i32))
                .collect(),
        }
    }

    pub fn truncate(&self, d: usize, part: Part) -> Self {
        Self {
            m: self.m,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(s, &c)| {
                    let low = (s.count_ones() as usize) <= d;
                    match (part, low) {
                        (Part::Low, true) | (Part::High, false) => c,
                        _ => 0.0,
                    }
                })
                .collect(),
        }
    }

    /// `sum_S Ĝ(S)^2`.
    pub fn squared_norm(&self) -> f64 {
        fsum(self.coeffs.iter().map(|c| c * c))
    }

    /// Exact `||G||_p` over all `2^m` points.
    pub fn p_norm(&self, p: f64) -> f64 {
        super::p_norm(&self.values(), p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictator_character() {
        // G(y) = y_0 on two variables
        let g = BooleanRep::from_values(2, &[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(g.coefficients(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(g.eval(&[-1, 1]).unwrap(), -1.0);
        assert!(g.eval(&[0, 1]).is_err());
    }

    #[test]
    fn values_round_trip() {
        let values = vec![0.5, -2.0, 3.0, 1.25, 0.0, 7.0, -1.0, 2.0];
        let g = BooleanRep::from_values(3, &values).unwrap();
        for (a, b) in g.values().iter().zip(&values) {
            assert!((a - b).abs() < 1e-12);
        }
        for (p, &v) in values.iter().enumerate() {
            assert!((g.eval_mask(p) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn too_large_is_budget_error() {
        assert!(matches!(BooleanRep::from_coefficients(30, vec![]), Err(Error::Budget { .. })));
    }
}
