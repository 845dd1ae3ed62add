//! Harmonic analysis of real-valued functions on `[R]^n`.
//!
//! A [`Basis`] is an orthonormal basis `l_0, ..., l_{R-1}` of functions on
//! `[R]` under `<u, v> = E_x[u(x) v(x)]` with `l_0 = 1`. Functions on `[R]^n`
//! are expanded in the tensor-product basis; a multi-index `s` is stored as a
//! row-major index into `[R]^n` and its degree `|s|` counts the coordinates
//! whose basis index is not the constant slot `0`.
//!
//! All quantities are exact expectations over the full table.

mod boolean;

use std::sync::Arc;

use rand::Rng;
use serde_json::{Map, Value};

use crate::error::{invalid, Result};
use crate::numeric::{checked_pow, decode_index, digit_weight, fsum, Accumulator};

pub use boolean::{BooleanRep, MAX_BOOLEAN_VARIABLES};

/// Orthonormal basis of functions on `[R]`, `l_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    r: usize,
    /// Row `i` holds `l_i(0), ..., l_i(R-1)`.
    vectors: Vec<f64>,
}

impl Basis {
    /// Gram-Schmidt of `(1, 1{x=1}, 1{x=2}, ..., 1{x=R-1})`.
    pub fn new(r: usize) -> Result<Self> {
        let order: Vec<usize> = (1..r.max(1)).collect();
        Self::with_indicator_order(r, &order)
    }

    /// Gram-Schmidt of `(1, 1{x=order[0]}, ..., 1{x=order[R-2]})`.
    ///
    /// `order` must list `R - 1` distinct points. Each non-constant vector is
    /// signed so that its first entry above `1e-12` in magnitude is positive.
    pub fn with_indicator_order(r: usize, order: &[usize]) -> Result<Self> {
        if r < 2 {
            return invalid(format!("basis needs R >= 2, got {r}"));
        }
        if order.len() != r - 1 {
            return invalid(format!("indicator order has {} points, expected {}", order.len(), r - 1));
        }
        for (i, &p) in order.iter().enumerate() {
            if p >= r || order[..i].contains(&p) {
                return invalid(format!("indicator order entry {p} is out of range or repeated"));
            }
        }

        let inner = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / r as f64;
        let mut rows: Vec<Vec<f64>> = vec![vec![1.0; r]];
        for &p in order {
            let mut v: Vec<f64> = (0..r).map(|x| if x == p { 1.0 } else { 0.0 }).collect();
            // two passes of modified Gram-Schmidt keep orthogonality at ~1e-16
            for _ in 0..2 {
                for prev in &rows {
                    let c = inner(&v, prev);
                    v.iter_mut().zip(prev).for_each(|(a, b)| *a -= c * b);
                }
            }
            let norm = inner(&v, &v).sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            if let Some(first) = v.iter().find(|a| a.abs() > 1e-12) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|a| *a = -*a);
                }
            }
            rows.push(v);
        }
        Ok(Self {
            r,
            vectors: rows.concat(),
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// `l_i(x)`.
    pub fn value(&self, i: usize, x: usize) -> f64 {
        self.vectors[i * self.r + x]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.r..(i + 1) * self.r]
    }
}

/// A dense real-valued function on `[R]^n`, row-major with coordinate 0 most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct TableFunction {
    n: usize,
    r: usize,
    values: Vec<f64>,
}

impl TableFunction {
    pub fn new(n: usize, r: usize, values: Vec<f64>) -> Result<Self> {
        if r < 2 {
            return invalid(format!("R must be at least 2, got {r}"));
        }
        match checked_pow(r, n) {
            Some(len) if len == values.len() => Ok(Self { n, r, values }),
            _ => invalid(format!("table has {} entries, expected R^n = {r}^{n}", values.len())),
        }
    }

    /// Tabulates `f` over all points, given as digit slices.
    pub fn from_fn(n: usize, r: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = checked_pow(r, n).ok_or_else(|| crate::Error::Validation("R^n overflows".into()))?;
        let mut digits = vec![0usize; n];
        let values = (0..len)
            .map(|idx| {
                decode_index(idx, r, &mut digits);
                f(&digits)
            })
            .collect();
        Self::new(n, r, values)
    }

    pub fn constant(n: usize, r: usize, c: f64) -> Result<Self> {
        Self::from_fn(n, r, |_| c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn expectation(&self) -> f64 {
        crate::numeric::mean(&self.values)
    }

    /// `E_x[|g(x)|^p]^{1/p}`.
    pub fn p_norm(&self, p: f64) -> f64 {
        p_norm(&self.values, p)
    }

    /// `E_x[g(x)^k]` for integer `k`.
    pub fn moment(&self, k: u32) -> f64 {
        fsum(self.values.iter().map(|v| v.powi(k as i32))) / self.values.len() as f64
    }

    /// `T_rho` applied one axis at a time as `rho·v + (1 - rho)·E_{x_i}[v]`.
    /// Agrees with the Fourier route and avoids the basis square roots.
    pub fn noisy(&self, rho: f64) -> Self {
        let r = self.r;
        let mut values = self.values.clone();
        let mut line = vec![0.0; r];
        let mut stride = 1;
        for _ in 0..self.n {
            let block = stride * r;
            for start in (0..values.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (a, slot) in line.iter_mut().enumerate() {
                        *slot = values[base + a * stride];
                    }
                    let mean = fsum(line.iter().copied()) / r as f64;
                    for (a, &v) in line.iter().enumerate() {
                        values[base + a * stride] = rho * v + (1.0 - rho) * mean;
                    }
                }
            }
            stride = block;
        }
        Self { n: self.n, r, values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            r: self.r,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// `E[|v|^p]^{1/p}` over a uniformly weighted slice.
pub fn p_norm(values: &[f64], p: f64) -> f64 {
    let len = values.len() as f64;
    if p == 1.0 {
        return fsum(values.iter().map(|v| v.abs())) / len;
    }
    if p == 2.0 {
        return (fsum(values.iter().map(|v| v * v)) / len).sqrt();
    }
    (fsum(values.iter().map(|v| v.abs().powf(p))) / len).powf(1.0 / p)
}

/// Which side of a degree cut to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// `|s| <= d`
    Low,
    /// `|s| > d`
    High,
}

/// Fourier coefficients of a function on `[R]^n` in a fixed [`Basis`].
#[derive(Debug, Clone)]
pub struct FourierRep {
    n: usize,
    r: usize,
    basis: Arc<Basis>,
    coeffs: Vec<f64>,
}

/// Applies the `R x R` matrix `m` along every axis of a row-major tensor.
/// `out[.., k, ..] = sum_x m[k][x] * in[.., x, ..]`.
fn apply_axiswise(values: &mut [f64], n: usize, r: usize, m: &[f64]) {
    let mut fiber_in = vec![0.0; r];
    let len = values.len();
    for axis in 0..n {
        let stride = r.pow((n - 1 - axis) as u32);
        let block = stride * r;
        for start in (0..len).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (x, slot) in fiber_in.iter_mut().enumerate() {
                    *slot = values[base + x * stride];
                }
                for k in 0..r {
                    let row = &m[k * r..(k + 1) * r];
                    values[base + k * stride] = row.iter().zip(&fiber_in).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
}

/// `ĝ(s) = E_x[g(x) prod_i l_{s(i)}(x_i)]`.
pub fn transform(f: &TableFunction, basis: &Arc<Basis>) -> Result<FourierRep> {
    if basis.r() != f.r {
        return invalid(format!("basis has R = {}, function has R = {}", basis.r(), f.r));
    }
    let r = f.r;
    let forward: Vec<f64> = basis.vectors.iter().map(|v| v / r as f64).collect();
    let mut coeffs = f.values.clone();
    apply_axiswise(&mut coeffs, f.n, r, &forward);
    Ok(FourierRep {
        n: f.n,
        r,
        basis: Arc::clone(basis),
        coeffs,
    })
}

/// Draws a `rho`-correlated copy of `x`: each coordinate is kept with
/// probability `rho` and otherwise redrawn uniformly from `[R]` (possibly to
/// the same value).
pub fn noise_sample<G: Rng + ?Sized>(x: &[usize], rho: f64, r: usize, rng: &mut G) -> Vec<usize> {
    x.iter()
        .map(|&xi| if rng.gen::<f64>() < rho { xi } else { rng.gen_range(0..r) })
        .collect()
}

impl FourierRep {
    /// Wraps raw coefficients (row-major multi-indices).
    pub fn from_coefficients(n: usize, basis: Arc<Basis>, coeffs: Vec<f64>) -> Result<Self> {
        let r = basis.r();
        if checked_pow(r, n) != Some(coeffs.len()) {
            return invalid(format!("{} coefficients, expected R^n = {r}^{n}", coeffs.len()));
        }
        Ok(Self { n, r, basis, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// `|s|` of the multi-index stored at `index`.
    pub fn degree_of(&self, index: usize) -> usize {
        digit_weight(index, self.r, self.n)
    }

    /// `g(x) = sum_s ĝ(s) prod_i l_{s(i)}(x_i)`.
    pub fn inverse(&self) -> TableFunction {
        let r = self.r;
        // m[x][k] = l_k(x)
        let mut m = vec![0.0; r * r];
        for k in 0..r {
            for x in 0..r {
                m[x * r + k] = self.basis.value(k, x);
            }
        }
        let mut values = self.coeffs.clone();
        apply_axiswise(&mut values, self.n, r, &m);
        TableFunction { n: self.n, r, values }
    }

    fn map_by_degree(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| f(self.degree_of(idx), c))
            .collect();
        Self {
            coeffs,
            basis: Arc::clone(&self.basis),
            ..*self
        }
    }

    /// `T_rho`: scales `ĝ(s)` by `rho^{|s|}`.
    pub fn apply_noise(&self, rho: f64) -> Self {
        self.map_by_degree(|deg, c| c * rho.powi(deg as i32))
    }

    /// Keeps `|s| <= d` ([`Part::Low`]) or `|s| > d` ([`Part::High`]).
    pub fn truncate(&self, d: usize, part: Part) -> Self {
        self.map_by_degree(|deg, c| match (part, deg <= d) {
            (Part::Low, true) | (Part::High, false) => c,
            _ => 0.0,
        })
    }

    /// Coefficientwise sum; both operands must share `n` and basis.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.basis != other.basis {
            return invalid("cannot add Fourier representations over different domains or bases");
        }
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            basis: Arc::clone(&self.basis),
            ..*self
        })
    }

    /// `ĝ(0^n) = E[g]`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    /// `sum_s ĝ(s)^2 = ||g||_2^2`.
    pub fn squared_norm(&self) -> f64 {
        fsum(self.coeffs.iter().map(|c| c * c))
    }

    /// `sum_{s != 0} ĝ(s)^2`.
    pub fn variance(&self) -> f64 {
        fsum(self.coeffs.iter().skip(1).map(|c| c * c))
    }

    fn coordinate_slot(&self, index: usize, i: usize) -> usize {
        (index / self.r.pow((self.n - 1 - i) as u32)) % self.r
    }

    /// `Inf_i[g] = sum_{s(i) != const} ĝ(s)^2`.
    pub fn influence(&self, i: usize) -> f64 {
        self.degree_influence(i, usize::MAX)
    }

    /// `Inf_i^{<=d}[g] = sum_{|s| <= d, s(i) != const} ĝ(s)^2`.
    pub fn degree_influence(&self, i: usize, d: usize) -> f64 {
        assert!(i < self.n, "coordinate {i} out of range 0..{}", self.n);
        let mut acc = Accumulator::new();
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if self.coordinate_slot(idx, i) != 0 && self.degree_of(idx) <= d {
                acc.add(c * c);
            }
        }
        acc.value()
    }

    /// Degree-`d` influences of every coordinate.
    pub fn degree_influences(&self, d: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.degree_influence(i, d)).collect()
    }

    /// The boolean analog on `{±1}^{n(R-1)}`; see [`BooleanRep`].
    pub fn boolean_analog(&self) -> Result<BooleanRep> {
        BooleanRep::analog_of(self)
    }

    /// Debug dump `{ "s(1),...,s(n)": coefficient }` for coefficients above
    /// `1e-12`, with 1-based basis indices.
    pub fn to_debug_json(&self) -> Value {
        let mut digits = vec![0usize; self.n];
        let mut map = Map::new();
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c.abs() > 1e-12 {
                decode_index(idx, self.r, &mut digits);
                let key = digits.iter().map(|d| (d + 1).to_string()).collect::<Vec<_>>().join(",");
                map.insert(key, Value::from(c));
            }
        }
        Value::Object(map)
    }
}

/// `T_rho g` as a table, computed through the Fourier expansion.
pub fn noisy_table(f: &TableFunction, rho: f64, basis: &Arc<Basis>) -> Result<TableFunction> {
    Ok(transform(f, basis)?.apply_noise(rho).inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng_from_seed;

    fn random_table(n: usize, r: usize, seed: u64) -> TableFunction {
        let mut rng = rng_from_seed(seed);
        TableFunction::from_fn(n, r, |_| rng.gen_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn basis_r2_matches_sign_convention() {
        let b = Basis::new(2).unwrap();
        assert_eq!(b.row(0), &[1.0, 1.0]);
        assert!((b.value(1, 0) - 1.0).abs() < 1e-15);
        assert!((b.value(1, 1) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn basis_orthonormal_and_complete() {
        for r in 2..=8 {
            let b = Basis::new(r).unwrap();
            for i in 0..r {
                for j in 0..r {
                    let ip: f64 = (0..r).map(|x| b.value(i, x) * b.value(j, x)).sum::<f64>() / r as f64;
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - expect).abs() < 1e-12, "R={r} <l{i},l{j}>={ip}");
                }
            }
            for a in 0..r {
                for c in 0..r {
                    let s: f64 = (0..r).map(|i| b.value(i, a) * b.value(i, c)).sum();
                    let expect = if a == c { r as f64 } else { 0.0 };
                    assert!((s - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn basis_rejects_bad_order() {
        assert!(Basis::with_indicator_order(3, &[1, 1]).is_err());
        assert!(Basis::with_indicator_order(3, &[1]).is_err());
        assert!(Basis::new(1).is_err());
    }

    #[test]
    fn transform_of_constant() {
        let basis = Arc::new(Basis::new(3).unwrap());
        let rep = transform(&TableFunction::constant(2, 3, 2.5).unwrap(), &basis).unwrap();
        assert!((rep.mean() - 2.5).abs() < 1e-12);
        assert!(rep.coefficients()[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn transform_of_basis_function() {
        let basis = Arc::new(Basis::new(3).unwrap());
        let b = Arc::clone(&basis);
        let g = TableFunction::from_fn(3, 3, |x| b.value(1, x[0])).unwrap();
        let rep = transform(&g, &basis).unwrap();
        // s = (2,1,1) in 1-based notation
        let target = 9;
        for (idx, &c) in rep.coefficients().iter().enumerate() {
            let expect = if idx == target { 1.0 } else { 0.0 };
            assert!((c - expect).abs() < 1e-12);
        }
        assert!((rep.influence(0) - 1.0).abs() < 1e-12);
        assert!(rep.influence(1).abs() < 1e-12);
    }

    #[test]
    fn round_trip_seeded() {
        let basis = Arc::new(Basis::new(3).unwrap());
        let g = random_table(3, 3, 1);
        let back = transform(&g, &basis).unwrap().inverse();
        for (a, b) in g.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn noise_scales_by_degree() {
        let basis = Arc::new(Basis::new(3).unwrap());
        let rep = transform(&random_table(2, 3, 4), &basis).unwrap();
        let noisy = rep.apply_noise(0.5);
        // index 4 = (1,1) 0-based, degree 2
        assert!((noisy.coefficients()[4] - 0.25 * rep.coefficients()[4]).abs() < 1e-15);
        assert_eq!(rep.apply_noise(1.0).coefficients(), rep.coefficients());
    }

    #[test]
    fn truncation_edges() {
        let basis = Arc::new(Basis::new(3).unwrap());
        let g = random_table(2, 3, 9);
        let rep = transform(&g, &basis).unwrap();
        assert_eq!(rep.truncate(2, Part::Low).coefficients(), rep.coefficients());
        let low0 = rep.truncate(0, Part::Low).inverse();
        for v in low0.values() {
            assert!((v - g.expectation()).abs() < 1e-12);
        }
        let sum = rep.truncate(1, Part::Low).add(&rep.truncate(1, Part::High)).unwrap();
        assert_eq!(sum.coefficients(), rep.coefficients());
    }

    #[test]
    fn noise_sample_extremes() {
        let mut rng = rng_from_seed(3);
        let x = vec![0, 1, 2];
        assert_eq!(noise_sample(&x, 1.0, 3, &mut rng), x);
    }

    #[test]
    fn debug_json_lists_large_coefficients() {
        let basis = Arc::new(Basis::new(2).unwrap());
        let rep = transform(&TableFunction::new(1, 2, vec![1.0, -1.0]).unwrap(), &basis).unwrap();
        let dump = rep.to_debug_json();
        assert_eq!(dump.as_object().unwrap().len(), 1);
        assert!((dump["2"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
}
