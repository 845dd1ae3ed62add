//! Exact numeric checks of the analytic inequalities behind the soundness
//! analysis: hypercontractivity on the boolean cube, the invariance gap
//! between `[R]^n` and its boolean analog, and the quantities bounding
//! `E[(T_ρ g)^k]` for a quasirandom `g`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{check_budget, invalid, Error, Result};
use crate::fourier::{transform, Basis, BooleanRep, Part, TableFunction};
use crate::numeric::fsum;
use crate::params::LogThreshold;

/// Largest cube enumerated by [`hypercontractivity_margin`].
pub const MAX_HYPERCONTRACTIVE_VARIABLES: usize = 12;
/// Largest `nR` accepted by [`invariance_gap`].
pub const MAX_INVARIANCE_NR: usize = 20;
/// Cube size accepted by [`k_vs_one_plus_eps`].
pub const MAX_BOOLEAN_ENUMERATION: usize = 20;
pub const DEFAULT_LAB_BUDGET: u64 = 1 << 22;
/// Slack on the noise-rate hypothesis, which is met with equality at the
/// default `ρ`.
const RATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k", rename_all = "snake_case")]
pub enum PsiFunction {
    /// `|t|`.
    Abs,
    /// `t^k` on `[0, 1]`, `0` below, `1` above.
    Clamped(u32),
}

impl PsiFunction {
    pub fn lipschitz(&self) -> f64 {
        match self {
            Self::Abs => 1.0,
            Self::Clamped(k) => f64::from(*k),
        }
    }
}

pub fn psi_eval(psi: PsiFunction, t: f64) -> f64 {
    match psi {
        PsiFunction::Abs => t.abs(),
        PsiFunction::Clamped(k) => {
            if t <= 0.0 {
                0.0
            } else if t >= 1.0 {
                1.0
            } else {
                t.powi(k as i32)
            }
        }
    }
}

/// One checked inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub check: String,
    pub id: String,
    pub params: Value,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`, kept even when negative.
    pub margin: f64,
    pub aux: Value,
}

impl InequalityReport {
    fn new(check: &str, id: &str, params: Value, lhs: f64, rhs: f64, aux: Value) -> Self {
        Self {
            check: check.to_string(),
            id: id.to_string(),
            params,
            lhs,
            rhs,
            margin: rhs - lhs,
            aux,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// A numeric field of `aux`.
    pub fn aux_f64(&self, key: &str) -> Option<f64> {
        self.aux.get(key).and_then(Value::as_f64)
    }

    pub const CSV_HEADER: [&'static str; 7] = ["check", "id", "params", "lhs", "rhs", "margin", "aux"];

    pub fn csv_record(&self) -> [String; 7] {
        [
            self.check.clone(),
            self.id.clone(),
            self.params.to_string(),
            self.lhs.to_string(),
            self.rhs.to_string(),
            self.margin.to_string(),
            self.aux.to_string(),
        ]
    }
}

fn check_rate(p: f64, q: f64, rho: f64) -> Result<()> {
    if !(1.0 <= p && p <= q) {
        return Err(Error::Hypothesis(format!("need 1 <= p <= q, got p={p}, q={q}")));
    }
    let bound = if q == 1.0 { 1.0 } else { ((p - 1.0) / (q - 1.0)).sqrt() };
    if !(0.0..=1.0).contains(&rho) || rho > bound * (1.0 + RATE_TOLERANCE) {
        return Err(Error::Hypothesis(format!(
            "noise rate {rho} exceeds sqrt((p-1)/(q-1)) = {bound} for p={p}, q={q}"
        )));
    }
    Ok(())
}

/// `||T_ρ h||_q <= ||h||_p` on `{±1}^m`, both sides by enumeration.
pub fn hypercontractivity_margin(h: &BooleanRep, p: f64, q: f64, rho: f64) -> Result<InequalityReport> {
    if h.m() > MAX_HYPERCONTRACTIVE_VARIABLES {
        return invalid(format!("m = {} exceeds {MAX_HYPERCONTRACTIVE_VARIABLES}", h.m()));
    }
    check_rate(p, q, rho)?;
    let lhs = h.apply_noise(rho).p_norm(q);
    let rhs = h.p_norm(p);
    Ok(InequalityReport::new(
        "hypercontractivity",
        "",
        json!({"m": h.m(), "p": p, "q": q, "rho": rho}),
        lhs,
        rhs,
        json!({}),
    ))
}

/// `||T_{2ρ} G||_k <= ||G||_{1+ε}` with `ε = 4/ln R`.
///
/// Fails with [`Error::Hypothesis`] when `1 + ε > k`, `2ρ > 1` or
/// `2ρ > sqrt(ε/(k-1))`.
pub fn k_vs_one_plus_eps(g: &BooleanRep, k: usize, rho: f64, r: usize) -> Result<InequalityReport> {
    if k < 2 || r < 2 {
        return invalid(format!("need k >= 2 and R >= 2, got k={k}, R={r}"));
    }
    if g.m() > MAX_BOOLEAN_ENUMERATION {
        return invalid(format!("m = {} exceeds {MAX_BOOLEAN_ENUMERATION}", g.m()));
    }
    let eps = 4.0 / (r as f64).ln();
    let p = 1.0 + eps;
    let q = k as f64;
    check_rate(p, q, 2.0 * rho)?;
    let lhs = g.apply_noise(2.0 * rho).p_norm(q);
    let rhs = g.p_norm(p);
    Ok(InequalityReport::new(
        "k_vs_one_plus_eps",
        "",
        json!({"m": g.m(), "k": k, "R": r, "rho": rho, "eps": eps}),
        lhs,
        rhs,
        json!({"rate_bound": (eps / (q - 1.0)).sqrt()}),
    ))
}

/// `|E[ψ(F^{<=d}(y))] - E[ψ(f^{<=d}(x))]|` where `F` is the boolean analog
/// of `f`. `rhs` is `0` so the margin is the negated gap; `aux` carries both
/// expectations and the largest degree-`d` influence of `f`.
pub fn invariance_gap(f: &TableFunction, d: usize, psi: PsiFunction, budget: u64) -> Result<InequalityReport> {
    let (n, r) = (f.n(), f.r());
    if n * r > MAX_INVARIANCE_NR {
        return invalid(format!("nR = {} exceeds {MAX_INVARIANCE_NR}", n * r));
    }
    check_budget("function table", r, n, budget)?;
    let basis = Arc::new(Basis::new(r)?);
    let rep = transform(f, &basis)?;
    let low = rep.truncate(d, Part::Low);
    let cube = low.boolean_analog()?.values();
    let boolean_side = fsum(cube.iter().map(|&v| psi_eval(psi, v))) / cube.len() as f64;
    let table = low.inverse();
    let r_side = fsum(table.values().iter().map(|&v| psi_eval(psi, v))) / table.values().len() as f64;
    let max_influence = rep.degree_influences(d).into_iter().fold(0.0, f64::max);
    Ok(InequalityReport::new(
        "invariance_gap",
        "",
        json!({"n": n, "R": r, "d": d, "psi": psi}),
        (boolean_side - r_side).abs(),
        0.0,
        json!({"boolean": boolean_side, "product": r_side, "max_influence": max_influence}),
    ))
}

/// Quantities behind the bound on `E[(T_ρ g)^k]` for `g: [R]^n -> [0,1]`
/// with `E[g] = 1/R`.
///
/// `lhs = E[(T_ρ g)^k]`, `rhs = 1/R^k`. `aux` holds the implied constant
/// `lhs·R^k`, the largest degree-`d` influence and whether it stays below
/// `δ`, `||T_ρ g^{>d}||_2^2` with its bound `ρ^{2d} ||g||_2^2`,
/// `E|T_{1/2} g^{<=d}|`, `E[(T_{1/2} g^{<=d})^2]`, `E[(T_{1/2} g)^2]` and `E[g]`.
pub fn main_lemma_report(
    g: &TableFunction,
    k: usize,
    rho: f64,
    d: usize,
    log_delta: LogThreshold,
    budget: u64,
) -> Result<InequalityReport> {
    let (n, r) = (g.n(), g.r());
    check_budget("function table", r, n, budget)?;
    if k < 1 || !(0.0..=1.0).contains(&rho) {
        return invalid(format!("need k >= 1 and rho in [0, 1], got k={k}, rho={rho}"));
    }
    if let Some(v) = g.values().iter().find(|v| !(-1e-12..=1.0 + 1e-12).contains(*v)) {
        return invalid(format!("g takes value {v} outside [0, 1]"));
    }
    let mean = g.expectation();
    if (mean - 1.0 / r as f64).abs() > 1e-9 {
        return invalid(format!("E[g] = {mean}, expected 1/R = {}", 1.0 / r as f64));
    }
    let basis = Arc::new(Basis::new(r)?);
    let rep = transform(g, &basis)?;
    let lhs = rep.apply_noise(rho).inverse().moment(k as u32);
    let rhs = (r as f64).powi(-(k as i32));
    let high_noise = rep.truncate(d, Part::High).apply_noise(rho).squared_norm();
    let high_bound = rho.powi(2 * d.min(i32::MAX as usize / 2) as i32) * rep.squared_norm();
    let low_half = rep.truncate(d, Part::Low).apply_noise(0.5).inverse();
    let influences = rep.degree_influences(d);
    let max_influence = influences.iter().copied().fold(0.0, f64::max);
    let quasirandom = !influences.iter().any(|&x| log_delta.exceeded_by(x));
    Ok(InequalityReport::new(
        "main_lemma",
        "",
        json!({"n": n, "R": r, "k": k, "rho": rho, "d": d, "ln_delta": log_delta.ln()}),
        lhs,
        rhs,
        json!({
            "implied_constant": lhs / rhs,
            "max_influence": max_influence,
            "quasirandom": quasirandom,
            "high_noise_sq": high_noise,
            "high_noise_bound": high_bound,
            "low_half_abs": low_half.p_norm(1.0),
            "low_half_sq": low_half.moment(2),
            "half_sq": rep.apply_noise(0.5).squared_norm(),
            "mean": mean,
        }),
    ))
}
