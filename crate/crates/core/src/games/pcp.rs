//! The k-query long-code verifier over a unique game and its reduction to
//! Max k-CSP_R.
//!
//! A proof holds, for every right vertex `w`, a raw table
//! `h̃_w: [R]^N -> [R]`. Every query goes through folding,
//! `h_w(x) = h̃_w(x - x_0·1) + x_0 (mod R)`, so only the entries with
//! `x_0 = 0` (the folding representatives) are ever read.
//!
//! The verifier picks a uniform left vertex `v`, `k` independent uniform
//! incident edges `(v, w_j)`, a uniform `z ∈ [R]^N`, independent
//! `ρ`-correlated copies `x^{(j)}` of `z`, and accepts iff all
//! `h_{w_j}(x^{(j)} ∘ π_{w_j,v})` agree, where `(x ∘ π)_i = x_{π(i)}` and
//! `π_{w,v} = π_{v,w}^{-1}`.
//!
//! Exact acceptance is `E_v sum_i E_z[(T_ρ g^i_v(z))^k]` with
//! `g^i_v(x) = E_{w ~ v}[1{h_w(x ∘ π_{w,v}) = i}]`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Game, GameAssignment, GameKind};
use crate::csp::{Assignment, Constraint, CspInstance};
use crate::error::{check_budget, invalid, Error, Result};
use crate::fourier::TableFunction;
use crate::numeric::{
    checked_pow, decode_index, derive_seed, encode_index, fsum, mean, odometer_next, rng_from_seed, Accumulator, Estimate,
};
use crate::params::{default_degree, default_log_delta, default_rho, LogThreshold};

/// Default enumeration budget for exact computations.
pub const DEFAULT_PCP_BUDGET: u64 = 1 << 24;

/// How [`reduce_ug_to_csp`] builds constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcpMode {
    /// Enumerate every verifier outcome with its exact probability.
    Exact,
    /// Draw this many verifier tuples, weight `1/m` each.
    Sampled(usize),
}

/// How [`verifier_acceptance`] computes the acceptance probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptanceMode {
    Exact,
    MonteCarlo(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpParams {
    pub k: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub rho: f64,
    /// Truncation degree (distinct from the d of a d-to-1 game).
    pub d: usize,
    /// `ln δ`.
    pub log_delta: LogThreshold,
    pub mode: PcpMode,
    pub budget: u64,
}

impl PcpParams {
    /// Defaults `ρ = 1/sqrt((k-1) ln R)` (clamped to 1), `d = ceil(10 k ln R)`,
    /// `δ = R^{-(10 + 100 k ln R)}`, exact mode.
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
            mode: PcpMode::Exact,
            budget: DEFAULT_PCP_BUDGET,
        })
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return invalid(format!("rho must lie in [0, 1], got {rho}"));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: PcpMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Raw (unfolded) long-code tables, one per right vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub r: usize,
    /// Number of coordinates (the game alphabet `N`).
    pub n: usize,
    pub tables: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ProofFile {
    #[serde(rename = "R")]
    r: usize,
    tables: BTreeMap<usize, Vec<usize>>,
}

impl Proof {
    pub fn new(r: usize, n: usize, tables: Vec<Vec<usize>>) -> Result<Self> {
        let proof = Self { r, n, tables };
        proof.validate()?;
        Ok(proof)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return invalid("proof: R must be at least 2");
        }
        let len = checked_pow(self.r, self.n);
        for (w, t) in self.tables.iter().enumerate() {
            if Some(t.len()) != len {
                return invalid(format!(
                    "tables.{w}: {} entries, expected R^n = {}^{}",
                    t.len(),
                    self.r,
                    self.n
                ));
            }
            if let Some(bad) = t.iter().find(|&&x| x >= self.r) {
                return invalid(format!("tables.{w}: value {bad} outside 0..{}", self.r));
            }
        }
        Ok(())
    }

    fn check_against(&self, game: &Game) -> Result<()> {
        if game.kind != GameKind::Unique {
            return invalid("the long-code verifier needs a unique game");
        }
        if self.n != game.alphabet || self.tables.len() != game.right {
            return invalid(format!(
                "proof covers {} vertices over {} coordinates; game has W = {}, N = {}",
                self.tables.len(),
                self.n,
                game.right,
                game.alphabet
            ));
        }
        Ok(())
    }

    /// Parses `{"R": int, "tables": {w: [values]}}`; `n` comes from the game.
    pub fn from_json(text: &str, n: usize) -> Result<Self> {
        let file: ProofFile = serde_json::from_str(text)?;
        let count = file.tables.keys().next_back().map_or(0, |w| w + 1);
        if file.tables.len() != count {
            return invalid("tables: keys must be 0..W without gaps");
        }
        Self::new(file.r, n, file.tables.into_values().collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ProofFile {
            r: self.r,
            tables: self.tables.iter().cloned().enumerate().collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Number of folding representatives per table, `R^{n-1}`.
    pub fn representatives(&self) -> usize {
        self.r.pow(self.n as u32 - 1)
    }
}

/// Folded evaluation `h̃_w(x - x_0·1) + x_0 (mod R)`.
pub fn fold_eval(proof: &Proof, w: usize, x: &[usize]) -> usize {
    let (value, shift) = folded_query(proof, x);
    (proof.tables[w][value] + shift) % proof.r
}

/// Raw-table index of the folding representative of `x`, and the shift `x_0`.
fn folded_query(proof: &Proof, x: &[usize]) -> (usize, usize) {
    let r = proof.r;
    let shift = x[0];
    let index = x.iter().fold(0, |acc, &xi| acc * r + (xi + r - shift) % r);
    (index, shift)
}

/// Long-code dictators `h̃_w(x) = x_{φ(w)}`.
pub fn honest_proof(game: &Game, labels: &GameAssignment, r: usize) -> Result<Proof> {
    game.check_assignment(labels)?;
    let n = game.alphabet;
    let len = checked_pow(r, n).ok_or_else(|| Error::Validation("R^N overflows".into()))?;
    let mut digits = vec![0usize; n];
    let tables = labels
        .right
        .iter()
        .map(|&j| {
            (0..len)
                .map(|idx| {
                    decode_index(idx, r, &mut digits);
                    digits[j]
                })
                .collect()
        })
        .collect();
    Proof::new(r, n, tables)
}

/// CSP assignment reading each folding representative off the raw tables.
/// Variable `w * R^{N-1} + t` holds `h̃_w` at the representative whose
/// trailing `N-1` coordinates encode `t`.
pub fn proof_assignment(proof: &Proof) -> Assignment {
    let reps = proof.representatives();
    Assignment(proof.tables.iter().flat_map(|t| t[..reps].iter().copied()).collect())
}

/// Inverse of every edge map: `inv[e][π_{v,w}(σ)] = σ`, i.e. `π_{w,v}`.
fn inverse_maps(game: &Game) -> Vec<Vec<usize>> {
    game.edges
        .iter()
        .map(|e| {
            let mut inv = vec![0usize; e.map.len()];
            for (sigma, &t) in e.map.iter().enumerate() {
                inv[t] = sigma;
            }
            inv
        })
        .collect()
}

/// `(x ∘ π)_i = x_{π(i)}`.
pub fn permute_point(x: &[usize], pi: &[usize], out: &mut [usize]) {
    for (o, &p) in out.iter_mut().zip(pi) {
        *o = x[p];
    }
}

fn check_verifier_input(game: &Game, params: &PcpParams, proof: &Proof) -> Result<usize> {
    proof.check_against(game)?;
    if proof.r != params.r {
        return invalid(format!("proof has R = {}, params have R = {}", proof.r, params.r));
    }
    if !(0.0..=1.0).contains(&params.rho) {
        return invalid(format!("rho must lie in [0, 1], got {}", params.rho));
    }
    game.left_degree()
        .ok_or_else(|| Error::Validation("the verifier needs a left-regular game (every v of equal positive degree)".into()))
}

/// Tables `g^i_v` for `i = 0..R`.
#[allow(clippy::needless_range_loop)]
pub(crate) fn averaged_projections(game: &Game, proof: &Proof, inv: &[Vec<usize>], hood: &[usize]) -> Vec<TableFunction> {
    let (r, n) = (proof.r, proof.n);
    let len = r.pow(n as u32);
    let share = 1.0 / hood.len() as f64;
    let mut tables = vec![vec![0.0; len]; r];
    let mut x = vec![0usize; n];
    let mut y = vec![0usize; n];
    for idx in 0..len {
        decode_index(idx, r, &mut x);
        for &ei in hood {
            permute_point(&x, &inv[ei], &mut y);
            let value = fold_eval(proof, game.edges[ei].w, &y);
            tables[value][idx] += share;
        }
    }
    tables
        .into_iter()
        .map(|t| TableFunction::new(n, r, t).expect("sized from R^n"))
        .collect()
}

/// `sum_i E_z[(T_ρ g^i_v(z))^k]` for every left vertex `v`.
pub fn vertex_acceptance_sums(game: &Game, params: &PcpParams, proof: &Proof) -> Result<Vec<f64>> {
    check_verifier_input(game, params, proof)?;
    check_budget("proof table", params.r, game.alphabet, params.budget)?;
    let inv = inverse_maps(game);
    let hoods = game.left_neighborhoods();
    hoods
        .par_iter()
        .map(|hood| {
            let sums = averaged_projections(game, proof, &inv, hood)
                .iter()
                .map(|g| g.noisy(params.rho).moment(params.k as u32))
                .collect::<Vec<f64>>();
            Ok(fsum(sums))
        })
        .collect()
}

/// One simulated verifier run.
fn simulate_trial(game: &Game, params: &PcpParams, proof: &Proof, inv: &[Vec<usize>], hoods: &[Vec<usize>], seed: u64) -> bool {
    let (r, n) = (params.r, game.alphabet);
    let mut rng = rng_from_seed(seed);
    let hood = &hoods[rng.gen_range(0..game.left)];
    let edges: Vec<usize> = (0..params.k).map(|_| hood[rng.gen_range(0..hood.len())]).collect();
    let z: Vec<usize> = (0..n).map(|_| rng.gen_range(0..r)).collect();
    let mut y = vec![0usize; n];
    let mut first = None;
    let mut accept = true;
    for ei in edges {
        let x = crate::fourier::noise_sample(&z, params.rho, r, &mut rng);
        permute_point(&x, &inv[ei], &mut y);
        let value = fold_eval(proof, game.edges[ei].w, &y);
        match first {
            None => first = Some(value),
            Some(f) if f != value => accept = false,
            _ => {}
        }
    }
    accept
}

/// Acceptance probability of the verifier on `proof`.
///
/// Exact mode sums `E_z[(T_ρ g^i_v)^k]`; Monte-Carlo mode simulates trials
/// seeded by [`derive_seed`]`(seed, t)` and reports the binomial standard
/// error.
pub fn verifier_acceptance(game: &Game, params: &PcpParams, proof: &Proof, mode: AcceptanceMode, seed: u64) -> Result<Estimate> {
    match mode {
        AcceptanceMode::Exact => Ok(Estimate::exact(mean(&vertex_acceptance_sums(game, params, proof)?))),
        AcceptanceMode::MonteCarlo(trials) => {
            check_verifier_input(game, params, proof)?;
            if trials == 0 {
                return invalid("trials must be positive");
            }
            let inv = inverse_maps(game);
            let hoods = game.left_neighborhoods();
            let accepted = (0..trials)
                .into_par_iter()
                .filter(|&t| simulate_trial(game, params, proof, &inv, &hoods, derive_seed(seed, t)))
                .count();
            Ok(Estimate::binomial(accepted as u64, trials))
        }
    }
}

/// Per-coordinate joint law of `k` independent `ρ`-correlated copies of a
/// uniform `z`: `q(a) = (1/R) sum_z prod_j (ρ 1{a_j = z} + (1-ρ)/R)`.
fn coordinate_law(r: usize, k: usize, rho: f64) -> Vec<f64> {
    let len = r.pow(k as u32);
    let mut a = vec![0usize; k];
    (0..len)
        .map(|idx| {
            decode_index(idx, r, &mut a);
            fsum((0..r).map(|z| {
                a.iter()
                    .map(|&aj| rho * f64::from(u8::from(aj == z)) + (1.0 - rho) / r as f64)
                    .product::<f64>()
            })) / r as f64
        })
        .collect()
}

/// Canonical key of one verifier tuple: sorted distinct `(variable, shift)`
/// pairs with shifts taken relative to the first pair.
fn constraint_key(mut queries: Vec<(usize, usize)>, r: usize) -> Vec<(usize, usize)> {
    queries.sort_unstable();
    queries.dedup();
    let base = queries[0].1;
    queries.iter().map(|&(var, s)| (var, (s + r - base) % r)).collect()
}

/// Predicate over the distinct variables of a key: accept iff every
/// `value(var) + shift` agrees mod `R`.
fn key_constraint(key: &[(usize, usize)], r: usize, weight: f64) -> Constraint {
    let mut scope: Vec<usize> = key.iter().map(|&(v, _)| v).collect();
    scope.dedup();
    let rows = r.pow(scope.len() as u32);
    let mut values = vec![0usize; scope.len()];
    let predicate = (0..rows)
        .map(|row| {
            decode_index(row, r, &mut values);
            let mut target = None;
            let ok = key.iter().all(|&(var, s)| {
                let pos = scope.iter().position(|&v| v == var).expect("scope built from key");
                let q = (values[pos] + s) % r;
                *target.get_or_insert(q) == q
            });
            u8::from(ok)
        })
        .collect();
    Constraint {
        weight,
        scope,
        predicate,
    }
}

/// CSP variable and shift read by querying `h_w` at `y`.
fn query_variable(w: usize, y: &[usize], r: usize, reps: usize) -> (usize, usize) {
    let shift = y[0];
    let tail: Vec<usize> = y[1..].iter().map(|&yi| (yi + r - shift) % r).collect();
    (w * reps + encode_index(&tail, r), shift)
}

/// Builds the Max k-CSP_R instance whose value at [`proof_assignment`] is the
/// verifier's acceptance probability.
///
/// Variables are the folding representatives `(w, x)` with `x_0 = 0`.
/// Exact mode enumerates `(v, w_1..w_k, x^{(1)}..x^{(k)})` with exact
/// probabilities and merges tuples with identical constraints; sampled mode
/// draws `m` tuples with weight `1/m` each.
pub fn reduce_ug_to_csp(game: &Game, params: &PcpParams, seed: u64) -> Result<CspInstance> {
    if game.kind != GameKind::Unique {
        return invalid("reduce_ug_to_csp expects a unique game");
    }
    let deg = game
        .left_degree()
        .ok_or_else(|| Error::Validation("the verifier needs a left-regular game".into()))?;
    let (r, n, k) = (params.r, game.alphabet, params.k);
    if n == 0 {
        return invalid("game alphabet must be positive");
    }
    check_budget("proof table", r, n, params.budget)?;
    let reps = r.pow(n as u32 - 1);
    let inv = inverse_maps(game);
    let hoods = game.left_neighborhoods();
    let num_vars = game.right * reps;

    let constraints = match params.mode {
        PcpMode::Exact => {
            let space = game.left as f64 * (deg as f64).powi(k as i32) * (r as f64).powi((n * k) as i32);
            if space > params.budget as f64 {
                return Err(Error::Budget {
                    what: "verifier distribution",
                    needed: space,
                    budget: params.budget,
                });
            }
            let law = coordinate_law(r, k, params.rho);
            let base = 1.0 / (game.left as f64 * (deg as f64).powi(k as i32));
            let mut merged: BTreeMap<Vec<(usize, usize)>, Accumulator> = BTreeMap::new();
            let mut picks = vec![0usize; k];
            let mut points = vec![0usize; n * k];
            let mut column = vec![0usize; k];
            let mut y = vec![0usize; n];
            for hood in &hoods {
                picks.iter_mut().for_each(|p| *p = 0);
                loop {
                    points.iter_mut().for_each(|p| *p = 0);
                    loop {
                        // points holds x^{(1)}, ..., x^{(k)} back to back
                        let mut prob = base;
                        for c in 0..n {
                            for j in 0..k {
                                column[j] = points[j * n + c];
                            }
                            prob *= law[encode_index(&column, r)];
                        }
                        let queries = picks
                            .iter()
                            .enumerate()
                            .map(|(j, &p)| {
                                let ei = hood[p];
                                permute_point(&points[j * n..(j + 1) * n], &inv[ei], &mut y);
                                query_variable(game.edges[ei].w, &y, r, reps)
                            })
                            .collect();
                        merged.entry(constraint_key(queries, r)).or_default().add(prob);
                        if !odometer_next(&mut points, r) {
                            break;
                        }
                    }
                    if !odometer_next(&mut picks, deg) {
                        break;
                    }
                }
            }
            merged
                .into_iter()
                .filter(|(_, w)| w.value() > 0.0)
                .map(|(key, w)| key_constraint(&key, r, w.value()))
                .collect()
        }
        PcpMode::Sampled(m) => {
            if m == 0 {
                return invalid("sampled mode needs at least one sample");
            }
            let mut rng = rng_from_seed(seed);
            let mut y = vec![0usize; n];
            (0..m)
                .map(|_| {
                    let hood = &hoods[rng.gen_range(0..game.left)];
                    let z: Vec<usize> = (0..n).map(|_| rng.gen_range(0..r)).collect();
                    let queries = (0..k)
                        .map(|_| {
                            let ei = hood[rng.gen_range(0..hood.len())];
                            let x = crate::fourier::noise_sample(&z, params.rho, r, &mut rng);
                            permute_point(&x, &inv[ei], &mut y);
                            query_variable(game.edges[ei].w, &y, r, reps)
                        })
                        .collect();
                    key_constraint(&constraint_key(queries, r), r, 1.0 / m as f64)
                })
                .collect()
        }
    };
    CspInstance::new(num_vars, r, constraints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::Edge;

    fn two_edge_game() -> (Game, GameAssignment) {
        let edges = vec![
            Edge {
                v: 0,
                w: 0,
                map: vec![1, 2, 0],
            },
            Edge {
                v: 0,
                w: 1,
                map: vec![2, 0, 1],
            },
        ];
        let g = Game::new(GameKind::Unique, 1, 2, 3, edges).unwrap();
        let a = GameAssignment {
            left: vec![0],
            right: vec![1, 2],
        };
        (g, a)
    }

    #[test]
    fn permutation_on_a_three_cycle() {
        let x = [10, 20, 30];
        let mut out = [0; 3];
        permute_point(&x, &[1, 2, 0], &mut out);
        assert_eq!(out, [20, 30, 10]);
    }

    #[test]
    fn folding_fixes_dictators() {
        let (g, a) = two_edge_game();
        let proof = honest_proof(&g, &a, 3).unwrap();
        let mut x = vec![0usize; 3];
        for idx in 0..27 {
            decode_index(idx, 3, &mut x);
            assert_eq!(fold_eval(&proof, 0, &x), x[1]);
            assert_eq!(fold_eval(&proof, 1, &x), x[2]);
        }
    }

    #[test]
    fn folded_tables_are_balanced() {
        let mut rng = rng_from_seed(8);
        for (r, n) in [(2usize, 3usize), (3, 2), (3, 3), (4, 2), (4, 3)] {
            let len: usize = r.pow(n as u32);
            let table: Vec<usize> = (0..len).map(|_| rng.gen_range(0..r)).collect();
            let proof = Proof::new(r, n, vec![table]).unwrap();
            let mut counts = vec![0usize; r];
            let mut x = vec![0usize; n];
            for idx in 0..len {
                decode_index(idx, r, &mut x);
                counts[fold_eval(&proof, 0, &x)] += 1;
            }
            assert!(counts.iter().all(|&c| c * r == len), "R={r} n={n} {counts:?}");
        }
    }

    #[test]
    fn constant_raw_table_folds_to_shifted_first_coordinate() {
        let proof = Proof::new(3, 2, vec![vec![2; 9]]).unwrap();
        for x0 in 0..3 {
            for x1 in 0..3 {
                assert_eq!(fold_eval(&proof, 0, &[x0, x1]), (x0 + 2) % 3);
            }
        }
    }

    #[test]
    fn honest_acceptance_closed_form() {
        let (g, a) = two_edge_game();
        let params = PcpParams::new(2, 3).unwrap().with_rho(0.5).unwrap();
        let proof = honest_proof(&g, &a, 3).unwrap();
        let p = verifier_acceptance(&g, &params, &proof, AcceptanceMode::Exact, 0).unwrap();
        assert!((p.value - 0.5).abs() < 1e-12, "{}", p.value);
    }

    #[test]
    fn exact_reduction_weights_form_a_distribution() {
        let (g, a) = two_edge_game();
        let params = PcpParams::new(2, 3).unwrap().with_rho(0.5).unwrap();
        let csp = reduce_ug_to_csp(&g, &params, 0).unwrap();
        assert!((csp.total_weight() - 1.0).abs() < 1e-12);
        assert_eq!(csp.n, 2 * 9);
        let proof = honest_proof(&g, &a, 3).unwrap();
        let value = csp.evaluate(&proof_assignment(&proof)).unwrap();
        assert!((value - 0.5).abs() < 1e-9, "{value}");
    }

    #[test]
    fn coordinate_law_sums_to_one() {
        let law = coordinate_law(3, 2, 0.3);
        assert!((fsum(law.iter().copied()) - 1.0).abs() < 1e-15);
        // two copies agree w.p. (rho + (1-rho)/R)^2 + (R-1)((1-rho)/R)^2
        let agree: f64 = (0..3).map(|a| law[a * 3 + a]).sum();
        let expect = (0.3f64 + 0.7 / 3.0).powi(2) + 2.0 * (0.7f64 / 3.0).powi(2);
        assert!((agree - expect).abs() < 1e-15);
    }

    #[test]
    fn proof_json_round_trip() {
        let (g, a) = two_edge_game();
        let proof = honest_proof(&g, &a, 3).unwrap();
        let text = proof.to_json().unwrap();
        assert!(text.contains("\"R\": 3"));
        assert_eq!(Proof::from_json(&text, 3).unwrap(), proof);
    }

    #[test]
    fn irregular_game_rejected() {
        let edges = vec![
            Edge {
                v: 0,
                w: 0,
                map: vec![0, 1],
            },
            Edge {
                v: 0,
                w: 1,
                map: vec![0, 1],
            },
            Edge {
                v: 1,
                w: 0,
                map: vec![1, 0],
            },
        ];
        let g = Game::new(GameKind::Unique, 2, 2, 2, edges).unwrap();
        let proof = Proof::new(2, 2, vec![vec![0; 4]; 2]).unwrap();
        let params = PcpParams::new(2, 2).unwrap();
        let err = verifier_acceptance(&g, &params, &proof, AcceptanceMode::Exact, 0).unwrap_err();
        assert!(err.to_string().contains("left-regular"));
    }
}
