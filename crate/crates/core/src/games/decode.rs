//! Influence decoding of a long-code proof back into a game labeling.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::pcp::{averaged_projections, PcpParams, Proof};
use super::{Game, GameAssignment};
use crate::error::{check_budget, invalid, Result};
use crate::fourier::{transform, Basis, TableFunction};
use crate::numeric::{decode_index, derive_seed, rng_from_seed};

/// A decoded labeling plus the evidence behind it.
#[derive(Debug, Clone, Serialize)]
pub struct Decoding {
    pub assignment: GameAssignment,
    /// `true` where a left label came from an influential coordinate rather
    /// than the uniform fallback.
    pub left_from_influence: Vec<bool>,
    /// `Cand[w]`, ascending.
    pub candidates: Vec<Vec<usize>>,
}

/// Decodes `proof` into a labeling of `game`.
///
/// A left vertex `v` takes the first coordinate `j` (scanning `(i, j)`
/// lexicographically) with `Inf_j^{<=d}[g^i_v] > δ`; without one it takes a
/// uniform label. A right vertex `w` takes a uniform label from
/// `Cand[w] = {j : Inf_j^{<=d}[h^i_w] >= δ/2 for some i}`, or from `[N]`
/// when `Cand[w]` is empty. Left vertex `v` draws from
/// `derive_seed(seed, v)` and right vertex `w` from `derive_seed(seed, V + w)`.
pub fn influence_decode(game: &Game, params: &PcpParams, proof: &Proof, seed: u64) -> Result<Decoding> {
    if proof.n != game.alphabet || proof.tables.len() != game.right || proof.r != params.r {
        return invalid("proof does not match the game and parameters");
    }
    check_budget("proof table", params.r, game.alphabet, params.budget)?;
    let (r, n) = (params.r, game.alphabet);
    let basis = Arc::new(Basis::new(r)?);
    let inv: Vec<Vec<usize>> = game
        .edges
        .iter()
        .map(|e| {
            let mut inv = vec![0usize; e.map.len()];
            for (s, &t) in e.map.iter().enumerate() {
                inv[t] = s;
            }
            inv
        })
        .collect();

    let mut left = Vec::with_capacity(game.left);
    let mut left_from_influence = Vec::with_capacity(game.left);
    for (v, hood) in game.left_neighborhoods().iter().enumerate() {
        let mut label = None;
        if !hood.is_empty() {
            'scan: for g in averaged_projections(game, proof, &inv, hood) {
                let rep = transform(&g, &basis)?;
                for j in 0..n {
                    if params.log_delta.exceeded_by(rep.degree_influence(j, params.d)) {
                        label = Some(j);
                        break 'scan;
                    }
                }
            }
        }
        left_from_influence.push(label.is_some());
        left.push(label.unwrap_or_else(|| rng_from_seed(derive_seed(seed, v as u64)).gen_range(0..n)));
    }

    let half = params.log_delta.halved();
    let mut candidates = Vec::with_capacity(game.right);
    let mut right = Vec::with_capacity(game.right);
    let mut x = vec![0usize; n];
    for w in 0..game.right {
        let len = r.pow(n as u32);
        let folded: Vec<usize> = (0..len)
            .map(|idx| {
                decode_index(idx, r, &mut x);
                super::pcp::fold_eval(proof, w, &x)
            })
            .collect();
        let mut cand = vec![false; n];
        for i in 0..r {
            let indicator = TableFunction::new(n, r, folded.iter().map(|&h| f64::from(u8::from(h == i))).collect())?;
            let rep = transform(&indicator, &basis)?;
            for (j, c) in cand.iter_mut().enumerate() {
                if !*c && half.reached_by(rep.degree_influence(j, params.d)) {
                    *c = true;
                }
            }
        }
        let cand: Vec<usize> = (0..n).filter(|&j| cand[j]).collect();
        let mut rng = rng_from_seed(derive_seed(seed, (game.left + w) as u64));
        right.push(if cand.is_empty() {
            rng.gen_range(0..n)
        } else {
            cand[rng.gen_range(0..cand.len())]
        });
        candidates.push(cand);
    }

    Ok(Decoding {
        assignment: GameAssignment { left, right },
        left_from_influence,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{generate_game, honest_proof};

    #[test]
    fn honest_proof_decodes_to_its_labels() {
        let (g, a) = generate_game(3, 3, 3, 1, 2, true, 4).unwrap();
        let params = PcpParams::new(2, 3).unwrap();
        let proof = honest_proof(&g, &a, 3).unwrap();
        let dec = influence_decode(&g, &params, &proof, 0).unwrap();
        assert_eq!(dec.assignment, a);
        assert!(dec.left_from_influence.iter().all(|&b| b));
        for (w, cand) in dec.candidates.iter().enumerate() {
            assert_eq!(cand, &vec![a.right[w]]);
        }
    }

    #[test]
    fn constant_raw_tables_fold_to_first_coordinate() {
        // a constant raw table folds to x_0 + c: only coordinate 0 is influential,
        // so use a two-coordinate game where every candidate set is {0}
        let (g, _) = generate_game(2, 2, 2, 1, 1, false, 2).unwrap();
        let params = PcpParams::new(2, 3).unwrap();
        let proof = Proof::new(3, 2, vec![vec![1; 9]; 2]).unwrap();
        let dec = influence_decode(&g, &params, &proof, 5).unwrap();
        assert!(dec.candidates.iter().all(|c| c == &vec![0]));
        assert_eq!(dec.assignment.right, vec![0, 0]);
    }

    #[test]
    fn no_influential_coordinate_means_uniform_fallback() {
        let (g, a) = generate_game(3, 3, 3, 1, 2, true, 4).unwrap();
        let mut params = PcpParams::new(2, 3).unwrap();
        // δ = 1 exceeds every influence of a [0,1]-valued function
        params.log_delta = crate::params::LogThreshold::from_ln(0.0);
        let proof = honest_proof(&g, &a, 3).unwrap();
        let dec = influence_decode(&g, &params, &proof, 1).unwrap();
        assert!(dec.left_from_influence.iter().all(|&b| !b));
        assert!(dec.candidates.iter().all(Vec::is_empty));
        assert_eq!(dec.assignment, influence_decode(&g, &params, &proof, 1).unwrap().assignment);
        g.check_assignment(&dec.assignment).unwrap();
    }
}
