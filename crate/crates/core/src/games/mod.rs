//! Bipartite label-cover games: unique games and d-to-1 games.
//!
//! Labels are 0-based in memory. The JSON file format uses 1-based label
//! values: `map[σ-1] = π(σ)`.
//!
//! Submodules hold the long-code verifier over unique games ([`pcp`]) and
//! the influence decoder ([`decode`]).

pub mod decode;
pub mod pcp;

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{odometer_next, rng_from_seed};

pub use decode::{influence_decode, Decoding};
pub use pcp::{
    fold_eval, honest_proof, proof_assignment, reduce_ug_to_csp, verifier_acceptance, vertex_acceptance_sums, AcceptanceMode,
    PcpMode, PcpParams, Proof,
};

/// Default number of assignments [`brute_force_game_value`] may visit.
pub const DEFAULT_GAME_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameKind {
    Unique,
    /// Every right label has exactly `d` preimages.
    DToOne(usize),
}

/// An edge `(v, w)` with `map[σ] = π_{v,w}(σ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub v: usize,
    pub w: usize,
    pub map: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    pub kind: GameKind,
    /// `|V|`
    pub left: usize,
    /// `|W|`
    pub right: usize,
    /// Left alphabet size `N`.
    pub alphabet: usize,
    pub edges: Vec<Edge>,
}

/// Labels for both sides of a game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameAssignment {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct EdgeFile {
    v: usize,
    w: usize,
    map: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[serde(rename = "V")]
    left: usize,
    #[serde(rename = "W")]
    right: usize,
    #[serde(rename = "N")]
    alphabet: usize,
    edges: Vec<EdgeFile>,
}

impl Game {
    pub fn new(kind: GameKind, left: usize, right: usize, alphabet: usize, edges: Vec<Edge>) -> Result<Self> {
        let game = Self {
            kind,
            left,
            right,
            alphabet,
            edges,
        };
        game.validate()?;
        Ok(game)
    }

    /// Right alphabet size: `N` for unique games, `N/d` for d-to-1 games.
    pub fn right_alphabet(&self) -> usize {
        match self.kind {
            GameKind::Unique => self.alphabet,
            GameKind::DToOne(d) => self.alphabet / d.max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphabet == 0 {
            return invalid("N must be positive");
        }
        if let GameKind::DToOne(d) = self.kind {
            if d == 0 || !self.alphabet.is_multiple_of(d) {
                return invalid(format!("d = {d} must divide N = {}", self.alphabet));
            }
        }
        if self.edges.is_empty() {
            return invalid("edges: game has no edges");
        }
        let m = self.right_alphabet();
        for (ei, e) in self.edges.iter().enumerate() {
            if e.v >= self.left || e.w >= self.right {
                return invalid(format!("edges[{ei}]: endpoint ({}, {}) out of range", e.v, e.w));
            }
            if e.map.len() != self.alphabet {
                return invalid(format!(
                    "edges[{ei}].map has {} entries, expected N = {}",
                    e.map.len(),
                    self.alphabet
                ));
            }
            let mut counts = vec![0usize; m];
            for &t in &e.map {
                if t >= m {
                    return invalid(format!("edges[{ei}].map value {} outside 1..={m}", t + 1));
                }
                counts[t] += 1;
            }
            let need = match self.kind {
                GameKind::Unique => 1,
                GameKind::DToOne(d) => d,
            };
            if let Some(theta) = counts.iter().position(|&c| c != need) {
                return invalid(format!(
                    "edges[{ei}].map: label {} has {} preimages, expected {need}",
                    theta + 1,
                    counts[theta]
                ));
            }
        }
        Ok(())
    }

    /// Incident edge indices per left vertex.
    pub fn left_neighborhoods(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.left];
        for (ei, e) in self.edges.iter().enumerate() {
            out[e.v].push(ei);
        }
        out
    }

    /// The common left degree, if every left vertex has the same positive degree.
    pub fn left_degree(&self) -> Option<usize> {
        let hoods = self.left_neighborhoods();
        let d = hoods.first()?.len();
        (d > 0 && hoods.iter().all(|h| h.len() == d)).then_some(d)
    }

    pub fn check_assignment(&self, a: &GameAssignment) -> Result<()> {
        if a.left.len() != self.left || a.right.len() != self.right {
            return invalid("game assignment has the wrong number of labels");
        }
        if a.left.iter().any(|&l| l >= self.alphabet) || a.right.iter().any(|&l| l >= self.right_alphabet()) {
            return invalid("game assignment label out of range");
        }
        Ok(())
    }

    fn satisfied_edges(&self, a: &GameAssignment) -> usize {
        self.edges.iter().filter(|e| e.map[a.left[e.v]] == a.right[e.w]).count()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GameFile = serde_json::from_str(text)?;
        let kind = match (file.kind.as_str(), file.d) {
            ("unique", _) => GameKind::Unique,
            ("d-to-1", Some(d)) => GameKind::DToOne(d),
            ("d-to-1", None) => return invalid("d: required for kind \"d-to-1\""),
            (other, _) => return invalid(format!("kind: unknown game kind \"{other}\"")),
        };
        let mut edges = Vec::with_capacity(file.edges.len());
        for (ei, e) in file.edges.into_iter().enumerate() {
            if e.map.contains(&0) {
                return invalid(format!("edges[{ei}].map: labels are 1-based"));
            }
            edges.push(Edge {
                v: e.v,
                w: e.w,
                map: e.map.into_iter().map(|t| t - 1).collect(),
            });
        }
        Self::new(kind, file.left, file.right, file.alphabet, edges)
    }

    pub fn to_json(&self) -> Result<String> {
        let (kind, d) = match self.kind {
            GameKind::Unique => ("unique".to_string(), None),
            GameKind::DToOne(d) => ("d-to-1".to_string(), Some(d)),
        };
        let file = GameFile {
            kind,
            d,
            left: self.left,
            right: self.right,
            alphabet: self.alphabet,
            edges: self
                .edges
                .iter()
                .map(|e| EdgeFile {
                    v: e.v,
                    w: e.w,
                    map: e.map.iter().map(|t| t + 1).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

/// Fraction of edges `(v, w)` with `π(φ(v)) = φ(w)`.
pub fn game_value(game: &Game, a: &GameAssignment) -> Result<f64> {
    game.check_assignment(a)?;
    Ok(game.satisfied_edges(a) as f64 / game.edges.len() as f64)
}

/// Exact game value with the lexicographically smallest maximizer
/// (left labels first, then right labels).
///
/// Enumerates left labelings; for each, every right vertex independently
/// takes its most-satisfied label (smallest on ties), which is the
/// lexicographically first optimal completion.
pub fn brute_force_game_value(game: &Game, budget: u64) -> Result<(GameAssignment, f64)> {
    let space = (game.alphabet as f64).powi(game.left as i32) * (game.right_alphabet() as f64).powi(game.right as i32);
    if space > budget as f64 {
        return Err(Error::Budget {
            what: "game",
            needed: space,
            budget,
        });
    }
    let m = game.right_alphabet();
    let mut left = vec![0usize; game.left];
    let mut counts = vec![0usize; game.right * m];
    let mut best: Option<(usize, GameAssignment)> = None;
    loop {
        counts.iter_mut().for_each(|c| *c = 0);
        for e in &game.edges {
            counts[e.w * m + e.map[left[e.v]]] += 1;
        }
        let mut total = 0;
        let right: Vec<usize> = (0..game.right)
            .map(|w| {
                let row = &counts[w * m..(w + 1) * m];
                let (label, &count) = row
                    .iter()
                    .enumerate()
                    .fold((0, &row[0]), |acc, (l, c)| if c > acc.1 { (l, c) } else { acc });
                total += count;
                label
            })
            .collect();
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((
                total,
                GameAssignment {
                    left: left.clone(),
                    right,
                },
            ));
        }
        if !odometer_next(&mut left, game.alphabet) {
            break;
        }
    }
    let (total, assignment) = best.expect("at least one labeling is visited");
    Ok((assignment, total as f64 / game.edges.len() as f64))
}

/// Spreads each d-to-1 constraint into a permutation of `[N]`: the ascending
/// preimages `σ_1 < ... < σ_d` of right label `θ` go to `d θ + i` (0-based).
pub fn reduce_d21_to_ug(game: &Game) -> Result<Game> {
    game.validate()?;
    let GameKind::DToOne(d) = game.kind else {
        return invalid("reduce_d21_to_ug expects a d-to-1 game");
    };
    let edges = game
        .edges
        .iter()
        .map(|e| {
            let mut preimages: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (sigma, &theta) in e.map.iter().enumerate() {
                preimages.entry(theta).or_default().push(sigma);
            }
            let mut map = vec![0usize; game.alphabet];
            for (theta, sigmas) in preimages {
                for (i, sigma) in sigmas.into_iter().enumerate() {
                    map[sigma] = d * theta + i;
                }
            }
            Edge { v: e.v, w: e.w, map }
        })
        .collect();
    Game::new(GameKind::Unique, game.left, game.right, game.alphabet, edges)
}

/// Maps a labeling of the spread unique game back to the d-to-1 game:
/// left labels unchanged, right label `⌊φ'(w) / d⌋`.
pub fn decode_d21_assignment(a: &GameAssignment, d: usize) -> GameAssignment {
    GameAssignment {
        left: a.left.clone(),
        right: a.right.iter().map(|&l| l / d).collect(),
    }
}

/// Keeps the left labels of `a` and gives every right vertex of `ug` the
/// label satisfying the most incident edges (smallest on ties).
pub fn best_right_completion(ug: &Game, a: &GameAssignment) -> GameAssignment {
    let m = ug.right_alphabet();
    let mut counts = vec![0usize; ug.right * m];
    for e in &ug.edges {
        counts[e.w * m + e.map[a.left[e.v]]] += 1;
    }
    let right = (0..ug.right)
        .map(|w| {
            let row = &counts[w * m..(w + 1) * m];
            let max = *row.iter().max().unwrap_or(&0);
            row.iter().position(|&c| c == max).unwrap_or(0)
        })
        .collect();
    GameAssignment {
        left: a.left.clone(),
        right,
    }
}

/// Random left-regular game with a planted assignment satisfied by every edge
/// when `planted`; otherwise the returned assignment is still random but
/// carries no guarantee.
///
/// Each left vertex gets `degree` distinct right neighbours. `d = 1` produces
/// a unique game.
pub fn generate_game(
    left: usize,
    right: usize,
    alphabet: usize,
    d: usize,
    degree: usize,
    planted: bool,
    seed: u64,
) -> Result<(Game, GameAssignment)> {
    if left == 0 || right == 0 || alphabet == 0 {
        return invalid("V, W and N must be positive");
    }
    if d == 0 || !alphabet.is_multiple_of(d) {
        return invalid(format!("d = {d} must divide N = {alphabet}"));
    }
    if degree == 0 || degree > right {
        return invalid(format!("degree must lie in 1..={right}, got {degree}"));
    }
    let m = alphabet / d;
    let mut rng = rng_from_seed(seed);
    let assignment = GameAssignment {
        left: (0..left).map(|_| rng.gen_range(0..alphabet)).collect(),
        right: (0..right).map(|_| rng.gen_range(0..m)).collect(),
    };
    let mut edges = Vec::with_capacity(left * degree);
    for v in 0..left {
        let mut neighbours = sample(&mut rng, right, degree).into_vec();
        neighbours.sort_unstable();
        for w in neighbours {
            let mut map: Vec<usize> = (0..alphabet).map(|s| s / d).collect();
            map.shuffle(&mut rng);
            if planted {
                let sigma = assignment.left[v];
                let theta = assignment.right[w];
                let pos = map.iter().position(|&t| t == theta).expect("every label has preimages");
                map.swap(sigma, pos);
            }
            edges.push(Edge { v, w, map });
        }
    }
    let kind = if d == 1 { GameKind::Unique } else { GameKind::DToOne(d) };
    Ok((Game::new(kind, left, right, alphabet, edges)?, assignment))
}
