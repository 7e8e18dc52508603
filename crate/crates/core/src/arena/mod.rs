//! Repeated play between online algorithms, exact best responses in the
//! k-match response game, and soundness certificates.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fosg::{InfoKey, Player};
use crate::online::{OnlineAlgorithm, State};
use crate::solvers::rng::{self, Stream};
use crate::tree::{GameTree, NodeId, NodeKind};

mod records;
mod response;

pub use records::{read_records, write_queries_csv, write_records_csv};
pub use response::{
    certify_soundness, estimate_brv, response_game_brv, response_game_brv_with_budget, BrvEstimate,
    ResponseAdversary, SoundnessReport, RESPONSE_NODE_BUDGET,
};

/// One strategy returned by an algorithm during a match.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub player: Player,
    pub key: InfoKey,
    pub probs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchLog {
    /// Tree nodes from the root to the terminal; empty for records read
    /// back from CSV.
    pub path: Vec<NodeId>,
    pub queries: Vec<Query>,
    pub reward_p1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepeatedGameRecord {
    pub seed: u64,
    pub matches: Vec<MatchLog>,
    /// Snapshots of both algorithms' states before each match.
    pub snapshots: Vec<[String; 2]>,
}

impl RepeatedGameRecord {
    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.matches.iter().map(|m| m.reward_p1)
    }

    /// `R(m) = (1/k) sum_i u1(z_i)`.
    pub fn average_reward(&self, player: Player) -> f64 {
        if self.matches.is_empty() {
            return 0.0;
        }
        player.sign() * self.rewards().sum::<f64>() / self.matches.len() as f64
    }

    pub fn queries_of(&self, player: Player) -> impl Iterator<Item = (usize, &Query)> + '_ {
        self.matches
            .iter()
            .enumerate()
            .flat_map(|(i, m)| m.queries.iter().map(move |q| (i, q)))
            .filter(move |(_, q)| q.player == player)
    }
}

fn check_distribution(tree: &GameTree, infoset: u32, probs: &[f64]) -> Result<()> {
    let set = tree.infoset(infoset);
    let sum: f64 = probs.iter().sum();
    if probs.len() != set.num_actions() || probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidStrategy(format!(
            "answer {probs:?} at {} is not a distribution over its {} actions",
            set.display_name(),
            set.num_actions()
        )));
    }
    Ok(())
}

/// Plays one match: each algorithm is queried at its acting information
/// states, actions and chance outcomes are drawn from `rng`, and both
/// algorithms observe the terminal.
pub fn play_match(
    tree: &GameTree,
    algs: [&dyn OnlineAlgorithm; 2],
    states: [&mut State; 2],
    rng: &mut Stream,
) -> Result<MatchLog> {
    let mut node = tree.root();
    let mut path = vec![node];
    let mut queries = Vec::new();
    loop {
        let n = tree.node(node);
        let next = match n.kind {
            NodeKind::Terminal => break,
            NodeKind::Chance => {
                let idx = rng::sample_index(rng, tree.chance_probs(node), 1.0);
                tree.children(node)[idx]
            }
            NodeKind::Decision { player, infoset } => {
                let i = player.index();
                let probs = algs[i].act(tree, infoset, &mut *states[i])?;
                check_distribution(tree, infoset, &probs)?;
                let total: f64 = probs.iter().sum();
                let idx = rng::sample_index(rng, &probs, total);
                queries.push(Query {
                    player,
                    key: tree.infoset(infoset).key.clone(),
                    probs,
                });
                tree.children(node)[idx]
            }
        };
        node = next;
        path.push(node);
    }
    for p in Player::BOTH {
        algs[p.index()].observe_outcome(tree, node, p, &mut *states[p.index()]);
    }
    Ok(MatchLog {
        path,
        queries,
        reward_p1: tree.node(node).utility,
    })
}

/// Plays `k` matches per seed with states threaded across matches. Both
/// initial states and the match randomness derive from the seed.
pub fn run_repeated(
    tree: &GameTree,
    alg1: &dyn OnlineAlgorithm,
    alg2: &dyn OnlineAlgorithm,
    k: usize,
    seeds: &[u64],
) -> Result<Vec<RepeatedGameRecord>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    seeds
        .par_iter()
        .map(|&seed| run_one(tree, [alg1, alg2], k, seed))
        .collect()
}

fn run_one(tree: &GameTree, algs: [&dyn OnlineAlgorithm; 2], k: usize, seed: u64) -> Result<RepeatedGameRecord> {
    let mut s1 = algs[0].initial_state(rng::derive_seed(seed, 1));
    let mut s2 = algs[1].initial_state(rng::derive_seed(seed, 2));
    let mut env = rng::stream(seed, 0);
    let mut matches = Vec::with_capacity(k);
    let mut snapshots = Vec::with_capacity(k);
    for _ in 0..k {
        snapshots.push([s1.snapshot(), s2.snapshot()]);
        matches.push(play_match(tree, algs, [&mut s1, &mut s2], &mut env)?);
    }
    Ok(RepeatedGameRecord {
        seed,
        matches,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{cmp_strategy, CoordinatedMatchingPennies, HEADS};
    use crate::online::{fixed_player, PlayCache};
    use crate::strategy::BehavioralStrategy;

    fn cmp() -> GameTree {
        GameTree::build(&CoordinatedMatchingPennies).unwrap()
    }

    pub(crate) fn heads_adversary() -> crate::online::FixedPlayer {
        let mut s = BehavioralStrategy::new(Player::One);
        let mut probs = vec![0.0; 2];
        probs[HEADS as usize] = 1.0;
        s.insert(CoordinatedMatchingPennies::player_one_infoset(), probs).unwrap();
        fixed_player(s).with_name("heads")
    }

    #[test]
    fn uniform_play_hits_every_terminal_equally() {
        let tree = cmp();
        let uniform1 = fixed_player(tree.uniform_strategy(Player::One));
        let uniform2 = fixed_player(cmp_strategy(0.5, 0.5).unwrap());
        let mut counts = std::collections::HashMap::new();
        let mut s1 = uniform1.initial_state(0);
        let mut s2 = uniform2.initial_state(0);
        let mut rng = rng::stream(9, 0);
        let n = 100_000;
        for _ in 0..n {
            let m = play_match(&tree, [&uniform1, &uniform2], [&mut s1, &mut s2], &mut rng).unwrap();
            *counts.entry(*m.path.last().unwrap()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 8);
        for &c in counts.values() {
            let f = c as f64 / n as f64;
            // 3 sigma of a Bernoulli(1/8) frequency over 1e5 draws.
            assert!((f - 0.125).abs() < 3.0 * (0.125f64 * 0.875 / n as f64).sqrt());
        }
    }

    #[test]
    fn heads_adversary_beats_a_fresh_playcache() {
        let tree = cmp();
        let records = run_repeated(&tree, &heads_adversary(), &PlayCache, 1, &(0..200).collect::<Vec<_>>()).unwrap();
        for r in &records {
            assert_eq!(r.average_reward(Player::Two), -1.0);
            assert_eq!(r.snapshots[0][1], "{}");
        }
    }

    #[test]
    fn records_are_reproducible() {
        let tree = cmp();
        let a = run_repeated(&tree, &heads_adversary(), &PlayCache, 5, &[1, 2, 3]).unwrap();
        let b = run_repeated(&tree, &heads_adversary(), &PlayCache, 5, &[1, 2, 3]).unwrap();
        assert_eq!(a, b);
        assert!(run_repeated(&tree, &heads_adversary(), &PlayCache, 0, &[1]).is_err());
    }
}
