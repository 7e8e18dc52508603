//! Exact best responses, exploitability, the game value and epsilon-Nash
//! membership.
//!
//! Exploitability of a strategy for player `n` is measured against the game
//! value: `v*_n - min over opponent responses of u_n`, which equals
//! `v*_n + brv_opponent(strategy)`. The sum of both players' best-response
//! values is exposed separately as [`nash_conv`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fosg::Player;
use crate::solvers::Cfr;
use crate::strategy::BehavioralStrategy;
use crate::tree::{GameTree, NodeId, NodeKind};

/// Absolute tolerance used for tie-breaking, clamping and membership tests.
pub const TOLERANCE: f64 = 1e-9;

const TIE_EPSILON: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BestResponseResult {
    /// Pure strategy; ties go to the lowest-indexed action.
    pub strategy: BehavioralStrategy,
    pub value: f64,
}

/// Exact best response of `player` to a fixed `opponent` strategy.
///
/// Walks the responder's information-state tree: the frontier of histories
/// sharing the responder's private view is expanded through chance and
/// opponent nodes, split by the responder's next information state, and each
/// information state takes the action maximizing the reach-weighted sum of
/// successor values.
pub fn best_response(tree: &GameTree, opponent: &BehavioralStrategy, player: Player) -> Result<BestResponseResult> {
    if opponent.player() != player.opponent() {
        return Err(Error::InvalidStrategy(format!(
            "best response of player {player} needs a strategy of player {}",
            player.opponent()
        )));
    }
    let dense = tree.dense(opponent)?;
    best_response_dense(tree, &dense, player)
}

pub(crate) fn best_response_dense(tree: &GameTree, opponent: &[Vec<f64>], player: Player) -> Result<BestResponseResult> {
    let mut walker = Walker {
        tree,
        opponent,
        player,
        fixed: None,
        choice: vec![None; tree.infosets().len()],
    };
    let value = walker.value(vec![(tree.root(), 1.0)]);
    let mut strategy = BehavioralStrategy::new(player);
    for (i, set) in tree.acting_infosets(player) {
        let choice = walker.choice[i as usize].unwrap_or(0);
        let mut probs = vec![0.0; set.num_actions()];
        probs[choice] = 1.0;
        strategy.insert(set.key.clone(), probs)?;
    }
    Ok(BestResponseResult { strategy, value })
}

/// Best-response value only; used on hot paths.
pub(crate) fn best_response_value(tree: &GameTree, opponent: &[Vec<f64>], player: Player) -> f64 {
    let mut walker = Walker {
        tree,
        opponent,
        player,
        fixed: None,
        choice: vec![None; tree.infosets().len()],
    };
    walker.value(vec![(tree.root(), 1.0)])
}

/// Best-response value of `player` when its information states with a
/// non-empty vector in `fixed` must follow that vector.
pub(crate) fn constrained_best_response_value(
    tree: &GameTree,
    opponent: &[Vec<f64>],
    player: Player,
    fixed: &[Vec<f64>],
) -> f64 {
    let mut walker = Walker {
        tree,
        opponent,
        player,
        fixed: Some(fixed),
        choice: vec![None; tree.infosets().len()],
    };
    walker.value(vec![(tree.root(), 1.0)])
}

struct Walker<'a> {
    tree: &'a GameTree,
    opponent: &'a [Vec<f64>],
    player: Player,
    fixed: Option<&'a [Vec<f64>]>,
    choice: Vec<Option<usize>>,
}

impl Walker<'_> {
    fn is_fixed(&self, infoset: u32) -> bool {
        self.fixed.is_some_and(|f| !f[infoset as usize].is_empty())
    }

    fn value(&mut self, frontier: Vec<(NodeId, f64)>) -> f64 {
        let tree = self.tree;
        let sign = self.player.sign();
        let mut total = 0.0;
        let mut groups: BTreeMap<u32, Vec<(NodeId, f64)>> = BTreeMap::new();
        let mut stack = frontier;
        while let Some((node, w)) = stack.pop() {
            let n = tree.node(node);
            match n.kind {
                NodeKind::Terminal => total += w * sign * n.utility,
                NodeKind::Chance => {
                    for (&c, &p) in tree.children(node).iter().zip(tree.chance_probs(node)) {
                        stack.push((c, w * p));
                    }
                }
                NodeKind::Decision { player, infoset }
                    if player == self.player && !self.is_fixed(infoset) =>
                {
                    groups.entry(infoset).or_default().push((node, w));
                }
                NodeKind::Decision { player, infoset } => {
                    let probs = if player == self.player {
                        &self.fixed.expect("fixed responder infoset")[infoset as usize]
                    } else {
                        &self.opponent[infoset as usize]
                    };
                    for (&c, &p) in tree.children(node).iter().zip(probs) {
                        stack.push((c, w * p));
                    }
                }
            }
        }
        for (infoset, nodes) in groups {
            let actions = tree.infoset(infoset).num_actions();
            let mut best = f64::NEG_INFINITY;
            let mut best_action = 0;
            for a in 0..actions {
                let next = nodes
                    .iter()
                    .map(|&(n, w)| (tree.children(n)[a], w))
                    .collect();
                let v = self.value(next);
                if v > best + TIE_EPSILON {
                    best = v;
                    best_action = a;
                }
            }
            self.choice[infoset as usize] = Some(best_action);
            total += best;
        }
        total
    }
}

/// The game value for player one and its uncertainty: the game's closed
/// form when known, otherwise a CFR certificate at tolerance `1e-6`.
pub fn value_of(tree: &GameTree) -> Result<(f64, f64)> {
    match tree.known_value() {
        Some(v) => Ok((v, 0.0)),
        None => {
            let cert = game_value(tree, 1e-6)?;
            Ok((cert.value, cert.residual))
        }
    }
}

/// Exploitability of `strategy` for its owner, measured against the game value.
pub fn exploitability(tree: &GameTree, strategy: &BehavioralStrategy) -> Result<f64> {
    let (value, uncertainty) = value_of(tree)?;
    let dense = tree.dense(strategy)?;
    Ok(exploitability_with_value(tree, &dense, strategy.player(), value, uncertainty))
}

pub(crate) fn exploitability_with_value(
    tree: &GameTree,
    dense: &[Vec<f64>],
    player: Player,
    value: f64,
    uncertainty: f64,
) -> f64 {
    let brv = best_response_value(tree, dense, player.opponent());
    let e = player.sign() * value + brv;
    if e.abs() <= TOLERANCE.max(uncertainty) {
        0.0
    } else {
        e
    }
}

/// `brv_1(sigma_2) + brv_2(sigma_1)`; zero exactly at an equilibrium.
pub fn nash_conv(tree: &GameTree, p1: &BehavioralStrategy, p2: &BehavioralStrategy) -> Result<f64> {
    let d1 = tree.dense(p1)?;
    let d2 = tree.dense(p2)?;
    Ok(best_response_value(tree, &d2, Player::One) + best_response_value(tree, &d1, Player::Two))
}

/// `exploitability(strategy) <= epsilon` up to [`TOLERANCE`].
pub fn is_epsilon_equilibrium_member(tree: &GameTree, strategy: &BehavioralStrategy, epsilon: f64) -> Result<bool> {
    Ok(exploitability(tree, strategy)? <= epsilon + TOLERANCE)
}

/// The game value backed by an approximate equilibrium profile.
#[derive(Clone, Debug)]
pub struct GameValueCertificate {
    /// Player one's value: midpoint of the bracket `[-brv_2(sigma_1), brv_1(sigma_2)]`.
    pub value: f64,
    pub profile: (BehavioralStrategy, BehavioralStrategy),
    /// Width of the bracket (the profile's [`nash_conv`]); bounds both
    /// players' exploitabilities and the distance of `value` from the true value.
    pub residual: f64,
    pub iterations: u64,
}

/// Default iteration cap for [`game_value`].
pub const GAME_VALUE_MAX_ITERATIONS: u64 = 1 << 22;

pub fn game_value(tree: &GameTree, tolerance: f64) -> Result<GameValueCertificate> {
    game_value_with_cap(tree, tolerance, GAME_VALUE_MAX_ITERATIONS)
}

/// Runs CFR with doubling checkpoints until the certificate residual is at
/// most `tolerance`.
pub fn game_value_with_cap(tree: &GameTree, tolerance: f64, max_iterations: u64) -> Result<GameValueCertificate> {
    let mut cfr = Cfr::new(tree);
    let mut next_check = 1;
    loop {
        cfr.run(next_check - cfr.iterations());
        let (p1, p2) = cfr.average_profile();
        let d1 = tree.dense(&p1)?;
        let d2 = tree.dense(&p2)?;
        let upper = best_response_value(tree, &d2, Player::One);
        let lower = -best_response_value(tree, &d1, Player::Two);
        let residual = (upper - lower).max(0.0);
        if residual <= tolerance {
            return Ok(GameValueCertificate {
                value: 0.5 * (upper + lower),
                profile: (p1, p2),
                residual,
                iterations: cfr.iterations(),
            });
        }
        if cfr.iterations() >= max_iterations {
            return Err(Error::NonConvergence {
                iterations: cfr.iterations(),
                residual,
            });
        }
        next_check = (next_check * 2).min(max_iterations);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{cmp_strategy, CoordinatedMatchingPennies, KuhnPoker, MatrixGame, HEADS};

    fn cmp() -> GameTree {
        GameTree::build(&CoordinatedMatchingPennies).unwrap()
    }

    #[test]
    fn best_response_examples() {
        let tree = cmp();
        let br = best_response(&tree, &cmp_strategy(1.0, 0.0).unwrap(), Player::One).unwrap();
        assert!(br.value.abs() < 1e-12);
        let br = best_response(&tree, &cmp_strategy(1.0, 1.0).unwrap(), Player::One).unwrap();
        assert!((br.value - 1.0).abs() < 1e-12);
        let root = CoordinatedMatchingPennies::player_one_infoset();
        assert_eq!(br.strategy.probs(&root).unwrap()[HEADS as usize], 1.0);
        let br = best_response(&tree, &cmp_strategy(0.5, 0.5).unwrap(), Player::One).unwrap();
        assert!(br.value.abs() < 1e-12);
        // Tie: lowest index.
        assert_eq!(br.strategy.probs(&root).unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn best_response_rejects_wrong_player_and_missing_entries() {
        let tree = cmp();
        let s = cmp_strategy(0.5, 0.5).unwrap();
        assert!(best_response(&tree, &s, Player::Two).is_err());
        let partial = s.restrict([&CoordinatedMatchingPennies::infoset(0)]);
        assert!(matches!(
            best_response(&tree, &partial, Player::One),
            Err(Error::MissingStrategy(_))
        ));
    }

    #[test]
    fn exploitability_examples() {
        let tree = cmp();
        let e = exploitability(&tree, &cmp_strategy(1.0, 0.5).unwrap()).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
        assert_eq!(exploitability(&tree, &cmp_strategy(0.5, 0.5).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn membership_examples() {
        let tree = cmp();
        assert!(is_epsilon_equilibrium_member(&tree, &cmp_strategy(0.3, 0.7).unwrap(), 0.0).unwrap());
        assert!(!is_epsilon_equilibrium_member(&tree, &cmp_strategy(1.0, 0.5).unwrap(), 0.4).unwrap());
        assert!(is_epsilon_equilibrium_member(&tree, &cmp_strategy(1.0, 1.0).unwrap(), tree.utility_range()).unwrap());
    }

    #[test]
    fn value_certificates() {
        let cert = game_value(&cmp(), 1e-6).unwrap();
        assert!(cert.value.abs() <= 1e-6);
        assert!(cert.residual <= 1e-6);

        let zero = GameTree::build(&MatrixGame::zero_payoff_3x3()).unwrap();
        let cert = game_value(&zero, 1e-12).unwrap();
        assert_eq!(cert.value, 0.0);
        assert_eq!(cert.iterations, 1);
    }

    #[test]
    fn non_convergence_is_reported() {
        let kuhn = GameTree::build(&KuhnPoker).unwrap();
        let err = game_value_with_cap(&kuhn, 1e-6, 4).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 4, .. }));
    }
}
