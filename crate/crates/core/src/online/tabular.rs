use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::fosg::{InfoKey, Player};
use crate::solvers::rng;
use crate::strategy::{BehavioralStrategy, PartialStrategy};
use crate::tree::{GameTree, NodeId, NodeKind};

use super::{OnlineAlgorithm, State};

/// Checks that `order` lists every acting information state of `player`
/// exactly once, each after all of the player's earlier states on its path.
pub fn check_query_order(tree: &GameTree, player: Player, order: &[InfoKey]) -> Result<Vec<u32>> {
    let mut position = HashMap::new();
    let mut indices = Vec::with_capacity(order.len());
    for (pos, key) in order.iter().enumerate() {
        let idx = tree
            .infoset_index(key)
            .filter(|&i| tree.infoset(i).player == player)
            .ok_or_else(|| Error::InvalidOrder(format!("{key} is not an acting information state of player {player}")))?;
        if position.insert(idx, pos).is_some() {
            return Err(Error::InvalidOrder(format!("{key} is listed twice")));
        }
        indices.push(idx);
    }
    if let Some((_, missing)) = tree.acting_infosets(player).find(|(i, _)| !position.contains_key(i)) {
        return Err(Error::InvalidOrder(format!("{} is missing", missing.display_name())));
    }
    for (pos, &idx) in indices.iter().enumerate() {
        if let Some((parent, _)) = tree.infoset(idx).parent {
            if position[&parent] > pos {
                return Err(Error::InvalidOrder(format!(
                    "{} is queried before its predecessor {}",
                    tree.infoset(idx).display_name(),
                    tree.infoset(parent).display_name()
                )));
            }
        }
    }
    Ok(indices)
}

/// Queries `alg` at every information state in `order`, threading its state,
/// and returns the composed strategy.
pub fn tabularize(alg: &dyn OnlineAlgorithm, tree: &GameTree, player: Player, order: &[InfoKey]) -> Result<BehavioralStrategy> {
    tabularize_expected(alg, tree, player, order, 1, 0)
}

/// Tabularization averaged over `draws` initial states seeded from `seed`;
/// the draws are combined with own-reach weights. Deterministic algorithms
/// use a single draw.
pub fn tabularize_expected(
    alg: &dyn OnlineAlgorithm,
    tree: &GameTree,
    player: Player,
    order: &[InfoKey],
    draws: usize,
    seed: u64,
) -> Result<BehavioralStrategy> {
    let indices = check_query_order(tree, player, order)?;
    let draws = if alg.is_deterministic() { 1 } else { draws.max(1) };
    let mut tables = Vec::with_capacity(draws);
    for d in 0..draws {
        let mut state = alg.initial_state(rng::derive_seed(seed, d as u64));
        let mut s = BehavioralStrategy::new(player);
        for &idx in &indices {
            let probs = alg.act(tree, idx, &mut state)?;
            s.insert(tree.infoset(idx).key.clone(), probs)?;
        }
        tables.push(s);
    }
    if tables.len() == 1 {
        return Ok(tables.pop().expect("one draw"));
    }
    tree.mean_strategy(player, &tables)
}

/// Answers of `alg` at the information states of `player` along the node
/// path `path`, queried in order from `state`.
pub fn partial_strategy(
    alg: &dyn OnlineAlgorithm,
    tree: &GameTree,
    path: &[NodeId],
    player: Player,
    mut state: State,
) -> Result<(PartialStrategy, State)> {
    let mut partial = PartialStrategy::new(player);
    for &node in path {
        if let NodeKind::Decision { player: p, infoset } = tree.node(node).kind {
            if p == player {
                let probs = alg.act(tree, infoset, &mut state)?;
                partial.insert(tree.infoset(infoset).key.clone(), probs)?;
            }
        }
    }
    Ok((partial, state))
}

/// Two valid query orders: depth-first discovery order, and the same walk
/// with every node's children visited in reverse.
pub fn topological_orders(tree: &GameTree, player: Player) -> Vec<Vec<InfoKey>> {
    fn walk(tree: &GameTree, node: NodeId, player: Player, reverse: bool, seen: &mut HashSet<u32>, out: &mut Vec<InfoKey>) {
        if let NodeKind::Decision { player: p, infoset } = tree.node(node).kind {
            if p == player && seen.insert(infoset) {
                out.push(tree.infoset(infoset).key.clone());
            }
        }
        let children = tree.children(node);
        if reverse {
            for &c in children.iter().rev() {
                walk(tree, c, player, reverse, seen, out);
            }
        } else {
            for &c in children {
                walk(tree, c, player, reverse, seen, out);
            }
        }
    }
    let mut orders = Vec::new();
    for reverse in [false, true] {
        let mut out = Vec::new();
        walk(tree, tree.root(), player, reverse, &mut HashSet::new(), &mut out);
        if !orders.contains(&out) {
            orders.push(out);
        }
    }
    orders
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::exploitability;
    use crate::games::{cmp_strategy, kuhn_alpha_equilibrium, CoordinatedMatchingPennies, KuhnPoker};
    use crate::online::{fixed_player, PlayCache};

    fn cmp() -> GameTree {
        GameTree::build(&CoordinatedMatchingPennies).unwrap()
    }

    fn s(i: usize) -> InfoKey {
        CoordinatedMatchingPennies::infoset(i)
    }

    #[test]
    fn playcache_tabularizations_depend_on_order() {
        let tree = cmp();
        let a = tabularize(&PlayCache, &tree, Player::Two, &[s(0), s(1)]).unwrap();
        assert_eq!(a, cmp_strategy(1.0, 0.0).unwrap());
        let b = tabularize(&PlayCache, &tree, Player::Two, &[s(1), s(0)]).unwrap();
        assert_eq!(b, cmp_strategy(0.0, 1.0).unwrap());
        assert_eq!(exploitability(&tree, &a).unwrap(), 0.0);
        assert_eq!(exploitability(&tree, &b).unwrap(), 0.0);
    }

    #[test]
    fn fixed_player_tabularizes_to_itself() {
        let tree = GameTree::build(&KuhnPoker).unwrap();
        let sigma = kuhn_alpha_equilibrium(0.3).unwrap();
        for order in topological_orders(&tree, Player::One) {
            let t = tabularize(&fixed_player(sigma.clone()), &tree, Player::One, &order).unwrap();
            assert_eq!(t, sigma);
        }
    }

    #[test]
    fn invalid_orders_are_rejected() {
        let tree = cmp();
        assert!(tabularize(&PlayCache, &tree, Player::Two, &[s(0)]).is_err());
        assert!(tabularize(&PlayCache, &tree, Player::Two, &[s(0), s(0)]).is_err());
        assert!(tabularize(&PlayCache, &tree, Player::Two, &[s(0), s(1), CoordinatedMatchingPennies::player_one_infoset()]).is_err());
        let kuhn = GameTree::build(&KuhnPoker).unwrap();
        let mut order = kuhn.acting_keys(Player::One);
        order.reverse();
        assert!(matches!(
            check_query_order(&kuhn, Player::One, &order),
            Err(Error::InvalidOrder(_))
        ));
    }

    #[test]
    fn orders_cover_both_cmp_permutations() {
        let orders = topological_orders(&cmp(), Player::Two);
        assert_eq!(orders, vec![vec![s(0), s(1)], vec![s(1), s(0)]]);
    }

    #[test]
    fn partial_strategies_follow_the_cache() {
        let tree = cmp();
        // Root, P1 Heads, chance to s1 (node of s1), then a terminal.
        let s1 = tree.infoset(tree.infoset_index(&s(0)).unwrap()).nodes[0];
        let path = vec![tree.root(), s1, tree.children(s1)[0]];
        let (partial, state) = partial_strategy(&PlayCache, &tree, &path, Player::Two, PlayCache.initial_state(0)).unwrap();
        assert_eq!(partial.len(), 1);
        assert_eq!(partial.probs(&s(0)).unwrap(), &[1.0, 0.0]);
        let s2 = tree.infoset(tree.infoset_index(&s(1)).unwrap()).nodes[0];
        let path = vec![tree.root(), s2, tree.children(s2)[0]];
        let (partial, _) = partial_strategy(&PlayCache, &tree, &path, Player::Two, state).unwrap();
        assert_eq!(partial.probs(&s(1)).unwrap(), &[0.0, 1.0]);
    }
}
