#![allow(dead_code)]

use std::collections::HashMap;

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use soundlab::tree::{GameTree, NodeId, NodeKind};
use soundlab::{BehavioralStrategy, Player};

/// Player one's expected utility by direct recursion over the tree.
pub fn expected_utility(tree: &GameTree, profile: &HashMap<u32, Vec<f64>>) -> f64 {
    fn walk(tree: &GameTree, node: NodeId, profile: &HashMap<u32, Vec<f64>>) -> f64 {
        let n = tree.node(node);
        match n.kind {
            NodeKind::Terminal => n.utility,
            NodeKind::Chance => tree
                .children(node)
                .iter()
                .zip(tree.chance_probs(node))
                .map(|(&c, &p)| p * walk(tree, c, profile))
                .sum(),
            NodeKind::Decision { infoset, .. } => tree
                .children(node)
                .iter()
                .zip(&profile[&infoset])
                .map(|(&c, &p)| if p == 0.0 { 0.0 } else { p * walk(tree, c, profile) })
                .sum(),
        }
    }
    walk(tree, tree.root(), profile)
}

pub fn to_map(tree: &GameTree, strategy: &BehavioralStrategy) -> HashMap<u32, Vec<f64>> {
    tree.acting_infosets(strategy.player())
        .map(|(i, set)| (i, strategy.probs(&set.key).unwrap().to_vec()))
        .collect()
}

/// Every pure strategy of `player`, as infoset-indexed vectors.
pub fn pure_strategies(tree: &GameTree, player: Player) -> Vec<HashMap<u32, Vec<f64>>> {
    let sets: Vec<(u32, usize)> = tree.acting_infosets(player).map(|(i, s)| (i, s.num_actions())).collect();
    let mut out = vec![HashMap::new()];
    for (i, n) in sets {
        out = out
            .into_iter()
            .flat_map(|m| {
                (0..n).map(move |a| {
                    let mut m = m.clone();
                    let mut v = vec![0.0; n];
                    v[a] = 1.0;
                    m.insert(i, v);
                    m
                })
            })
            .collect();
    }
    out
}

/// Best-response value of `responder` against `fixed` by enumerating pure strategies.
pub fn brute_force_brv(tree: &GameTree, fixed: &BehavioralStrategy, responder: Player) -> f64 {
    let base = to_map(tree, fixed);
    pure_strategies(tree, responder)
        .into_iter()
        .map(|pure| {
            let mut profile = base.clone();
            profile.extend(pure);
            responder.sign() * expected_utility(tree, &profile)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Game value for player one from the sequence-form linear program.
pub fn sequence_form_value(tree: &GameTree) -> f64 {
    // Sequences: 0 is the empty sequence; (infoset, action) pairs follow.
    let mut seq_index: [HashMap<(u32, u32), usize>; 2] = [HashMap::new(), HashMap::new()];
    for (i, set) in tree.infosets().iter().enumerate() {
        if set.nodes.is_empty() {
            continue;
        }
        let map = &mut seq_index[set.player.index()];
        for a in 0..set.num_actions() {
            let next = map.len() + 1;
            map.insert((i as u32, a as u32), next);
        }
    }
    let sizes = [seq_index[0].len() + 1, seq_index[1].len() + 1];
    let mut payoff: HashMap<(usize, usize), f64> = HashMap::new();
    let mut stack = vec![(tree.root(), [0usize, 0usize], 1.0)];
    while let Some((node, seqs, chance)) = stack.pop() {
        let n = tree.node(node);
        match n.kind {
            NodeKind::Terminal => *payoff.entry((seqs[0], seqs[1])).or_default() += chance * n.utility,
            NodeKind::Chance => {
                for (&c, &p) in tree.children(node).iter().zip(tree.chance_probs(node)) {
                    stack.push((c, seqs, chance * p));
                }
            }
            NodeKind::Decision { player, infoset } => {
                for (a, &c) in tree.children(node).iter().enumerate() {
                    let mut next = seqs;
                    next[player.index()] = seq_index[player.index()][&(infoset, a as u32)];
                    stack.push((c, next, chance));
                }
            }
        }
    }
    let parent_seq = |player: usize, infoset: u32| -> usize {
        match tree.infoset(infoset).parent {
            Some((i, a)) => seq_index[player][&(i, a)],
            None => 0,
        }
    };

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let x: Vec<_> = (0..sizes[0]).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let p2_sets: Vec<u32> = tree
        .infosets()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.player == Player::Two && !s.nodes.is_empty())
        .map(|(i, _)| i as u32)
        .collect();
    let v_root = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let v: HashMap<u32, _> = p2_sets
        .iter()
        .map(|&j| (j, lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))))
        .collect();

    lp.add_constraint(&[(x[0], 1.0)], ComparisonOp::Eq, 1.0);
    for (i, set) in tree.infosets().iter().enumerate() {
        if set.player != Player::One || set.nodes.is_empty() {
            continue;
        }
        let mut expr = LinearExpr::empty();
        for a in 0..set.num_actions() {
            expr.add(x[seq_index[0][&(i as u32, a as u32)]], 1.0);
        }
        expr.add(x[parent_seq(0, i as u32)], -1.0);
        lp.add_constraint(expr, ComparisonOp::Eq, 0.0);
    }
    // For every sequence of player two: v(owner) - sum of child infoset
    // values <= payoff of that sequence against x.
    for s2 in 0..sizes[1] {
        let mut expr = LinearExpr::empty();
        if s2 == 0 {
            expr.add(v_root, 1.0);
        } else {
            let (&(j, _), _) = seq_index[1].iter().find(|(_, &idx)| idx == s2).unwrap();
            expr.add(v[&j], 1.0);
        }
        for &j in &p2_sets {
            if parent_seq(1, j) == s2 {
                expr.add(v[&j], -1.0);
            }
        }
        for s1 in 0..sizes[0] {
            if let Some(&u) = payoff.get(&(s1, s2)) {
                expr.add(x[s1], -u);
            }
        }
        lp.add_constraint(expr, ComparisonOp::Le, 0.0);
    }
    lp.solve().expect("sequence-form program is feasible").objective()
}
