use crate::fosg::Player;
use crate::strategy::BehavioralStrategy;
use crate::tree::{GameTree, NodeId, NodeKind};

use super::regret::{regret_matching_into, RegretTable};

/// Vanilla counterfactual regret minimization with simultaneous updates.
///
/// Average strategies are accumulated with the acting player's own reach.
/// The solver also records the sum of player one's expected utility over
/// iterations so the players' overall external regret can be measured.
#[derive(Clone, Debug)]
pub struct Cfr<'t> {
    tree: &'t GameTree,
    table: RegretTable,
    current: Vec<Vec<f64>>,
    iterations: u64,
    utility_sum: f64,
    fixed: Vec<Option<Vec<f64>>>,
}

impl<'t> Cfr<'t> {
    pub fn new(tree: &'t GameTree) -> Self {
        Cfr {
            tree,
            table: RegretTable::new(tree),
            current: tree.infosets().iter().map(|s| vec![0.0; s.num_actions()]).collect(),
            iterations: 0,
            utility_sum: 0.0,
            fixed: vec![None; tree.infosets().len()],
        }
    }

    /// CFR in the game where the information states with a `Some` entry
    /// play that distribution and are never updated.
    pub fn with_fixed(tree: &'t GameTree, fixed: Vec<Option<Vec<f64>>>) -> Self {
        assert_eq!(fixed.len(), tree.infosets().len());
        Cfr { fixed, ..Cfr::new(tree) }
    }

    pub fn table(&self) -> &RegretTable {
        &self.table
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// `sum_t u1(sigma_t)` over the iterations run so far.
    pub fn utility_sum(&self) -> f64 {
        self.utility_sum
    }

    pub fn run(&mut self, iterations: u64) {
        for _ in 0..iterations {
            self.iterate();
        }
    }

    pub fn iterate(&mut self) {
        for i in 0..self.current.len() {
            match &self.fixed[i] {
                Some(probs) => self.current[i].copy_from_slice(probs),
                None => regret_matching_into(self.table.regrets(i as u32), &mut self.current[i]),
            }
        }
        let value = self.walk(self.tree.root(), [1.0, 1.0], 1.0);
        self.utility_sum += value;
        self.iterations += 1;
    }

    /// Player one's value of the subtree under the current strategies.
    fn walk(&mut self, node: NodeId, reach: [f64; 2], chance: f64) -> f64 {
        let tree = self.tree;
        let n = tree.node(node);
        match n.kind {
            NodeKind::Terminal => n.utility,
            NodeKind::Chance => tree
                .children(node)
                .iter()
                .zip(tree.chance_probs(node))
                .map(|(&c, &p)| p * self.walk(c, reach, chance * p))
                .sum(),
            NodeKind::Decision { player, infoset } => {
                let i = player.index();
                let children = tree.children(node);
                let mut action_values = vec![0.0; children.len()];
                let mut value = 0.0;
                for (a, &c) in children.iter().enumerate() {
                    let p = self.current[infoset as usize][a];
                    let mut next = reach;
                    next[i] *= p;
                    action_values[a] = self.walk(c, next, chance);
                    value += p * action_values[a];
                }
                let sign = player.sign();
                let cf_reach = reach[1 - i] * chance;
                let own_reach = reach[i];
                if self.fixed[infoset as usize].is_some() {
                    return value;
                }
                let probs = self.current[infoset as usize].clone();
                for (r, v) in self.table.regrets_mut(infoset).iter_mut().zip(&action_values) {
                    *r += cf_reach * sign * (v - value);
                }
                for (s, p) in self.table.average_mut(infoset).iter_mut().zip(&probs) {
                    *s += own_reach * p;
                }
                self.table.visit(infoset);
                value
            }
        }
    }

    pub fn average_strategy(&self, player: Player) -> BehavioralStrategy {
        self.tree.sparse(player, &self.average_dense())
    }

    /// Average strategies indexed by infoset; fixed infosets report their
    /// fixed distribution.
    pub fn average_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = self.table.average_dense();
        for (d, f) in dense.iter_mut().zip(&self.fixed) {
            if let Some(f) = f {
                d.clone_from(f);
            }
        }
        dense
    }

    pub fn average_profile(&self) -> (BehavioralStrategy, BehavioralStrategy) {
        (self.average_strategy(Player::One), self.average_strategy(Player::Two))
    }
}

/// Runs `iterations` of CFR and returns both average strategies.
pub fn run_cfr(tree: &GameTree, iterations: u64) -> (BehavioralStrategy, BehavioralStrategy) {
    let mut cfr = Cfr::new(tree);
    cfr.run(iterations);
    cfr.average_profile()
}
