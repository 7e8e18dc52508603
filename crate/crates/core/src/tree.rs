//! A game materialized as a flat tree, the representation used by the
//! solvers and the exact best-response walk.
//!
//! Simultaneous moves are sequentialized: player one's decision node comes
//! first, then player two's, then the chance node for the transition. Player
//! two's information state at that node excludes player one's pending action.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fosg::{
    ActionId, Game, InfoKey, InfoState, JointAction, Player, WorldId, DEFAULT_NODE_BUDGET,
};
use crate::strategy::BehavioralStrategy;

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeKind {
    Terminal,
    Chance,
    Decision { player: Player, infoset: u32 },
}

#[derive(Clone, Debug)]
pub struct Node {
    pub kind: NodeKind,
    /// Player one's cumulative reward; only meaningful at terminals.
    pub utility: f64,
    first_child: u32,
    num_children: u32,
}

#[derive(Clone, Debug)]
pub struct Infoset {
    pub key: InfoKey,
    pub player: Player,
    pub actions: Vec<ActionId>,
    pub action_labels: Vec<String>,
    pub label: Option<String>,
    /// The player's previous decision `(infoset, action index)` on the path here.
    pub parent: Option<(u32, u32)>,
    pub nodes: Vec<NodeId>,
}

impl Infoset {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn display_name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.key.to_string())
    }
}

#[derive(Clone, Debug)]
pub struct GameTree {
    name: String,
    nodes: Vec<Node>,
    children: Vec<NodeId>,
    chance_probs: Vec<f64>,
    infosets: Vec<Infoset>,
    index: HashMap<InfoKey, u32>,
    known_value: Option<f64>,
    utility_range: f64,
    terminal_keys: HashMap<NodeId, [InfoKey; 2]>,
}

struct Builder<'g> {
    game: &'g dyn Game,
    tree: GameTree,
    budget: usize,
}

#[derive(Clone)]
struct PathState {
    infos: [InfoState; 2],
    parents: [Option<(u32, u32)>; 2],
    reward: f64,
}

impl<'g> Builder<'g> {
    fn alloc(&mut self, kind: NodeKind, utility: f64) -> Result<NodeId> {
        if self.tree.nodes.len() >= self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        self.tree.nodes.push(Node {
            kind,
            utility,
            first_child: 0,
            num_children: 0,
        });
        Ok((self.tree.nodes.len() - 1) as NodeId)
    }

    fn set_children(&mut self, node: NodeId, children: &[NodeId], probs: Option<&[f64]>) {
        let first = self.tree.children.len() as u32;
        self.tree.children.extend_from_slice(children);
        match probs {
            Some(p) => self.tree.chance_probs.extend_from_slice(p),
            None => self.tree.chance_probs.extend(std::iter::repeat(0.0).take(children.len())),
        }
        let n = &mut self.tree.nodes[node as usize];
        n.first_child = first;
        n.num_children = children.len() as u32;
    }

    fn register(&mut self, world: WorldId, player: Player, path: &PathState, node: NodeId, actions: &[ActionId]) -> Result<u32> {
        let info = &path.infos[player.index()];
        let key = info.key();
        let parent = path.parents[player.index()];
        if let Some(&idx) = self.tree.index.get(&key) {
            let set = &mut self.tree.infosets[idx as usize];
            if set.actions != actions || set.parent != parent {
                return Err(Error::InvalidGame(format!(
                    "information state {key} is inconsistent across histories (imperfect recall or differing actions)"
                )));
            }
            set.nodes.push(node);
            return Ok(idx);
        }
        let idx = self.tree.infosets.len() as u32;
        self.tree.infosets.push(Infoset {
            key: key.clone(),
            player,
            actions: actions.to_vec(),
            action_labels: actions
                .iter()
                .map(|&a| self.game.action_label(world, player, a))
                .collect(),
            label: self.game.infoset_label(info),
            parent,
            nodes: vec![node],
        });
        self.tree.index.insert(key, idx);
        Ok(idx)
    }

    fn world(&mut self, world: WorldId, path: PathState) -> Result<NodeId> {
        if self.game.is_terminal(world) {
            let node = self.alloc(NodeKind::Terminal, path.reward)?;
            self.tree
                .terminal_keys
                .insert(node, [path.infos[0].key(), path.infos[1].key()]);
            return Ok(node);
        }
        let legal = Player::BOTH.map(|p| self.game.legal_actions(world, p));
        if legal.iter().any(Vec::is_empty) {
            return Err(Error::InvalidGame(format!(
                "non-terminal world {world} has an empty action set"
            )));
        }
        self.stage(world, Player::One, [0, 0], &legal, path)
    }

    fn stage(
        &mut self,
        world: WorldId,
        player: Player,
        mut joint: JointAction,
        legal: &[Vec<ActionId>; 2],
        path: PathState,
    ) -> Result<NodeId> {
        let actions = &legal[player.index()];
        let next_stage = |b: &mut Self, joint: JointAction, path: PathState| match player {
            Player::One => b.stage(world, Player::Two, joint, legal, path),
            Player::Two => b.transition(world, joint, path),
        };
        if actions.len() == 1 {
            joint[player.index()] = actions[0];
            return next_stage(self, joint, path);
        }
        let node = self.alloc(NodeKind::Decision { player, infoset: 0 }, 0.0)?;
        let infoset = self.register(world, player, &path, node, actions)?;
        self.tree.nodes[node as usize].kind = NodeKind::Decision { player, infoset };
        let mut children = Vec::with_capacity(actions.len());
        for (i, &a) in actions.iter().enumerate() {
            joint[player.index()] = a;
            let mut child_path = path.clone();
            child_path.parents[player.index()] = Some((infoset, i as u32));
            children.push(next_stage(self, joint, child_path)?);
        }
        self.set_children(node, &children, None);
        Ok(node)
    }

    fn transition(&mut self, world: WorldId, joint: JointAction, path: PathState) -> Result<NodeId> {
        let r1 = self.game.reward(world, joint, Player::One);
        let r2 = self.game.reward(world, joint, Player::Two);
        if (r1 + r2).abs() > 1e-12 {
            return Err(Error::InvalidGame(format!("rewards at world {world} are not zero-sum")));
        }
        let outcomes: Vec<(WorldId, f64)> = self
            .game
            .transition(world, joint)
            .into_iter()
            .filter(|(_, p)| *p > 0.0)
            .collect();
        let mass: f64 = outcomes.iter().map(|(_, p)| p).sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGame(format!("transition from world {world} sums to {mass}")));
        }
        let game = self.game;
        let advance = |next: WorldId| {
            let mut p = path.clone();
            let obs = game.observation(world, joint, next);
            for player in Player::BOTH {
                let info = &mut p.infos[player.index()];
                info.push_action(joint[player.index()]);
                info.push_observation(&obs);
            }
            p.reward += r1;
            p
        };
        if outcomes.len() == 1 {
            let next_path = advance(outcomes[0].0);
            return self.world(outcomes[0].0, next_path);
        }
        let node = self.alloc(NodeKind::Chance, 0.0)?;
        let mut children = Vec::with_capacity(outcomes.len());
        let mut probs = Vec::with_capacity(outcomes.len());
        for (next, p) in &outcomes {
            let next_path = advance(*next);
            children.push(self.world(*next, next_path)?);
            probs.push(*p);
        }
        self.set_children(node, &children, Some(&probs));
        Ok(node)
    }
}

impl GameTree {
    pub fn build(game: &dyn Game) -> Result<GameTree> {
        Self::build_with_budget(game, DEFAULT_NODE_BUDGET)
    }

    pub fn build_with_budget(game: &dyn Game, budget: usize) -> Result<GameTree> {
        let obs = game.initial_observation();
        let mut builder = Builder {
            game,
            tree: GameTree {
                name: game.name().to_string(),
                nodes: Vec::new(),
                children: Vec::new(),
                chance_probs: Vec::new(),
                infosets: Vec::new(),
                index: HashMap::new(),
                known_value: game.known_value(),
                utility_range: 0.0,
                terminal_keys: HashMap::new(),
            },
            budget,
        };
        let path = PathState {
            infos: Player::BOTH.map(|p| InfoState::initial(p, &obs)),
            parents: [None, None],
            reward: 0.0,
        };
        let root = builder.world(game.initial_world(), path)?;
        debug_assert_eq!(root, 0);
        let mut tree = builder.tree;
        let (lo, hi) = tree
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Terminal)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), n| {
                (lo.min(n.utility), hi.max(n.utility))
            });
        tree.utility_range = if hi >= lo { hi - lo } else { 0.0 };
        Ok(tree)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        let n = &self.nodes[id as usize];
        &self.children[n.first_child as usize..(n.first_child + n.num_children) as usize]
    }

    pub fn chance_probs(&self, id: NodeId) -> &[f64] {
        let n = &self.nodes[id as usize];
        &self.chance_probs[n.first_child as usize..(n.first_child + n.num_children) as usize]
    }

    pub fn infosets(&self) -> &[Infoset] {
        &self.infosets
    }

    pub fn infoset(&self, idx: u32) -> &Infoset {
        &self.infosets[idx as usize]
    }

    pub fn infoset_index(&self, key: &InfoKey) -> Option<u32> {
        self.index.get(key).copied()
    }

    /// Acting information states of `player` in depth-first discovery order,
    /// which lists ancestors before descendants.
    pub fn acting_infosets(&self, player: Player) -> impl Iterator<Item = (u32, &Infoset)> {
        self.infosets
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.player == player)
            .map(|(i, s)| (i as u32, s))
    }

    pub fn acting_keys(&self, player: Player) -> Vec<InfoKey> {
        self.acting_infosets(player).map(|(_, s)| s.key.clone()).collect()
    }

    /// The player's final information state at a terminal node.
    pub fn terminal_key(&self, node: NodeId, player: Player) -> Option<&InfoKey> {
        self.terminal_keys.get(&node).map(|k| &k[player.index()])
    }

    /// `max u1 - min u1` over terminals.
    pub fn utility_range(&self) -> f64 {
        self.utility_range
    }

    pub fn known_value(&self) -> Option<f64> {
        self.known_value
    }

    /// Label to key pairs for every labelled information state.
    pub fn aliases(&self) -> Vec<(String, InfoKey)> {
        self.infosets
            .iter()
            .filter_map(|s| s.label.clone().map(|l| (l, s.key.clone())))
            .collect()
    }

    pub fn uniform_strategy(&self, player: Player) -> BehavioralStrategy {
        let mut s = BehavioralStrategy::new(player);
        for (_, set) in self.acting_infosets(player) {
            let n = set.num_actions();
            s.insert(set.key.clone(), vec![1.0 / n as f64; n])
                .expect("uniform vector is a distribution");
        }
        s
    }

    /// Per-infoset probability vectors for a strategy (empty for the other
    /// player's infosets).
    pub fn dense(&self, strategy: &BehavioralStrategy) -> Result<Vec<Vec<f64>>> {
        self.infosets
            .iter()
            .map(|set| {
                if set.player != strategy.player() {
                    return Ok(Vec::new());
                }
                let probs = strategy.probs(&set.key)?;
                if probs.len() != set.num_actions() {
                    return Err(Error::InvalidStrategy(format!(
                        "{}: {} probabilities for {} actions",
                        set.key,
                        probs.len(),
                        set.num_actions()
                    )));
                }
                Ok(probs.to_vec())
            })
            .collect()
    }

    /// Dense profile holding both players' vectors.
    pub fn dense_profile(&self, p1: &BehavioralStrategy, p2: &BehavioralStrategy) -> Result<Vec<Vec<f64>>> {
        let a = self.dense(p1)?;
        let b = self.dense(p2)?;
        Ok(a
            .into_iter()
            .zip(b)
            .map(|(x, y)| if x.is_empty() { y } else { x })
            .collect())
    }

    /// Converts per-infoset vectors back into a strategy for `player`.
    pub fn sparse(&self, player: Player, dense: &[Vec<f64>]) -> BehavioralStrategy {
        let mut s = BehavioralStrategy::new(player);
        for (i, set) in self.acting_infosets(player) {
            s.insert(set.key.clone(), dense[i as usize].clone())
                .expect("dense vectors are distributions");
        }
        s
    }

    /// The player's own reach probability of an infoset under `dense`.
    pub fn own_reach(&self, dense: &[Vec<f64>], infoset: u32) -> f64 {
        let mut reach = 1.0;
        let mut cur = self.infosets[infoset as usize].parent;
        while let Some((set, action)) = cur {
            reach *= dense[set as usize][action as usize];
            cur = self.infosets[set as usize].parent;
        }
        reach
    }

    /// Player one's expected utility under a dense profile.
    pub fn expected_utility_dense(&self, profile: &[Vec<f64>]) -> f64 {
        fn walk(tree: &GameTree, node: NodeId, profile: &[Vec<f64>]) -> f64 {
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
                    .zip(&profile[infoset as usize])
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(&c, &p)| p * walk(tree, c, profile))
                    .sum(),
            }
        }
        walk(self, self.root(), profile)
    }

    pub fn expected_utility(&self, p1: &BehavioralStrategy, p2: &BehavioralStrategy) -> Result<f64> {
        Ok(self.expected_utility_dense(&self.dense_profile(p1, p2)?))
    }

    /// Reach-weighted average of several strategies of one player: at each
    /// infoset the vectors are weighted by each strategy's own reach.
    pub fn mean_strategy(&self, player: Player, strategies: &[BehavioralStrategy]) -> Result<BehavioralStrategy> {
        let mut acc: Vec<Vec<f64>> = self
            .infosets
            .iter()
            .map(|s| if s.player == player { vec![0.0; s.num_actions()] } else { Vec::new() })
            .collect();
        let mut weight = vec![0.0; self.infosets.len()];
        for strategy in strategies {
            let dense = self.dense(strategy)?;
            for (i, _) in self.acting_infosets(player) {
                let r = self.own_reach(&dense, i);
                weight[i as usize] += r;
                for (a, p) in acc[i as usize].iter_mut().zip(&dense[i as usize]) {
                    *a += r * p;
                }
            }
        }
        for (i, set) in self.acting_infosets(player) {
            let w = weight[i as usize];
            let v = &mut acc[i as usize];
            if w > 0.0 {
                v.iter_mut().for_each(|x| *x /= w);
            } else {
                v.iter_mut().for_each(|x| *x = 1.0 / set.num_actions() as f64);
            }
        }
        Ok(self.sparse(player, &acc))
    }
}
