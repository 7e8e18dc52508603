use std::fmt;
use std::str::FromStr;

use crate::error::{check_unit, Error, Result};
use crate::fosg::{InfoKey, Player};
use crate::strategy::BehavioralStrategy;
use crate::tree::{GameTree, NodeId, NodeKind};

use super::regret::{regret_matching_into, RegretTable};
use super::rng::{self, Stream};

/// How `bias_probability` is read when targets are configured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BiasMeaning {
    /// `bias_probability` is the chance of an unbiased sample; the rest are
    /// steered toward the targets.
    #[default]
    Untargeted,
    /// `bias_probability` is the chance of a targeted sample.
    Targeted,
}

impl fmt::Display for BiasMeaning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BiasMeaning::Untargeted => "untargeted",
            BiasMeaning::Targeted => "targeted",
        })
    }
}

impl FromStr for BiasMeaning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "untargeted" => Ok(BiasMeaning::Untargeted),
            "targeted" => Ok(BiasMeaning::Targeted),
            other => Err(Error::Parse(format!("bias meaning must be `targeted` or `untargeted`, got `{other}`"))),
        }
    }
}

/// Which players' regrets a sampled trajectory updates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UpdateScheme {
    /// One trajectory per iteration updates both players.
    #[default]
    Simultaneous,
    /// Two trajectories per iteration, one per updated player; average
    /// strategies are accumulated at the other player's nodes.
    Alternating,
}

impl fmt::Display for UpdateScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateScheme::Simultaneous => "simultaneous",
            UpdateScheme::Alternating => "alternating",
        })
    }
}

impl FromStr for UpdateScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simultaneous" => Ok(UpdateScheme::Simultaneous),
            "alternating" => Ok(UpdateScheme::Alternating),
            other => Err(Error::Parse(format!("update scheme must be `simultaneous` or `alternating`, got `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub iterations: u64,
    /// Weight of the uniform distribution in the sampling policy.
    pub exploration: f64,
    pub bias_probability: f64,
    pub bias_meaning: BiasMeaning,
    pub bias_targets: Vec<InfoKey>,
    /// Strategy copied into the regrets of a fresh table, scaled by `kickstart_mu`.
    pub kickstart: Option<BehavioralStrategy>,
    pub kickstart_mu: f64,
    pub seed: u64,
    pub update_scheme: UpdateScheme,
    /// Iterations after which the average strategies are recorded. Empty
    /// means every power of ten up to `iterations`.
    pub checkpoints: Vec<u64>,
    /// Smallest admissible sampling probability of a trajectory.
    pub weight_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            iterations: 1_000_000,
            exploration: 0.6,
            bias_probability: 0.1,
            bias_meaning: BiasMeaning::Untargeted,
            bias_targets: Vec::new(),
            kickstart: None,
            kickstart_mu: 500.0,
            seed: 0,
            update_scheme: UpdateScheme::Simultaneous,
            checkpoints: Vec::new(),
            weight_floor: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        check_unit("exploration", self.exploration)?;
        check_unit("bias_probability", self.bias_probability)?;
        if !(self.kickstart_mu >= 0.0 && self.kickstart_mu.is_finite()) {
            return Err(Error::OutOfRange {
                name: "kickstart_mu",
                value: self.kickstart_mu,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        if !(self.weight_floor >= 0.0) {
            return Err(Error::Config(format!("weight floor {} must be non-negative", self.weight_floor)));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("checkpoints must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Probability that an iteration samples with targeting.
    pub fn targeted_probability(&self) -> f64 {
        if self.bias_targets.is_empty() {
            return 0.0;
        }
        match self.bias_meaning {
            BiasMeaning::Untargeted => 1.0 - self.bias_probability,
            BiasMeaning::Targeted => self.bias_probability,
        }
    }

    pub fn checkpoint_list(&self) -> Vec<u64> {
        if !self.checkpoints.is_empty() {
            return self.checkpoints.iter().copied().filter(|&c| c <= self.iterations).collect();
        }
        std::iter::successors(Some(1u64), |c| c.checked_mul(10))
            .take_while(|&c| c <= self.iterations)
            .collect()
    }

    /// A zeroed table with the configured kickstart applied.
    pub fn initial_table(&self, tree: &GameTree) -> Result<RegretTable> {
        let mut table = RegretTable::new(tree);
        if let Some(strategy) = &self.kickstart {
            table.kickstart(strategy, self.kickstart_mu)?;
        }
        Ok(table)
    }
}

/// Average strategies of both players after `iteration` iterations.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub iteration: u64,
    pub profile: (BehavioralStrategy, BehavioralStrategy),
}

impl Snapshot {
    pub fn strategy(&self, player: Player) -> &BehavioralStrategy {
        match player {
            Player::One => &self.profile.0,
            Player::Two => &self.profile.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MccfrOutput {
    pub table: RegretTable,
    pub profile: (BehavioralStrategy, BehavioralStrategy),
    pub snapshots: Vec<Snapshot>,
}

#[derive(Clone, Copy, Debug)]
struct Step {
    infoset: u32,
    player: usize,
    action: usize,
    sigma: f64,
}

/// Outcome-sampling MCCFR. Each iteration samples one terminal history and
/// updates the regrets and average strategies of both players along it.
///
/// The sampling policy mixes `exploration` of uniform play into regret
/// matching. With targets configured, a targeted iteration restricts every
/// choice to children from which a target information state is reachable
/// (or which lie below one). Updates are importance-weighted by the mixture
/// probability of the sampled history under both samplers, so estimates
/// stay unbiased.
#[derive(Clone, Debug)]
pub struct Mccfr<'t> {
    tree: &'t GameTree,
    table: RegretTable,
    rng: Stream,
    exploration: f64,
    delta: f64,
    weight_floor: f64,
    scheme: UpdateScheme,
    on_target: Vec<bool>,
    iterations: u64,
    path: Vec<Step>,
    sigma: Vec<f64>,
    weights: Vec<f64>,
}

impl<'t> Mccfr<'t> {
    pub fn new(tree: &'t GameTree, config: &SolverConfig) -> Result<Self> {
        Self::with_table(tree, config, config.initial_table(tree)?)
    }

    pub fn with_table(tree: &'t GameTree, config: &SolverConfig, table: RegretTable) -> Result<Self> {
        config.validate()?;
        if table.num_infosets() != tree.infosets().len() {
            return Err(Error::Config("regret table does not match the game tree".into()));
        }
        let mut targets = vec![false; tree.infosets().len()];
        for key in &config.bias_targets {
            let idx = tree
                .infoset_index(key)
                .ok_or_else(|| Error::Config(format!("bias target {key} is not an acting information state")))?;
            targets[idx as usize] = true;
        }
        let mut on_target = vec![false; tree.num_nodes()];
        if !config.bias_targets.is_empty() {
            mark_targets(tree, tree.root(), false, &targets, &mut on_target);
        }
        let max_actions = tree.infosets().iter().map(|s| s.num_actions()).max().unwrap_or(1);
        let max_branching = (0..tree.num_nodes() as NodeId)
            .map(|n| tree.children(n).len())
            .max()
            .unwrap_or(1)
            .max(max_actions);
        Ok(Mccfr {
            tree,
            table,
            rng: rng::stream(config.seed, 0),
            exploration: config.exploration,
            delta: config.targeted_probability(),
            weight_floor: config.weight_floor,
            scheme: config.update_scheme,
            on_target,
            iterations: 0,
            path: Vec::new(),
            sigma: vec![0.0; max_actions],
            weights: vec![0.0; max_branching],
        })
    }

    pub fn table(&self) -> &RegretTable {
        &self.table
    }

    pub fn into_table(self) -> RegretTable {
        self.table
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn run(&mut self, iterations: u64) -> Result<()> {
        for _ in 0..iterations {
            self.iterate()?;
        }
        Ok(())
    }

    pub fn average_profile(&self) -> (BehavioralStrategy, BehavioralStrategy) {
        (
            self.table.average_strategy(Player::One),
            self.table.average_strategy(Player::Two),
        )
    }

    pub fn iterate(&mut self) -> Result<()> {
        match self.scheme {
            UpdateScheme::Simultaneous => self.sample(None)?,
            UpdateScheme::Alternating => {
                self.sample(Some(0))?;
                self.sample(Some(1))?;
            }
        }
        self.iterations += 1;
        Ok(())
    }

    /// Samples one trajectory. Regrets are updated for `update` (both players
    /// when `None`), average strategies for the other player(s).
    fn sample(&mut self, update: Option<usize>) -> Result<()> {
        let tree = self.tree;
        let delta = self.delta;
        let targeted = delta > 0.0 && rng::uniform(&mut self.rng) < delta;
        let mut node = tree.root();
        let mut reach = [1.0f64; 2];
        let mut chance = 1.0f64;
        let mut q_unbiased = 1.0f64;
        let mut q_targeted = if self.on_target.get(node as usize).copied().unwrap_or(false) { 1.0 } else { 0.0 };
        if targeted && q_targeted == 0.0 {
            return Err(Error::Config("no bias target is reachable".into()));
        }
        self.path.clear();
        let utility = loop {
            let n = tree.node(node);
            match n.kind {
                NodeKind::Terminal => break n.utility,
                NodeKind::Chance => {
                    let children = tree.children(node);
                    let probs = tree.chance_probs(node);
                    let on_mass = if q_targeted > 0.0 {
                        children
                            .iter()
                            .zip(probs)
                            .filter(|(&c, _)| self.on_target[c as usize])
                            .map(|(_, &p)| p)
                            .sum()
                    } else {
                        0.0
                    };
                    let idx = if targeted {
                        let w = &mut self.weights[..children.len()];
                        for ((w, &c), &p) in w.iter_mut().zip(children).zip(probs) {
                            *w = if self.on_target[c as usize] { p } else { 0.0 };
                        }
                        rng::sample_index(&mut self.rng, w, on_mass)
                    } else {
                        rng::sample_index(&mut self.rng, probs, 1.0)
                    };
                    let child = children[idx];
                    q_unbiased *= probs[idx];
                    if q_targeted > 0.0 {
                        q_targeted = if self.on_target[child as usize] { q_targeted * probs[idx] / on_mass } else { 0.0 };
                    }
                    chance *= probs[idx];
                    node = child;
                }
                NodeKind::Decision { player, infoset } => {
                    let i = player.index();
                    let children = tree.children(node);
                    let k = children.len();
                    let sigma = &mut self.sigma[..k];
                    regret_matching_into(self.table.regrets(infoset), sigma);

                    let q_here = delta * q_targeted + (1.0 - delta) * q_unbiased;
                    if q_here > 0.0 && update != Some(i) {
                        let w = reach[i] / q_here;
                        if w > 0.0 {
                            for (s, p) in self.table.average_mut(infoset).iter_mut().zip(sigma.iter()) {
                                *s += w * p;
                            }
                        }
                    }
                    self.table.visit(infoset);

                    let uniform = 1.0 / k as f64;
                    let explore = self.exploration;
                    let behavior = &mut self.weights[..k];
                    for (b, &s) in behavior.iter_mut().zip(sigma.iter()) {
                        *b = explore * uniform + (1.0 - explore) * s;
                    }
                    let (on_count, on_mass) = if q_targeted > 0.0 {
                        children
                            .iter()
                            .zip(behavior.iter())
                            .filter(|(&c, _)| self.on_target[c as usize])
                            .fold((0usize, 0.0f64), |(n, m), (_, &b)| (n + 1, m + b))
                    } else {
                        (0, 0.0)
                    };
                    let idx = if targeted {
                        // Targeted policy: the behavior restricted to on-target
                        // children, or uniform over them if that has no mass.
                        let mut total = 0.0;
                        for (b, &c) in behavior.iter_mut().zip(children) {
                            if !self.on_target[c as usize] {
                                *b = 0.0;
                            } else if on_mass <= 0.0 {
                                *b = 1.0;
                            }
                            total += *b;
                        }
                        let idx = rng::sample_index(&mut self.rng, behavior, total);
                        for (b, &s) in behavior.iter_mut().zip(sigma.iter()) {
                            *b = explore * uniform + (1.0 - explore) * s;
                        }
                        idx
                    } else {
                        let total: f64 = behavior.iter().sum();
                        rng::sample_index(&mut self.rng, behavior, total)
                    };
                    let child = children[idx];
                    q_unbiased *= behavior[idx];
                    if q_targeted > 0.0 {
                        q_targeted = if !self.on_target[child as usize] {
                            0.0
                        } else if on_mass > 0.0 {
                            q_targeted * behavior[idx] / on_mass
                        } else {
                            q_targeted / on_count as f64
                        };
                    }
                    let s = sigma[idx];
                    self.path.push(Step {
                        infoset,
                        player: i,
                        action: idx,
                        sigma: s,
                    });
                    reach[i] *= s;
                    node = child;
                }
            }
        };

        let q = delta * q_targeted + (1.0 - delta) * q_unbiased;
        if !(q >= self.weight_floor) || q <= 0.0 {
            return Err(Error::WeightUnderflow {
                weight: q,
                floor: self.weight_floor,
            });
        }
        let mut tail = [1.0f64; 2];
        for step in self.path.iter().rev() {
            let i = step.player;
            if update.is_some_and(|u| u != i) {
                continue;
            }
            let sign = if i == 0 { 1.0 } else { -1.0 };
            let w = sign * utility * reach[1 - i] * chance / q;
            let after = tail[i];
            let here = after * step.sigma;
            for (a, r) in self.table.regrets_mut(step.infoset).iter_mut().enumerate() {
                if a == step.action {
                    *r += w * (after - here);
                } else {
                    *r -= w * here;
                }
            }
            tail[i] = here;
        }
        Ok(())
    }
}

/// Marks nodes from which a target information state is reachable, and all
/// nodes below a target. Returns whether `node` is marked.
fn mark_targets(tree: &GameTree, node: NodeId, inside: bool, targets: &[bool], out: &mut [bool]) -> bool {
    let is_target = matches!(tree.node(node).kind, NodeKind::Decision { infoset, .. } if targets[infoset as usize]);
    let inside = inside || is_target;
    let mut any = inside;
    for &c in tree.children(node) {
        any |= mark_targets(tree, c, inside, targets, out);
    }
    out[node as usize] = any;
    any
}

/// Runs outcome-sampling MCCFR from `table` (already kickstarted, if
/// desired) for `config.iterations` iterations, recording snapshots at the
/// configured checkpoints.
pub fn run_mccfr(tree: &GameTree, config: &SolverConfig, table: RegretTable) -> Result<MccfrOutput> {
    let mut solver = Mccfr::with_table(tree, config, table)?;
    let mut snapshots = Vec::new();
    for checkpoint in config.checkpoint_list() {
        solver.run(checkpoint - solver.iterations())?;
        snapshots.push(Snapshot {
            iteration: checkpoint,
            profile: solver.average_profile(),
        });
    }
    solver.run(config.iterations - solver.iterations())?;
    let profile = solver.average_profile();
    Ok(MccfrOutput {
        table: solver.into_table(),
        profile,
        snapshots,
    })
}
