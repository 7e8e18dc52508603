//! The k-step response game: an adversary facing a known deterministic
//! online algorithm over `k` matches. The algorithm's answers and chance
//! become transitions of a single-agent decision problem whose information
//! states are the adversary's own observations across matches (its
//! information states, terminal information states and rewards).
//!
//! At the start of a match the adversary's situation is summarized by its
//! belief over the algorithm's state, so values are memoized on
//! `(match index, normalized belief)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::equilibrium::value_of;
use crate::error::{Error, Result};
use crate::fosg::{InfoKey, Player};
use crate::online::{AlgorithmState, OnlineAlgorithm, State};
use crate::tree::{GameTree, NodeId, NodeKind};

use super::{check_distribution, run_repeated};

/// Default cap on expanded response-game nodes.
pub const RESPONSE_NODE_BUDGET: usize = 10_000_000;

const TIE_EPSILON: f64 = 1e-12;

type Item = (NodeId, State, f64);

fn quantize(w: f64) -> u64 {
    (w * (1u64 << 40) as f64).round() as u64
}

struct Expansion {
    decisions: BTreeMap<u32, Vec<Item>>,
    terminals: BTreeMap<(InfoKey, u64), Vec<Item>>,
    reward: f64,
}

struct ResponseGame<'a> {
    tree: &'a GameTree,
    alg: &'a dyn OnlineAlgorithm,
    alg_player: Player,
    adversary: Player,
    k: usize,
    budget: usize,
    expanded: usize,
    memo: HashMap<(usize, Vec<(String, u64)>), f64>,
}

impl<'a> ResponseGame<'a> {
    fn new(tree: &'a GameTree, alg: &'a dyn OnlineAlgorithm, alg_player: Player, k: usize, budget: usize) -> Result<Self> {
        if !alg.is_deterministic() {
            return Err(Error::Nondeterministic(alg.name()));
        }
        Ok(ResponseGame {
            tree,
            alg,
            alg_player,
            adversary: alg_player.opponent(),
            k,
            budget,
            expanded: 0,
            memo: HashMap::new(),
        })
    }

    /// Merges equal states and normalizes; returns the total weight.
    fn normalize(belief: Vec<(State, f64)>) -> (Vec<(String, State, f64)>, f64) {
        let mut merged: BTreeMap<String, (State, f64)> = BTreeMap::new();
        let mut total = 0.0;
        for (state, w) in belief {
            total += w;
            merged
                .entry(state.snapshot())
                .and_modify(|e| e.1 += w)
                .or_insert((state, w));
        }
        let out = merged
            .into_iter()
            .map(|(s, (st, w))| (s, st, if total > 0.0 { w / total } else { 0.0 }))
            .collect();
        (out, total)
    }

    /// Adversary reward from the start of match `m` to the horizon, weighted
    /// by the (unnormalized) belief.
    fn match_value(&mut self, m: usize, belief: Vec<(State, f64)>) -> Result<f64> {
        if m >= self.k {
            return Ok(0.0);
        }
        let (merged, total) = Self::normalize(belief);
        if total <= 0.0 {
            return Ok(0.0);
        }
        let key = (m, merged.iter().map(|(s, _, w)| (s.clone(), quantize(*w))).collect::<Vec<_>>());
        if let Some(v) = self.memo.get(&key) {
            return Ok(total * v);
        }
        let root = self.tree.root();
        let frontier = merged.into_iter().map(|(_, st, w)| (root, st, w)).collect();
        let v = self.within(m, frontier)?;
        self.memo.insert(key, v);
        Ok(total * v)
    }

    fn within(&mut self, m: usize, frontier: Vec<Item>) -> Result<f64> {
        let Expansion {
            decisions,
            terminals,
            reward,
        } = self.expand(frontier)?;
        let mut total = reward;
        for (infoset, items) in decisions {
            total += self.best_action(m, infoset, &items)?.1;
        }
        for (_, items) in terminals {
            let belief = items
                .into_iter()
                .map(|(node, mut st, w)| {
                    self.alg.observe_outcome(self.tree, node, self.alg_player, &mut st);
                    (st, w)
                })
                .collect();
            total += self.match_value(m + 1, belief)?;
        }
        Ok(total)
    }

    fn best_action(&mut self, m: usize, infoset: u32, items: &[Item]) -> Result<(usize, f64)> {
        let tree = self.tree;
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for a in 0..tree.infoset(infoset).num_actions() {
            let next = items
                .iter()
                .map(|(node, st, w)| (tree.children(*node)[a], st.clone(), *w))
                .collect();
            let v = self.within(m, next)?;
            if v > best + TIE_EPSILON {
                best = v;
                arg = a;
            }
        }
        Ok((arg, best))
    }

    /// Expands chance and algorithm nodes until adversary decisions or
    /// terminals, grouping them by what the adversary observes.
    fn expand(&mut self, frontier: Vec<Item>) -> Result<Expansion> {
        let tree = self.tree;
        let mut out = Expansion {
            decisions: BTreeMap::new(),
            terminals: BTreeMap::new(),
            reward: 0.0,
        };
        let mut stack = frontier;
        while let Some((node, mut st, w)) = stack.pop() {
            self.expanded += 1;
            if self.expanded > self.budget {
                return Err(Error::BudgetExceeded { budget: self.budget });
            }
            let n = tree.node(node);
            match n.kind {
                NodeKind::Terminal => {
                    out.reward += w * self.adversary.sign() * n.utility;
                    let key = tree
                        .terminal_key(node, self.adversary)
                        .expect("terminal nodes carry keys")
                        .clone();
                    out.terminals
                        .entry((key, n.utility.to_bits()))
                        .or_default()
                        .push((node, st, w));
                }
                NodeKind::Chance => {
                    for (&c, &p) in tree.children(node).iter().zip(tree.chance_probs(node)) {
                        stack.push((c, st.clone(), w * p));
                    }
                }
                NodeKind::Decision { player, infoset } if player == self.adversary => {
                    out.decisions.entry(infoset).or_default().push((node, st, w));
                }
                NodeKind::Decision { infoset, .. } => {
                    let probs = self.alg.act(tree, infoset, &mut st)?;
                    check_distribution(tree, infoset, &probs)?;
                    for (&c, &p) in tree.children(node).iter().zip(&probs) {
                        if p > 0.0 {
                            stack.push((c, st.clone(), w * p));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Expansion used while playing: does not count toward the budget.
    fn expand_free(&mut self, frontier: Vec<Item>) -> Result<Expansion> {
        let before = self.expanded;
        self.expanded = 0;
        let budget = std::mem::replace(&mut self.budget, usize::MAX);
        let out = self.expand(frontier);
        self.expanded = before;
        self.budget = budget;
        out
    }
}

fn adversary_value(tree: &GameTree, adversary: Player) -> Result<f64> {
    Ok(adversary.sign() * value_of(tree)?.0)
}

/// Exact best-response value of the adversary in the `k`-match response
/// game against `alg` playing as `alg_player`, relative to `k` times the
/// adversary's game value: `brv(G^k) = max E[sum of adversary rewards] - k v*`.
pub fn response_game_brv(tree: &GameTree, alg: &dyn OnlineAlgorithm, alg_player: Player, k: usize) -> Result<f64> {
    response_game_brv_with_budget(tree, alg, alg_player, k, RESPONSE_NODE_BUDGET)
}

pub fn response_game_brv_with_budget(
    tree: &GameTree,
    alg: &dyn OnlineAlgorithm,
    alg_player: Player,
    k: usize,
    budget: usize,
) -> Result<f64> {
    let mut game = ResponseGame::new(tree, alg, alg_player, k, budget)?;
    let total = game.match_value(0, vec![(alg.initial_state(0), 1.0)])?;
    let brv = total - k as f64 * adversary_value(tree, game.adversary)?;
    Ok(if brv.abs() < 1e-12 { 0.0 } else { brv })
}

/// Adversary that plays the exact best response of the `k`-match response
/// game, tracking its belief over the algorithm's state from its own
/// observations.
pub struct ResponseAdversary<'a> {
    game: Mutex<ResponseGame<'a>>,
    decisions: Mutex<HashMap<(usize, u32, Arc<Vec<(String, u64)>>), usize>>,
}

impl<'a> ResponseAdversary<'a> {
    pub fn new(tree: &'a GameTree, alg: &'a dyn OnlineAlgorithm, alg_player: Player, k: usize) -> Result<Self> {
        Ok(ResponseAdversary {
            game: Mutex::new(ResponseGame::new(tree, alg, alg_player, k, RESPONSE_NODE_BUDGET)?),
            decisions: Mutex::new(HashMap::new()),
        })
    }
}

#[derive(Clone, Debug)]
struct AdversaryState {
    match_index: usize,
    frontier: Vec<Item>,
    /// Belief at the start of the current match. With perfect recall it and
    /// the adversary's information state determine the decision.
    belief: Arc<Vec<(String, u64)>>,
}

impl AlgorithmState for AdversaryState {
    fn clone_state(&self) -> Box<dyn AlgorithmState> {
        Box::new(self.clone())
    }

    fn snapshot(&self) -> String {
        let parts: Vec<String> = self.belief.iter().map(|(s, w)| format!("{s}@{w}")).collect();
        format!("match={} belief=[{}]", self.match_index, parts.join(" "))
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn std::any::Any {
        self
    }
}

impl OnlineAlgorithm for ResponseAdversary<'_> {
    fn name(&self) -> String {
        let g = self.game.lock().expect("response game lock");
        format!("best-response-{}-vs-{}", g.k, g.alg.name())
    }

    fn initial_state(&self, _seed: u64) -> State {
        let g = self.game.lock().expect("response game lock");
        let initial = g.alg.initial_state(0);
        State::new(AdversaryState {
            match_index: 0,
            belief: Arc::new(vec![(initial.snapshot(), quantize(1.0))]),
            frontier: vec![(g.tree.root(), initial, 1.0)],
        })
    }

    fn act(&self, tree: &GameTree, infoset: u32, state: &mut State) -> Result<Vec<f64>> {
        let st = state.downcast_mut::<AdversaryState>().expect("adversary runs on its own state");
        let mut g = self.game.lock().expect("response game lock");
        let mut expansion = g.expand_free(std::mem::take(&mut st.frontier))?;
        let mut items = expansion.decisions.remove(&infoset).ok_or_else(|| {
            Error::InvalidGame(format!(
                "adversary reached {} outside of its belief",
                tree.infoset(infoset).display_name()
            ))
        })?;
        let total: f64 = items.iter().map(|i| i.2).sum();
        items.iter_mut().for_each(|i| i.2 /= total);
        st.frontier = items;
        let key = (st.match_index, infoset, Arc::clone(&st.belief));
        let cached = self.decisions.lock().expect("decision cache lock").get(&key).copied();
        let action = match cached {
            Some(a) => a,
            None => {
                let a = g.best_action(st.match_index, infoset, &st.frontier)?.0;
                self.decisions.lock().expect("decision cache lock").insert(key, a);
                a
            }
        };
        for item in st.frontier.iter_mut() {
            item.0 = tree.children(item.0)[action];
        }
        let mut probs = vec![0.0; tree.infoset(infoset).num_actions()];
        probs[action] = 1.0;
        Ok(probs)
    }

    fn observe_outcome(&self, tree: &GameTree, terminal: NodeId, player: Player, state: &mut State) {
        let st = state.downcast_mut::<AdversaryState>().expect("adversary runs on its own state");
        let mut g = self.game.lock().expect("response game lock");
        let key = tree.terminal_key(terminal, player).expect("terminal nodes carry keys").clone();
        let utility = tree.node(terminal).utility;
        let expansion = match g.expand_free(std::mem::take(&mut st.frontier)) {
            Ok(e) => e,
            Err(_) => return,
        };
        let items = expansion
            .terminals
            .into_iter()
            .find(|((k, u), _)| *k == key && *u == utility.to_bits())
            .map(|(_, items)| items)
            .unwrap_or_default();
        let belief = items
            .into_iter()
            .map(|(node, mut s, w)| {
                g.alg.observe_outcome(tree, node, g.alg_player, &mut s);
                (s, w)
            })
            .collect();
        let (merged, _) = ResponseGame::normalize(belief);
        st.belief = Arc::new(merged.iter().map(|(s, _, w)| (s.clone(), quantize(*w))).collect());
        st.frontier = merged.into_iter().map(|(_, s, w)| (tree.root(), s, w)).collect();
        st.match_index += 1;
    }

    fn is_stateless(&self) -> bool {
        false
    }
}

/// Monte Carlo estimate of the adversary's advantage over `k * v*` when
/// `adversary` plays against `alg`. A sampled lower bound on `brv(G^k)`,
/// not an exact value.
#[derive(Clone, Debug, PartialEq)]
pub struct BrvEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub seeds: usize,
}

pub fn estimate_brv(
    tree: &GameTree,
    alg: &dyn OnlineAlgorithm,
    alg_player: Player,
    adversary: &dyn OnlineAlgorithm,
    k: usize,
    seeds: &[u64],
) -> Result<BrvEstimate> {
    let v_adv = adversary_value(tree, alg_player.opponent())?;
    let records = match alg_player {
        Player::One => run_repeated(tree, alg, adversary, k, seeds)?,
        Player::Two => run_repeated(tree, adversary, alg, k, seeds)?,
    };
    let samples: Vec<f64> = records
        .iter()
        .map(|r| k as f64 * (r.average_reward(alg_player.opponent()) - v_adv))
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(BrvEstimate {
        mean,
        std_error: (var / n).sqrt(),
        seeds: samples.len(),
    })
}

/// Bounded-horizon soundness certificate: `brv(G^k)` for `k = 1..=k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoundnessReport {
    pub epsilon: f64,
    pub k_values: Vec<usize>,
    pub brv: Vec<f64>,
    /// `max_{k <= k' <= k_max} brv(G^{k'}) / k'`.
    pub epsilon_certified: Vec<f64>,
    /// Whether `brv(G^{k'}) <= k' epsilon` for every probed `k' >= k`.
    pub certified: Vec<bool>,
}

impl SoundnessReport {
    /// Largest horizon probed; the certificate says nothing beyond it.
    pub fn horizon(&self) -> usize {
        self.k_values.last().copied().unwrap_or(0)
    }

    /// Smallest probed `k` from which the algorithm is certified.
    pub fn certified_from(&self) -> Option<usize> {
        self.k_values.iter().zip(&self.certified).find(|(_, &c)| c).map(|(&k, _)| k)
    }
}

impl fmt::Display for SoundnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "bounded-horizon certificate: conditions checked for k' <= {} only",
            self.horizon()
        )?;
        writeln!(f, "k,brv,epsilon_certified,certified_at_{}", self.epsilon)?;
        for i in 0..self.k_values.len() {
            writeln!(
                f,
                "{},{},{},{}",
                self.k_values[i],
                crate::strategy::format_float(self.brv[i]),
                crate::strategy::format_float(self.epsilon_certified[i]),
                self.certified[i]
            )?;
        }
        Ok(())
    }
}

pub fn certify_soundness(
    tree: &GameTree,
    alg: &dyn OnlineAlgorithm,
    alg_player: Player,
    k_max: usize,
    epsilon: f64,
) -> Result<SoundnessReport> {
    if k_max == 0 {
        return Err(Error::Config("k_max must be at least 1".into()));
    }
    let k_values: Vec<usize> = (1..=k_max).collect();
    let brv = k_values
        .iter()
        .map(|&k| response_game_brv(tree, alg, alg_player, k))
        .collect::<Result<Vec<f64>>>()?;
    let mut epsilon_certified = vec![0.0; k_max];
    let mut certified = vec![false; k_max];
    let mut running = f64::NEG_INFINITY;
    let mut all_ok = true;
    for i in (0..k_max).rev() {
        let k = k_values[i] as f64;
        running = running.max(brv[i] / k);
        all_ok &= brv[i] <= k * epsilon + 1e-9;
        epsilon_certified[i] = running;
        certified[i] = all_ok;
    }
    Ok(SoundnessReport {
        epsilon,
        k_values,
        brv,
        epsilon_certified,
        certified,
    })
}
