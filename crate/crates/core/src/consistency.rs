//! Audits of logged online play against local, global and strong global
//! consistency with epsilon-equilibria.
//!
//! Whether a partial strategy agrees with some epsilon-equilibrium reduces to
//! the smallest exploitability over its completions. The completion is
//! searched with CFR in the game where the filled information states are
//! frozen, followed by a coordinate line search; the search also yields a
//! lower bound, and the difference is reported as an uncertainty band.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;

use crate::arena::RepeatedGameRecord;
use crate::equilibrium::{best_response_value, constrained_best_response_value, value_of, TOLERANCE};
use crate::error::{Error, Result};
use crate::fosg::{InfoKey, Player};
use crate::online::{tabularize, OnlineAlgorithm};
use crate::solvers::Cfr;
use crate::strategy::{format_float, BehavioralStrategy, PartialStrategy};
use crate::tree::GameTree;

/// Default cap on the number of unfilled information states.
pub const COMPLETION_CAP: usize = 6;

/// Slack allowed when comparing epsilons produced by the numeric search.
pub const COMPLETION_TOLERANCE: f64 = 1e-3;

const TARGET_GAP: f64 = 1e-4;
const FIRST_BATCH: u64 = 256;
const MAX_CFR_ITERATIONS: u64 = 1 << 17;
const AGREEMENT: f64 = 1e-9;

/// Result of a completion search.
#[derive(Clone, Debug, PartialEq)]
pub struct Completion {
    /// Exploitability of `strategy`, an upper bound on the minimum.
    pub epsilon: f64,
    /// Lower bound on the minimum over completions.
    pub lower: f64,
    pub strategy: BehavioralStrategy,
}

impl Completion {
    pub fn band(&self) -> f64 {
        (self.epsilon - self.lower).max(0.0)
    }
}

/// Completion search bound to one game and player; caches the game value.
pub struct Completer<'t> {
    tree: &'t GameTree,
    player: Player,
    value: f64,
    uncertainty: f64,
    cap: usize,
}

impl<'t> Completer<'t> {
    pub fn new(tree: &'t GameTree, player: Player) -> Result<Self> {
        let (value, uncertainty) = value_of(tree)?;
        Ok(Completer {
            tree,
            player,
            value,
            uncertainty,
            cap: COMPLETION_CAP,
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    fn exploitability(&self, dense: &[Vec<f64>]) -> f64 {
        let brv = best_response_value(self.tree, dense, self.player.opponent());
        let e = self.player.sign() * self.value + brv;
        if e.abs() <= TOLERANCE.max(self.uncertainty) {
            0.0
        } else {
            e
        }
    }

    /// Smallest exploitability over strategies agreeing with `partial`.
    pub fn complete(&self, partial: &PartialStrategy) -> Result<Completion> {
        let tree = self.tree;
        let player = self.player;
        if partial.player() != player {
            return Err(Error::InvalidStrategy(format!(
                "partial strategy of player {} audited for player {player}",
                partial.player()
            )));
        }
        let acting: Vec<u32> = tree.acting_infosets(player).map(|(i, _)| i).collect();
        for (key, probs) in partial.iter() {
            let idx = tree
                .infoset_index(key)
                .filter(|i| acting.contains(i))
                .ok_or_else(|| Error::InvalidStrategy(format!("{key} is not an acting information state of player {player}")))?;
            if probs.len() != tree.infoset(idx).num_actions() {
                return Err(Error::InvalidStrategy(format!("{key}: wrong number of probabilities")));
            }
        }
        let mut fixed: Vec<Option<Vec<f64>>> = vec![None; tree.infosets().len()];
        let mut unfilled = Vec::new();
        for &i in &acting {
            match partial.get(&tree.infoset(i).key) {
                Some(p) => fixed[i as usize] = Some(p.to_vec()),
                None => unfilled.push(i),
            }
        }
        if unfilled.len() > self.cap {
            return Err(Error::CompletionCap {
                unfilled: unfilled.len(),
                cap: self.cap,
            });
        }
        let own = |dense: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..dense.len())
                .map(|i| if tree.infosets()[i].player == player { dense[i].clone() } else { Vec::new() })
                .collect()
        };
        if unfilled.is_empty() {
            let dense: Vec<Vec<f64>> = fixed.iter().map(|f| f.clone().unwrap_or_default()).collect();
            let epsilon = self.exploitability(&dense);
            return Ok(Completion {
                epsilon,
                lower: epsilon,
                strategy: tree.sparse(player, &dense),
            });
        }

        let fixed_dense: Vec<Vec<f64>> = fixed.iter().map(|f| f.clone().unwrap_or_default()).collect();
        let mut cfr = Cfr::with_fixed(tree, fixed);
        let mut batch = FIRST_BATCH;
        let (mut upper, mut lower, mut dense);
        loop {
            cfr.run(batch);
            let avg = cfr.average_dense();
            dense = own(&avg);
            upper = self.exploitability(&dense);
            let opponent: Vec<Vec<f64>> = (0..avg.len())
                .map(|i| if tree.infosets()[i].player != player { avg[i].clone() } else { Vec::new() })
                .collect();
            let brv = constrained_best_response_value(tree, &opponent, player, &fixed_dense);
            lower = (player.sign() * self.value - brv).max(0.0);
            if upper - lower <= TARGET_GAP || cfr.iterations() >= MAX_CFR_ITERATIONS {
                break;
            }
            batch = cfr.iterations();
        }
        let upper = self.polish(&mut dense, &unfilled, upper);
        Ok(Completion {
            epsilon: upper,
            lower: lower.min(upper),
            strategy: tree.sparse(player, &dense),
        })
    }

    /// Golden-section line search moving mass between pairs of actions at
    /// each unfilled information state, repeated while it still improves.
    fn polish(&self, dense: &mut [Vec<f64>], unfilled: &[u32], mut best: f64) -> f64 {
        const RATIO: f64 = 0.618_033_988_749_894_8;
        for _round in 0..30 {
            let start = best;
            for &i in unfilled {
                let n = dense[i as usize].len();
                for a in 0..n {
                    for b in a + 1..n {
                        let mass = dense[i as usize][a] + dense[i as usize][b];
                        if mass <= 0.0 {
                            continue;
                        }
                        let eval = |t: f64, d: &mut [Vec<f64>]| {
                            d[i as usize][a] = t;
                            d[i as usize][b] = mass - t;
                            self.exploitability(d)
                        };
                        let original = dense[i as usize][a];
                        let (mut lo, mut hi) = (0.0, mass);
                        let mut x1 = hi - RATIO * (hi - lo);
                        let mut x2 = lo + RATIO * (hi - lo);
                        let mut f1 = eval(x1, dense);
                        let mut f2 = eval(x2, dense);
                        while hi - lo > 1e-10 {
                            if f1 <= f2 {
                                hi = x2;
                                x2 = x1;
                                f2 = f1;
                                x1 = hi - RATIO * (hi - lo);
                                f1 = eval(x1, dense);
                            } else {
                                lo = x1;
                                x1 = x2;
                                f1 = f2;
                                x2 = lo + RATIO * (hi - lo);
                                f2 = eval(x2, dense);
                            }
                        }
                        let mut candidates = [(original, best), (x1, f1), (x2, f2), (0.0, 0.0), (mass, 0.0)];
                        candidates[3].1 = eval(0.0, dense);
                        candidates[4].1 = eval(mass, dense);
                        let (t, f) = candidates
                            .into_iter()
                            .fold((original, best), |acc, c| if c.1 < acc.1 { c } else { acc });
                        eval(t, dense);
                        best = f;
                    }
                }
            }
            if start - best < TARGET_GAP * 1e-3 {
                break;
            }
        }
        best
    }
}

/// Minimum exploitability over completions of `partial` for `player`.
pub fn completion_exploitability(tree: &GameTree, partial: &PartialStrategy, player: Player) -> Result<f64> {
    Ok(Completer::new(tree, player)?.complete(partial)?.epsilon)
}

/// Epsilon found by one audit together with the search uncertainty and a
/// description of the constraint that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditResult {
    pub epsilon: f64,
    pub band: f64,
    /// `false` when the algorithm gave conflicting answers; `epsilon` is then
    /// the utility range.
    pub consistent: bool,
    pub witness: Option<String>,
}

impl AuditResult {
    fn zero() -> Self {
        AuditResult {
            epsilon: 0.0,
            band: 0.0,
            consistent: true,
            witness: None,
        }
    }

    fn conflict(tree: &GameTree, witness: String) -> Self {
        AuditResult {
            epsilon: tree.utility_range(),
            band: 0.0,
            consistent: false,
            witness: Some(witness),
        }
    }

    fn raise(&mut self, completion: &Completion, witness: impl FnOnce() -> String) {
        self.band = self.band.max(completion.band());
        if completion.epsilon > self.epsilon {
            self.epsilon = completion.epsilon;
            self.witness = Some(witness());
        }
    }
}

fn describe(probs: &[f64]) -> String {
    let parts: Vec<String> = probs.iter().map(|p| format_float(*p)).collect();
    format!("[{}]", parts.join(" "))
}

/// Local consistency: the largest minimum-completion exploitability over the
/// individually queried strategies of `player`.
pub fn audit_local(record: &RepeatedGameRecord, tree: &GameTree, player: Player) -> Result<AuditResult> {
    audit_local_all(std::slice::from_ref(record), tree, player)
}

/// [`audit_local`] over several records at once.
pub fn audit_local_all(records: &[RepeatedGameRecord], tree: &GameTree, player: Player) -> Result<AuditResult> {
    let completer = Completer::new(tree, player)?;
    let mut distinct: BTreeMap<(InfoKey, Vec<u64>), (u64, usize, Vec<f64>)> = BTreeMap::new();
    for record in records {
        for (m, q) in record.queries_of(player) {
            let bits = q.probs.iter().map(|p| p.to_bits()).collect();
            distinct
                .entry((q.key.clone(), bits))
                .or_insert((record.seed, m, q.probs.clone()));
        }
    }
    let results = distinct
        .into_par_iter()
        .map(|((key, _), (seed, m, probs))| {
            let mut partial = PartialStrategy::new(player);
            partial.insert(key.clone(), probs.clone())?;
            Ok((key, seed, m, probs, completer.complete(&partial)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut audit = AuditResult::zero();
    for (key, seed, m, probs, completion) in results {
        audit.raise(&completion, || {
            format!(
                "seed {seed} match {}: {key} answered {} extends to no better than a {}-equilibrium",
                m + 1,
                describe(&probs),
                format_float(completion.epsilon)
            )
        });
    }
    Ok(audit)
}

/// Global consistency: for every match prefix, the strategies queried so far
/// are merged into one partial strategy and completed. An information state
/// answered with two different strategies makes the record inconsistent.
pub fn audit_global(record: &RepeatedGameRecord, tree: &GameTree, player: Player) -> Result<AuditResult> {
    let completer = Completer::new(tree, player)?;
    let mut merged = PartialStrategy::new(player);
    let mut first_seen: HashMap<InfoKey, usize> = HashMap::new();
    let mut audit = AuditResult::zero();
    for (m, log) in record.matches.iter().enumerate() {
        let mut grew = false;
        for q in log.queries.iter().filter(|q| q.player == player) {
            match merged.get(&q.key) {
                Some(prev) => {
                    let diff = prev.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    if diff > AGREEMENT {
                        return Ok(AuditResult::conflict(
                            tree,
                            format!(
                                "seed {}: {} answered {} in match {} and {} in match {}",
                                record.seed,
                                q.key,
                                describe(prev),
                                first_seen[&q.key] + 1,
                                describe(&q.probs),
                                m + 1
                            ),
                        ));
                    }
                }
                None => {
                    merged.insert(q.key.clone(), q.probs.clone())?;
                    first_seen.insert(q.key.clone(), m);
                    grew = true;
                }
            }
        }
        if grew {
            let completion = completer.complete(&merged)?;
            audit.raise(&completion, || {
                format!(
                    "seed {} matches 1..={}: answers {} extend to no better than a {}-equilibrium",
                    record.seed,
                    m + 1,
                    merged.to_text(None).trim_end().replace('\n', "; "),
                    format_float(completion.epsilon)
                )
            });
        }
    }
    Ok(audit)
}

/// [`audit_global`] over several records, in parallel; reports the worst.
pub fn audit_global_all(records: &[RepeatedGameRecord], tree: &GameTree, player: Player) -> Result<AuditResult> {
    let results = records
        .par_iter()
        .map(|r| audit_global(r, tree, player))
        .collect::<Result<Vec<_>>>()?;
    Ok(worst(results))
}

fn worst(results: Vec<AuditResult>) -> AuditResult {
    let mut out = AuditResult::zero();
    for r in results {
        out.band = out.band.max(r.band);
        if !r.consistent && out.consistent {
            out = r;
        } else if r.consistent == out.consistent && r.epsilon > out.epsilon {
            let band = out.band;
            out = AuditResult { band, ..r };
        }
    }
    out
}

/// Strong global consistency: every probe must yield one complete strategy.
/// Probes are tabularizations in each query order and the answers logged in
/// `rollouts`; the result is the exploitability of the common strategy.
pub fn audit_strong_global(
    alg: &dyn OnlineAlgorithm,
    tree: &GameTree,
    player: Player,
    orders: &[Vec<InfoKey>],
    rollouts: &[RepeatedGameRecord],
) -> Result<AuditResult> {
    if orders.is_empty() {
        return Err(Error::Config("strong global audit needs at least one query order".into()));
    }
    let first = tabularize(alg, tree, player, &orders[0])?;
    for order in &orders[1..] {
        let other = tabularize(alg, tree, player, order)?;
        for (key, probs) in first.iter() {
            let alt = other.probs(key)?;
            if probs.iter().zip(alt).any(|(a, b)| (a - b).abs() > AGREEMENT) {
                return Ok(AuditResult::conflict(
                    tree,
                    format!(
                        "{key} tabularizes to {} in order {} and to {} in order {}",
                        describe(probs),
                        order_text(&orders[0]),
                        describe(alt),
                        order_text(order)
                    ),
                ));
            }
        }
    }
    for record in rollouts {
        for (m, q) in record.queries_of(player) {
            let expected = first.probs(&q.key)?;
            if expected.iter().zip(&q.probs).any(|(a, b)| (a - b).abs() > AGREEMENT) {
                return Ok(AuditResult::conflict(
                    tree,
                    format!(
                        "{} tabularizes to {} but seed {} match {} answered {}",
                        q.key,
                        describe(expected),
                        record.seed,
                        m + 1,
                        describe(&q.probs)
                    ),
                ));
            }
        }
    }
    let completion = Completer::new(tree, player)?.complete(&first)?;
    Ok(AuditResult {
        epsilon: completion.epsilon,
        band: 0.0,
        consistent: true,
        witness: Some(format!("common strategy: {}", first.to_text(None).trim_end().replace('\n', "; "))),
    })
}

fn order_text(order: &[InfoKey]) -> String {
    let parts: Vec<String> = order.iter().map(|k| k.to_string()).collect();
    format!("({})", parts.join(", "))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConsistencyLevel {
    None,
    Local,
    Global,
    StrongGlobal,
}

impl fmt::Display for ConsistencyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConsistencyLevel::None => "none",
            ConsistencyLevel::Local => "local",
            ConsistencyLevel::Global => "global",
            ConsistencyLevel::StrongGlobal => "strong_global",
        })
    }
}

/// All three audits of one algorithm and the strongest level met at a
/// target epsilon.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyAudit {
    pub level_achieved: ConsistencyLevel,
    pub epsilon_local: f64,
    pub epsilon_global: f64,
    pub epsilon_strong: f64,
    pub band: f64,
    pub witness: Option<String>,
}

pub fn audit(
    alg: &dyn OnlineAlgorithm,
    tree: &GameTree,
    player: Player,
    records: &[RepeatedGameRecord],
    orders: &[Vec<InfoKey>],
    epsilon: f64,
) -> Result<ConsistencyAudit> {
    let local = audit_local_all(records, tree, player)?;
    let global = audit_global_all(records, tree, player)?;
    let strong = audit_strong_global(alg, tree, player, orders, records)?;
    let band = local.band.max(global.band).max(strong.band);
    let met = |r: &AuditResult| r.consistent && r.epsilon <= epsilon + r.band + TOLERANCE;
    let (level_achieved, witness) = if !met(&local) {
        (ConsistencyLevel::None, local.witness)
    } else if !met(&global) {
        (ConsistencyLevel::Local, global.witness)
    } else if !met(&strong) {
        (ConsistencyLevel::Global, strong.witness)
    } else {
        (ConsistencyLevel::StrongGlobal, None)
    };
    Ok(ConsistencyAudit {
        level_achieved,
        epsilon_local: local.epsilon,
        epsilon_global: global.epsilon,
        epsilon_strong: strong.epsilon,
        band,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::run_repeated;
    use crate::equilibrium::exploitability;
    use crate::games::{cmp_strategy, CoordinatedMatchingPennies as Cmp, KuhnPoker};
    use crate::online::{fixed_player, topological_orders, PlayCache};

    fn cmp() -> GameTree {
        GameTree::build(&Cmp).unwrap()
    }

    fn partial(entries: &[(usize, f64)]) -> PartialStrategy {
        let mut s = PartialStrategy::new(Player::Two);
        for &(state, p) in entries {
            s.insert(Cmp::infoset(state), vec![p, 1.0 - p]).unwrap();
        }
        s
    }

    #[test]
    fn cmp_completions() {
        let tree = cmp();
        let e = completion_exploitability(&tree, &partial(&[(0, 0.3)]), Player::Two).unwrap();
        assert!(e < 1e-6, "{e}");
        let e = completion_exploitability(&tree, &partial(&[(0, 1.0), (1, 0.5)]), Player::Two).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
        assert_eq!(completion_exploitability(&tree, &partial(&[]), Player::Two).unwrap(), 0.0);
        for p in [0.0, 0.25, 0.9, 1.0] {
            let c = Completer::new(&tree, Player::Two).unwrap().complete(&partial(&[(1, p)])).unwrap();
            assert!(c.epsilon < 1e-6 && c.band() < 1e-3, "{p}: {c:?}");
        }
    }

    #[test]
    fn completion_errors() {
        let tree = GameTree::build(&KuhnPoker).unwrap();
        let c = Completer::new(&tree, Player::One).unwrap().with_cap(2);
        assert!(matches!(
            c.complete(&BehavioralStrategy::new(Player::One)),
            Err(Error::CompletionCap { unfilled: 6, cap: 2 })
        ));
        let tree = cmp();
        assert!(matches!(
            Completer::new(&tree, Player::Two).unwrap().complete(&PartialStrategy::new(Player::One)),
            Err(Error::InvalidStrategy(_))
        ));
    }

    #[test]
    fn kuhn_completion_matches_the_equilibrium_family() {
        let tree = GameTree::build(&KuhnPoker).unwrap();
        let eq = crate::games::kuhn_alpha_equilibrium(0.5).unwrap();
        let key = eq.keys().next().unwrap().clone();
        let single = eq.restrict([&key]);
        let c = Completer::new(&tree, Player::One).unwrap().complete(&single).unwrap();
        assert!(c.epsilon <= 1e-3 + c.band(), "{c:?}");
        let e = exploitability(&tree, &c.strategy).unwrap();
        assert!((e - c.epsilon).abs() < 1e-9);
    }

    #[test]
    fn playcache_audits() {
        let tree = cmp();
        let seeds: Vec<u64> = (0..20).collect();
        let records = run_repeated(&tree, &fixed_player(tree.uniform_strategy(Player::One)), &PlayCache, 10, &seeds).unwrap();
        for r in &records {
            assert_eq!(audit_local(r, &tree, Player::Two).unwrap().epsilon, 0.0);
            assert!(audit_global(r, &tree, Player::Two).unwrap().epsilon < 1e-6);
        }
        let orders = topological_orders(&tree, Player::Two);
        let strong = audit_strong_global(&PlayCache, &tree, Player::Two, &orders, &[]).unwrap();
        assert!(!strong.consistent);
        assert!(strong.witness.unwrap().contains("tabularizes"));
        let a = audit(&PlayCache, &tree, Player::Two, &records, &orders, 0.0).unwrap();
        assert_eq!(a.level_achieved, ConsistencyLevel::Global);
        assert!(a.epsilon_local <= a.epsilon_global + 1e-6 && a.epsilon_global <= a.epsilon_strong);
    }

    #[test]
    fn fixed_player_audits() {
        let tree = cmp();
        let sigma = cmp_strategy(1.0, 0.5).unwrap();
        let alg = fixed_player(sigma);
        let seeds: Vec<u64> = (0..4).collect();
        let records = run_repeated(&tree, &fixed_player(tree.uniform_strategy(Player::One)), &alg, 20, &seeds).unwrap();
        let orders = topological_orders(&tree, Player::Two);
        let a = audit(&alg, &tree, Player::Two, &records, &orders, 0.0).unwrap();
        assert_eq!(a.level_achieved, ConsistencyLevel::Local);
        assert!(a.epsilon_local < 1e-6);
        assert!((a.epsilon_global - 0.5).abs() < 1e-9);
        assert!((a.epsilon_strong - 0.5).abs() < 1e-9);
        assert!(a.witness.is_some());
    }

    #[test]
    fn conflicting_answers_report_the_range() {
        let tree = cmp();
        let mut record = run_repeated(&tree, &fixed_player(tree.uniform_strategy(Player::One)), &PlayCache, 2, &[0]).unwrap().remove(0);
        record.matches[1] = record.matches[0].clone();
        record.matches[1].queries.iter_mut().filter(|q| q.player == Player::Two).for_each(|q| q.probs = vec![0.25, 0.75]);
        let g = audit_global(&record, &tree, Player::Two).unwrap();
        assert!(!g.consistent);
        assert_eq!(g.epsilon, 2.0);
        assert!(g.witness.unwrap().contains("match 1"));
    }
}
