use std::any::Any;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::Result;
use crate::fosg::InfoKey;
use crate::solvers::{rng, Mccfr, RegretTable, SolverConfig};
use crate::strategy::BehavioralStrategy;
use crate::tree::GameTree;

use super::{AlgorithmState, OnlineAlgorithm, State};

/// Online search emulating OOS: at every acting information state it runs
/// MCCFR biased toward that state and answers with the resulting average
/// strategy there.
#[derive(Clone, Debug)]
pub struct OosPlayer {
    config: SolverConfig,
    per_move_iterations: u64,
    retain: bool,
    target_kickstarts: Vec<(InfoKey, BehavioralStrategy)>,
}

pub fn oos_player(config: SolverConfig, per_move_iterations: u64, retain: bool) -> OosPlayer {
    OosPlayer {
        config,
        per_move_iterations,
        retain,
        target_kickstarts: Vec::new(),
    }
}

impl OosPlayer {
    /// Kickstart strategy used when searching from `target`, overriding
    /// the configured one.
    pub fn with_target_kickstart(mut self, target: InfoKey, strategy: BehavioralStrategy) -> Self {
        self.target_kickstarts.retain(|(k, _)| *k != target);
        self.target_kickstarts.push((target, strategy));
        self
    }

    fn search_config(&self, target: &InfoKey, seed: u64) -> SolverConfig {
        let mut cfg = self.config.clone();
        cfg.iterations = self.per_move_iterations;
        cfg.bias_targets = vec![target.clone()];
        cfg.seed = seed;
        cfg.checkpoints = Vec::new();
        if let Some((_, s)) = self.target_kickstarts.iter().find(|(k, _)| k == target) {
            cfg.kickstart = Some(s.clone());
        }
        cfg
    }
}

#[derive(Clone, Debug)]
pub struct OosState {
    seed: u64,
    searches: u64,
    table: Option<RegretTable>,
}

impl AlgorithmState for OosState {
    fn clone_state(&self) -> Box<dyn AlgorithmState> {
        Box::new(self.clone())
    }

    fn snapshot(&self) -> String {
        let digest = self.table.as_ref().map(|t| {
            let mut h = DefaultHasher::new();
            for i in 0..t.num_infosets() as u32 {
                for x in t.regrets(i).iter().chain(t.average(i)) {
                    x.to_bits().hash(&mut h);
                }
            }
            h.finish()
        });
        match digest {
            Some(d) => format!("seed={} searches={} table={d:016x}", self.seed, self.searches),
            None => format!("seed={} searches={}", self.seed, self.searches),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

impl OnlineAlgorithm for OosPlayer {
    fn name(&self) -> String {
        "oos".to_string()
    }

    fn initial_state(&self, seed: u64) -> State {
        State::new(OosState {
            seed,
            searches: 0,
            table: None,
        })
    }

    fn act(&self, tree: &GameTree, infoset: u32, state: &mut State) -> Result<Vec<f64>> {
        let st = state.downcast_mut::<OosState>().expect("OOS runs on its own state");
        let key = &tree.infoset(infoset).key;
        let cfg = self.search_config(key, rng::derive_seed(st.seed, st.searches));
        st.searches += 1;
        let table = match st.table.take() {
            Some(t) if self.retain => t,
            _ => cfg.initial_table(tree)?,
        };
        let mut solver = Mccfr::with_table(tree, &cfg, table)?;
        solver.run(cfg.iterations)?;
        let table = solver.into_table();
        let acc = table.average(infoset);
        let sum: f64 = acc.iter().sum();
        let probs = if sum > 0.0 {
            acc.iter().map(|a| a / sum).collect()
        } else {
            vec![1.0 / acc.len() as f64; acc.len()]
        };
        if self.retain {
            st.table = Some(table);
        }
        Ok(probs)
    }

    fn is_stateless(&self) -> bool {
        false
    }

    fn is_deterministic(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{cmp_strategy, CoordinatedMatchingPennies};

    fn tree() -> GameTree {
        GameTree::build(&CoordinatedMatchingPennies).unwrap()
    }

    #[test]
    fn zero_iterations_answer_uniformly() {
        let tree = tree();
        let alg = oos_player(SolverConfig::default(), 0, false);
        let s1 = tree.infoset_index(&CoordinatedMatchingPennies::infoset(0)).unwrap();
        let mut state = alg.initial_state(3);
        assert_eq!(alg.act(&tree, s1, &mut state).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn answers_depend_on_the_seed_only() {
        let tree = tree();
        let alg = oos_player(SolverConfig::default(), 2_000, false)
            .with_target_kickstart(CoordinatedMatchingPennies::infoset(1), cmp_strategy(1.0, 0.0).unwrap());
        let s2 = tree.infoset_index(&CoordinatedMatchingPennies::infoset(1)).unwrap();
        let a = alg.act(&tree, s2, &mut alg.initial_state(5)).unwrap();
        let b = alg.act(&tree, s2, &mut alg.initial_state(5)).unwrap();
        assert_eq!(a, b);
        // The kickstart toward q = 0 dominates a short search.
        assert!(a[0] < 0.2, "{a:?}");
        assert!(!alg.is_deterministic());
    }

    #[test]
    fn retained_tables_change_the_snapshot() {
        let tree = tree();
        let alg = oos_player(SolverConfig::default(), 100, true);
        let s1 = tree.infoset_index(&CoordinatedMatchingPennies::infoset(0)).unwrap();
        let mut state = alg.initial_state(1);
        let before = state.snapshot();
        alg.act(&tree, s1, &mut state).unwrap();
        assert_ne!(before, state.snapshot());
        assert!(state.snapshot().contains("table="));
    }
}
