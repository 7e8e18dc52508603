
use crate::error::Result;
use crate::strategy::BehavioralStrategy;
use crate::tree::GameTree;

use super::{NoState, OnlineAlgorithm, State};

/// Plays a fixed behavioral strategy.
#[derive(Clone, Debug)]
pub struct FixedPlayer {
    strategy: BehavioralStrategy,
    name: String,
}

impl FixedPlayer {
    pub fn strategy(&self) -> &BehavioralStrategy {
        &self.strategy
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

pub fn fixed_player(strategy: BehavioralStrategy) -> FixedPlayer {
    FixedPlayer {
        strategy,
        name: "fixed".to_string(),
    }
}

impl OnlineAlgorithm for FixedPlayer {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn initial_state(&self, _seed: u64) -> State {
        State::new(NoState)
    }

    fn act(&self, tree: &GameTree, infoset: u32, _state: &mut State) -> Result<Vec<f64>> {
        Ok(self.strategy.probs(&tree.infoset(infoset).key)?.to_vec())
    }

    fn is_stateless(&self) -> bool {
        true
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{cmp_strategy, CoordinatedMatchingPennies};
    use crate::Error;

    #[test]
    fn answers_follow_the_strategy() {
        let tree = GameTree::build(&CoordinatedMatchingPennies).unwrap();
        let alg = fixed_player(cmp_strategy(1.0, 0.0).unwrap());
        let mut state = alg.initial_state(0);
        let s1 = tree.infoset_index(&CoordinatedMatchingPennies::infoset(0)).unwrap();
        let s2 = tree.infoset_index(&CoordinatedMatchingPennies::infoset(1)).unwrap();
        assert_eq!(alg.act(&tree, s1, &mut state).unwrap(), vec![1.0, 0.0]);
        assert_eq!(alg.act(&tree, s2, &mut state).unwrap(), vec![0.0, 1.0]);
        let uniform = fixed_player(cmp_strategy(0.5, 0.5).unwrap());
        assert_eq!(uniform.act(&tree, s1, &mut state).unwrap(), vec![0.5, 0.5]);
        let root = tree.infoset_index(&CoordinatedMatchingPennies::player_one_infoset()).unwrap();
        assert!(matches!(alg.act(&tree, root, &mut state), Err(Error::MissingStrategy(_))));
    }
}
