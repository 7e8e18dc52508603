//! Stateful online algorithms: a map from an information state and an
//! internal state `theta` to a distribution over actions and an updated
//! `theta`. All randomness of an algorithm enters through its initial state.

use std::any::Any;
use std::fmt;

use crate::error::Result;
use crate::fosg::Player;
use crate::tree::{GameTree, NodeId};

mod fixed;
mod oos;
mod playcache;
mod tabular;

pub use fixed::{fixed_player, FixedPlayer};
pub use oos::{oos_player, OosPlayer};
pub use playcache::PlayCache;
pub use oos::OosState;
pub use playcache::Cache;
pub use tabular::{check_query_order, partial_strategy, tabularize, tabularize_expected, topological_orders};

/// Internal state of an online algorithm.
pub trait AlgorithmState: Any + Send + Sync + fmt::Debug {
    fn clone_state(&self) -> Box<dyn AlgorithmState>;

    /// Canonical text form; equal snapshots mean equal future behavior.
    fn snapshot(&self) -> String;

    fn as_any(&self) -> &dyn Any;

    fn as_any_mut(&mut self) -> &mut dyn Any;
}

/// Opaque `theta` owned by an [`OnlineAlgorithm`].
#[derive(Debug)]
pub struct State(Box<dyn AlgorithmState>);

impl State {
    pub fn new<T: AlgorithmState>(inner: T) -> Self {
        State(Box::new(inner))
    }

    pub fn snapshot(&self) -> String {
        self.0.snapshot()
    }

    pub fn downcast_ref<T: AlgorithmState>(&self) -> Option<&T> {
        self.0.as_any().downcast_ref()
    }

    pub fn downcast_mut<T: AlgorithmState>(&mut self) -> Option<&mut T> {
        self.0.as_any_mut().downcast_mut()
    }
}

impl Clone for State {
    fn clone(&self) -> Self {
        State(self.0.clone_state())
    }
}

/// The state of an algorithm that keeps none.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NoState;

impl AlgorithmState for NoState {
    fn clone_state(&self) -> Box<dyn AlgorithmState> {
        Box::new(NoState)
    }

    fn snapshot(&self) -> String {
        String::new()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

pub trait OnlineAlgorithm: Send + Sync {
    fn name(&self) -> String;

    /// `theta_0`. Algorithms whose behavior depends on `seed` are not
    /// deterministic (see [`is_deterministic`](Self::is_deterministic)).
    fn initial_state(&self, seed: u64) -> State;

    /// Distribution over the actions of acting information state `infoset`.
    fn act(&self, tree: &GameTree, infoset: u32, state: &mut State) -> Result<Vec<f64>>;

    /// Called once per match with the terminal node reached, from the
    /// perspective of `player`.
    fn observe_outcome(&self, _tree: &GameTree, _terminal: NodeId, _player: Player, _state: &mut State) {}

    /// Output never depends on `theta`.
    fn is_stateless(&self) -> bool;

    /// `theta_0` does not depend on the seed.
    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Checks the stateless flag by comparing answers under fresh and
/// perturbed states: every acting infoset is queried after every other one.
pub fn probe_statelessness(alg: &dyn OnlineAlgorithm, tree: &GameTree, player: Player) -> Result<bool> {
    let keys: Vec<u32> = tree.acting_infosets(player).map(|(i, _)| i).collect();
    for &target in &keys {
        let base = alg.act(tree, target, &mut alg.initial_state(0))?;
        for &first in &keys {
            let mut state = alg.initial_state(0);
            alg.act(tree, first, &mut state)?;
            let answer = alg.act(tree, target, &mut state)?;
            if answer.iter().zip(&base).any(|(a, b)| (a - b).abs() > 1e-12) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{cmp_strategy, CoordinatedMatchingPennies};

    #[test]
    fn statelessness_probe() {
        let tree = GameTree::build(&CoordinatedMatchingPennies).unwrap();
        let fixed = fixed_player(cmp_strategy(1.0, 0.0).unwrap());
        assert!(fixed.is_stateless());
        assert!(probe_statelessness(&fixed, &tree, Player::Two).unwrap());
        assert!(!PlayCache.is_stateless());
        assert!(!probe_statelessness(&PlayCache, &tree, Player::Two).unwrap());
    }
}
