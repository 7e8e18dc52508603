use std::fmt::Write as _;
use std::any::Any;
use std::collections::BTreeMap;

use crate::error::Result;
use crate::fosg::InfoKey;
use crate::tree::GameTree;

use super::{AlgorithmState, OnlineAlgorithm, State};

/// Caches its first answer at every information state. On an empty cache
/// it plays action 0 (Heads), on a miss with a non-empty cache action 1
/// (Tails), and on a hit the cached action.
#[derive(Clone, Copy, Debug, Default)]
pub struct PlayCache;

/// Cached pure actions by information state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cache(pub BTreeMap<InfoKey, usize>);

impl AlgorithmState for Cache {
    fn clone_state(&self) -> Box<dyn AlgorithmState> {
        Box::new(self.clone())
    }

    fn snapshot(&self) -> String {
        let mut out = String::from("{");
        for (i, (k, a)) in self.0.iter().enumerate() {
            let sep = if i == 0 { "" } else { " " };
            let _ = write!(out, "{sep}{k}:{a}");
        }
        out.push('}');
        out
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

impl OnlineAlgorithm for PlayCache {
    fn name(&self) -> String {
        "playcache".to_string()
    }

    fn initial_state(&self, _seed: u64) -> State {
        State::new(Cache::default())
    }

    fn act(&self, tree: &GameTree, infoset: u32, state: &mut State) -> Result<Vec<f64>> {
        let set = tree.infoset(infoset);
        let cache = &mut state
            .downcast_mut::<Cache>()
            .expect("PlayCache runs on its own state")
            .0;
        let action = match cache.get(&set.key) {
            Some(&a) => a,
            None => {
                let a = if cache.is_empty() { 0 } else { 1.min(set.num_actions() - 1) };
                cache.insert(set.key.clone(), a);
                a
            }
        };
        let mut probs = vec![0.0; set.num_actions()];
        probs[action] = 1.0;
        Ok(probs)
    }

    fn is_stateless(&self) -> bool {
        false
    }
}
