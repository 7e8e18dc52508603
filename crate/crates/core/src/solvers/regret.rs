use crate::error::{Error, Result};
use crate::fosg::{InfoKey, Player};
use crate::strategy::BehavioralStrategy;
use crate::tree::GameTree;

/// Positive parts of `regrets`, normalized; uniform when none is positive.
pub fn regret_matching(regrets: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; regrets.len()];
    regret_matching_into(regrets, &mut out);
    out
}

pub fn regret_matching_into(regrets: &[f64], out: &mut [f64]) {
    let positive: f64 = regrets.iter().map(|r| r.max(0.0)).sum();
    if positive > 0.0 {
        for (o, r) in out.iter_mut().zip(regrets) {
            *o = r.max(0.0) / positive;
        }
    } else {
        let u = 1.0 / out.len() as f64;
        out.iter_mut().for_each(|o| *o = u);
    }
}

/// Cumulative regrets, average-strategy accumulators and visit counts for
/// every information state of a [`GameTree`], stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretTable {
    offsets: Vec<usize>,
    regrets: Vec<f64>,
    average: Vec<f64>,
    visits: Vec<u64>,
    keys: Vec<InfoKey>,
    players: Vec<Player>,
}

impl RegretTable {
    pub fn new(tree: &GameTree) -> Self {
        let mut offsets = Vec::with_capacity(tree.infosets().len() + 1);
        let mut total = 0;
        for set in tree.infosets() {
            offsets.push(total);
            total += set.num_actions();
        }
        offsets.push(total);
        RegretTable {
            offsets,
            regrets: vec![0.0; total],
            average: vec![0.0; total],
            visits: vec![0; tree.infosets().len()],
            keys: tree.infosets().iter().map(|s| s.key.clone()).collect(),
            players: tree.infosets().iter().map(|s| s.player).collect(),
        }
    }

    pub fn num_infosets(&self) -> usize {
        self.keys.len()
    }

    pub fn key(&self, infoset: u32) -> &InfoKey {
        &self.keys[infoset as usize]
    }

    pub fn player(&self, infoset: u32) -> Player {
        self.players[infoset as usize]
    }

    fn range(&self, infoset: u32) -> std::ops::Range<usize> {
        self.offsets[infoset as usize]..self.offsets[infoset as usize + 1]
    }

    pub fn regrets(&self, infoset: u32) -> &[f64] {
        &self.regrets[self.range(infoset)]
    }

    pub fn regrets_mut(&mut self, infoset: u32) -> &mut [f64] {
        let r = self.range(infoset);
        &mut self.regrets[r]
    }

    pub fn average(&self, infoset: u32) -> &[f64] {
        &self.average[self.range(infoset)]
    }

    pub fn average_mut(&mut self, infoset: u32) -> &mut [f64] {
        let r = self.range(infoset);
        &mut self.average[r]
    }

    pub fn visits(&self, infoset: u32) -> u64 {
        self.visits[infoset as usize]
    }

    pub(crate) fn visit(&mut self, infoset: u32) {
        self.visits[infoset as usize] += 1;
    }

    pub fn current_strategy(&self, infoset: u32) -> Vec<f64> {
        regret_matching(self.regrets(infoset))
    }

    /// Normalized average strategy; infosets with an empty accumulator are uniform.
    pub fn average_strategy(&self, player: Player) -> BehavioralStrategy {
        let mut s = BehavioralStrategy::new(player);
        for i in 0..self.num_infosets() as u32 {
            if self.player(i) != player {
                continue;
            }
            s.insert(self.key(i).clone(), normalized(self.average(i)))
                .expect("normalized accumulator is a distribution");
        }
        s
    }

    /// Same as [`average_strategy`](Self::average_strategy) but indexed by infoset.
    pub fn average_dense(&self) -> Vec<Vec<f64>> {
        (0..self.num_infosets() as u32).map(|i| normalized(self.average(i))).collect()
    }

    /// Overwrites the regrets of `strategy`'s player with `mu` times the
    /// strategy's probabilities. Average accumulators are left untouched.
    pub fn kickstart(&mut self, strategy: &BehavioralStrategy, mu: f64) -> Result<()> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::OutOfRange {
                name: "mu",
                value: mu,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        for i in 0..self.num_infosets() as u32 {
            if self.player(i) != strategy.player() {
                continue;
            }
            let probs = strategy.probs(self.key(i))?.to_vec();
            let regrets = self.regrets_mut(i);
            if probs.len() != regrets.len() {
                return Err(Error::InvalidStrategy(format!("action count mismatch at infoset {i}")));
            }
            for (r, p) in regrets.iter_mut().zip(probs) {
                *r = mu * p;
            }
        }
        Ok(())
    }
}

fn normalized(acc: &[f64]) -> Vec<f64> {
    let sum: f64 = acc.iter().sum();
    if sum > 0.0 {
        acc.iter().map(|a| a / sum).collect()
    } else {
        vec![1.0 / acc.len() as f64; acc.len()]
    }
}

/// Copies `mu * strategy` into the regret accumulators of `table`.
pub fn kickstart_regrets(mut table: RegretTable, strategy: &BehavioralStrategy, mu: f64) -> Result<RegretTable> {
    table.kickstart(strategy, mu)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{cmp_strategy, CoordinatedMatchingPennies};

    #[test]
    fn regret_matching_examples() {
        assert_eq!(regret_matching(&[500.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(regret_matching(&[-1.0, -2.0]), vec![0.5, 0.5]);
        assert_eq!(regret_matching(&[3.0, 1.0]), vec![0.75, 0.25]);
    }

    #[test]
    fn kickstart_examples() {
        let tree = GameTree::build(&CoordinatedMatchingPennies).unwrap();
        let s1 = tree.infoset_index(&CoordinatedMatchingPennies::infoset(0)).unwrap();
        let s2 = tree.infoset_index(&CoordinatedMatchingPennies::infoset(1)).unwrap();

        let table = kickstart_regrets(RegretTable::new(&tree), &cmp_strategy(1.0, 0.0).unwrap(), 500.0).unwrap();
        assert_eq!(table.regrets(s1), &[500.0, 0.0]);
        assert_eq!(table.regrets(s2), &[0.0, 500.0]);
        assert!(table.average(s1).iter().all(|&a| a == 0.0));

        let table = kickstart_regrets(RegretTable::new(&tree), &cmp_strategy(1.0, 0.0).unwrap(), 0.0).unwrap();
        assert_eq!(table, RegretTable::new(&tree));

        let table = kickstart_regrets(RegretTable::new(&tree), &tree.uniform_strategy(Player::Two), 500.0).unwrap();
        assert_eq!(table.regrets(s1), &[250.0, 250.0]);
        assert_eq!(table.current_strategy(s1), vec![0.5, 0.5]);
    }

    #[test]
    fn kickstart_requires_every_infoset() {
        let tree = GameTree::build(&CoordinatedMatchingPennies).unwrap();
        let partial = cmp_strategy(1.0, 0.0).unwrap().restrict([&CoordinatedMatchingPennies::infoset(0)]);
        let err = RegretTable::new(&tree).kickstart(&partial, 500.0).unwrap_err();
        assert!(matches!(err, Error::MissingStrategy(_)));
    }
}
