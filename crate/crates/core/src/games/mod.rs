//! The concrete games: coordinated matching pennies, Kuhn poker, classic
//! matching pennies, the all-zero 3x3 matrix game and a one-player L/R then
//! Y/X decision tree.

mod cmp;
mod kuhn;
mod lx;
mod matrix;

pub use cmp::{cmp_strategy, CoordinatedMatchingPennies, HEADS, TAILS};
pub use kuhn::{kuhn_alpha_equilibrium, Card, KuhnPoker};
pub use lx::PerfectInfoLXGame;
pub use matrix::MatrixGame;

use crate::error::{Error, Result};
use crate::fosg::Game;

/// Names accepted by [`by_name`].
pub const GAME_NAMES: [&str; 5] = ["cmp", "kuhn", "mp", "nfg3x3", "lx"];

pub fn by_name(name: &str) -> Result<Box<dyn Game>> {
    match name {
        "cmp" => Ok(Box::new(CoordinatedMatchingPennies)),
        "kuhn" => Ok(Box::new(KuhnPoker)),
        "mp" => Ok(Box::new(MatrixGame::matching_pennies())),
        "nfg3x3" => Ok(Box::new(MatrixGame::zero_payoff_3x3())),
        "lx" => Ok(Box::new(PerfectInfoLXGame)),
        other => Err(Error::UnknownGame(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fosg::{enumerate_terminals, utility_range, validate_game};

    #[test]
    fn registry_games_are_valid() {
        for name in GAME_NAMES {
            let game = by_name(name).unwrap();
            assert_eq!(game.name(), name);
            validate_game(game.as_ref()).unwrap();
        }
        assert!(matches!(by_name("leduc"), Err(Error::UnknownGame(_))));
    }

    #[test]
    fn terminal_counts() {
        let counts: Vec<usize> = GAME_NAMES
            .iter()
            .map(|n| enumerate_terminals(by_name(n).unwrap().as_ref()).unwrap().len())
            .collect();
        assert_eq!(counts, vec![8, 30, 4, 9, 4]);
    }

    #[test]
    fn utility_ranges() {
        let ranges: Vec<f64> = GAME_NAMES
            .iter()
            .map(|n| utility_range(by_name(n).unwrap().as_ref()).unwrap())
            .collect();
        assert_eq!(ranges, vec![2.0, 4.0, 2.0, 0.0, 1.0]);
    }
}
