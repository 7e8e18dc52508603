use crate::fosg::{ActionId, Game, JointAction, Observation, Player, WorldId};

/// A one-shot simultaneous-move game given by player one's payoff matrix.
#[derive(Clone, Debug)]
pub struct MatrixGame {
    name: String,
    payoff: Vec<Vec<f64>>,
    labels: Vec<String>,
    value: Option<f64>,
}

impl MatrixGame {
    /// Classic matching pennies: +1 to player one on a match.
    pub fn matching_pennies() -> Self {
        MatrixGame {
            name: "mp".into(),
            payoff: vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
            labels: vec!["Heads".into(), "Tails".into()],
            value: Some(0.0),
        }
    }

    /// Actions `A`, `B`, `C` for both players, every payoff zero.
    pub fn zero_payoff_3x3() -> Self {
        MatrixGame {
            name: "nfg3x3".into(),
            payoff: vec![vec![0.0; 3]; 3],
            labels: vec!["A".into(), "B".into(), "C".into()],
            value: Some(0.0),
        }
    }

    fn rows(&self) -> u32 {
        self.payoff.len() as u32
    }

    fn cols(&self) -> u32 {
        self.payoff[0].len() as u32
    }
}

impl Game for MatrixGame {
    fn name(&self) -> &str {
        &self.name
    }

    fn initial_world(&self) -> WorldId {
        0
    }

    fn is_terminal(&self, world: WorldId) -> bool {
        world != 0
    }

    fn legal_actions(&self, world: WorldId, player: Player) -> Vec<ActionId> {
        if world != 0 {
            return vec![];
        }
        match player {
            Player::One => (0..self.rows()).collect(),
            Player::Two => (0..self.cols()).collect(),
        }
    }

    fn transition(&self, _world: WorldId, joint: JointAction) -> Vec<(WorldId, f64)> {
        vec![(1 + joint[0] * self.cols() + joint[1], 1.0)]
    }

    fn reward(&self, world: WorldId, joint: JointAction, player: Player) -> f64 {
        if world != 0 {
            return 0.0;
        }
        player.sign() * self.payoff[joint[0] as usize][joint[1] as usize]
    }

    fn observation(&self, _prev: WorldId, _joint: JointAction, _next: WorldId) -> Observation {
        Observation::default()
    }

    fn action_label(&self, _world: WorldId, _player: Player, action: ActionId) -> String {
        self.labels
            .get(action as usize)
            .cloned()
            .unwrap_or_else(|| action.to_string())
    }

    fn known_value(&self) -> Option<f64> {
        self.value
    }
}
