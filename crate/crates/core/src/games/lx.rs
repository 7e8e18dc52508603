use crate::fosg::{ActionId, Game, InfoElem, InfoState, JointAction, Observation, Player, WorldId};

pub const LEFT: ActionId = 0;
pub const RIGHT: ActionId = 1;
pub const Y: ActionId = 0;
pub const X: ActionId = 1;

/// One-player perfect-information tree: choose L or R, then Y or X.
///
/// Payoffs: L,Y = 1, L,X = 0, R,X = 1, R,Y = 0. Player two only has a no-op
/// and receives the negated payoff.
#[derive(Clone, Copy, Debug, Default)]
pub struct PerfectInfoLXGame;

impl PerfectInfoLXGame {
    fn payoff(first: ActionId, second: ActionId) -> f64 {
        match (first, second) {
            (LEFT, Y) | (RIGHT, X) => 1.0,
            _ => 0.0,
        }
    }
}

impl Game for PerfectInfoLXGame {
    fn name(&self) -> &str {
        "lx"
    }

    fn initial_world(&self) -> WorldId {
        0
    }

    fn is_terminal(&self, world: WorldId) -> bool {
        world >= 3
    }

    fn legal_actions(&self, world: WorldId, player: Player) -> Vec<ActionId> {
        match (world, player) {
            (w, _) if w >= 3 => vec![],
            (_, Player::One) => vec![0, 1],
            (_, Player::Two) => vec![0],
        }
    }

    fn transition(&self, world: WorldId, joint: JointAction) -> Vec<(WorldId, f64)> {
        match world {
            0 => vec![(1 + joint[0], 1.0)],
            w => vec![(3 + (w - 1) * 2 + joint[0], 1.0)],
        }
    }

    fn reward(&self, world: WorldId, joint: JointAction, player: Player) -> f64 {
        match world {
            1 | 2 => player.sign() * Self::payoff(world - 1, joint[0]),
            _ => 0.0,
        }
    }

    fn observation(&self, prev: WorldId, joint: JointAction, _next: WorldId) -> Observation {
        match prev {
            0 => Observation::public(joint[0] + 1),
            _ => Observation::public(joint[0] + 3),
        }
    }

    fn action_label(&self, world: WorldId, player: Player, action: ActionId) -> String {
        match (world, player) {
            (0, Player::One) => ["L", "R"][action as usize].into(),
            (1 | 2, Player::One) => ["Y", "X"][action as usize].into(),
            _ => "-".into(),
        }
    }

    fn infoset_label(&self, info: &InfoState) -> Option<String> {
        if info.player() != Player::One {
            return None;
        }
        match info.elements() {
            [_] => Some("top".into()),
            [_, _, InfoElem::Obs { public: 1, .. }] => Some("after-L".into()),
            [_, _, InfoElem::Obs { public: 2, .. }] => Some("after-R".into()),
            _ => None,
        }
    }

    fn known_value(&self) -> Option<f64> {
        Some(1.0)
    }
}
