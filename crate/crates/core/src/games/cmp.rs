use crate::error::{check_unit, Result};
use crate::fosg::{ActionId, Game, InfoElem, InfoKey, InfoState, JointAction, Observation, Player, WorldId};
use crate::strategy::BehavioralStrategy;

pub const HEADS: ActionId = 0;
pub const TAILS: ActionId = 1;

const ROOT: WorldId = 0;
const FIRST_DECISION: WorldId = 1;
const FIRST_TERMINAL: WorldId = 5;

/// Matching pennies where a public fair coin, flipped after player one
/// moves, puts player two in information state `s1` or `s2`.
///
/// Player one receives +1 when the two actions match and -1 otherwise.
/// Worlds: `0` root, `1..=4` player two to act (encoding coin and player
/// one's action), `5..=12` terminal.
#[derive(Clone, Copy, Debug, Default)]
pub struct CoordinatedMatchingPennies;

impl CoordinatedMatchingPennies {
    /// Player two's information state `s1` (`state = 0`) or `s2` (`state = 1`).
    pub fn infoset(state: usize) -> InfoKey {
        let mut info = InfoState::initial(Player::Two, &Observation::default());
        info.push_action(0);
        info.push_observation(&Observation::public(state as u32 + 1));
        info.key()
    }

    pub fn player_one_infoset() -> InfoKey {
        InfoState::initial(Player::One, &Observation::default()).key()
    }

    fn decode_decision(world: WorldId) -> (u32, ActionId) {
        let idx = world - FIRST_DECISION;
        (idx / 2, idx % 2)
    }
}

impl Game for CoordinatedMatchingPennies {
    fn name(&self) -> &str {
        "cmp"
    }

    fn initial_world(&self) -> WorldId {
        ROOT
    }

    fn is_terminal(&self, world: WorldId) -> bool {
        world >= FIRST_TERMINAL
    }

    fn legal_actions(&self, world: WorldId, player: Player) -> Vec<ActionId> {
        match (world, player) {
            (ROOT, Player::One) => vec![HEADS, TAILS],
            (ROOT, Player::Two) => vec![0],
            (w, _) if w >= FIRST_TERMINAL => vec![],
            (_, Player::One) => vec![0],
            (_, Player::Two) => vec![HEADS, TAILS],
        }
    }

    fn transition(&self, world: WorldId, joint: JointAction) -> Vec<(WorldId, f64)> {
        if world == ROOT {
            let a1 = joint[0];
            vec![(FIRST_DECISION + a1, 0.5), (FIRST_DECISION + 2 + a1, 0.5)]
        } else {
            let idx = world - FIRST_DECISION;
            vec![(FIRST_TERMINAL + idx * 2 + joint[1], 1.0)]
        }
    }

    fn reward(&self, world: WorldId, joint: JointAction, player: Player) -> f64 {
        if world == ROOT || world >= FIRST_TERMINAL {
            return 0.0;
        }
        let (_, a1) = Self::decode_decision(world);
        let u1 = if a1 == joint[1] { 1.0 } else { -1.0 };
        player.sign() * u1
    }

    fn observation(&self, prev: WorldId, _joint: JointAction, next: WorldId) -> Observation {
        if prev == ROOT {
            let (state, _) = Self::decode_decision(next);
            Observation::public(state + 1)
        } else {
            Observation::default()
        }
    }

    fn action_label(&self, world: WorldId, player: Player, action: ActionId) -> String {
        if self.legal_actions(world, player).len() < 2 {
            return "-".into();
        }
        if action == HEADS { "Heads" } else { "Tails" }.into()
    }

    fn infoset_label(&self, info: &InfoState) -> Option<String> {
        match (info.player(), info.elements()) {
            (Player::One, [_]) => Some("root".into()),
            (Player::Two, [_, InfoElem::Act(0), InfoElem::Obs { public, .. }]) if (1..=2).contains(public) => {
                Some(format!("s{public}"))
            }
            _ => None,
        }
    }

    fn known_value(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Player two ("blue") plays Heads with probability `p` in `s1` and `q` in `s2`.
pub fn cmp_strategy(p: f64, q: f64) -> Result<BehavioralStrategy> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    let mut s = BehavioralStrategy::new(Player::Two);
    s.insert(CoordinatedMatchingPennies::infoset(0), vec![p, 1.0 - p])?;
    s.insert(CoordinatedMatchingPennies::infoset(1), vec![q, 1.0 - q])?;
    Ok(s)
}
