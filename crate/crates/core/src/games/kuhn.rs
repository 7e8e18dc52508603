use crate::error::{check_unit, Result};
use crate::fosg::{ActionId, Game, InfoElem, InfoKey, InfoState, JointAction, Observation, Player, WorldId};
use crate::strategy::BehavioralStrategy;

pub const PASS: ActionId = 0;
pub const BET: ActionId = 1;

/// Card ranks in three-card Kuhn poker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Card {
    Jack = 0,
    Queen = 1,
    King = 2,
}

impl Card {
    pub const ALL: [Card; 3] = [Card::Jack, Card::Queen, Card::King];

    fn letter(self) -> char {
        ['J', 'Q', 'K'][self as usize]
    }
}

// Deals as (player one card, player two card).
const DEALS: [(u32, u32); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

// Betting sequences; indices 4.. are terminal.
const SEQUENCES: [&str; 9] = ["", "p", "b", "pb", "pp", "bp", "bb", "pbp", "pbb"];
const FIRST_TERMINAL_SEQ: u32 = 4;

/// Three-card Kuhn poker: ante 1, one bet of size 1, player one acts first.
///
/// Both players choose between pass (check or fold) and bet (bet or call).
/// World `0` is the deal; world `1 + 9 * deal + seq` is the betting state.
#[derive(Clone, Copy, Debug, Default)]
pub struct KuhnPoker;

impl KuhnPoker {
    fn decode(world: WorldId) -> (usize, u32) {
        let idx = world - 1;
        ((idx / 9) as usize, idx % 9)
    }

    fn encode(deal: usize, seq: u32) -> WorldId {
        1 + 9 * deal as u32 + seq
    }

    fn next_seq(seq: u32, action: ActionId) -> u32 {
        match (seq, action) {
            (0, PASS) => 1,
            (0, _) => 2,
            (1, PASS) => 4,
            (1, _) => 3,
            (2, PASS) => 5,
            (2, _) => 6,
            (3, PASS) => 7,
            (3, _) => 8,
            _ => unreachable!("no actions after a terminal sequence"),
        }
    }

    fn to_act(seq: u32) -> Option<Player> {
        match seq {
            0 | 3 => Some(Player::One),
            1 | 2 => Some(Player::Two),
            _ => None,
        }
    }

    /// Player one's information state holding `card`, either at the first
    /// decision or after pass-bet.
    pub fn player_one_infoset(card: Card, after_pass_bet: bool) -> InfoKey {
        let mut info = Self::dealt(Player::One, card);
        if after_pass_bet {
            info.push_action(PASS);
            info.push_observation(&Observation::public(PASS + 1));
            info.push_action(0);
            info.push_observation(&Observation::public(BET + 1));
        }
        info.key()
    }

    /// Player two's information state holding `card` after player one's first action.
    pub fn player_two_infoset(card: Card, first_action: ActionId) -> InfoKey {
        let mut info = Self::dealt(Player::Two, card);
        info.push_action(0);
        info.push_observation(&Observation::public(first_action + 1));
        info.key()
    }

    fn dealt(player: Player, card: Card) -> InfoState {
        let mut info = InfoState::initial(player, &Observation::default());
        info.push_action(0);
        let mut obs = Observation::public(0);
        obs.private[player.index()] = card as u32 + 1;
        info.push_observation(&obs);
        info
    }
}

impl Game for KuhnPoker {
    fn name(&self) -> &str {
        "kuhn"
    }

    fn initial_world(&self) -> WorldId {
        0
    }

    fn is_terminal(&self, world: WorldId) -> bool {
        world != 0 && Self::decode(world).1 >= FIRST_TERMINAL_SEQ
    }

    fn legal_actions(&self, world: WorldId, player: Player) -> Vec<ActionId> {
        if world == 0 {
            return vec![0];
        }
        let (_, seq) = Self::decode(world);
        match Self::to_act(seq) {
            None => vec![],
            Some(p) if p == player => vec![PASS, BET],
            Some(_) => vec![0],
        }
    }

    fn transition(&self, world: WorldId, joint: JointAction) -> Vec<(WorldId, f64)> {
        if world == 0 {
            return (0..DEALS.len()).map(|d| (Self::encode(d, 0), 1.0 / 6.0)).collect();
        }
        let (deal, seq) = Self::decode(world);
        let actor = Self::to_act(seq).expect("transition from a decision world");
        let next = Self::next_seq(seq, joint[actor.index()]);
        vec![(Self::encode(deal, next), 1.0)]
    }

    fn reward(&self, world: WorldId, joint: JointAction, player: Player) -> f64 {
        if world == 0 {
            return 0.0;
        }
        let (deal, seq) = Self::decode(world);
        let Some(actor) = Self::to_act(seq) else {
            return 0.0;
        };
        let next = Self::next_seq(seq, joint[actor.index()]);
        let (c1, c2) = DEALS[deal];
        let showdown = if c1 > c2 { 1.0 } else { -1.0 };
        let u1 = match SEQUENCES[next as usize] {
            "pp" => showdown,
            "bb" | "pbb" => 2.0 * showdown,
            "bp" => 1.0,
            "pbp" => -1.0,
            _ => 0.0,
        };
        player.sign() * u1
    }

    fn observation(&self, prev: WorldId, joint: JointAction, next: WorldId) -> Observation {
        if prev == 0 {
            let (deal, _) = Self::decode(next);
            let (c1, c2) = DEALS[deal];
            return Observation {
                private: [c1 + 1, c2 + 1],
                public: 0,
            };
        }
        let (_, seq) = Self::decode(prev);
        let actor = Self::to_act(seq).expect("observation after a decision");
        Observation::public(joint[actor.index()] + 1)
    }

    fn action_label(&self, world: WorldId, player: Player, action: ActionId) -> String {
        if self.legal_actions(world, player).len() < 2 {
            return "-".into();
        }
        if action == PASS { "pass" } else { "bet" }.into()
    }

    fn infoset_label(&self, info: &InfoState) -> Option<String> {
        let mut card = None;
        let mut betting = String::new();
        for (i, elem) in info.elements().iter().enumerate() {
            match (i, elem) {
                (2, InfoElem::Obs { private, .. }) => card = Some(*private),
                (i, InfoElem::Obs { public, .. }) if i > 2 => match public {
                    1 => betting.push('p'),
                    2 => betting.push('b'),
                    _ => return None,
                },
                _ => {}
            }
        }
        let card = Card::ALL.get(card?.checked_sub(1)? as usize)?;
        Some(format!("{}{}", card.letter(), betting))
    }

    fn known_value(&self) -> Option<f64> {
        Some(-1.0 / 18.0)
    }
}

/// Player one's strategy from the one-parameter Kuhn equilibrium family.
///
/// `alpha` in `[0, 1]` is rescaled to the classic bluffing frequency
/// `b = alpha / 3`: bet a Jack with probability `b`, always check a Queen and
/// call a bet with it with probability `b + 1/3`, bet a King with probability
/// `3b`. A Jack facing a bet folds; a King facing a bet calls.
pub fn kuhn_alpha_equilibrium(alpha: f64) -> Result<BehavioralStrategy> {
    check_unit("alpha", alpha)?;
    let bluff = alpha / 3.0;
    let mut s = BehavioralStrategy::new(Player::One);
    let bet = |p: f64| vec![1.0 - p, p];
    s.insert(KuhnPoker::player_one_infoset(Card::Jack, false), bet(bluff))?;
    s.insert(KuhnPoker::player_one_infoset(Card::Jack, true), bet(0.0))?;
    s.insert(KuhnPoker::player_one_infoset(Card::Queen, false), bet(0.0))?;
    s.insert(KuhnPoker::player_one_infoset(Card::Queen, true), bet(bluff + 1.0 / 3.0))?;
    s.insert(KuhnPoker::player_one_infoset(Card::King, false), bet(3.0 * bluff))?;
    s.insert(KuhnPoker::player_one_infoset(Card::King, true), bet(1.0))?;
    Ok(s)
}
