//! Factored-observation stochastic games (FOSGs) and the history, information
//! state and reach-probability primitives built on top of them.
//!
//! A [`Game`] exposes worlds and actions as small integer ids. Chance lives
//! inside [`Game::transition`]; there is no explicit chance player. Every
//! non-terminal world gives both players a non-empty ordered action list, so a
//! player who does not move at a world gets a single no-op action.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::strategy::BehavioralStrategy;

pub type WorldId = u32;
pub type ActionId = u32;
pub type JointAction = [ActionId; 2];

/// Default limit on the number of histories materialized from a game.
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Player> {
        match index {
            0 => Some(Player::One),
            1 => Some(Player::Two),
            _ => None,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    /// +1 for player one, -1 for player two. Multiplies player-one utilities.
    pub fn sign(self) -> f64 {
        match self {
            Player::One => 1.0,
            Player::Two => -1.0,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

impl FromStr for Player {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "p1" | "P1" => Ok(Player::One),
            "2" | "p2" | "P2" => Ok(Player::Two),
            other => Err(Error::Parse(format!("unknown player `{other}`"))),
        }
    }
}

/// Observations emitted by a single transition: one private symbol per
/// player plus a public symbol seen by both.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Observation {
    pub private: [u32; 2],
    pub public: u32,
}

impl Observation {
    pub fn public(symbol: u32) -> Self {
        Observation {
            private: [0, 0],
            public: symbol,
        }
    }

    fn element(&self, player: Player) -> InfoElem {
        InfoElem::Obs {
            public: self.public,
            private: self.private[player.index()],
        }
    }
}

/// A finite two-player zero-sum FOSG.
pub trait Game: Send + Sync {
    fn name(&self) -> &str;

    fn initial_world(&self) -> WorldId;

    fn initial_observation(&self) -> Observation {
        Observation::default()
    }

    fn is_terminal(&self, world: WorldId) -> bool;

    /// Ordered legal actions. Empty exactly at terminal worlds.
    fn legal_actions(&self, world: WorldId, player: Player) -> Vec<ActionId>;

    /// Finite distribution over successor worlds.
    fn transition(&self, world: WorldId, joint: JointAction) -> Vec<(WorldId, f64)>;

    fn reward(&self, world: WorldId, joint: JointAction, player: Player) -> f64;

    fn observation(&self, prev: WorldId, joint: JointAction, next: WorldId) -> Observation;

    fn action_label(&self, _world: WorldId, _player: Player, action: ActionId) -> String {
        action.to_string()
    }

    /// Short human name for an information state (`s1`, `Kpb`, ...), if any.
    fn infoset_label(&self, _info: &InfoState) -> Option<String> {
        None
    }

    /// Known game value for player one, when it is available in closed form.
    fn known_value(&self) -> Option<f64> {
        None
    }
}

/// One element of an action-observation sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InfoElem {
    Obs { public: u32, private: u32 },
    Act(ActionId),
}

/// A player's private action-observation sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InfoState {
    player: Player,
    elems: Vec<InfoElem>,
}

impl InfoState {
    pub fn initial(player: Player, obs: &Observation) -> Self {
        InfoState {
            player,
            elems: vec![obs.element(player)],
        }
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn elements(&self) -> &[InfoElem] {
        &self.elems
    }

    pub fn push_action(&mut self, action: ActionId) {
        self.elems.push(InfoElem::Act(action));
    }

    pub fn push_observation(&mut self, obs: &Observation) {
        self.elems.push(obs.element(self.player));
    }

    /// Own actions taken so far, in order.
    pub fn actions(&self) -> impl Iterator<Item = ActionId> + '_ {
        self.elems.iter().filter_map(|e| match e {
            InfoElem::Act(a) => Some(*a),
            InfoElem::Obs { .. } => None,
        })
    }

    pub fn is_prefix_of(&self, other: &InfoState) -> bool {
        self.player == other.player
            && self.elems.len() <= other.elems.len()
            && other.elems[..self.elems.len()] == self.elems[..]
    }

    pub fn key(&self) -> InfoKey {
        let mut bytes = Vec::with_capacity(5 + self.elems.len() * 9);
        bytes.push(self.player.index() as u8);
        bytes.extend_from_slice(&(self.elems.len() as u32).to_le_bytes());
        for elem in &self.elems {
            match *elem {
                InfoElem::Obs { public, private } => {
                    bytes.push(0);
                    bytes.extend_from_slice(&public.to_le_bytes());
                    bytes.extend_from_slice(&private.to_le_bytes());
                }
                InfoElem::Act(a) => {
                    bytes.push(1);
                    bytes.extend_from_slice(&a.to_le_bytes());
                }
            }
        }
        InfoKey(bytes)
    }

    pub fn from_key(key: &InfoKey) -> Result<InfoState> {
        let bad = || Error::Parse(format!("malformed information-state key {key}"));
        let bytes = &key.0;
        let player = bytes
            .first()
            .and_then(|p| Player::from_index(*p as usize))
            .ok_or_else(bad)?;
        let read_u32 = |at: usize| -> Result<u32> {
            bytes
                .get(at..at + 4)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
                .ok_or_else(bad)
        };
        let count = read_u32(1)? as usize;
        let mut elems = Vec::with_capacity(count);
        let mut at = 5;
        for _ in 0..count {
            match bytes.get(at) {
                Some(0) => {
                    elems.push(InfoElem::Obs {
                        public: read_u32(at + 1)?,
                        private: read_u32(at + 5)?,
                    });
                    at += 9;
                }
                Some(1) => {
                    elems.push(InfoElem::Act(read_u32(at + 1)?));
                    at += 5;
                }
                _ => return Err(bad()),
            }
        }
        if at != bytes.len() {
            return Err(bad());
        }
        Ok(InfoState { player, elems })
    }
}

/// Canonical, injective byte encoding of an [`InfoState`]: player byte,
/// element count, then tagged fixed-width elements.
///
/// The text form (`p2;o0.0;a0;o1.0`) round-trips through [`FromStr`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfoKey(Vec<u8>);

impl InfoKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn player(&self) -> Player {
        Player::from_index(self.0[0] as usize).expect("key built from a valid player")
    }
}

impl fmt::Display for InfoKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Ok(info) = InfoState::from_key(self) else {
            return write!(f, "<invalid key>");
        };
        write!(f, "p{}", info.player)?;
        for elem in &info.elems {
            match elem {
                InfoElem::Obs { public, private } => write!(f, ";o{public}.{private}")?,
                InfoElem::Act(a) => write!(f, ";a{a}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for InfoKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InfoKey({self})")
    }
}

impl FromStr for InfoKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed information-state key `{s}`"));
        let mut parts = s.trim().split(';');
        let player = parts
            .next()
            .and_then(|p| p.strip_prefix('p'))
            .ok_or_else(bad)?
            .parse::<Player>()?;
        let mut elems = Vec::new();
        for part in parts {
            if let Some(rest) = part.strip_prefix('o') {
                let (public, private) = rest.split_once('.').ok_or_else(bad)?;
                elems.push(InfoElem::Obs {
                    public: public.parse().map_err(|_| bad())?,
                    private: private.parse().map_err(|_| bad())?,
                });
            } else if let Some(rest) = part.strip_prefix('a') {
                elems.push(InfoElem::Act(rest.parse().map_err(|_| bad())?));
            } else {
                return Err(bad());
            }
        }
        Ok(InfoState { player, elems }.key())
    }
}

/// A legal world history `w0, a0, w1, ..., wt`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct History {
    worlds: Vec<WorldId>,
    actions: Vec<JointAction>,
}

impl History {
    pub fn new(initial: WorldId) -> Self {
        History {
            worlds: vec![initial],
            actions: Vec::new(),
        }
    }

    pub fn root(game: &dyn Game) -> Self {
        History::new(game.initial_world())
    }

    pub fn push(&mut self, joint: JointAction, next: WorldId) {
        self.actions.push(joint);
        self.worlds.push(next);
    }

    pub fn last_world(&self) -> WorldId {
        *self.worlds.last().expect("history holds at least one world")
    }

    pub fn worlds(&self) -> &[WorldId] {
        &self.worlds
    }

    pub fn actions(&self) -> &[JointAction] {
        &self.actions
    }

    /// Number of transitions taken.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// `(world, joint action, next world)` triples.
    pub fn steps(&self) -> impl Iterator<Item = (WorldId, JointAction, WorldId)> + '_ {
        self.actions
            .iter()
            .enumerate()
            .map(|(i, a)| (self.worlds[i], *a, self.worlds[i + 1]))
    }

    /// Cumulative reward of `player` along the history.
    pub fn utility(&self, game: &dyn Game, player: Player) -> f64 {
        self.steps().map(|(w, a, _)| game.reward(w, a, player)).sum()
    }
}

/// Per-player and chance factors of a history's reach probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReachProbs {
    pub player1: f64,
    pub player2: f64,
    pub chance: f64,
}

impl ReachProbs {
    pub const ONE: ReachProbs = ReachProbs {
        player1: 1.0,
        player2: 1.0,
        chance: 1.0,
    };

    pub fn total(&self) -> f64 {
        self.player1 * self.player2 * self.chance
    }

    pub fn of(&self, player: Player) -> f64 {
        match player {
            Player::One => self.player1,
            Player::Two => self.player2,
        }
    }
}

/// Every terminal history exactly once, in depth-first order (player one's
/// action, then player two's, then chance outcomes in transition order).
pub fn enumerate_terminals(game: &dyn Game) -> Result<Vec<History>> {
    enumerate_terminals_with_budget(game, DEFAULT_NODE_BUDGET)
}

pub fn enumerate_terminals_with_budget(game: &dyn Game, budget: usize) -> Result<Vec<History>> {
    fn walk(
        game: &dyn Game,
        history: &mut History,
        out: &mut Vec<History>,
        visited: &mut usize,
        budget: usize,
    ) -> Result<()> {
        *visited += 1;
        if *visited > budget {
            return Err(Error::BudgetExceeded { budget });
        }
        let world = history.last_world();
        if game.is_terminal(world) {
            out.push(history.clone());
            return Ok(());
        }
        for a1 in game.legal_actions(world, Player::One) {
            for a2 in game.legal_actions(world, Player::Two) {
                for (next, p) in game.transition(world, [a1, a2]) {
                    if p <= 0.0 {
                        continue;
                    }
                    history.push([a1, a2], next);
                    walk(game, history, out, visited, budget)?;
                    history.actions.pop();
                    history.worlds.pop();
                }
            }
        }
        Ok(())
    }

    let mut out = Vec::new();
    let mut visited = 0;
    walk(game, &mut History::root(game), &mut out, &mut visited, budget)?;
    Ok(out)
}

/// The player's information state at the end of `history`.
pub fn info_state_of(game: &dyn Game, history: &History, player: Player) -> InfoState {
    let mut info = InfoState::initial(player, &game.initial_observation());
    for (w, a, next) in history.steps() {
        info.push_action(a[player.index()]);
        info.push_observation(&game.observation(w, a, next));
    }
    info
}

/// Reach probability factors of `history` under `profile = (player one, player two)`.
///
/// Only worlds where a player has more than one legal action consult that
/// player's strategy.
pub fn reach_probabilities(
    game: &dyn Game,
    profile: (&BehavioralStrategy, &BehavioralStrategy),
    history: &History,
) -> Result<ReachProbs> {
    let strategies = [profile.0, profile.1];
    let mut infos = Player::BOTH.map(|p| InfoState::initial(p, &game.initial_observation()));
    let mut reach = ReachProbs::ONE;
    for (w, joint, next) in history.steps() {
        for player in Player::BOTH {
            let legal = game.legal_actions(w, player);
            if legal.len() > 1 {
                let key = infos[player.index()].key();
                let probs = strategies[player.index()].probs(&key)?;
                let idx = legal
                    .iter()
                    .position(|&a| a == joint[player.index()])
                    .ok_or_else(|| Error::InvalidGame(format!("illegal action in history at world {w}")))?;
                let p = probs[idx];
                match player {
                    Player::One => reach.player1 *= p,
                    Player::Two => reach.player2 *= p,
                }
            }
        }
        let p_next: f64 = game
            .transition(w, joint)
            .iter()
            .filter(|(x, _)| *x == next)
            .map(|(_, p)| p)
            .sum();
        reach.chance *= p_next;
        for player in Player::BOTH {
            let info = &mut infos[player.index()];
            info.push_action(joint[player.index()]);
            info.push_observation(&game.observation(w, joint, next));
        }
    }
    Ok(reach)
}

/// Player one's expected utility, summed exactly over the enumerated terminals.
pub fn expected_utility(
    game: &dyn Game,
    profile: (&BehavioralStrategy, &BehavioralStrategy),
) -> Result<f64> {
    let mut total = 0.0;
    for z in enumerate_terminals(game)? {
        let reach = reach_probabilities(game, profile, &z)?;
        total += reach.total() * z.utility(game, Player::One);
    }
    Ok(total)
}

/// `max_z u1(z) - min_z u1(z)` over all terminal histories.
pub fn utility_range(game: &dyn Game) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for z in enumerate_terminals(game)? {
        let u = z.utility(game, Player::One);
        lo = lo.min(u);
        hi = hi.max(u);
    }
    Ok(if hi >= lo { hi - lo } else { 0.0 })
}

/// Checks the structural invariants of a game: zero-sum rewards, normalized
/// transitions, and consistent action-set emptiness.
pub fn validate_game(game: &dyn Game) -> Result<()> {
    for z in enumerate_terminals(game)? {
        for (w, joint, _) in z.steps() {
            let r1 = game.reward(w, joint, Player::One);
            let r2 = game.reward(w, joint, Player::Two);
            if (r1 + r2).abs() > 1e-12 {
                return Err(Error::InvalidGame(format!(
                    "rewards at world {w} are not zero-sum ({r1} vs {r2})"
                )));
            }
            let mass: f64 = game.transition(w, joint).iter().map(|(_, p)| p).sum();
            if (mass - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidGame(format!(
                    "transition from world {w} sums to {mass}"
                )));
            }
        }
        for &w in z.worlds() {
            let empty = Player::BOTH.map(|p| game.legal_actions(w, p).is_empty());
            if empty[0] != empty[1] || empty[0] != game.is_terminal(w) {
                return Err(Error::InvalidGame(format!(
                    "world {w} mixes empty and non-empty action sets"
                )));
            }
        }
    }
    Ok(())
}
