use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fosg::{Game, InfoKey, InfoState, Player};

const SUM_TOLERANCE: f64 = 1e-6;

/// Map from information-state key to a distribution over the ordered legal
/// actions at that state.
///
/// Insertion validates each vector and renormalizes small rounding drift, so
/// stored vectors sum to one within `1e-12`.
#[derive(Clone, Debug, PartialEq)]
pub struct BehavioralStrategy {
    player: Player,
    table: BTreeMap<InfoKey, Vec<f64>>,
}

/// A strategy defined only on the information states visited along some
/// trajectories.
pub type PartialStrategy = BehavioralStrategy;

impl BehavioralStrategy {
    pub fn new(player: Player) -> Self {
        BehavioralStrategy {
            player,
            table: BTreeMap::new(),
        }
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn insert(&mut self, key: InfoKey, probs: Vec<f64>) -> Result<()> {
        if key.player() != self.player {
            return Err(Error::InvalidStrategy(format!(
                "key {key} belongs to player {}, strategy to player {}",
                key.player(),
                self.player
            )));
        }
        let probs = normalize(probs).map_err(|msg| Error::InvalidStrategy(format!("{key}: {msg}")))?;
        self.table.insert(key, probs);
        Ok(())
    }

    pub fn get(&self, key: &InfoKey) -> Option<&[f64]> {
        self.table.get(key).map(Vec::as_slice)
    }

    pub fn probs(&self, key: &InfoKey) -> Result<&[f64]> {
        self.get(key).ok_or_else(|| Error::MissingStrategy(key.clone()))
    }

    pub fn contains(&self, key: &InfoKey) -> bool {
        self.table.contains_key(key)
    }

    pub fn remove(&mut self, key: &InfoKey) -> Option<Vec<f64>> {
        self.table.remove(key)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&InfoKey, &[f64])> {
        self.table.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &InfoKey> {
        self.table.keys()
    }

    /// Restriction to the given keys; keys absent from `self` are skipped.
    pub fn restrict<'a>(&self, keys: impl IntoIterator<Item = &'a InfoKey>) -> BehavioralStrategy {
        let mut out = BehavioralStrategy::new(self.player);
        for key in keys {
            if let Some(p) = self.table.get(key) {
                out.table.insert(key.clone(), p.clone());
            }
        }
        out
    }

    /// Largest absolute per-action difference on the shared domain, or
    /// `None` when the domains differ.
    pub fn max_difference(&self, other: &BehavioralStrategy) -> Option<f64> {
        if self.player != other.player || self.table.len() != other.table.len() {
            return None;
        }
        let mut worst = 0.0f64;
        for (key, p) in &self.table {
            let q = other.table.get(key)?;
            if p.len() != q.len() {
                return None;
            }
            for (a, b) in p.iter().zip(q) {
                worst = worst.max((a - b).abs());
            }
        }
        Some(worst)
    }

    /// `key=p0,p1,...` lines, one per information state, floats with 17
    /// significant digits. Labels from the game are written as comments.
    pub fn to_text(&self, game: Option<&dyn Game>) -> String {
        let mut out = String::new();
        for (key, probs) in &self.table {
            if let Some(label) = game.and_then(|g| {
                InfoState::from_key(key).ok().and_then(|info| g.infoset_label(&info))
            }) {
                let _ = writeln!(out, "# {label}");
            }
            let values: Vec<String> = probs.iter().map(|p| format_float(*p)).collect();
            let _ = writeln!(out, "{key}={}", values.join(","));
        }
        out
    }

    /// Parses the `key=probs` format. Keys may be canonical text keys or
    /// labels known to `game` (for example `s1` in coordinated matching pennies).
    pub fn parse(text: &str, game: Option<&dyn Game>, aliases: &[(String, InfoKey)]) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key_text, values) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=probabilities", lineno + 1)))?;
            let key_text = key_text.trim();
            let key = match aliases.iter().find(|(label, _)| label == key_text) {
                Some((_, key)) => key.clone(),
                None => key_text.parse::<InfoKey>().map_err(|e| {
                    let hint = if game.is_some() { " (not a known label either)" } else { "" };
                    Error::Parse(format!("line {}: {e}{hint}", lineno + 1))
                })?,
            };
            let probs = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("line {}: bad probability `{v}`", lineno + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            entries.push((key, probs));
        }
        let player = entries
            .first()
            .map(|(k, _)| k.player())
            .ok_or_else(|| Error::Parse("strategy file has no entries".into()))?;
        let mut strategy = BehavioralStrategy::new(player);
        for (key, probs) in entries {
            strategy.insert(key, probs)?;
        }
        Ok(strategy)
    }

    pub fn write_file(&self, path: &Path, game: Option<&dyn Game>) -> Result<()> {
        std::fs::write(path, self.to_text(game))?;
        Ok(())
    }

    pub fn read_file(path: &Path, game: Option<&dyn Game>, aliases: &[(String, InfoKey)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, game, aliases)
    }
}

/// Formats with 17 significant digits, the precision used in every output file.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-5..15).contains(&magnitude) {
        let decimals = (16 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.16e}")
    }
}

fn normalize(mut probs: Vec<f64>) -> std::result::Result<Vec<f64>, String> {
    if probs.is_empty() {
        return Err("empty probability vector".into());
    }
    for p in probs.iter_mut() {
        if !p.is_finite() || *p < -1e-12 {
            return Err(format!("invalid probability {p}"));
        }
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(format!("probabilities sum to {sum}"));
    }
    if (sum - 1.0).abs() > 1e-14 {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fosg::Observation;

    fn key(player: Player, obs: u32) -> InfoKey {
        let mut info = InfoState::initial(player, &Observation::default());
        info.push_action(0);
        info.push_observation(&Observation::public(obs));
        info.key()
    }

    #[test]
    fn insert_rejects_bad_vectors() {
        let mut s = BehavioralStrategy::new(Player::Two);
        assert!(s.insert(key(Player::Two, 1), vec![0.7, 0.7]).is_err());
        assert!(s.insert(key(Player::Two, 1), vec![-0.5, 1.5]).is_err());
        assert!(s.insert(key(Player::Two, 1), vec![]).is_err());
        assert!(s.insert(key(Player::One, 1), vec![1.0]).is_err());
        s.insert(key(Player::Two, 1), vec![1.0 / 3.0; 3]).unwrap();
        let sum: f64 = s.probs(&key(Player::Two, 1)).unwrap().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let mut s = BehavioralStrategy::new(Player::Two);
        s.insert(key(Player::Two, 1), vec![0.3, 0.7]).unwrap();
        s.insert(key(Player::Two, 2), vec![1.0, 0.0]).unwrap();
        let text = s.to_text(None);
        let back = BehavioralStrategy::parse(&text, None, &[]).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn parse_accepts_aliases_and_comments() {
        let aliases = vec![("s1".to_string(), key(Player::Two, 1))];
        let s = BehavioralStrategy::parse("# blue\ns1 = 0.25, 0.75\n", None, &aliases).unwrap();
        assert_eq!(s.probs(&key(Player::Two, 1)).unwrap(), &[0.25, 0.75]);
        assert!(BehavioralStrategy::parse("nonsense=1\n", None, &aliases).is_err());
        assert!(BehavioralStrategy::parse("", None, &aliases).is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 0.5, 2.0, -0.0556, 0.0] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
