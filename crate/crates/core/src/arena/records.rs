use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::fosg::{InfoKey, Player};
use crate::strategy::format_float;

use super::{MatchLog, Query, RepeatedGameRecord};

/// `seed,match_index,reward_p1`, one row per match.
pub fn write_records_csv(records: &[RepeatedGameRecord], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "seed,match_index,reward_p1")?;
    for r in records {
        for (i, m) in r.matches.iter().enumerate() {
            writeln!(out, "{},{},{}", r.seed, i, format_float(m.reward_p1))?;
        }
    }
    Ok(())
}

/// `seed,match_index,player,infoset,probs`, one row per query, with the
/// probabilities separated by spaces.
pub fn write_queries_csv(records: &[RepeatedGameRecord], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "seed,match_index,player,infoset,probs")?;
    for r in records {
        for (i, m) in r.matches.iter().enumerate() {
            for q in &m.queries {
                let probs: Vec<String> = q.probs.iter().map(|p| format_float(*p)).collect();
                writeln!(out, "{},{},{},{},{}", r.seed, i, q.player, q.key, probs.join(" "))?;
            }
        }
    }
    Ok(())
}

fn rows<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(Error::Parse(format!("expected header `{header}`"))),
    }
    Ok(lines.map(|(n, l)| (n + 1, l.split(',').map(str::trim).collect())))
}

fn field<T: std::str::FromStr>(value: &str, name: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {name} `{value}`")))
}

/// Rebuilds records from the two CSV files. Paths and state snapshots are
/// not stored, so they come back empty.
pub fn read_records(records_csv: &str, queries_csv: Option<&str>) -> Result<Vec<RepeatedGameRecord>> {
    let mut by_seed: BTreeMap<u64, BTreeMap<usize, MatchLog>> = BTreeMap::new();
    for (line, cols) in rows(records_csv, "seed,match_index,reward_p1")? {
        if cols.len() != 3 {
            return Err(Error::Parse(format!("line {line}: expected 3 columns")));
        }
        let seed = field(cols[0], "seed", line)?;
        let idx = field(cols[1], "match index", line)?;
        let reward = field(cols[2], "reward", line)?;
        by_seed.entry(seed).or_default().insert(
            idx,
            MatchLog {
                path: Vec::new(),
                queries: Vec::new(),
                reward_p1: reward,
            },
        );
    }
    if let Some(text) = queries_csv {
        for (line, cols) in rows(text, "seed,match_index,player,infoset,probs")? {
            if cols.len() != 5 {
                return Err(Error::Parse(format!("line {line}: expected 5 columns")));
            }
            let seed: u64 = field(cols[0], "seed", line)?;
            let idx: usize = field(cols[1], "match index", line)?;
            let player: Player = field(cols[2], "player", line)?;
            let key: InfoKey = field(cols[3], "information state", line)?;
            let probs = cols[4]
                .split_whitespace()
                .map(|p| field(p, "probability", line))
                .collect::<Result<Vec<f64>>>()?;
            let m = by_seed
                .get_mut(&seed)
                .and_then(|ms| ms.get_mut(&idx))
                .ok_or_else(|| Error::Parse(format!("line {line}: query for unknown match {seed}/{idx}")))?;
            m.queries.push(Query { player, key, probs });
        }
    }
    by_seed
        .into_iter()
        .map(|(seed, ms)| {
            let k = ms.len();
            if ms.keys().copied().ne(0..k) {
                return Err(Error::Parse(format!("seed {seed}: match indices are not 0..{k}")));
            }
            Ok(RepeatedGameRecord {
                seed,
                matches: ms.into_values().collect(),
                snapshots: vec![[String::new(), String::new()]; k],
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::run_repeated;
    use crate::games::CoordinatedMatchingPennies;
    use crate::online::{fixed_player, PlayCache};
    use crate::tree::GameTree;

    #[test]
    fn csv_round_trip_keeps_rewards_and_queries() {
        let tree = GameTree::build(&CoordinatedMatchingPennies).unwrap();
        let adversary = fixed_player(tree.uniform_strategy(Player::One));
        let records = run_repeated(&tree, &adversary, &PlayCache, 4, &[3, 1]).unwrap();
        let mut rec = Vec::new();
        let mut q = Vec::new();
        write_records_csv(&records, &mut rec).unwrap();
        write_queries_csv(&records, &mut q).unwrap();
        let rec = String::from_utf8(rec).unwrap();
        assert!(rec.starts_with("seed,match_index,reward_p1\n3,0,"));
        let back = read_records(&rec, Some(&String::from_utf8(q).unwrap())).unwrap();
        assert_eq!(back.len(), 2);
        let original = records.iter().find(|r| r.seed == 1).unwrap();
        assert_eq!(back[0].seed, 1);
        for (a, b) in back[0].matches.iter().zip(&original.matches) {
            assert_eq!(a.reward_p1, b.reward_p1);
            assert_eq!(a.queries, b.queries);
        }
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_records("bad header\n", None).is_err());
        assert!(read_records("seed,match_index,reward_p1\n1,1,0\n", None).is_err());
        assert!(read_records("seed,match_index,reward_p1\n1,0,x\n", None).is_err());
    }
}
