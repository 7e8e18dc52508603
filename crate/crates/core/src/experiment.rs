//! Biased-search experiments: several MCCFR runs, each steered toward one
//! information state and kickstarted toward a different equilibrium, are
//! combined into a single tabularized strategy and compared with the
//! individual runs and an unbiased reference.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::equilibrium::exploitability;
use crate::error::{Error, Result};
use crate::fosg::{InfoKey, Player};
use crate::games::{by_name, cmp_strategy, kuhn_alpha_equilibrium};
use crate::solvers::{rng, run_mccfr, SolverConfig};
use crate::strategy::{format_float, BehavioralStrategy};
use crate::tree::GameTree;

/// CSV header of experiment reports.
pub const CSV_HEADER: &str = "iteration,seed,curve,exploitability";

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub game: String,
    /// Sampling parameters; `seed` is the master seed, targets and kickstart
    /// are set per run.
    pub solver: SolverConfig,
    pub seeds: usize,
    /// `(information state label or key, kickstart alpha)`; empty means the
    /// game's default targets.
    pub targets: Vec<(String, f64)>,
    pub unbiased: bool,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            game: "cmp".into(),
            solver: SolverConfig::default(),
            seeds: 1000,
            targets: Vec::new(),
            unbiased: true,
            jobs: 0,
            output: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "game" => self.game = value.to_string(),
            "iterations" => self.solver.iterations = parse(key, value)?,
            "exploration" => self.solver.exploration = parse(key, value)?,
            "bias" | "bias_probability" => self.solver.bias_probability = parse(key, value)?,
            "bias_meaning" => self.solver.bias_meaning = parse(key, value)?,
            "update_scheme" => self.solver.update_scheme = parse(key, value)?,
            "mu" | "kickstart_mu" => self.solver.kickstart_mu = parse(key, value)?,
            "weight_floor" => self.solver.weight_floor = parse(key, value)?,
            "seed" => self.solver.seed = parse(key, value)?,
            "seeds" => self.seeds = parse(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            "unbiased" => self.unbiased = parse(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            "checkpoints" => {
                self.solver.checkpoints = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "targets" => {
                self.targets = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|t| {
                        let (label, alpha) = t
                            .rsplit_once(':')
                            .ok_or_else(|| Error::Config(format!("target `{t}` is not of the form label:alpha")))?;
                        Ok((label.trim().to_string(), parse(key, alpha)?))
                    })
                    .collect::<Result<_>>()?
            }
            other => return Err(Error::Config(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Reads flat `key = value` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.seeds == 0 {
            return Err(Error::Config("seed count must be at least 1".into()));
        }
        for (label, alpha) in &self.targets {
            crate::error::check_unit("alpha", *alpha).map_err(|_| Error::Config(format!("alpha {alpha} of `{label}` is outside of [0, 1]")))?;
        }
        Ok(())
    }

    fn effective_targets(&self) -> Result<Vec<(String, f64)>> {
        if !self.targets.is_empty() {
            return Ok(self.targets.clone());
        }
        match self.game.as_str() {
            "cmp" => Ok(vec![("s1".into(), 0.5), ("s2".into(), 1.0)]),
            "kuhn" => Ok(vec![("J".into(), 0.0), ("Q".into(), 0.5), ("K".into(), 1.0)]),
            other => Err(Error::Config(format!("game `{other}` has no default bias targets"))),
        }
    }
}

/// Equilibrium used to kickstart a run biased with `alpha`.
pub fn kickstart_strategy(game: &str, alpha: f64) -> Result<BehavioralStrategy> {
    match game {
        "cmp" => cmp_strategy(alpha, 1.0 - alpha),
        "kuhn" => kuhn_alpha_equilibrium(alpha),
        other => Err(Error::Config(format!("game `{other}` has no kickstart family"))),
    }
}

/// Which rows a report line aggregates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowSeed {
    Seed(usize),
    /// Exploitability of the reach-weighted mean strategy over seeds.
    Mean,
    /// Mean over seeds of the per-seed exploitability.
    Average,
}

impl std::fmt::Display for RowSeed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowSeed::Seed(s) => write!(f, "{s}"),
            RowSeed::Mean => f.write_str("mean"),
            RowSeed::Average => f.write_str("average"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub iteration: u64,
    pub seed: RowSeed,
    pub curve: String,
    pub exploitability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<Row>,
    pub curves: Vec<String>,
    pub checkpoints: Vec<u64>,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.iteration, r.seed, r.curve, format_float(r.exploitability));
        }
        out
    }

    pub fn value(&self, curve: &str, seed: RowSeed, iteration: u64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.curve == curve && r.seed == seed && r.iteration == iteration)
            .map(|r| r.exploitability)
    }

    pub fn last_checkpoint(&self) -> u64 {
        self.checkpoints.last().copied().unwrap_or(0)
    }
}

struct Plan {
    tree: GameTree,
    player: Player,
    labels: Vec<String>,
    keys: Vec<InfoKey>,
    kickstarts: Vec<BehavioralStrategy>,
    /// For each acting infoset of `player` (by tree index), the run it is taken from.
    assignment: Vec<(u32, usize)>,
}

fn plan(config: &ExperimentConfig) -> Result<Plan> {
    let game = by_name(&config.game)?;
    let tree = GameTree::build(game.as_ref())?;
    let aliases = tree.aliases();
    let targets = config.effective_targets()?;
    let mut labels = Vec::new();
    let mut keys = Vec::new();
    let mut kickstarts = Vec::new();
    for (label, alpha) in &targets {
        let key = match aliases.iter().find(|(a, _)| a == label) {
            Some((_, k)) => k.clone(),
            None => label
                .parse::<InfoKey>()
                .map_err(|_| Error::Config(format!("unknown bias target `{label}`")))?,
        };
        if tree.infoset_index(&key).is_none() {
            return Err(Error::Config(format!("bias target `{label}` is not an information state of {}", config.game)));
        }
        labels.push(label.clone());
        keys.push(key);
        kickstarts.push(kickstart_strategy(&config.game, *alpha)?);
    }
    let player = tree.infoset(tree.infoset_index(&keys[0]).expect("checked")).player;
    if keys.iter().any(|k| tree.infoset(tree.infoset_index(k).expect("checked")).player != player) {
        return Err(Error::Config("all bias targets must belong to one player".into()));
    }
    let target_index: Vec<u32> = keys.iter().map(|k| tree.infoset_index(k).expect("checked")).collect();
    let assignment = tree
        .acting_infosets(player)
        .map(|(i, _)| {
            let mut cur = Some(i);
            while let Some(c) = cur {
                if let Some(run) = target_index.iter().position(|&t| t == c) {
                    return (i, run);
                }
                cur = tree.infoset(c).parent.map(|(p, _)| p);
            }
            (i, 0)
        })
        .collect();
    Ok(Plan {
        tree,
        player,
        labels,
        keys,
        kickstarts,
        assignment,
    })
}

impl Plan {
    fn compose(&self, parts: &[&BehavioralStrategy]) -> Result<BehavioralStrategy> {
        let mut out = BehavioralStrategy::new(self.player);
        for &(i, run) in &self.assignment {
            let key = &self.tree.infoset(i).key;
            out.insert(key.clone(), parts[run].probs(key)?.to_vec())?;
        }
        Ok(out)
    }
}

/// Strategies of the audited player at each checkpoint, per run.
type SeedRuns = Vec<Vec<BehavioralStrategy>>;

fn run_seed(config: &ExperimentConfig, plan: &Plan, seed_index: usize) -> Result<SeedRuns> {
    let seed = rng::derive_seed(config.solver.seed, seed_index as u64);
    let mut runs = Vec::new();
    let count = plan.keys.len() + usize::from(config.unbiased);
    for r in 0..count {
        let mut solver = config.solver.clone();
        solver.seed = rng::derive_seed(seed, r as u64);
        if r < plan.keys.len() {
            solver.bias_targets = vec![plan.keys[r].clone()];
            solver.kickstart = Some(plan.kickstarts[r].clone());
        } else {
            solver.bias_targets.clear();
            solver.kickstart = None;
        }
        let table = solver.initial_table(&plan.tree)?;
        let out = run_mccfr(&plan.tree, &solver, table)?;
        runs.push(out.snapshots.iter().map(|s| s.strategy(plan.player).clone()).collect());
    }
    Ok(runs)
}

/// Runs the biased-search experiment described by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let plan = plan(config)?;
    let checkpoints = config.solver.checkpoint_list();
    let mut curves: Vec<String> = plan.labels.iter().map(|l| format!("biased:{l}")).collect();
    curves.push("tabularized".into());
    if config.unbiased {
        curves.push("unbiased".into());
    }
    let per_seed = || -> Result<Vec<SeedRuns>> {
        (0..config.seeds)
            .into_par_iter()
            .map(|s| run_seed(config, &plan, s))
            .collect()
    };
    let results = if config.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(per_seed)?
    } else {
        per_seed()?
    };

    let n_biased = plan.keys.len();
    let strategies_at = |runs: &SeedRuns, c: usize| -> Result<Vec<BehavioralStrategy>> {
        let biased: Vec<&BehavioralStrategy> = runs[..n_biased].iter().map(|r| &r[c]).collect();
        let mut out: Vec<BehavioralStrategy> = biased.iter().map(|s| (*s).clone()).collect();
        out.push(plan.compose(&biased)?);
        if config.unbiased {
            out.push(runs[n_biased][c].clone());
        }
        Ok(out)
    };

    let mut rows = Vec::new();
    let mut sums = vec![vec![0.0; curves.len()]; checkpoints.len()];
    for (s, runs) in results.iter().enumerate() {
        for (c, &iteration) in checkpoints.iter().enumerate() {
            for (k, strategy) in strategies_at(runs, c)?.iter().enumerate() {
                let e = exploitability(&plan.tree, strategy)?;
                sums[c][k] += e;
                rows.push(Row {
                    iteration,
                    seed: RowSeed::Seed(s),
                    curve: curves[k].clone(),
                    exploitability: e,
                });
            }
        }
    }
    for (c, &iteration) in checkpoints.iter().enumerate() {
        let runs = results[0].len();
        let mean_runs: SeedRuns = (0..runs)
            .map(|r| {
                let all: Vec<BehavioralStrategy> = results.iter().map(|seed| seed[r][c].clone()).collect();
                plan.tree.mean_strategy(plan.player, &all).map(|m| vec![m])
            })
            .collect::<Result<_>>()?;
        for (k, strategy) in strategies_at(&mean_runs, 0)?.iter().enumerate() {
            rows.push(Row {
                iteration,
                seed: RowSeed::Mean,
                curve: curves[k].clone(),
                exploitability: exploitability(&plan.tree, strategy)?,
            });
        }
        for (k, curve) in curves.iter().enumerate() {
            rows.push(Row {
                iteration,
                seed: RowSeed::Average,
                curve: curve.clone(),
                exploitability: sums[c][k] / config.seeds as f64,
            });
        }
    }
    Ok(ExperimentReport {
        rows,
        curves,
        checkpoints,
    })
}

/// The coordinated matching pennies experiment.
pub fn experiment_oos_cmp(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(&ExperimentConfig {
        game: "cmp".into(),
        ..config.clone()
    })
}

/// The Kuhn poker experiment, biased toward player one's three cards.
pub fn experiment_oos_kuhn(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(&ExperimentConfig {
        game: "kuhn".into(),
        ..config.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(game: &str) -> ExperimentConfig {
        let mut c = ExperimentConfig::from_text(&format!("game = {game}\niterations = 1000\nseeds = 4\n")).unwrap();
        c.jobs = 2;
        c
    }

    #[test]
    fn config_parsing() {
        let c = ExperimentConfig::from_text("# comment\ngame=kuhn\nbias = 0.2\nmu=10\ncheckpoints = 1,10,100\ntargets = J:0, K:1\nunbiased=false\n").unwrap();
        assert_eq!(c.game, "kuhn");
        assert_eq!(c.solver.bias_probability, 0.2);
        assert_eq!(c.solver.kickstart_mu, 10.0);
        assert_eq!(c.solver.checkpoints, vec![1, 10, 100]);
        assert_eq!(c.targets, vec![("J".into(), 0.0), ("K".into(), 1.0)]);
        assert!(!c.unbiased);
        assert!(ExperimentConfig::from_text("nonsense").is_err());
        assert!(ExperimentConfig::from_text("color = red").is_err());
        assert!(ExperimentConfig::from_text("seeds = many").is_err());
        let mut bad = ExperimentConfig::default();
        bad.set("checkpoints", "10,1").unwrap();
        assert!(bad.validate().is_err());
        bad = ExperimentConfig::default();
        bad.seeds = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cmp_report_shape_and_determinism() {
        let c = small("cmp");
        let a = experiment_oos_cmp(&c).unwrap();
        assert_eq!(a.curves, vec!["biased:s1", "biased:s2", "tabularized", "unbiased"]);
        assert_eq!(a.checkpoints, vec![1, 10, 100, 1000]);
        assert_eq!(a.rows.len(), 4 * 4 * (4 + 2));
        assert!(a.rows.iter().all(|r| (0.0..=2.0).contains(&r.exploitability)));
        let b = experiment_oos_cmp(&ExperimentConfig { jobs: 1, ..c }).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.to_csv().starts_with("iteration,seed,curve,exploitability\n1,0,biased:s1,"));
    }

    #[test]
    fn tabularized_cmp_combines_the_runs() {
        let mut c = small("cmp");
        c.seeds = 1;
        let report = run_experiment(&c).unwrap();
        let plan = plan(&c).unwrap();
        let runs = run_seed(&c, &plan, 0).unwrap();
        let last = runs[0].len() - 1;
        let p = runs[0][last].probs(&crate::games::CoordinatedMatchingPennies::infoset(0)).unwrap()[0];
        let q = runs[1][last].probs(&crate::games::CoordinatedMatchingPennies::infoset(1)).unwrap()[0];
        let tab = report.value("tabularized", RowSeed::Seed(0), 1000).unwrap();
        assert!((tab - (p + q - 1.0).abs()).abs() < 1e-12);
    }

    #[test]
    fn kuhn_uses_card_subtrees() {
        let c = small("kuhn");
        let plan = plan(&c).unwrap();
        assert_eq!(plan.assignment.len(), 6);
        for &(i, run) in &plan.assignment {
            let label = plan.tree.infoset(i).label.clone().unwrap();
            assert!(label.starts_with(["J", "Q", "K"][run]), "{label} -> {run}");
        }
        let zero = ExperimentConfig {
            solver: SolverConfig {
                iterations: 0,
                checkpoints: vec![0],
                ..c.solver.clone()
            },
            ..c
        };
        let report = experiment_oos_kuhn(&zero).unwrap();
        let uniform = exploitability(&plan.tree, &plan.tree.uniform_strategy(Player::One)).unwrap();
        for r in &report.rows {
            assert!((r.exploitability - uniform).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_targets_are_rejected() {
        let mut c = small("cmp");
        c.targets = vec![("s9".into(), 0.5)];
        assert!(matches!(run_experiment(&c), Err(Error::Config(_))));
        c.game = "mp".into();
        c.targets.clear();
        assert!(run_experiment(&c).is_err());
    }
}
