use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use soundlab::arena::{
    certify_soundness, read_records, run_repeated, write_queries_csv, write_records_csv, ResponseAdversary,
};
use soundlab::consistency::{audit_global_all, audit_local_all, audit_strong_global, AuditResult};
use soundlab::equilibrium::exploitability;
use soundlab::experiment::{kickstart_strategy, run_experiment, ExperimentConfig};
use soundlab::games::{by_name, cmp_strategy, kuhn_alpha_equilibrium};
use soundlab::online::{fixed_player, oos_player, tabularize, topological_orders, OnlineAlgorithm, PlayCache};
use soundlab::solvers::{run_mccfr, BiasMeaning, Cfr, SolverConfig, UpdateScheme};
use soundlab::strategy::format_float;
use soundlab::{BehavioralStrategy, Error, Game, GameTree, InfoKey, Player};

type Result<T> = soundlab::Result<T>;

#[derive(Parser)]
#[command(name = "soundlab", version, about = "Soundness and consistency checks for online game-playing algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a game with CFR or outcome-sampling MCCFR.
    Solve(SolveArgs),
    /// Exploitability of a strategy file.
    Exploit(ExploitArgs),
    /// Play repeated matches between two online algorithms.
    Arena(ArenaArgs),
    /// Exact best-response values of the k-match response game.
    ResponseGame(ResponseArgs),
    /// Query an online algorithm at every information state.
    Tabularize(TabularizeArgs),
    /// Audit logged play for local, global or strong global consistency.
    Audit(AuditArgs),
    /// Run the biased-search experiment and write its CSV report.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GameArg {
    /// One of cmp, kuhn, mp, nfg3x3, lx.
    #[arg(long)]
    game: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Cfr,
    Mccfr,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long, value_enum, default_value = "cfr")]
    algo: Algo,
    #[arg(long, default_value_t = 10_000)]
    iters: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.6)]
    exploration: f64,
    #[arg(long, default_value_t = 0.1)]
    bias: f64,
    #[arg(long, default_value = "untargeted")]
    bias_meaning: BiasMeaning,
    #[arg(long, default_value = "simultaneous")]
    update_scheme: UpdateScheme,
    /// Information state (label or key) to steer samples toward; repeatable.
    #[arg(long = "bias-target")]
    bias_targets: Vec<String>,
    #[arg(long, default_value_t = 500.0)]
    mu: f64,
    /// Kickstart the regrets toward the game's equilibrium family member.
    #[arg(long)]
    kickstart_alpha: Option<f64>,
    /// Player whose strategy is written and reported; defaults to the
    /// owner of the first bias target, else player 1.
    #[arg(long)]
    player: Option<Player>,
    /// Strategy output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snapshot CSV (`iteration,seed,exploitability`), MCCFR only.
    #[arg(long)]
    snapshots: Option<PathBuf>,
}

#[derive(Args)]
struct ExploitArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long)]
    strategy: PathBuf,
}

#[derive(Args)]
struct ArenaArgs {
    #[command(flatten)]
    game: GameArg,
    /// Algorithm of player 1 (see `--help` of `tabularize` for the forms).
    #[arg(long)]
    p1: String,
    #[arg(long)]
    p2: String,
    /// Matches per repeated game.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Number of repeated games.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// First seed; repeated games use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Records CSV (`seed,match_index,reward_p1`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Queries CSV; defaults to `<out stem>.queries.csv` next to the records.
    #[arg(long)]
    queries: Option<PathBuf>,
}

#[derive(Args)]
struct ResponseArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long)]
    alg: String,
    /// Player controlled by the algorithm.
    #[arg(long, default_value = "2")]
    player: Player,
    #[arg(long, default_value_t = 4)]
    kmax: usize,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
}

/// Algorithms are written as `playcache`, `uniform`, `pure:<action>`,
/// `cmp:<p>,<q>`, `kuhn-alpha:<alpha>`, `fixed:<strategy file>`,
/// `oos[:<iterations per move>]`, or, as an arena opponent only, `br`
/// (the exact best response of the k-match response game).
#[derive(Args)]
struct TabularizeArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long)]
    alg: String,
    #[arg(long, default_value = "2")]
    player: Player,
    /// Comma-separated query order (labels or keys); defaults to every
    /// depth-first order the tool knows.
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Local,
    Global,
    Strong,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long)]
    records: PathBuf,
    /// Queries CSV; defaults to `<records stem>.queries.csv`.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, value_enum)]
    level: Level,
    #[arg(long, default_value = "2")]
    player: Player,
    /// Algorithm to probe, required for `--level strong`.
    #[arg(long)]
    alg: Option<String>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    game: Option<String>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    exploration: Option<f64>,
    #[arg(long)]
    bias: Option<f64>,
    #[arg(long)]
    bias_meaning: Option<BiasMeaning>,
    #[arg(long)]
    update_scheme: Option<UpdateScheme>,
    #[arg(long)]
    mu: Option<f64>,
    /// Comma-separated, strictly increasing.
    #[arg(long)]
    checkpoints: Option<String>,
    /// Comma-separated `label:alpha` pairs.
    #[arg(long)]
    targets: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Loaded {
    game: Box<dyn Game>,
    tree: GameTree,
}

fn load(name: &str) -> Result<Loaded> {
    let game = by_name(name)?;
    let tree = GameTree::build(game.as_ref())?;
    Ok(Loaded { game, tree })
}

fn resolve_key(tree: &GameTree, text: &str) -> Result<InfoKey> {
    let text = text.trim();
    if let Some((_, key)) = tree.aliases().into_iter().find(|(label, _)| label == text) {
        return Ok(key);
    }
    let key: InfoKey = text
        .parse()
        .map_err(|_| Error::Config(format!("unknown information state `{text}`")))?;
    if tree.infoset_index(&key).is_none() {
        return Err(Error::Config(format!("`{text}` is not an information state of {}", tree.name())));
    }
    Ok(key)
}

fn pure_strategy(tree: &GameTree, player: Player, action: usize) -> Result<BehavioralStrategy> {
    let mut s = BehavioralStrategy::new(player);
    for (_, set) in tree.acting_infosets(player) {
        if action >= set.num_actions() {
            return Err(Error::Config(format!("{} has no action {action}", set.display_name())));
        }
        let mut probs = vec![0.0; set.num_actions()];
        probs[action] = 1.0;
        s.insert(set.key.clone(), probs)?;
    }
    Ok(s)
}

fn check_player(strategy: BehavioralStrategy, player: Player) -> Result<BehavioralStrategy> {
    if strategy.player() != player {
        return Err(Error::Config(format!(
            "strategy belongs to player {}, not player {player}",
            strategy.player()
        )));
    }
    Ok(strategy)
}

fn make_alg(spec: &str, loaded: &Loaded, player: Player) -> Result<Box<dyn OnlineAlgorithm>> {
    let tree = &loaded.tree;
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let need = |what: &str| arg.ok_or_else(|| Error::Config(format!("`{name}` needs `{name}:{what}`")));
    let number = |text: &str| -> Result<f64> {
        text.trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number `{text}` in `{spec}`")))
    };
    let alg: Box<dyn OnlineAlgorithm> = match name {
        "playcache" => Box::new(PlayCache),
        "uniform" => Box::new(fixed_player(tree.uniform_strategy(player)).with_name("uniform")),
        "pure" => {
            let a = need("action")?
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad action in `{spec}`")))?;
            Box::new(fixed_player(pure_strategy(tree, player, a)?).with_name(spec))
        }
        "cmp" => {
            let (p, q) = need("p,q")?
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("`{spec}` is not of the form cmp:p,q")))?;
            Box::new(fixed_player(check_player(cmp_strategy(number(p)?, number(q)?)?, player)?).with_name(spec))
        }
        "kuhn-alpha" => {
            let alpha = number(need("alpha")?)?;
            Box::new(fixed_player(check_player(kuhn_alpha_equilibrium(alpha)?, player)?).with_name(spec))
        }
        "fixed" => {
            let path = need("file")?;
            let s = BehavioralStrategy::read_file(Path::new(path), Some(loaded.game.as_ref()), &tree.aliases())?;
            Box::new(fixed_player(check_player(s, player)?).with_name(spec))
        }
        "oos" => {
            let iters = match arg {
                Some(a) => a
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad iteration count in `{spec}`")))?,
                None => 1000,
            };
            Box::new(oos_player(SolverConfig::default(), iters, false))
        }
        other => return Err(Error::Config(format!("unknown algorithm `{other}`"))),
    };
    Ok(alg)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let loaded = load(&args.game.game)?;
    let tree = &loaded.tree;
    let targets = args
        .bias_targets
        .iter()
        .map(|t| resolve_key(tree, t))
        .collect::<Result<Vec<_>>>()?;
    let player = args
        .player
        .or_else(|| targets.first().map(|k| k.player()))
        .unwrap_or(Player::One);
    let strategy = match args.algo {
        Algo::Cfr => {
            let mut cfr = Cfr::new(tree);
            cfr.run(args.iters);
            cfr.average_strategy(player)
        }
        Algo::Mccfr => {
            let config = SolverConfig {
                iterations: args.iters,
                exploration: args.exploration,
                bias_probability: args.bias,
                bias_meaning: args.bias_meaning,
                bias_targets: targets,
                kickstart: args
                    .kickstart_alpha
                    .map(|a| kickstart_strategy(&args.game.game, a))
                    .transpose()?,
                kickstart_mu: args.mu,
                seed: args.seed,
                update_scheme: args.update_scheme,
                ..SolverConfig::default()
            };
            let table = config.initial_table(tree)?;
            let out = run_mccfr(tree, &config, table)?;
            if let Some(path) = &args.snapshots {
                let mut csv = String::from("iteration,seed,exploitability\n");
                for snap in &out.snapshots {
                    let e = exploitability(tree, snap.strategy(player))?;
                    csv.push_str(&format!("{},{},{}\n", snap.iteration, args.seed, format_float(e)));
                }
                fs::write(path, csv)?;
            }
            match player {
                Player::One => out.profile.0,
                Player::Two => out.profile.1,
            }
        }
    };
    if let Some(path) = &args.out {
        strategy.write_file(path, Some(loaded.game.as_ref()))?;
    }
    println!("exploitability={:?}", exploitability(tree, &strategy)?);
    Ok(())
}

fn exploit(args: ExploitArgs) -> Result<()> {
    let loaded = load(&args.game.game)?;
    let s = BehavioralStrategy::read_file(&args.strategy, Some(loaded.game.as_ref()), &loaded.tree.aliases())?;
    println!("{:?}", exploitability(&loaded.tree, &s)?);
    Ok(())
}

fn queries_path(records: &Path) -> PathBuf {
    let stem = records.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    records.with_file_name(format!("{stem}.queries.csv"))
}

fn arena(args: ArenaArgs) -> Result<()> {
    let loaded = load(&args.game.game)?;
    let tree = &loaded.tree;
    if args.seeds == 0 {
        return Err(Error::Config("--seeds must be at least 1".into()));
    }
    let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();
    let is_br = |s: &str| s == "br";
    let records = match (is_br(&args.p1), is_br(&args.p2)) {
        (true, true) => return Err(Error::Config("only one side can be `br`".into())),
        (true, false) => {
            let alg = make_alg(&args.p2, &loaded, Player::Two)?;
            let adversary = ResponseAdversary::new(tree, alg.as_ref(), Player::Two, args.k)?;
            run_repeated(tree, &adversary, alg.as_ref(), args.k, &seeds)?
        }
        (false, true) => {
            let alg = make_alg(&args.p1, &loaded, Player::One)?;
            let adversary = ResponseAdversary::new(tree, alg.as_ref(), Player::One, args.k)?;
            run_repeated(tree, alg.as_ref(), &adversary, args.k, &seeds)?
        }
        (false, false) => {
            let a = make_alg(&args.p1, &loaded, Player::One)?;
            let b = make_alg(&args.p2, &loaded, Player::Two)?;
            run_repeated(tree, a.as_ref(), b.as_ref(), args.k, &seeds)?
        }
    };
    if let Some(out) = &args.out {
        let mut buf = Vec::new();
        write_records_csv(&records, &mut buf)?;
        fs::write(out, buf)?;
        let mut buf = Vec::new();
        write_queries_csv(&records, &mut buf)?;
        fs::write(args.queries.clone().unwrap_or_else(|| queries_path(out)), buf)?;
    }
    let averages: Vec<f64> = records.iter().map(|r| r.average_reward(Player::One)).collect();
    let n = averages.len() as f64;
    let mean = averages.iter().sum::<f64>() / n;
    let var = if averages.len() > 1 {
        averages.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    println!("mean_average_reward_p1={mean:?} std_error={:?} seeds={}", (var / n).sqrt(), averages.len());
    Ok(())
}

fn response_game(args: ResponseArgs) -> Result<()> {
    let loaded = load(&args.game.game)?;
    let alg = make_alg(&args.alg, &loaded, args.player)?;
    let report = certify_soundness(&loaded.tree, alg.as_ref(), args.player, args.kmax, args.epsilon)?;
    for i in 0..report.k_values.len() {
        println!(
            "k={} brv={:?} epsilon_certified={:?} certified={}",
            report.k_values[i], report.brv[i], report.epsilon_certified[i], report.certified[i]
        );
    }
    println!("bounded horizon: the certificate covers k <= {} only", report.horizon());
    Ok(())
}

fn tabularize_cmd(args: TabularizeArgs) -> Result<()> {
    let loaded = load(&args.game.game)?;
    let tree = &loaded.tree;
    let alg = make_alg(&args.alg, &loaded, args.player)?;
    let orders = match &args.order {
        Some(text) => vec![text.split(',').map(|t| resolve_key(tree, t)).collect::<Result<Vec<_>>>()?],
        None => topological_orders(tree, args.player),
    };
    let mut text = String::new();
    for order in &orders {
        let s = tabularize(alg.as_ref(), tree, args.player, order)?;
        let names: Vec<String> = order
            .iter()
            .map(|k| tree.infoset(tree.infoset_index(k).expect("validated order")).display_name())
            .collect();
        text.push_str(&format!("# order {}\n", names.join(",")));
        text.push_str(&format!("# exploitability {:?}\n", exploitability(tree, &s)?));
        text.push_str(&s.to_text(Some(loaded.game.as_ref())));
    }
    write_or_print(args.out.as_deref(), &text)
}

fn audit_cmd(args: AuditArgs) -> Result<()> {
    let loaded = load(&args.game.game)?;
    let tree = &loaded.tree;
    let records_text = fs::read_to_string(&args.records)?;
    let queries = args.queries.clone().unwrap_or_else(|| queries_path(&args.records));
    let queries_text = fs::read_to_string(&queries)?;
    let records = read_records(&records_text, Some(&queries_text))?;
    let (name, result): (&str, AuditResult) = match args.level {
        Level::Local => ("local", audit_local_all(&records, tree, args.player)?),
        Level::Global => ("global", audit_global_all(&records, tree, args.player)?),
        Level::Strong => {
            let spec = args
                .alg
                .as_deref()
                .ok_or_else(|| Error::Config("--level strong needs --alg".into()))?;
            let alg = make_alg(spec, &loaded, args.player)?;
            let orders = topological_orders(tree, args.player);
            ("strong", audit_strong_global(alg.as_ref(), tree, args.player, &orders, &records)?)
        }
    };
    println!("level,epsilon,band,consistent");
    println!("{name},{},{},{}", format_float(result.epsilon), format_float(result.band), result.consistent);
    if let Some(w) = &result.witness {
        println!("# {w}");
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut config = ExperimentConfig::default();
    if let Some(path) = &args.config {
        config.apply_text(&fs::read_to_string(path)?)?;
    }
    let overrides: [(&str, Option<String>); 12] = [
        ("game", args.game),
        ("iterations", args.iters.map(|v| v.to_string())),
        ("seeds", args.seeds.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("exploration", args.exploration.map(|v| v.to_string())),
        ("bias", args.bias.map(|v| v.to_string())),
        ("bias_meaning", args.bias_meaning.map(|v| v.to_string())),
        ("update_scheme", args.update_scheme.map(|v| v.to_string())),
        ("mu", args.mu.map(|v| v.to_string())),
        ("checkpoints", args.checkpoints),
        ("targets", args.targets),
        ("jobs", args.jobs.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            config.set(key, &v)?;
        }
    }
    if let Some(out) = args.out {
        config.output = Some(out);
    }
    let report = run_experiment(&config)?;
    write_or_print(config.output.as_deref(), &report.to_csv())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Exploit(a) => exploit(a),
        Command::Arena(a) => arena(a),
        Command::ResponseGame(a) => response_game(a),
        Command::Tabularize(a) => tabularize_cmd(a),
        Command::Audit(a) => audit_cmd(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
