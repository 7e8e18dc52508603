use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use soundlab::arena::{certify_soundness, response_game_brv};
use soundlab::consistency::completion_exploitability;
use soundlab::equilibrium::{best_response, exploitability, value_of};
use soundlab::experiment::{run_experiment, ExperimentConfig};
use soundlab::games::{by_name, cmp_strategy, kuhn_alpha_equilibrium};
use soundlab::online::{fixed_player, oos_player, tabularize, topological_orders, OnlineAlgorithm, PlayCache};
use soundlab::solvers::{run_mccfr, Cfr, SolverConfig};
use soundlab::{BehavioralStrategy, Error, GameTree, InfoKey, Player};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::NonConvergence { .. } | Error::BudgetExceeded { .. } | Error::WeightUnderflow { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn player(p: u8) -> PyResult<Player> {
    match p {
        1 => Ok(Player::One),
        2 => Ok(Player::Two),
        _ => Err(PyValueError::new_err(format!("player must be 1 or 2, got {p}"))),
    }
}

/// A game expanded into its tree.
#[pyclass(name = "Game", frozen)]
struct PyGame {
    tree: GameTree,
}

impl PyGame {
    fn key(&self, text: &str) -> PyResult<InfoKey> {
        if let Some((_, k)) = self.tree.aliases().into_iter().find(|(l, _)| l == text) {
            return Ok(k);
        }
        text.parse().map_err(py_err)
    }
}

#[pymethods]
impl PyGame {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        let game = by_name(name).map_err(py_err)?;
        Ok(PyGame {
            tree: GameTree::build(game.as_ref()).map_err(py_err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.tree.name().to_string()
    }

    /// Game value for player one.
    fn value(&self) -> PyResult<f64> {
        Ok(value_of(&self.tree).map_err(py_err)?.0)
    }

    fn utility_range(&self) -> f64 {
        self.tree.utility_range()
    }

    /// Keys of the acting information states of `player`.
    fn infosets(&self, player: u8) -> PyResult<Vec<String>> {
        Ok(self.tree.acting_keys(self::player(player)?).iter().map(|k| k.to_string()).collect())
    }

    fn uniform_strategy(&self, player: u8) -> PyResult<PyStrategy> {
        Ok(PyStrategy(self.tree.uniform_strategy(self::player(player)?)))
    }

    /// Builds a strategy from `{label or key: probabilities}`.
    fn strategy(&self, entries: BTreeMap<String, Vec<f64>>) -> PyResult<PyStrategy> {
        let mut keyed = Vec::new();
        for (k, probs) in entries {
            keyed.push((self.key(&k)?, probs));
        }
        let owner = keyed
            .first()
            .map(|(k, _)| k.player())
            .ok_or_else(|| PyValueError::new_err("empty strategy"))?;
        let mut s = BehavioralStrategy::new(owner);
        for (k, probs) in keyed {
            s.insert(k, probs).map_err(py_err)?;
        }
        Ok(PyStrategy(s))
    }
}

/// A behavioral strategy of one player.
#[pyclass(name = "Strategy", frozen)]
#[derive(Clone)]
struct PyStrategy(BehavioralStrategy);

#[pymethods]
impl PyStrategy {
    #[getter]
    fn player(&self) -> u8 {
        self.0.player().index() as u8 + 1
    }

    fn to_dict(&self) -> BTreeMap<String, Vec<f64>> {
        self.0.iter().map(|(k, p)| (k.to_string(), p.to_vec())).collect()
    }

    fn to_text(&self) -> String {
        self.0.to_text(None)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Strategy(player={}, infosets={})", self.player(), self.0.len())
    }
}

/// An online algorithm: `playcache`, a fixed strategy, or an OOS player.
#[pyclass(name = "Algorithm", frozen)]
struct PyAlgorithm(Box<dyn OnlineAlgorithm>);

#[pymethods]
impl PyAlgorithm {
    #[staticmethod]
    fn playcache() -> Self {
        PyAlgorithm(Box::new(PlayCache))
    }

    #[staticmethod]
    fn fixed(strategy: &PyStrategy) -> Self {
        PyAlgorithm(Box::new(fixed_player(strategy.0.clone())))
    }

    #[staticmethod]
    #[pyo3(signature = (iterations_per_move=1000, seed=0))]
    fn oos(iterations_per_move: u64, seed: u64) -> Self {
        let config = SolverConfig {
            seed,
            ..SolverConfig::default()
        };
        PyAlgorithm(Box::new(oos_player(config, iterations_per_move, false)))
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name()
    }
}

#[pyfunction]
#[pyo3(name = "exploitability")]
fn py_exploitability(game: &PyGame, strategy: &PyStrategy) -> PyResult<f64> {
    exploitability(&game.tree, &strategy.0).map_err(py_err)
}

/// Returns `(pure best-response strategy, value)`.
#[pyfunction]
#[pyo3(name = "best_response")]
fn py_best_response(game: &PyGame, opponent: &PyStrategy) -> PyResult<(PyStrategy, f64)> {
    let br = best_response(&game.tree, &opponent.0, opponent.0.player().opponent()).map_err(py_err)?;
    Ok((PyStrategy(br.strategy), br.value))
}

#[pyfunction]
#[pyo3(name = "cmp_strategy")]
fn py_cmp_strategy(p: f64, q: f64) -> PyResult<PyStrategy> {
    cmp_strategy(p, q).map(PyStrategy).map_err(py_err)
}

#[pyfunction]
#[pyo3(name = "kuhn_alpha_equilibrium")]
fn py_kuhn_alpha_equilibrium(alpha: f64) -> PyResult<PyStrategy> {
    kuhn_alpha_equilibrium(alpha).map(PyStrategy).map_err(py_err)
}

/// Average strategies of both players after `iterations` of CFR.
#[pyfunction]
fn cfr(py: Python<'_>, game: &PyGame, iterations: u64) -> (PyStrategy, PyStrategy) {
    let (a, b) = py.detach(|| {
        let mut cfr = Cfr::new(&game.tree);
        cfr.run(iterations);
        cfr.average_profile()
    });
    (PyStrategy(a), PyStrategy(b))
}

/// Outcome-sampling MCCFR with the default sampling parameters.
#[pyfunction]
#[pyo3(signature = (game, iterations, seed=0, bias_targets=Vec::new(), kickstart=None, exploration=0.6, bias=0.1, mu=500.0))]
#[allow(clippy::too_many_arguments)]
fn mccfr(
    py: Python<'_>,
    game: &PyGame,
    iterations: u64,
    seed: u64,
    bias_targets: Vec<String>,
    kickstart: Option<PyRef<'_, PyStrategy>>,
    exploration: f64,
    bias: f64,
    mu: f64,
) -> PyResult<(PyStrategy, PyStrategy)> {
    let targets = bias_targets.iter().map(|t| game.key(t)).collect::<PyResult<Vec<_>>>()?;
    let config = SolverConfig {
        iterations,
        seed,
        bias_targets: targets,
        kickstart: kickstart.map(|s| s.0.clone()),
        exploration,
        bias_probability: bias,
        kickstart_mu: mu,
        ..SolverConfig::default()
    };
    let out = py
        .detach(|| {
            let table = config.initial_table(&game.tree)?;
            run_mccfr(&game.tree, &config, table)
        })
        .map_err(py_err)?;
    Ok((PyStrategy(out.profile.0), PyStrategy(out.profile.1)))
}

#[pyfunction]
#[pyo3(name = "response_game_brv")]
fn py_response_game_brv(py: Python<'_>, game: &PyGame, alg: &PyAlgorithm, player: u8, k: usize) -> PyResult<f64> {
    let p = self::player(player)?;
    py.detach(|| response_game_brv(&game.tree, alg.0.as_ref(), p, k)).map_err(py_err)
}

/// `[(k, brv, epsilon_certified, certified)]` for `k = 1..=k_max`.
#[pyfunction]
#[pyo3(name = "certify_soundness")]
fn py_certify_soundness(
    game: &PyGame,
    alg: &PyAlgorithm,
    player: u8,
    k_max: usize,
    epsilon: f64,
) -> PyResult<Vec<(usize, f64, f64, bool)>> {
    let r = certify_soundness(&game.tree, alg.0.as_ref(), self::player(player)?, k_max, epsilon).map_err(py_err)?;
    Ok((0..r.k_values.len())
        .map(|i| (r.k_values[i], r.brv[i], r.epsilon_certified[i], r.certified[i]))
        .collect())
}

/// Tabularizations of `alg` for `player` in every depth-first query order.
#[pyfunction]
#[pyo3(name = "tabularize")]
fn py_tabularize(game: &PyGame, alg: &PyAlgorithm, player: u8) -> PyResult<Vec<PyStrategy>> {
    let p = self::player(player)?;
    topological_orders(&game.tree, p)
        .iter()
        .map(|order| tabularize(alg.0.as_ref(), &game.tree, p, order).map(PyStrategy).map_err(py_err))
        .collect()
}

#[pyfunction]
#[pyo3(name = "completion_exploitability")]
fn py_completion_exploitability(game: &PyGame, partial: &PyStrategy) -> PyResult<f64> {
    completion_exploitability(&game.tree, &partial.0, partial.0.player()).map_err(py_err)
}

/// Runs the biased-search experiment from flat `key = value` text and
/// returns the CSV report.
#[pyfunction]
#[pyo3(name = "run_experiment")]
fn py_run_experiment(py: Python<'_>, config: &str) -> PyResult<String> {
    let config = ExperimentConfig::from_text(config).map_err(py_err)?;
    py.detach(|| run_experiment(&config)).map(|r| r.to_csv()).map_err(py_err)
}

#[pymodule]
fn soundlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGame>()?;
    m.add_class::<PyStrategy>()?;
    m.add_class::<PyAlgorithm>()?;
    m.add_function(wrap_pyfunction!(py_exploitability, m)?)?;
    m.add_function(wrap_pyfunction!(py_best_response, m)?)?;
    m.add_function(wrap_pyfunction!(py_cmp_strategy, m)?)?;
    m.add_function(wrap_pyfunction!(py_kuhn_alpha_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(cfr, m)?)?;
    m.add_function(wrap_pyfunction!(mccfr, m)?)?;
    m.add_function(wrap_pyfunction!(py_response_game_brv, m)?)?;
    m.add_function(wrap_pyfunction!(py_certify_soundness, m)?)?;
    m.add_function(wrap_pyfunction!(py_tabularize, m)?)?;
    m.add_function(wrap_pyfunction!(py_completion_exploitability, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_experiment, m)?)?;
    Ok(())
}
